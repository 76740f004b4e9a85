"""Uniform registry of inpainting methods.

Both the command line and the HTTP service funnel through
``make_method`` / ``run_method``, so parameter validation happens in one
place and a given (inputs, method, seed) triple produces byte-identical
results no matter which front end launched it.

Kinds: tv | ns | patch | dip | dip-tv | dip-tv-skip | dipst. The three
dip kinds share the training loop; they differ in whether the TV term is
added and whether skip branches are enabled. dipst requires a style
image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from inpaintkit.image import Image
from inpaintkit.masking import Mask
from inpaintkit.neural import (
    DipParams,
    NetConfig,
    StyleParams,
    TrainHistory,
    dip_train,
    dipst_train,
)
from inpaintkit.patchmatch import PatchParams, patch_inpaint
from inpaintkit.variational import NsSolveParams, TvSolveParams, ns_inpaint, tv_inpaint

METHOD_KINDS = ("tv", "ns", "patch", "dip", "dip-tv", "dip-tv-skip", "dipst")

_DIP_KINDS = ("dip", "dip-tv", "dip-tv-skip", "dipst")


class MethodError(Exception):
    """Invalid method kind or parameter bundle."""


# accepted option names and coercions per kind
_COMMON_DIP = {
    "learning_rate": float,
    "iterations": int,
    "lambd": float,
    "seed": int,
    "log_interval": int,
    "levels": int,
    "channels": tuple,
    "skip_channels": tuple,
    "z_channels": int,
}

_SCHEMAS: dict[str, dict[str, type]] = {
    "tv": {"lambd": float, "step": float, "iterations": int, "epsilon": float},
    "ns": {"transport_steps": int, "diffusion_interval": int, "diffusion_steps": int, "dt": float},
    "patch": {
        "patch_size": int,
        "pm_iterations": int,
        "em_iterations": int,
        "pyramid_levels": int,
        "seed": int,
    },
    "dip": dict(_COMMON_DIP),
    "dip-tv": dict(_COMMON_DIP),
    "dip-tv-skip": dict(_COMMON_DIP),
    "dipst": {**_COMMON_DIP, "alpha": float, "beta": float, "feature_seed": int, "layers": tuple},
}


@dataclass
class MethodSpec:
    kind: str
    options: dict = field(default_factory=dict)


@dataclass
class MethodResult:
    image: Image
    history: Optional[TrainHistory] = None


def _coerce(kind: str, name: str, value, typ: type):
    try:
        if typ is tuple:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v]
            return tuple(int(v) for v in value)
        return typ(value)
    except (TypeError, ValueError):
        raise MethodError(f"{kind}: option {name!r} has invalid value {value!r}") from None


def schema_names(kind: str) -> tuple[str, ...]:
    if kind not in _SCHEMAS:
        raise MethodError(f"unknown method kind {kind!r}")
    return tuple(_SCHEMAS[kind])


def make_method(kind: str, options: dict | None = None) -> MethodSpec:
    """Validate a kind/options bundle into a MethodSpec."""
    if kind not in METHOD_KINDS:
        raise MethodError(f"unknown method kind {kind!r}; expected one of {', '.join(METHOD_KINDS)}")
    schema = _SCHEMAS[kind]
    clean: dict = {}
    for name, value in (options or {}).items():
        if value is None:
            continue
        if name not in schema:
            raise MethodError(f"{kind}: unknown option {name!r}")
        clean[name] = _coerce(kind, name, value, schema[name])
    spec = MethodSpec(kind, clean)
    _build_params(spec)  # surface invalid values now, not at run time
    return spec


def _net_config(spec: MethodSpec) -> NetConfig:
    opts = spec.options
    levels = opts.get("levels", 3)
    channels = opts.get("channels", tuple(16 * (1 << k) for k in range(levels)))
    if spec.kind == "dip-tv-skip":
        skips = opts.get("skip_channels", tuple(4 for _ in range(levels)))
    else:
        skips = tuple(0 for _ in range(levels))  # skip branches only for the +skip kind
    try:
        return NetConfig(
            levels=levels,
            channels_per_level=channels,
            skip_channels_per_level=skips,
            z_channels=opts.get("z_channels", 8),
        )
    except Exception as exc:
        raise MethodError(f"{spec.kind}: {exc}") from None


def _dip_params(spec: MethodSpec) -> DipParams:
    opts = spec.options
    try:
        return DipParams(
            learning_rate=opts.get("learning_rate", 0.01),
            iterations=opts.get("iterations", 3000),
            lambd=opts.get("lambd", 10.0),
            use_tv=spec.kind in ("dip-tv", "dip-tv-skip"),
            rng_seed=opts.get("seed", 1234),
            log_interval=opts.get("log_interval", 50),
        )
    except Exception as exc:
        raise MethodError(f"{spec.kind}: {exc}") from None


def _build_params(spec: MethodSpec):
    """Materialize the parameter bundle; raises MethodError on bad values."""
    opts = spec.options
    try:
        if spec.kind == "tv":
            return TvSolveParams(
                lambd=opts.get("lambd", 10.0),
                step=opts.get("step", 1e-3),
                iterations=opts.get("iterations", 2000),
                epsilon=opts.get("epsilon", 1e-3),
            )
        if spec.kind == "ns":
            return NsSolveParams(
                transport_steps=opts.get("transport_steps", 300),
                diffusion_interval=opts.get("diffusion_interval", 15),
                diffusion_steps=opts.get("diffusion_steps", 2),
                dt=opts.get("dt", 0.1),
            )
        if spec.kind == "patch":
            return PatchParams(
                patch_size=opts.get("patch_size", 5),
                pm_iterations=opts.get("pm_iterations", 5),
                em_iterations=opts.get("em_iterations", 4),
                pyramid_levels=opts.get("pyramid_levels"),
                rng_seed=opts.get("seed", 1234),
            )
    except MethodError:
        raise
    except Exception as exc:
        raise MethodError(f"{spec.kind}: {exc}") from None
    bundle = (_net_config(spec), _dip_params(spec))
    if spec.kind == "dipst":
        try:
            st = StyleParams(
                alpha=opts.get("alpha", 1.0),
                beta=opts.get("beta", 1e-2),
                layer_indices=opts.get("layers", (0, 1, 2)),
                feature_seed=opts.get("feature_seed", 77),
            )
        except Exception as exc:
            raise MethodError(f"dipst: {exc}") from None
        return bundle + (st,)
    return bundle


def run_method(
    spec: MethodSpec,
    observed: Image,
    mask: Mask,
    style: Optional[Image] = None,
    reference: Optional[Image] = None,
    progress: Optional[Callable] = None,
) -> MethodResult:
    """Run one method on an observed image and mask."""
    params = _build_params(spec)
    if spec.kind == "tv":
        return MethodResult(tv_inpaint(observed, mask, params))
    if spec.kind == "ns":
        return MethodResult(ns_inpaint(observed, mask, params))
    if spec.kind == "patch":
        return MethodResult(patch_inpaint(observed, mask, params))
    if spec.kind == "dipst":
        config, dip, st = params
        if style is None:
            raise MethodError("dipst requires a style image")
        result = dipst_train(
            observed, mask, style, config, dip, st, reference=reference, progress=progress
        )
        return MethodResult(result.image, result.history)
    config, dip = params
    result = dip_train(observed, mask, config, dip, reference=reference, progress=progress)
    return MethodResult(result.image, result.history)


def is_dip_kind(kind: str) -> bool:
    return kind in _DIP_KINDS


def required_divisor(spec: MethodSpec) -> int:
    """Spatial divisibility the method imposes on its inputs (1 if none)."""
    if is_dip_kind(spec.kind):
        return 1 << spec.options.get("levels", 3)
    return 1
