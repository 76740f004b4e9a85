"""Command-line front end.

Subcommands: ``mask`` (auto color threshold / seeded growing), ``inpaint``
(any registered method), ``eval`` (metric row for a pair of files),
``simulate`` (synthetic-occlusion benchmark producing a metrics table),
and ``serve`` (the HTTP service).

Exit codes: 0 success, 1 runtime or I/O failure, 2 argument validation.
Every command is a thin shell over library calls; randomized methods use
a fixed default seed so bare invocations reproduce.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from inpaintkit import image as img
from inpaintkit import masking, metrics
from inpaintkit.masking import Mask, MaskError, SeedPoint, ToleranceSpec
from inpaintkit.methods import (
    METHOD_KINDS,
    MethodError,
    make_method,
    required_divisor,
    run_method,
    schema_names,
)

METHOD_LABELS = {
    "tv": "TV",
    "ns": "Navier-Stokes",
    "dip": "DIP",
    "dip-tv": "DIP - TV",
    "dip-tv-skip": "DIP - TV + skip",
    "dipst": "DIPST",
}


class CliError(Exception):
    """Argument-level failure; exits with status 2."""


def _parse_color(text: str) -> tuple[float, ...]:
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"invalid color {text!r}; expected comma-separated values") from None
    if not all(0.0 <= v <= 1.0 for v in parts):
        raise CliError(f"color components must lie in [0, 1]: {text!r}")
    return parts


def _parse_point(text: str) -> tuple[int, int]:
    try:
        r, c = (int(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"invalid seed point {text!r}; expected row,col") from None
    return r, c


def _method_options(args) -> dict:
    names = (
        "lambd", "step", "iterations", "epsilon",
        "transport_steps", "diffusion_interval", "diffusion_steps", "dt",
        "patch_size", "pm_iterations", "em_iterations", "pyramid_levels",
        "learning_rate", "log_interval", "levels", "channels", "skip_channels",
        "z_channels", "alpha", "beta", "feature_seed", "layers", "seed",
    )
    return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lambd", type=float, help="data-fidelity weight")
    p.add_argument("--step", type=float, help="TV descent step size")
    p.add_argument("--iterations", type=int, help="iteration count (TV descent / training)")
    p.add_argument("--epsilon", type=float, help="TV smoothing epsilon")
    p.add_argument("--transport-steps", dest="transport_steps", type=int)
    p.add_argument("--diffusion-interval", dest="diffusion_interval", type=int)
    p.add_argument("--diffusion-steps", dest="diffusion_steps", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--patch-size", dest="patch_size", type=int)
    p.add_argument("--pm-iterations", dest="pm_iterations", type=int)
    p.add_argument("--em-iterations", dest="em_iterations", type=int)
    p.add_argument("--pyramid-levels", dest="pyramid_levels", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--log-interval", dest="log_interval", type=int)
    p.add_argument("--levels", type=int, help="encoder/decoder depth")
    p.add_argument("--channels", help="comma list of channels per level")
    p.add_argument("--skip-channels", dest="skip_channels", help="comma list of skip widths")
    p.add_argument("--z-channels", dest="z_channels", type=int)
    p.add_argument("--alpha", type=float, help="dipst data weight (default 1, unvalidated)")
    p.add_argument("--beta", type=float, help="dipst style weight (default 1e-2, unvalidated)")
    p.add_argument("--feature-seed", dest="feature_seed", type=int)
    p.add_argument("--layers", help="comma list of style feature stages")
    p.add_argument("--seed", type=int, help="seed for all randomized methods (fixed default)")
    p.add_argument("--style", help="style source image (dipst)")
    p.add_argument("--resize", type=int, help="resize inputs to N x N before inpainting")
    p.add_argument("--reference", help="clean reference image for history SSIM")
    p.add_argument("--range", dest="dynamic_range", type=float, default=255.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inpaintkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_mask = sub.add_parser("mask", help="build an occlusion mask")
    mask_sub = p_mask.add_subparsers(dest="mode", required=True)
    for mode in ("auto", "grow"):
        mp = mask_sub.add_parser(mode)
        mp.add_argument("image")
        mp.add_argument("--out", required=True)
        mp.add_argument("--tolerance", type=float, default=0.1)
        mp.add_argument("--dilate", type=int, default=0)
        if mode == "auto":
            mp.add_argument("--color", required=True, help="reference color, e.g. 0.5,0.2,0.2")
        else:
            mp.add_argument(
                "--seed-point", dest="seed_points", action="append", required=True,
                help="row,col seed; repeatable",
            )

    p_inp = sub.add_parser("inpaint", help="inpaint one image")
    p_inp.add_argument("image")
    p_inp.add_argument("mask")
    p_inp.add_argument("--method", required=True, choices=METHOD_KINDS)
    p_inp.add_argument("--out", required=True)
    _add_method_flags(p_inp)

    p_eval = sub.add_parser("eval", help="metrics for a reference/test pair")
    p_eval.add_argument("reference")
    p_eval.add_argument("test")
    p_eval.add_argument("--range", dest="dynamic_range", type=float, default=255.0)

    p_sim = sub.add_parser("simulate", help="synthetic-occlusion benchmark")
    p_sim.add_argument("clean")
    p_sim.add_argument("mask")
    p_sim.add_argument("--methods", required=True, help="comma list of method kinds")
    p_sim.add_argument("--out-dir", dest="out_dir", required=True)
    _add_method_flags(p_sim)

    p_srv = sub.add_parser("serve", help="run the restoration service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8600)
    p_srv.add_argument("--workers", type=int, default=1)
    p_srv.add_argument("--data-dir", dest="data_dir", default="inpaintkit-data")
    return parser


def _resize_pair(observed, mask, n: int):
    observed = img.resize_bilinear(observed, n, n)
    rel = img.resize_bilinear(img.Image(mask.bits[None].astype(np.float64)), n, n)
    # conservative: any occluded contributor keeps the pixel occluded
    return observed, Mask(rel.data[0] >= 1.0 - 1e-9)


def _load_inputs(args):
    observed = img.load_png(args.image if hasattr(args, "image") else args.clean)
    mask = masking.load_mask(args.mask)
    if args.resize:
        if args.resize < 1:
            raise CliError("--resize must be >= 1")
        observed, mask = _resize_pair(observed, mask, args.resize)
    if (observed.height, observed.width) != (mask.height, mask.width):
        raise CliError(
            f"image {observed.height}x{observed.width} and mask "
            f"{mask.height}x{mask.width} dimensions disagree"
        )
    return observed, mask


def _check_divisibility(spec, observed):
    div = required_divisor(spec)
    if observed.height % div or observed.width % div:
        raise CliError(
            f"{spec.kind} needs dimensions divisible by {div}; "
            f"got {observed.height}x{observed.width} (use --resize N with N a multiple of {div})"
        )


def _maybe_style(args, observed):
    if getattr(args, "style", None) is None:
        return None
    style = img.load_png(args.style)
    if (style.height, style.width) != (observed.height, observed.width):
        style = img.resize_bilinear(style, observed.height, observed.width)
    return style


def _write_history(history, path) -> None:
    with open(path, "w") as fh:
        fh.write("iteration,loss,ssim\n")
        for pt in history.points:
            ssim_txt = "" if pt.ssim is None else f"{pt.ssim:.6f}"
            fh.write(f"{pt.iteration},{pt.loss:.10g},{ssim_txt}\n")


def cmd_mask(args) -> int:
    image = img.load_png(args.image)
    if args.mode == "auto":
        color = _parse_color(args.color)
        if len(color) != image.channels:
            raise CliError(
                f"color has {len(color)} components, image has {image.channels} channels"
            )
        mask = masking.mask_by_color(image, ToleranceSpec(color, args.tolerance))
    else:
        seeds = []
        for text in args.seed_points:
            r, c = _parse_point(text)
            if not (0 <= r < image.height and 0 <= c < image.width):
                raise CliError(f"seed ({r}, {c}) out of bounds for {image.height}x{image.width}")
            seeds.append(SeedPoint(r, c))
        mask = masking.region_grow(image, seeds, args.tolerance)
    if args.dilate:
        mask = masking.dilate(mask, args.dilate)
    masking.save_mask(mask, args.out)
    total = mask.height * mask.width
    count = mask.occluded_count
    if count == 0:
        print("warning: empty mask (no pixel matched)")
    print(f"occluded {count} of {total} pixels ({count / total:.2%})")
    return 0


def cmd_inpaint(args) -> int:
    spec = make_method(args.method, _method_options(args))
    observed, mask = _load_inputs(args)
    _check_divisibility(spec, observed)
    style = _maybe_style(args, observed)
    if spec.kind == "dipst" and style is None:
        raise CliError("dipst requires --style")
    reference = None
    if args.reference:
        reference = img.load_png(args.reference)
        if args.resize:
            reference = img.resize_bilinear(reference, args.resize, args.resize)
    result = run_method(spec, observed, mask, style=style, reference=reference)
    img.save_png(result.image, args.out)
    if result.history is not None:
        _write_history(result.history, _history_path(args.out))
    print(f"wrote {args.out}")
    return 0


def _history_path(out_path: str) -> str:
    stem = out_path[:-4] if out_path.lower().endswith(".png") else out_path
    return stem + ".history.csv"


def cmd_eval(args) -> int:
    reference = img.load_png(args.reference)
    test = img.load_png(args.test)
    if reference.data.shape != test.data.shape:
        raise CliError(
            f"dimension mismatch: {reference.data.shape} vs {test.data.shape}"
        )
    row = metrics.evaluate(reference, test, args.test, args.dynamic_range)
    print(metrics.format_table([row]), end="")
    return 0


def method_label(spec) -> str:
    if spec.kind == "patch":
        p = spec.options.get("patch_size", 5)
        return f"Patch {p}x{p}"
    return METHOD_LABELS[spec.kind]


def cmd_simulate(args) -> int:
    import os

    kinds = [k for k in args.methods.split(",") if k]
    if not kinds:
        raise CliError("--methods must name at least one method")
    # shared flags apply to each method that understands them
    options = _method_options(args)
    specs = [
        make_method(kind, {k: v for k, v in options.items() if k in schema_names(kind)})
        for kind in kinds
    ]
    clean, mask = _load_inputs(args)
    for spec in specs:
        _check_divisibility(spec, clean)
    style = _maybe_style(args, clean)
    if any(s.kind == "dipst" for s in specs) and style is None:
        raise CliError("dipst requires --style")

    os.makedirs(args.out_dir, exist_ok=True)
    occluded_data = clean.data.copy()
    occluded_data[:, ~mask.bits] = 0.0
    observed = img.Image(occluded_data)
    img.save_png(observed, os.path.join(args.out_dir, "masked.png"))

    rows = [metrics.evaluate(clean, clean, "Original Image", args.dynamic_range)]
    failures: list[tuple[str, str]] = []
    for spec in specs:
        label = method_label(spec)
        try:
            result = run_method(spec, observed, mask, style=style, reference=clean)
        except Exception as exc:  # a failing method must not sink the others
            failures.append((label, str(exc)))
            continue
        out_path = os.path.join(args.out_dir, f"{spec.kind}.png")
        img.save_png(result.image, out_path)
        if result.history is not None:
            _write_history(result.history, _history_path(out_path))
        rows.append(metrics.evaluate(clean, result.image, label, args.dynamic_range))

    import json

    table = metrics.format_table(rows)
    records = metrics.format_records(rows)
    for label, message in failures:
        table += f"{label}  FAILED: {message}\n"
        records += json.dumps({"label": label, "error": message}) + "\n"
    with open(os.path.join(args.out_dir, "report.txt"), "w") as fh:
        fh.write(table)
    with open(os.path.join(args.out_dir, "report.jsonl"), "w") as fh:
        fh.write(records)
    print(table, end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from inpaintkit.service import create_app

    app = create_app(args.data_dir, workers=args.workers)
    config = uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    server = uvicorn.Server(config)
    try:
        server.run()
    except SystemExit as exc:  # uvicorn raises on bind failure
        print(f"error: could not serve on {args.host}:{args.port}", file=sys.stderr)
        return 1 if exc.code else 0
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "mask": cmd_mask,
        "inpaint": cmd_inpaint,
        "eval": cmd_eval,
        "simulate": cmd_simulate,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (CliError, MethodError, MaskError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
