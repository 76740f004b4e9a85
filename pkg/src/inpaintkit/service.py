"""HTTP facade for the interactive restoration workbench.

Routes (all JSON unless noted):

- ``POST /api/images`` (PNG body) -> {image_id, width, height, channels};
  content-addressed, so re-uploading identical bytes returns the same id.
- ``GET /api/images/{id}.png`` raw image bytes.
- ``POST /api/masks/preview`` {image_id, mode: threshold|grow, params}
  -> {mask_id, occluded_count, mask_url}; deterministic, content-addressed.
- ``PUT /api/masks/{id}`` (mask PNG body, optional ?image_id= binding)
  -> {mask_id}; 409 when dimensions disagree with the bound image.
- ``GET /api/masks/{id}`` raw mask PNG bytes.
- ``POST /api/jobs`` {image_id, mask_id, method, params?, reference_image_id?,
  style_image_id?} -> {job_id}; jobs run on a bounded FIFO worker pool.
- ``GET /api/jobs/{id}`` full job record; ``DELETE`` requests cancellation.
- ``GET /api/jobs/{id}/events`` server-sent events: one snapshot on
  connect (never a replay of older events), then live progress records
  {type: progress, iteration, loss, ssim?} and a terminal
  {type: state, state} event.
- ``GET /api/jobs/{id}/result.png``; ``GET /api/jobs/{id}/metrics``.

Error bodies are {code, message, details?}. A job's result PNG is
byte-identical to the CLI run with the same inputs, parameters, and seed.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from inpaintkit import image as img
from inpaintkit import masking, metrics
from inpaintkit.cli import method_label
from inpaintkit.masking import Mask, MaskError, SeedPoint, ToleranceSpec
from inpaintkit.methods import MethodError, make_method, required_divisor, run_method

MAX_UPLOAD_BYTES = 32 * 1024 * 1024

TERMINAL_STATES = ("done", "failed", "cancelled")


class ApiError(Exception):
    def __init__(self, status: int, message: str, details: Optional[dict] = None) -> None:
        super().__init__(message)
        self.status = status
        self.message = message
        self.details = details


@dataclass
class Job:
    id: str
    image_id: str
    mask_id: str
    kind: str
    options: dict
    reference_id: Optional[str]
    style_id: Optional[str]
    state: str = "queued"
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    progress: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    error: Optional[str] = None
    result_path: Optional[str] = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def record(self) -> dict:
        return {
            "job_id": self.id,
            "image_id": self.image_id,
            "mask_id": self.mask_id,
            "method": {"kind": self.kind, "params": self.options},
            "state": self.state,
            "created": self.created,
            "updated": self.updated,
            "progress": self.progress,
            "error": self.error,
            "result_url": f"/api/jobs/{self.id}/result.png" if self.result_path else None,
        }


class Store:
    """Content-addressed PNG storage under the data directory."""

    def __init__(self, data_dir: str) -> None:
        self.data_dir = data_dir
        for sub in ("images", "masks", "results"):
            os.makedirs(os.path.join(data_dir, sub), exist_ok=True)

    def _path(self, sub: str, key: str) -> str:
        safe = "".join(ch for ch in key if ch.isalnum() or ch in "-_")
        if not safe:
            raise ApiError(400, "invalid identifier")
        return os.path.join(self.data_dir, sub, f"{safe}.png")

    def put_image(self, blob: bytes) -> tuple[str, img.Image]:
        try:
            decoded = img.decode_png(blob)
        except img.ImageError as exc:
            raise ApiError(400, f"bad PNG: {exc}") from None
        image_id = hashlib.sha256(blob).hexdigest()[:24]
        path = self._path("images", image_id)
        if not os.path.exists(path):
            with open(path, "wb") as fh:
                fh.write(blob)
        return image_id, decoded

    def image_bytes(self, image_id: str) -> bytes:
        path = self._path("images", image_id)
        if not os.path.exists(path):
            raise ApiError(404, f"unknown image {image_id}")
        with open(path, "rb") as fh:
            return fh.read()

    def load_image(self, image_id: str) -> img.Image:
        return img.decode_png(self.image_bytes(image_id))

    def put_mask(self, mask_id: str, blob: bytes) -> Mask:
        try:
            mask = masking.decode_mask(blob)
        except MaskError as exc:
            raise ApiError(400, f"bad mask PNG: {exc}") from None
        with open(self._path("masks", mask_id), "wb") as fh:
            fh.write(blob)
        return mask

    def store_mask(self, mask: Mask) -> str:
        blob = masking.encode_mask(mask)
        mask_id = hashlib.sha256(blob).hexdigest()[:24]
        path = self._path("masks", mask_id)
        if not os.path.exists(path):
            with open(path, "wb") as fh:
                fh.write(blob)
        return mask_id

    def mask_bytes(self, mask_id: str) -> bytes:
        path = self._path("masks", mask_id)
        if not os.path.exists(path):
            raise ApiError(404, f"unknown mask {mask_id}")
        with open(path, "rb") as fh:
            return fh.read()

    def load_mask(self, mask_id: str) -> Mask:
        return masking.decode_mask(self.mask_bytes(mask_id))

    def result_path(self, job_id: str) -> str:
        return self._path("results", job_id)


class JobManager:
    """Bounded FIFO worker pool with cooperative cancellation."""

    def __init__(self, store: Store, workers: int = 1) -> None:
        self.store = store
        self.lock = threading.Lock()
        self.wakeup = threading.Condition(self.lock)
        self.jobs: dict[str, Job] = {}
        self.queue: list[str] = []
        self.closing = False
        self.threads = [
            threading.Thread(target=self._worker, daemon=True, name=f"inpaint-worker-{i}")
            for i in range(max(1, workers))
        ]
        for t in self.threads:
            t.start()

    def submit(self, job: Job) -> None:
        with self.wakeup:
            self.jobs[job.id] = job
            self.queue.append(job.id)
            self.wakeup.notify()

    def get(self, job_id: str) -> Job:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise ApiError(404, f"unknown job {job_id}")
        return job

    def cancel(self, job_id: str) -> Job:
        job = self.get(job_id)
        with self.wakeup:
            job.cancel_event.set()
            if job.state == "queued":
                self._finish(job, "cancelled")
            self.wakeup.notify_all()
        return job

    def shutdown(self) -> None:
        with self.wakeup:
            self.closing = True
            for job in self.jobs.values():
                job.cancel_event.set()
            self.wakeup.notify_all()

    def _finish(self, job: Job, state: str, error: Optional[str] = None) -> None:
        # caller holds the lock
        if job.state in TERMINAL_STATES:
            return
        job.state = state
        job.error = error
        job.updated = time.time()
        if job.id in self.queue:
            self.queue.remove(job.id)
        self.wakeup.notify_all()

    def _worker(self) -> None:
        while True:
            with self.wakeup:
                while not self.queue and not self.closing:
                    self.wakeup.wait()
                if self.closing:
                    return
                job = self.jobs[self.queue.pop(0)]
                if job.state != "queued":
                    continue
                job.state = "running"
                job.updated = time.time()
                self.wakeup.notify_all()
            try:
                self._run(job)
            except Exception as exc:
                with self.wakeup:
                    self._finish(job, "failed", str(exc))

    def _run(self, job: Job) -> None:
        observed = self.store.load_image(job.image_id)
        mask = self.store.load_mask(job.mask_id)
        reference = self.store.load_image(job.reference_id) if job.reference_id else None
        style = self.store.load_image(job.style_id) if job.style_id else None
        spec = make_method(job.kind, job.options)

        def progress(point) -> bool:
            with self.wakeup:
                event = {
                    "type": "progress",
                    "iteration": point.iteration,
                    "loss": point.loss,
                    "ssim": point.ssim,
                }
                job.progress = {k: v for k, v in event.items() if k != "type"}
                job.events.append(event)
                job.updated = time.time()
                self.wakeup.notify_all()
            return not job.cancel_event.is_set()

        result = run_method(
            spec, observed, mask, style=style, reference=reference, progress=progress
        )
        path = self.store.result_path(job.id)
        img.save_png(result.image, path)
        with self.wakeup:
            job.result_path = path
            self._finish(job, "cancelled" if job.cancel_event.is_set() else "done")

    def event_stream(self, job_id: str):
        """Snapshot on connect, then live events until a terminal state."""
        job = self.get(job_id)
        with self.lock:
            cursor = len(job.events)
            snapshot = {"type": "snapshot", "state": job.state, **job.progress}
        yield snapshot
        while True:
            with self.wakeup:
                while cursor == len(job.events) and job.state not in TERMINAL_STATES:
                    self.wakeup.wait(timeout=0.5)
                pending = job.events[cursor:]
                cursor = len(job.events)
                state = job.state
            for event in pending:
                yield event
            if state in TERMINAL_STATES and cursor == len(job.events):
                yield {"type": "state", "state": state, "error": job.error}
                return


def create_app(data_dir: str, workers: int = 1, static_dir: Optional[str] = None) -> FastAPI:
    """Build the service application over a data directory."""
    from contextlib import asynccontextmanager

    store = Store(data_dir)
    manager = JobManager(store, workers)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="inpaintkit service", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.manager = manager

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        body = {"code": exc.status, "message": exc.message}
        if exc.details:
            body["details"] = exc.details
        return JSONResponse(status_code=exc.status, content=body)

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/images")
    async def upload_image(request: Request):
        blob = await request.body()
        if len(blob) > MAX_UPLOAD_BYTES:
            raise ApiError(413, f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        image_id, decoded = store.put_image(blob)
        return {
            "image_id": image_id,
            "width": decoded.width,
            "height": decoded.height,
            "channels": decoded.channels,
        }

    @app.get("/api/images/{image_id}.png")
    def get_image(image_id: str):
        return Response(store.image_bytes(image_id), media_type="image/png")

    @app.post("/api/masks/preview")
    async def mask_preview(request: Request):
        body = await _json_body(request)
        image_id = _require(body, "image_id", str)
        mode = _require(body, "mode", str)
        params = body.get("params") or {}
        image = store.load_image(image_id)
        mask = _build_preview_mask(image, mode, params)
        mask_id = store.store_mask(mask)
        return {
            "mask_id": mask_id,
            "occluded_count": mask.occluded_count,
            "mask_url": f"/api/masks/{mask_id}",
        }

    @app.put("/api/masks/{mask_id}")
    async def put_mask(mask_id: str, request: Request, image_id: Optional[str] = None):
        blob = await request.body()
        if len(blob) > MAX_UPLOAD_BYTES:
            raise ApiError(413, f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            mask = masking.decode_mask(blob)
        except MaskError as exc:
            raise ApiError(400, f"bad mask PNG: {exc}") from None
        if image_id is not None:
            bound = store.load_image(image_id)
            if (mask.height, mask.width) != (bound.height, bound.width):
                raise ApiError(
                    409,
                    f"mask is {mask.height}x{mask.width} but image {image_id} "
                    f"is {bound.height}x{bound.width}",
                )
        store.put_mask(mask_id, blob)
        return {"mask_id": mask_id}

    @app.get("/api/masks/{mask_id}")
    def get_mask(mask_id: str):
        return Response(store.mask_bytes(mask_id), media_type="image/png")

    @app.post("/api/jobs")
    async def create_job(request: Request):
        body = await _json_body(request)
        image_id = _require(body, "image_id", str)
        mask_id = _require(body, "mask_id", str)
        kind = _require(body, "method", str)
        options = body.get("params") or {}
        reference_id = body.get("reference_image_id")
        style_id = body.get("style_image_id")

        image = store.load_image(image_id)
        mask = store.load_mask(mask_id)
        if (image.height, image.width) != (mask.height, mask.width):
            raise ApiError(
                422,
                f"image {image.height}x{image.width} and mask "
                f"{mask.height}x{mask.width} dimensions disagree",
            )
        try:
            spec = make_method(kind, options)
        except MethodError as exc:
            raise ApiError(422, str(exc)) from None
        div = required_divisor(spec)
        if image.height % div or image.width % div:
            raise ApiError(422, f"{kind} needs dimensions divisible by {div}")
        if kind == "dipst" and style_id is None:
            raise ApiError(422, "dipst requires style_image_id")
        for extra in (reference_id, style_id):
            if extra is not None:
                store.load_image(extra)  # 404 when missing

        job = Job(
            id=uuid.uuid4().hex[:16],
            image_id=image_id,
            mask_id=mask_id,
            kind=kind,
            options=spec.options,
            reference_id=reference_id,
            style_id=style_id,
        )
        manager.submit(job)
        return {"job_id": job.id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return manager.get(job_id).record()

    @app.delete("/api/jobs/{job_id}")
    def job_cancel(job_id: str):
        return manager.cancel(job_id).record()

    @app.get("/api/jobs/{job_id}/events")
    def job_events(job_id: str):
        manager.get(job_id)  # 404 before the stream starts

        def sse():
            for event in manager.event_stream(job_id):
                yield f"data: {json.dumps(event)}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.get("/api/jobs/{job_id}/result.png")
    def job_result(job_id: str):
        job = manager.get(job_id)
        if job.result_path is None or not os.path.exists(job.result_path):
            raise ApiError(409, f"job {job_id} has no result (state: {job.state})")
        with open(job.result_path, "rb") as fh:
            return Response(fh.read(), media_type="image/png")

    @app.get("/api/jobs/{job_id}/metrics")
    def job_metrics(job_id: str):
        job = manager.get(job_id)
        if job.reference_id is None:
            raise ApiError(404, f"job {job_id} has no reference image bound")
        if job.result_path is None or not os.path.exists(job.result_path):
            raise ApiError(409, f"job {job_id} has no result (state: {job.state})")
        reference = store.load_image(job.reference_id)
        result = img.load_png(job.result_path)
        spec = make_method(job.kind, job.options)
        row = metrics.evaluate(reference, result, method_label(spec))
        return row.to_record()

    _mount_static(app, static_dir)
    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise ApiError(400, "request body must be JSON") from None
    if not isinstance(body, dict):
        raise ApiError(400, "request body must be a JSON object")
    return body


def _require(body: dict, key: str, typ: type):
    value = body.get(key)
    if not isinstance(value, typ):
        raise ApiError(422, f"field {key!r} is required and must be {typ.__name__}")
    return value


def _build_preview_mask(image: img.Image, mode: str, params: dict) -> Mask:
    tolerance = params.get("tolerance", 0.1)
    try:
        tolerance = float(tolerance)
    except (TypeError, ValueError):
        raise ApiError(422, f"invalid tolerance {tolerance!r}") from None
    if mode == "threshold":
        color = params.get("color")
        if not isinstance(color, (list, tuple)) or len(color) != image.channels:
            raise ApiError(
                422, f"threshold mode needs 'color' with {image.channels} components"
            )
        try:
            return masking.mask_by_color(image, ToleranceSpec(tuple(map(float, color)), tolerance))
        except MaskError as exc:
            raise ApiError(422, str(exc)) from None
    if mode == "grow":
        raw = params.get("seeds") or ([params["seed"]] if "seed" in params else None)
        if not raw:
            raise ApiError(422, "grow mode needs 'seeds': [[row, col], ...]")
        seeds = []
        for pair in raw:
            try:
                r, c = int(pair[0]), int(pair[1])
            except (TypeError, ValueError, IndexError, KeyError):
                raise ApiError(422, f"invalid seed {pair!r}") from None
            if not (0 <= r < image.height and 0 <= c < image.width):
                raise ApiError(
                    422,
                    f"seed ({r}, {c}) out of bounds",
                    details={"seed": [r, c], "height": image.height, "width": image.width},
                )
            seeds.append(SeedPoint(r, c))
        try:
            return masking.region_grow(image, seeds, tolerance)
        except MaskError as exc:
            raise ApiError(422, str(exc)) from None
    raise ApiError(422, f"unknown preview mode {mode!r}; expected threshold or grow")


def _mount_static(app: FastAPI, static_dir: Optional[str]) -> None:
    if static_dir is None:
        repo_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
        static_dir = os.path.join(repo_root, "frontend", "dist")
    if os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="webui")
    else:
        @app.get("/")
        def index():
            return Response(
                "<html><body><h1>inpaintkit service</h1>"
                "<p>API under /api; build the frontend for the workbench UI.</p>"
                "</body></html>",
                media_type="text/html",
            )
