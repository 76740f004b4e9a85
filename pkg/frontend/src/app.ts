/**
 * Workbench wiring: upload an image, paint or grow a mask, launch an
 * inpainting job, watch convergence live, inspect the result. All
 * numerical work happens on the server; this file only projects state
 * into the DOM.
 */

import { Client, JobEvent, MetricRow } from "./api.js";
import {
  MaskEditorState,
  Point,
  applyBrushStroke,
  createEditor,
  mergeOccluded,
  occludedCount,
  setBrushRadius,
  setTolerance,
  setTool,
  undo,
} from "./mask_editor.js";
import { Series, drawChart } from "./chart.js";
import { decodeGrayPng, encodeGrayPng } from "./png.js";

const client = new Client("");

interface AppState {
  imageId: string | null;
  referenceId: string | null;
  bitmap: ImageBitmap | null;
  editor: MaskEditorState | null;
  maskVisible: boolean;
  maskId: string | null;
  jobId: string | null;
  running: boolean;
}

const state: AppState = {
  imageId: null,
  referenceId: null,
  bitmap: null,
  editor: null,
  maskVisible: true,
  maskId: null,
  jobId: null,
  running: false,
};

const lossSeries = new Series("loss", "log");
const ssimSeries = new Series("ssim", "linear");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(message: string, isError = true): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = message;
  box.className = message ? (isError ? "banner error" : "banner info") : "banner";
}

function setCoverage(): void {
  if (!state.editor) return;
  const total = state.editor.width * state.editor.height;
  const n = occludedCount(state.editor);
  el<HTMLSpanElement>("coverage").textContent = `${n} px occluded (${((100 * n) / total).toFixed(1)}%)`;
}

function redraw(): void {
  const canvas = el<HTMLCanvasElement>("editor-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx || !state.editor) return;
  const { width, height } = state.editor;
  canvas.width = width;
  canvas.height = height;
  if (state.bitmap) ctx.drawImage(state.bitmap, 0, 0);
  if (state.maskVisible) {
    const overlay = ctx.getImageData(0, 0, width, height);
    for (let i = 0; i < width * height; i++) {
      if (state.editor.bitmap[i] < 128) {
        overlay.data[4 * i] = Math.min(255, overlay.data[4 * i] * 0.4 + 200);
        overlay.data[4 * i + 1] *= 0.35;
        overlay.data[4 * i + 2] *= 0.35;
      }
    }
    ctx.putImageData(overlay, 0, 0);
  }
  setCoverage();
}

function updateEditor(next: MaskEditorState): void {
  state.editor = next;
  state.maskId = null; // edits invalidate the saved mask
  redraw();
}

async function onUpload(input: HTMLInputElement, slot: "image" | "reference"): Promise<void> {
  const file = input.files?.[0];
  if (!file) return;
  try {
    const bytes = new Uint8Array(await file.arrayBuffer());
    const info = await client.uploadImage(bytes);
    if (slot === "reference") {
      state.referenceId = info.image_id;
      banner(`reference ${info.image_id.slice(0, 8)} (${info.width}x${info.height})`, false);
      return;
    }
    state.imageId = info.image_id;
    state.bitmap = await createImageBitmap(new Blob([bytes as BlobPart], { type: "image/png" }));
    state.editor = createEditor(info.width, info.height);
    banner(`image ${info.image_id.slice(0, 8)} (${info.width}x${info.height})`, false);
    redraw();
  } catch (err) {
    banner(`upload failed: ${(err as Error).message}`);
  }
}

function canvasPoint(event: PointerEvent): Point {
  const canvas = el<HTMLCanvasElement>("editor-canvas");
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

async function growFromSeed(point: Point): Promise<void> {
  if (!state.imageId || !state.editor) return;
  try {
    const preview = await client.previewMask(state.imageId, "grow", {
      seeds: [[Math.round(point.y), Math.round(point.x)]],
      tolerance: state.editor.tolerance,
    });
    const maskPng = await client.getMaskBytes(preview.mask_id);
    const decoded = await decodeGrayPng(maskPng);
    updateEditor(mergeOccluded(state.editor, decoded.pixels));
    banner(`region grew to ${preview.occluded_count} px`, false);
  } catch (err) {
    banner(`region growing failed: ${(err as Error).message}`); // editor unchanged
  }
}

async function thresholdFromPixel(point: Point): Promise<void> {
  if (!state.imageId || !state.editor || !state.bitmap) return;
  const probe = document.createElement("canvas");
  probe.width = state.editor.width;
  probe.height = state.editor.height;
  const ctx = probe.getContext("2d");
  if (!ctx) return;
  ctx.drawImage(state.bitmap, 0, 0);
  const px = ctx.getImageData(Math.round(point.x), Math.round(point.y), 1, 1).data;
  try {
    const preview = await client.previewMask(state.imageId, "threshold", {
      color: [px[0] / 255, px[1] / 255, px[2] / 255],
      tolerance: state.editor.tolerance,
    });
    const decoded = await decodeGrayPng(await client.getMaskBytes(preview.mask_id));
    updateEditor(mergeOccluded(state.editor, decoded.pixels));
    banner(`threshold marked ${preview.occluded_count} px`, false);
  } catch (err) {
    banner(`threshold failed: ${(err as Error).message}`);
  }
}

async function saveMask(): Promise<string | null> {
  if (!state.imageId || !state.editor) return null;
  const png = await encodeGrayPng(state.editor.bitmap, state.editor.width, state.editor.height);
  const maskId = `edit-${state.imageId.slice(0, 12)}`;
  try {
    await client.putMask(maskId, png, state.imageId);
    state.maskId = maskId;
    banner(`mask saved as ${maskId}`, false);
    return maskId;
  } catch (err) {
    banner(`mask save failed: ${(err as Error).message}`);
    return null;
  }
}

function formParams(): { method: string; params: Record<string, unknown> } {
  const method = el<HTMLSelectElement>("method").value;
  const params: Record<string, unknown> = {};
  const read = (id: string): number => Number(el<HTMLInputElement>(id).value);
  if (method === "tv") {
    params.lambd = read("tv-lambda");
    params.step = read("tv-step");
    params.iterations = read("tv-iterations");
  } else if (method === "ns") {
    params.transport_steps = read("ns-steps");
  } else if (method === "patch") {
    params.patch_size = read("patch-size");
    params.seed = read("seed");
  } else {
    params.learning_rate = read("dip-lr");
    params.iterations = read("dip-iterations");
    params.lambd = read("dip-lambda");
    params.log_interval = read("dip-log-interval");
    params.seed = read("seed");
    if (method === "dipst") {
      params.alpha = read("dipst-alpha");
      params.beta = read("dipst-beta");
    }
  }
  return { method, params };
}

function showMethodFields(): void {
  const method = el<HTMLSelectElement>("method").value;
  for (const group of Array.from(document.querySelectorAll<HTMLElement>("[data-methods]"))) {
    const list = (group.dataset.methods ?? "").split(" ");
    group.style.display = list.some((m) => method === m || (m === "dip*" && method.startsWith("dip")))
      ? ""
      : "none";
  }
}

function renderMetrics(row: MetricRow): void {
  const table = el<HTMLTableElement>("metrics");
  const psnr = row.psnr === "inf" ? "inf" : (row.psnr as number).toFixed(2);
  table.innerHTML =
    "<tr><th>Model</th><th>SSIM</th><th>NRMSE</th><th>MSE</th><th>PSNR</th></tr>" +
    `<tr><td>${row.label}</td><td>${row.ssim.toFixed(4)}</td>` +
    `<td>${row.nrmse.toExponential(3)}</td><td>${row.mse.toExponential(3)}</td><td>${psnr}</td></tr>`;
  table.style.display = "";
}

async function showResult(jobId: string): Promise<void> {
  try {
    const bytes = await client.getResultBytes(jobId);
    const url = URL.createObjectURL(new Blob([bytes as BlobPart], { type: "image/png" }));
    el<HTMLImageElement>("result-img").src = url;
  } catch (err) {
    banner(`no result available: ${(err as Error).message}`);
    return;
  }
  if (state.referenceId) {
    try {
      renderMetrics(await client.getMetrics(jobId));
    } catch {
      /* metrics only exist with a bound reference */
    }
  }
}

async function runJob(): Promise<void> {
  if (state.running) return;
  if (!state.imageId) {
    banner("upload an image first");
    return;
  }
  const maskId = state.maskId ?? (await saveMask());
  if (!maskId) return;
  const { method, params } = formParams();
  lossSeries.clear();
  ssimSeries.clear();
  el<HTMLTableElement>("metrics").style.display = "none";
  try {
    const request: Parameters<Client["createJob"]>[0] = {
      image_id: state.imageId,
      mask_id: maskId,
      method,
      params,
    };
    if (state.referenceId) request.reference_image_id = state.referenceId;
    if (method === "dipst") request.style_image_id = state.referenceId ?? state.imageId;
    const { job_id } = await client.createJob(request);
    state.jobId = job_id;
    state.running = true;
    el<HTMLButtonElement>("cancel").disabled = false;
    banner(`job ${job_id} running`, false);
    await client.streamJobEvents(job_id, onJobEvent);
  } catch (err) {
    banner(`job failed: ${(err as Error).message}`);
  } finally {
    state.running = false;
    el<HTMLButtonElement>("cancel").disabled = true;
  }
}

function onJobEvent(event: JobEvent): void {
  if (event.type === "progress") {
    lossSeries.append(event.iteration, event.loss);
    if (event.ssim != null) ssimSeries.append(event.iteration, event.ssim);
    el<HTMLSpanElement>("job-status").textContent =
      `iteration ${event.iteration}, loss ${event.loss.toExponential(3)}` +
      (event.ssim != null ? `, ssim ${event.ssim.toFixed(4)}` : "");
    drawChart(el<HTMLCanvasElement>("chart"), [lossSeries, ssimSeries], ["#d4483b", "#3b78d4"]);
  } else if (event.type === "state") {
    el<HTMLSpanElement>("job-status").textContent = `finished: ${event.state}`;
    if (event.state === "failed") {
      banner(`job failed: ${event.error ?? "unknown error"}`);
    } else if (state.jobId) {
      void showResult(state.jobId); // done and cancelled both carry a result
    }
  }
}

function wire(): void {
  el<HTMLInputElement>("image-upload").addEventListener("change", (e) =>
    onUpload(e.target as HTMLInputElement, "image"),
  );
  el<HTMLInputElement>("reference-upload").addEventListener("change", (e) =>
    onUpload(e.target as HTMLInputElement, "reference"),
  );

  for (const tool of ["brush", "eraser", "seed", "threshold"] as const) {
    el<HTMLButtonElement>(`tool-${tool}`).addEventListener("click", () => {
      if (state.editor) state.editor = setTool(state.editor, tool);
      for (const t of ["brush", "eraser", "seed", "threshold"]) {
        el(`tool-${t}`).classList.toggle("active", t === tool);
      }
    });
  }
  el<HTMLInputElement>("radius").addEventListener("input", (e) => {
    if (state.editor) state.editor = setBrushRadius(state.editor, Number((e.target as HTMLInputElement).value));
  });
  el<HTMLInputElement>("tolerance").addEventListener("input", (e) => {
    if (state.editor) state.editor = setTolerance(state.editor, Number((e.target as HTMLInputElement).value));
  });
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    if (state.editor) updateEditor(undo(state.editor));
  });
  el<HTMLInputElement>("mask-visible").addEventListener("change", (e) => {
    state.maskVisible = (e.target as HTMLInputElement).checked;
    redraw();
  });
  el<HTMLButtonElement>("save-mask").addEventListener("click", () => void saveMask());
  el<HTMLButtonElement>("run").addEventListener("click", () => void runJob());
  el<HTMLButtonElement>("cancel").addEventListener("click", () => {
    if (state.jobId) void client.cancelJob(state.jobId);
  });
  el<HTMLSelectElement>("method").addEventListener("change", showMethodFields);
  showMethodFields();

  const canvas = el<HTMLCanvasElement>("editor-canvas");
  let stroke: Point[] | null = null;
  canvas.addEventListener("pointerdown", (e) => {
    if (!state.editor) return;
    const point = canvasPoint(e);
    if (state.editor.tool === "seed") {
      void growFromSeed(point);
    } else if (state.editor.tool === "threshold") {
      void thresholdFromPixel(point);
    } else {
      stroke = [point];
      canvas.setPointerCapture(e.pointerId);
    }
  });
  canvas.addEventListener("pointermove", (e) => {
    if (stroke) stroke.push(canvasPoint(e));
  });
  canvas.addEventListener("pointerup", () => {
    if (stroke && state.editor && (state.editor.tool === "brush" || state.editor.tool === "eraser")) {
      updateEditor(applyBrushStroke(state.editor, stroke, state.editor.tool, state.editor.brushRadius));
    }
    stroke = null;
  });
}

wire();
