/**
 * End-to-end workbench flow against a live service: seeded region
 * growing, mask save, a streamed training job with metrics, and the
 * cancellation path. Drives the same client/editor/codec modules the
 * browser uses, headlessly.
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client, JobEvent } from "../src/api.js";
import { applyBrushStroke, createEditor, mergeOccluded, occludedCount } from "../src/mask_editor.js";
import { decodeGrayPng, encodeGrayPng } from "../src/png.js";

let server: ChildProcess;
let client: Client;
let dataDir: string;

function freePort(): number {
  const probe = spawnSync("python3", [
    "-c",
    "import socket; s=socket.socket(); s.bind(('127.0.0.1',0)); print(s.getsockname()[1]); s.close()",
  ]);
  return Number(probe.stdout.toString().trim());
}

async function waitForHealth(base: string, timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const resp = await fetch(`${base}/api/health`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 150));
  }
}

/** 32x32 two-tone gray fixture: left half dark, right half bright. */
function fixturePixels(): Uint8Array {
  const px = new Uint8Array(32 * 32);
  for (let y = 0; y < 32; y++) {
    for (let x = 0; x < 32; x++) {
      px[y * 32 + x] = x < 16 ? 64 : 192;
    }
  }
  return px;
}

const DIP_PARAMS = {
  iterations: 120,
  log_interval: 20,
  learning_rate: 1e-3,
  levels: 2,
  channels: [6, 8],
  seed: 5,
};

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "inpaintkit-e2e-"));
  const port = freePort();
  server = spawn("python3", ["-m", "inpaintkit.cli", "serve", "--port", String(port), "--data-dir", dataDir], {
    stdio: "ignore",
  });
  client = new Client(`http://127.0.0.1:${port}`);
  await waitForHealth(client.baseUrl);
}, 60000);

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("workbench flow against a live service", () => {
  it("grows a mask, saves it byte-exactly, streams a job, and renders metrics", async () => {
    // upload the damaged image (here: the clean fixture, occlusion is synthetic)
    const png = await encodeGrayPng(fixturePixels(), 32, 32);
    const info = await client.uploadImage(png);
    expect([info.height, info.width]).toEqual([32, 32]);

    // seed-grow on the dark half exactly like the seed tool does
    let editor = createEditor(info.width, info.height);
    const preview = await client.previewMask(info.image_id, "grow", {
      seeds: [[0, 0]],
      tolerance: 0.0,
    });
    expect(preview.occluded_count).toBe(32 * 16);
    const grown = await decodeGrayPng(await client.getMaskBytes(preview.mask_id));
    editor = mergeOccluded(editor, grown.pixels);
    expect(occludedCount(editor)).toBe(32 * 16);

    // too much damage for a quick job: undo-equivalent via eraser, keep a block
    editor = createEditor(info.width, info.height);
    editor = applyBrushStroke(
      editor,
      [
        { x: 14, y: 14 },
        { x: 18, y: 18 },
      ],
      "brush",
      4,
    );
    expect(occludedCount(editor)).toBeGreaterThan(40);

    // save the painted mask; the stored bytes must round-trip identically
    const maskPng = await encodeGrayPng(editor.bitmap, editor.width, editor.height);
    await client.putMask("e2e-mask", maskPng, info.image_id);
    const fetched = await client.getMaskBytes("e2e-mask");
    expect(Buffer.from(fetched).equals(Buffer.from(maskPng))).toBe(true);
    const reparsed = await decodeGrayPng(fetched);
    expect(reparsed.pixels).toEqual(editor.bitmap);

    // launch a dip job with the image itself as reference so SSIM streams
    const { job_id } = await client.createJob({
      image_id: info.image_id,
      mask_id: "e2e-mask",
      method: "dip",
      params: DIP_PARAMS,
      reference_image_id: info.image_id,
    });

    const events: JobEvent[] = [];
    await client.streamJobEvents(job_id, (event) => events.push(event));
    expect(events[0].type).toBe("snapshot");
    const progress = events.filter((e) => e.type === "progress") as Array<{
      iteration: number;
      loss: number;
      ssim: number | null;
    }>;
    expect(progress.length).toBeGreaterThanOrEqual(3);
    const iters = progress.map((p) => p.iteration);
    expect([...iters].sort((a, b) => a - b)).toEqual(iters);
    expect(progress.every((p) => Number.isFinite(p.loss))).toBe(true);
    const terminal = events[events.length - 1];
    expect(terminal.type === "state" && terminal.state === "done").toBe(true);

    // result pane: PNG decodes at the right size; metrics row present
    const result = await decodeGrayPng(await client.getResultBytes(job_id));
    expect([result.width, result.height]).toEqual([32, 32]);
    const metrics = await client.getMetrics(job_id);
    expect(metrics.label).toBe("DIP");
    expect(metrics.ssim).toBeGreaterThan(-1);
    expect(metrics.ssim).toBeLessThanOrEqual(1);
    if (metrics.psnr !== "inf") {
      expect(10 * Math.log10((255 * 255) / metrics.mse)).toBeCloseTo(metrics.psnr as number, 6);
    }
  }, 120000);

  it("cancel mid-run yields a retained best-loss partial result", async () => {
    const png = await encodeGrayPng(fixturePixels(), 32, 32);
    const info = await client.uploadImage(png);
    let editor = createEditor(32, 32);
    editor = applyBrushStroke(editor, [{ x: 16, y: 16 }], "brush", 5);
    const maskPng = await encodeGrayPng(editor.bitmap, 32, 32);
    await client.putMask("e2e-cancel-mask", maskPng, info.image_id);

    const { job_id } = await client.createJob({
      image_id: info.image_id,
      mask_id: "e2e-cancel-mask",
      method: "dip",
      params: { ...DIP_PARAMS, iterations: 200000, log_interval: 5 },
    });

    const events: JobEvent[] = [];
    let cancelled = false;
    await client.streamJobEvents(job_id, (event) => {
      events.push(event);
      if (!cancelled && event.type === "progress") {
        cancelled = true;
        void client.cancelJob(job_id);
      }
    });
    const terminal = events[events.length - 1];
    expect(terminal.type === "state" && terminal.state === "cancelled").toBe(true);

    const record = await client.getJob(job_id);
    expect(record.state).toBe("cancelled");
    expect(record.result_url).not.toBeNull();
    const partial = await decodeGrayPng(await client.getResultBytes(job_id));
    expect([partial.width, partial.height]).toEqual([32, 32]);
  }, 120000);

  it("surfaces validation errors without corrupting editor state", async () => {
    const png = await encodeGrayPng(fixturePixels(), 32, 32);
    const info = await client.uploadImage(png);
    const editor = createEditor(32, 32);
    const before = editor.bitmap.slice();
    await expect(
      client.previewMask(info.image_id, "grow", { seeds: [[99, 0]], tolerance: 0 }),
    ).rejects.toMatchObject({ status: 422 });
    // failure path: nothing merged, bitmap untouched
    expect(editor.bitmap).toEqual(before);
  });
});
