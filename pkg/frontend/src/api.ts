/**
 * Typed client for the restoration service.
 *
 * Plain fetch throughout, so the same code runs in the browser and under
 * Node for the headless end-to-end tests. The event stream is parsed
 * from the raw response body (one `data:` line per server-sent event).
 */

export interface UploadedImage {
  image_id: string;
  width: number;
  height: number;
  channels: number;
}

export interface MaskPreview {
  mask_id: string;
  occluded_count: number;
  mask_url: string;
}

export interface JobMethod {
  kind: string;
  params: Record<string, unknown>;
}

export interface JobRecord {
  job_id: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  method: JobMethod;
  progress: { iteration?: number; loss?: number; ssim?: number | null };
  error: string | null;
  result_url: string | null;
}

export interface MetricRow {
  label: string;
  ssim: number;
  nrmse: number;
  mse: number;
  psnr: number | "inf";
}

export type JobEvent =
  | { type: "snapshot"; state: string; iteration?: number; loss?: number; ssim?: number | null }
  | { type: "progress"; iteration: number; loss: number; ssim: number | null }
  | { type: "state"; state: string; error: string | null };

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public details?: unknown,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<never> {
  let message = resp.statusText;
  let details: unknown;
  try {
    const body = await resp.json();
    message = body.message ?? message;
    details = body.details;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, message, details);
}

export class Client {
  constructor(public baseUrl: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.json("/api/health");
  }

  uploadImage(png: Uint8Array): Promise<UploadedImage> {
    return this.json("/api/images", {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: png as BodyInit,
    });
  }

  previewMask(
    imageId: string,
    mode: "threshold" | "grow",
    params: Record<string, unknown>,
  ): Promise<MaskPreview> {
    return this.json("/api/masks/preview", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ image_id: imageId, mode, params }),
    });
  }

  async putMask(maskId: string, png: Uint8Array, imageId?: string): Promise<void> {
    const query = imageId ? `?image_id=${encodeURIComponent(imageId)}` : "";
    const resp = await fetch(`${this.baseUrl}/api/masks/${maskId}${query}`, {
      method: "PUT",
      headers: { "content-type": "image/png" },
      body: png as BodyInit,
    });
    if (!resp.ok) await parseError(resp);
  }

  async getMaskBytes(maskId: string): Promise<Uint8Array> {
    const resp = await fetch(`${this.baseUrl}/api/masks/${maskId}`);
    if (!resp.ok) await parseError(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }

  createJob(request: {
    image_id: string;
    mask_id: string;
    method: string;
    params?: Record<string, unknown>;
    reference_image_id?: string;
    style_image_id?: string;
  }): Promise<{ job_id: string }> {
    return this.json("/api/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  getJob(jobId: string): Promise<JobRecord> {
    return this.json(`/api/jobs/${jobId}`);
  }

  cancelJob(jobId: string): Promise<JobRecord> {
    return this.json(`/api/jobs/${jobId}`, { method: "DELETE" });
  }

  async getResultBytes(jobId: string): Promise<Uint8Array> {
    const resp = await fetch(`${this.baseUrl}/api/jobs/${jobId}/result.png`);
    if (!resp.ok) await parseError(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }

  getMetrics(jobId: string): Promise<MetricRow> {
    return this.json(`/api/jobs/${jobId}/metrics`);
  }

  /**
   * Subscribe to a job's event stream. Resolves once a terminal event
   * arrives (or the stream ends); the abort controller stops it early.
   */
  async streamJobEvents(
    jobId: string,
    onEvent: (event: JobEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/api/jobs/${jobId}/events`, { signal });
    if (!resp.ok) await parseError(resp);
    if (!resp.body) throw new ApiError(0, "event stream has no body");
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      let cut;
      while ((cut = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, cut);
        buffer = buffer.slice(cut + 2);
        for (const line of frame.split("\n")) {
          if (!line.startsWith("data: ")) continue;
          const event = JSON.parse(line.slice(6)) as JobEvent;
          onEvent(event);
          if (event.type === "state") {
            reader.cancel().catch(() => {});
            return;
          }
        }
      }
    }
  }
}
