/**
 * Minimal convergence chart: loss on a log scale, SSIM linear, drawn on
 * a plain canvas. The data model is pure and testable; drawing is a
 * projection of it.
 */

export interface SeriesPoint {
  iteration: number;
  value: number;
}

export class Series {
  points: SeriesPoint[] = [];

  constructor(
    public label: string,
    public scale: "log" | "linear" = "linear",
  ) {}

  /** Iterations must strictly increase (stream contract). */
  append(iteration: number, value: number): void {
    const last = this.points[this.points.length - 1];
    if (last && iteration <= last.iteration) {
      throw new Error(`iteration ${iteration} does not advance past ${last.iteration}`);
    }
    this.points.push({ iteration, value });
  }

  clear(): void {
    this.points = [];
  }

  /** Map points into [0,1]^2 drawing space (y grows upward). */
  normalized(): Array<{ x: number; y: number }> {
    if (this.points.length === 0) return [];
    const xs = this.points.map((p) => p.iteration);
    const raw = this.points.map((p) => (this.scale === "log" ? Math.log10(Math.max(p.value, 1e-12)) : p.value));
    const x0 = xs[0];
    const x1 = xs[xs.length - 1];
    const lo = Math.min(...raw);
    const hi = Math.max(...raw);
    const spanX = x1 - x0 || 1;
    const spanY = hi - lo || 1;
    return this.points.map((p, i) => ({
      x: (p.iteration - x0) / spanX,
      y: (raw[i] - lo) / spanY,
    }));
  }
}

export function drawChart(canvas: HTMLCanvasElement, series: Series[], colors: string[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#444";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  const pad = 8;
  series.forEach((s, si) => {
    const pts = s.normalized();
    if (pts.length === 0) return;
    ctx.strokeStyle = colors[si % colors.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    pts.forEach((p, i) => {
      const cx = pad + p.x * (width - 2 * pad);
      const cy = height - pad - p.y * (height - 2 * pad);
      if (i === 0) ctx.moveTo(cx, cy);
      else ctx.lineTo(cx, cy);
    });
    ctx.stroke();
    ctx.fillStyle = colors[si % colors.length];
    ctx.fillText(s.label, pad + 4, 12 + 12 * si);
  });
}
