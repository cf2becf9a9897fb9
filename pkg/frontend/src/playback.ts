/**
 * Top-down 2D playback of a recorded trajectory. The state machine is
 * plain data so it can be driven headless; drawing goes through a
 * minimal canvas interface for the same reason.
 */
import { TrajectoryView } from "./api.js";

export interface Frame {
  step: number;
  t: number;
  x: number;
  y: number;
  z: number;
  distance: number;
  targetIndex: number;
}

const COL = { step: 0, t: 1, x: 2, y: 3, z: 4, distance: 5, target: 6 } as const;

export class Playback {
  private index = 0;
  playing = false;

  constructor(readonly view: TrajectoryView) {}

  get frameCount(): number {
    return this.view.rows.length;
  }

  get current(): number {
    return this.index;
  }

  frame(i: number): Frame {
    const r = this.view.rows[i];
    if (!r) throw new RangeError(`frame ${i} of ${this.frameCount}`);
    return {
      step: r[COL.step],
      t: r[COL.t],
      x: r[COL.x],
      y: r[COL.y],
      z: r[COL.z],
      distance: r[COL.distance],
      targetIndex: r[COL.target],
    };
  }

  seek(i: number): void {
    this.index = Math.max(0, Math.min(this.frameCount - 1, i));
  }

  /** Advance by n frames; returns false once the end is reached. */
  advance(n = 1): boolean {
    if (this.index >= this.frameCount - 1) {
      this.playing = false;
      return false;
    }
    this.seek(this.index + n);
    return true;
  }

  /** Root path up to and including frame i, as [x, y] pairs. */
  pathUpTo(i: number): [number, number][] {
    return this.view.rows.slice(0, i + 1).map((r) => [r[COL.x], r[COL.y]]);
  }

  /** Row indices where a target was consumed, in consumption order. */
  absorptionFrames(): number[] {
    return this.view.absorptions.map((a) => a.row);
  }
}

export interface FitTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/**
 * Uniform world-to-screen transform that fits every path point and
 * target into width x height with a margin. Screen y grows downward,
 * world y grows up, so the y axis flips in apply().
 */
export function fitTransform(view: TrajectoryView, width: number, height: number, margin = 20): FitTransform {
  const xs: number[] = [0];
  const ys: number[] = [0];
  for (const r of view.rows) {
    xs.push(r[COL.x]);
    ys.push(r[COL.y]);
  }
  for (const t of view.targets) {
    xs.push(t[0]);
    ys.push(t[1]);
  }
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const offsetX = margin + ((width - 2 * margin) - spanX * scale) / 2 - minX * scale;
  const offsetY = height - margin - ((height - 2 * margin) - spanY * scale) / 2 + minY * scale;
  return { scale, offsetX, offsetY };
}

export function applyTransform(tf: FitTransform, x: number, y: number): [number, number] {
  return [tf.offsetX + x * tf.scale, tf.offsetY - y * tf.scale];
}

/** Just enough of CanvasRenderingContext2D for drawFrame. */
export interface CanvasLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
}

/**
 * Draw frame i: path so far, all targets (consumed ones highlighted),
 * and the organism's current root position.
 */
export function drawFrame(ctx: CanvasLike, pb: Playback, i: number, width: number, height: number): void {
  const tf = fitTransform(pb.view, width, height);
  ctx.clearRect(0, 0, width, height);

  const path = pb.pathUpTo(i);
  if (path.length > 1) {
    ctx.strokeStyle = "#4f8bc9";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    const [x0, y0] = applyTransform(tf, path[0][0], path[0][1]);
    ctx.moveTo(x0, y0);
    for (let k = 1; k < path.length; k++) {
      const [x, y] = applyTransform(tf, path[k][0], path[k][1]);
      ctx.lineTo(x, y);
    }
    ctx.stroke();
  }

  const consumed = new Set(
    pb.view.absorptions.filter((a) => a.row <= i).map((a) => a.target_index),
  );
  pb.view.targets.forEach((t, idx) => {
    const [x, y] = applyTransform(tf, t[0], t[1]);
    ctx.fillStyle = consumed.has(idx) ? "#e3b341" : "#2ea043";
    ctx.beginPath();
    ctx.arc(x, y, consumed.has(idx) ? 7 : 5, 0, 2 * Math.PI);
    ctx.fill();
  });

  const here = pb.frame(i);
  const [hx, hy] = applyTransform(tf, here.x, here.y);
  ctx.fillStyle = "#d14";
  ctx.beginPath();
  ctx.arc(hx, hy, 4, 0, 2 * Math.PI);
  ctx.fill();
}
