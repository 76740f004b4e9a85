/**
 * Mask editor state and its pure reducers.
 *
 * The bitmap uses the wire convention: byte 0 = occluded (to be
 * inpainted), byte 255 = reliable. Every edit returns a fresh state and
 * pushes one delta onto the undo stack; rendering is a projection of
 * this state and lives elsewhere.
 */

export type Tool = "brush" | "eraser" | "seed" | "threshold";

export interface Point {
  x: number;
  y: number;
}

export interface BitmapDelta {
  indices: Uint32Array;
  previous: Uint8Array;
}

export interface MaskEditorState {
  width: number;
  height: number;
  bitmap: Uint8Array;
  tool: Tool;
  brushRadius: number;
  tolerance: number;
  undoStack: BitmapDelta[];
}

export const OCCLUDED = 0;
export const RELIABLE = 255;

export function createEditor(width: number, height: number): MaskEditorState {
  return {
    width,
    height,
    bitmap: new Uint8Array(width * height).fill(RELIABLE),
    tool: "brush",
    brushRadius: 4,
    tolerance: 0.08,
    undoStack: [],
  };
}

export function occludedCount(state: MaskEditorState): number {
  let n = 0;
  for (let i = 0; i < state.bitmap.length; i++) {
    if (state.bitmap[i] === OCCLUDED) n++;
  }
  return n;
}

function withEdit(state: MaskEditorState, edits: Map<number, number>): MaskEditorState {
  if (edits.size === 0) {
    return { ...state, undoStack: [...state.undoStack, { indices: new Uint32Array(0), previous: new Uint8Array(0) }] };
  }
  const indices = new Uint32Array(edits.size);
  const previous = new Uint8Array(edits.size);
  const bitmap = state.bitmap.slice();
  let k = 0;
  for (const [index, value] of edits) {
    indices[k] = index;
    previous[k] = state.bitmap[index];
    bitmap[index] = value;
    k++;
  }
  return { ...state, bitmap, undoStack: [...state.undoStack, { indices, previous }] };
}

function discIndices(state: MaskEditorState, center: Point, radius: number): number[] {
  // out-of-bounds stroke points clamp onto the canvas
  const cx = Math.min(Math.max(Math.round(center.x), 0), state.width - 1);
  const cy = Math.min(Math.max(Math.round(center.y), 0), state.height - 1);
  const out: number[] = [];
  for (let dy = -radius; dy <= radius; dy++) {
    for (let dx = -radius; dx <= radius; dx++) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const x = cx + dx;
      const y = cy + dy;
      if (x >= 0 && x < state.width && y >= 0 && y < state.height) {
        out.push(y * state.width + x);
      }
    }
  }
  return out;
}

/** Stamp (brush) or erase a disc of the given radius along the path. */
export function applyBrushStroke(
  state: MaskEditorState,
  path: Point[],
  tool: "brush" | "eraser",
  radius: number,
): MaskEditorState {
  const value = tool === "brush" ? OCCLUDED : RELIABLE;
  const edits = new Map<number, number>();
  for (const point of path) {
    for (const index of discIndices(state, point, radius)) {
      if (state.bitmap[index] !== value && !edits.has(index)) {
        edits.set(index, value);
      }
    }
  }
  return withEdit(state, edits);
}

/** Union a server-provided occlusion bitmap into the editor (never un-marks). */
export function mergeOccluded(state: MaskEditorState, occluded: Uint8Array): MaskEditorState {
  if (occluded.length !== state.bitmap.length) {
    throw new Error(`merge bitmap is ${occluded.length}, editor is ${state.bitmap.length}`);
  }
  const edits = new Map<number, number>();
  for (let i = 0; i < occluded.length; i++) {
    if (occluded[i] < 128 && state.bitmap[i] !== OCCLUDED) {
      edits.set(i, OCCLUDED);
    }
  }
  return withEdit(state, edits);
}

/** Restore the state before the most recent edit; no-op on an empty stack. */
export function undo(state: MaskEditorState): MaskEditorState {
  if (state.undoStack.length === 0) return state;
  const delta = state.undoStack[state.undoStack.length - 1];
  const bitmap = state.bitmap.slice();
  for (let k = 0; k < delta.indices.length; k++) {
    bitmap[delta.indices[k]] = delta.previous[k];
  }
  return { ...state, bitmap, undoStack: state.undoStack.slice(0, -1) };
}

export function setTool(state: MaskEditorState, tool: Tool): MaskEditorState {
  return { ...state, tool };
}

export function setBrushRadius(state: MaskEditorState, brushRadius: number): MaskEditorState {
  return { ...state, brushRadius: Math.max(0, Math.round(brushRadius)) };
}

export function setTolerance(state: MaskEditorState, tolerance: number): MaskEditorState {
  return { ...state, tolerance: Math.min(Math.max(tolerance, 0), 1) };
}
