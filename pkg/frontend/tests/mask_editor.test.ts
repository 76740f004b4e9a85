import { describe, expect, it } from "vitest";

import {
  MaskEditorState,
  OCCLUDED,
  RELIABLE,
  applyBrushStroke,
  createEditor,
  mergeOccluded,
  occludedCount,
  setBrushRadius,
  setTolerance,
  undo,
} from "../src/mask_editor.js";

/** Tiny deterministic PRNG for property loops. */
function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

function snapshot(state: MaskEditorState): Uint8Array {
  return state.bitmap.slice();
}

describe("brush strokes", () => {
  it("radius-0 single-point stroke toggles exactly one pixel", () => {
    const state = createEditor(16, 16);
    const next = applyBrushStroke(state, [{ x: 5, y: 7 }], "brush", 0);
    expect(occludedCount(next)).toBe(1);
    expect(next.bitmap[7 * 16 + 5]).toBe(OCCLUDED);
  });

  it("stamps a disc along a path", () => {
    const state = createEditor(32, 32);
    const next = applyBrushStroke(
      state,
      [
        { x: 10, y: 10 },
        { x: 12, y: 10 },
      ],
      "brush",
      2,
    );
    // disc of radius 2 contains 13 pixels; two overlapping discs
    expect(occludedCount(next)).toBeGreaterThan(13);
    expect(next.bitmap[10 * 32 + 10]).toBe(OCCLUDED);
    expect(next.bitmap[10 * 32 + 12]).toBe(OCCLUDED);
  });

  it("clamps out-of-bounds points instead of failing", () => {
    const state = createEditor(8, 8);
    const next = applyBrushStroke(state, [{ x: -10, y: 99 }], "brush", 0);
    expect(next.bitmap[7 * 8 + 0]).toBe(OCCLUDED);
    expect(occludedCount(next)).toBe(1);
  });

  it("does not mutate the input state (pure reducer)", () => {
    const state = createEditor(16, 16);
    const before = snapshot(state);
    applyBrushStroke(state, [{ x: 4, y: 4 }], "brush", 3);
    expect(snapshot(state)).toEqual(before);
    expect(state.undoStack.length).toBe(0);
  });
});

describe("undo", () => {
  it("stroke then undo restores the exact previous bitmap", () => {
    const state = createEditor(24, 24);
    const marked = applyBrushStroke(state, [{ x: 9, y: 9 }], "brush", 4);
    const restored = undo(marked);
    expect(snapshot(restored)).toEqual(snapshot(state));
    expect(restored.undoStack.length).toBe(0);
  });

  it("one undo entry per stroke, replay to any earlier state", () => {
    const rand = lcg(7);
    let state = createEditor(20, 20);
    const snapshots = [snapshot(state)];
    for (let k = 0; k < 8; k++) {
      const path = [{ x: Math.floor(rand() * 20), y: Math.floor(rand() * 20) }];
      state = applyBrushStroke(state, path, rand() < 0.5 ? "brush" : "eraser", Math.floor(rand() * 4));
      snapshots.push(snapshot(state));
    }
    expect(state.undoStack.length).toBe(8);
    for (let k = 8; k > 0; k--) {
      state = undo(state);
      expect(snapshot(state)).toEqual(snapshots[k - 1]);
    }
  });

  it("is a no-op on an empty stack", () => {
    const state = createEditor(4, 4);
    expect(undo(state)).toBe(state);
  });
});

describe("inverse tools", () => {
  it("brush then eraser over the same disc restores the original mask", () => {
    let state = createEditor(16, 16);
    // pre-existing content: a painted corner
    state = applyBrushStroke(state, [{ x: 1, y: 1 }], "brush", 1);
    const before = snapshot(state);
    const disc = [{ x: 8, y: 8 }];
    state = applyBrushStroke(state, disc, "brush", 3);
    state = applyBrushStroke(state, disc, "eraser", 3);
    expect(snapshot(state)).toEqual(before);
  });

  it("random stroke/undo interleavings keep bitmap and stack consistent", () => {
    const rand = lcg(99);
    let state = createEditor(12, 12);
    for (let step = 0; step < 200; step++) {
      if (rand() < 0.3 && state.undoStack.length > 0) {
        state = undo(state);
      } else {
        const path = Array.from({ length: 1 + Math.floor(rand() * 3) }, () => ({
          x: rand() * 14 - 1,
          y: rand() * 14 - 1,
        }));
        state = applyBrushStroke(state, path, rand() < 0.5 ? "brush" : "eraser", Math.floor(rand() * 3));
      }
      for (const value of state.bitmap) {
        expect(value === OCCLUDED || value === RELIABLE).toBe(true);
      }
    }
  });
});

describe("merge from server previews", () => {
  it("unions occlusions and never un-marks", () => {
    let state = createEditor(8, 8);
    state = applyBrushStroke(state, [{ x: 0, y: 0 }], "brush", 0);
    const incoming = new Uint8Array(64).fill(RELIABLE);
    incoming[10] = OCCLUDED;
    state = mergeOccluded(state, incoming);
    expect(state.bitmap[0]).toBe(OCCLUDED);
    expect(state.bitmap[10]).toBe(OCCLUDED);
    expect(occludedCount(state)).toBe(2);
    // merging twice changes nothing further
    const again = mergeOccluded(state, incoming);
    expect(snapshot(again)).toEqual(snapshot(state));
  });

  it("merge is undoable like any edit", () => {
    const state = createEditor(8, 8);
    const incoming = new Uint8Array(64).fill(OCCLUDED);
    const merged = mergeOccluded(state, incoming);
    expect(occludedCount(merged)).toBe(64);
    expect(snapshot(undo(merged))).toEqual(snapshot(state));
  });

  it("rejects mismatched dimensions", () => {
    const state = createEditor(8, 8);
    expect(() => mergeOccluded(state, new Uint8Array(9))).toThrow();
  });
});

describe("settings reducers", () => {
  it("clamp radius and tolerance", () => {
    let state = createEditor(4, 4);
    state = setBrushRadius(state, -5);
    expect(state.brushRadius).toBe(0);
    state = setTolerance(state, 7);
    expect(state.tolerance).toBe(1);
  });
});
