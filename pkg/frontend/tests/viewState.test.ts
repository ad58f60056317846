import { describe, expect, it } from "vitest";

import { ViewState } from "../src/viewState";

describe("frame navigation", () => {
  it("clamps at both ends", () => {
    const state = new ViewState("v1", 452);
    expect(state.handleKey({ key: "ArrowLeft", shiftKey: false })).toBe(true);
    expect(state.frame).toBe(0); // left at frame 0 stays put
    state.goToFrame(9999);
    expect(state.frame).toBe(451); // last frame of 452
  });

  it("arrow keys step 1, shift+arrows step 10", () => {
    const state = new ViewState("v1", 1000);
    state.goToFrame(100);
    state.handleKey({ key: "ArrowRight", shiftKey: false });
    expect(state.frame).toBe(101);
    state.handleKey({ key: "ArrowRight", shiftKey: true });
    expect(state.frame).toBe(111);
    state.handleKey({ key: "ArrowLeft", shiftKey: true });
    expect(state.frame).toBe(101);
  });

  it("ignores unrelated keys", () => {
    const state = new ViewState("v1", 10);
    expect(state.handleKey({ key: "a", shiftKey: false })).toBe(false);
    expect(state.frame).toBe(0);
  });

  it("prefetch window stays in range", () => {
    const state = new ViewState("v1", 100);
    expect(state.prefetchFrames()).toEqual([1, 2, 3]);
    state.goToFrame(99);
    expect(state.prefetchFrames()).toEqual([96, 97, 98]);
    state.goToFrame(50);
    expect(state.prefetchFrames()).toEqual([47, 48, 49, 51, 52, 53]);
  });

  it("rejects a non-positive frame count", () => {
    expect(() => new ViewState("v1", 0)).toThrow(RangeError);
  });

  it("tracks hit selection", () => {
    const state = new ViewState("v1", 10);
    state.selectHit("r1", 2);
    expect(state.selectedRallyId).toBe("r1");
    expect(state.selectedHitIndex).toBe(2);
    state.clearSelection();
    expect(state.selectedRallyId).toBeNull();
  });
});
