/** Session view state: current page, frame cursor, selection. */

export type Page = "players" | "rallies" | "generate" | "review";

export interface KeyEventLike {
  key: string;
  shiftKey: boolean;
}

const SHIFT_STEP = 10;

export class ViewState {
  readonly videoId: string;
  readonly frameCount: number;
  page: Page = "players";
  frame = 0;
  selectedRallyId: string | null = null;
  selectedHitIndex: number | null = null;
  theme: "light" | "dark" = "light";

  constructor(videoId: string, frameCount: number) {
    if (frameCount < 1 || !Number.isInteger(frameCount)) {
      throw new RangeError(`frameCount must be a positive integer, got ${frameCount}`);
    }
    this.videoId = videoId;
    this.frameCount = frameCount;
  }

  /** Jump to an absolute frame, clamped into [0, frameCount). */
  goToFrame(index: number): number {
    this.frame = Math.min(this.frameCount - 1, Math.max(0, Math.round(index)));
    return this.frame;
  }

  navigate(delta: number): number {
    return this.goToFrame(this.frame + delta);
  }

  /**
   * Keyboard bindings: arrows step one frame, shift+arrows step ten.
   * Returns true when the event was consumed.
   */
  handleKey(event: KeyEventLike): boolean {
    const step = event.shiftKey ? SHIFT_STEP : 1;
    if (event.key === "ArrowRight") {
      this.navigate(step);
      return true;
    }
    if (event.key === "ArrowLeft") {
      this.navigate(-step);
      return true;
    }
    return false;
  }

  /** Frames worth prefetching around the cursor (cursor excluded). */
  prefetchFrames(window = 3): number[] {
    const out: number[] = [];
    for (let d = -window; d <= window; d++) {
      const f = this.frame + d;
      if (d !== 0 && f >= 0 && f < this.frameCount) out.push(f);
    }
    return out;
  }

  selectHit(rallyId: string, hitIndex: number): void {
    this.selectedRallyId = rallyId;
    this.selectedHitIndex = hitIndex;
  }

  clearSelection(): void {
    this.selectedRallyId = null;
    this.selectedHitIndex = null;
  }
}
