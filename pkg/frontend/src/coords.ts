/**
 * Screen <-> image coordinate mapping for the annotation canvas.
 *
 * The frame image is rendered at `zoom` times its native size, offset by a
 * pan vector in screen pixels. All annotations are stored in image pixels so
 * the zoom level never leaks into persisted data.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Viewport {
  zoom: number;
  panX: number;
  panY: number;
}

/** Bounding box in COCO xywh convention. */
export interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function screenToImage(p: Point, vp: Viewport): Point {
  if (vp.zoom <= 0) throw new RangeError("zoom must be positive");
  return { x: (p.x - vp.panX) / vp.zoom, y: (p.y - vp.panY) / vp.zoom };
}

export function imageToScreen(p: Point, vp: Viewport): Point {
  if (vp.zoom <= 0) throw new RangeError("zoom must be positive");
  return { x: p.x * vp.zoom + vp.panX, y: p.y * vp.zoom + vp.panY };
}

/** Minimum drag area (in screen px^2) below which a drag is ignored. */
export const MIN_DRAG_AREA = 4;

/**
 * Convert a drag rectangle (screen coordinates, any corner order) into an
 * image-pixel bbox, clamped to the frame. Returns null for sub-threshold
 * drags or drags entirely outside the frame.
 */
export function dragToBox(
  start: Point,
  end: Point,
  vp: Viewport,
  frameWidth: number,
  frameHeight: number,
): Box | null {
  const screenArea = Math.abs(end.x - start.x) * Math.abs(end.y - start.y);
  if (screenArea < MIN_DRAG_AREA) return null;

  const a = screenToImage(start, vp);
  const b = screenToImage(end, vp);
  const x0 = Math.max(0, Math.min(a.x, b.x));
  const y0 = Math.max(0, Math.min(a.y, b.y));
  const x1 = Math.min(frameWidth, Math.max(a.x, b.x));
  const y1 = Math.min(frameHeight, Math.max(a.y, b.y));
  if (x1 <= x0 || y1 <= y0) return null;
  return { x: x0, y: y0, width: x1 - x0, height: y1 - y0 };
}

/** Box corners in screen space, for rendering an existing annotation. */
export function boxToScreen(box: Box, vp: Viewport): Box {
  const tl = imageToScreen({ x: box.x, y: box.y }, vp);
  return {
    x: tl.x,
    y: tl.y,
    width: box.width * vp.zoom,
    height: box.height * vp.zoom,
  };
}
