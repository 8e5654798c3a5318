import type { Point } from './protocol';

// Orthographic view of the sheet with a fixed tilt about the screen-x axis.
// World axes: x right, y into the sheet plane, z out of plane (displacement
// height). Screen y grows downward. The inverse is only defined on the
// sheet plane z = 0, which is exactly where cut vertices and pokes live.

export class TiltCamera {
  readonly tilt: number;
  scale: number;
  offsetX: number;
  offsetY: number;
  private readonly cosT: number;
  private readonly sinT: number;

  constructor(tiltRadians = Math.PI / 7, scale = 1, offsetX = 0, offsetY = 0) {
    const c = Math.cos(tiltRadians);
    if (!(c > 1e-6)) {
      throw new Error('tilt too close to edge-on, sheet plane unrecoverable');
    }
    this.tilt = tiltRadians;
    this.cosT = c;
    this.sinT = Math.sin(tiltRadians);
    this.scale = scale;
    this.offsetX = offsetX;
    this.offsetY = offsetY;
  }

  /** Scale and center so the world rect fills the viewport with a margin. */
  fit(bounds: [number, number, number, number], viewW: number, viewH: number,
      marginPx = 24): void {
    const [xmin, xmax, ymin, ymax] = bounds;
    const w = Math.max(xmax - xmin, 1e-9);
    const h = Math.max((ymax - ymin) * this.cosT, 1e-9);
    this.scale = Math.min((viewW - 2 * marginPx) / w,
                          (viewH - 2 * marginPx) / h);
    const cx = 0.5 * (xmin + xmax);
    const cy = 0.5 * (ymin + ymax);
    this.offsetX = 0.5 * viewW - this.scale * cx;
    this.offsetY = 0.5 * viewH + this.scale * cy * this.cosT;
  }

  project(x: number, y: number, z: number): Point {
    return [
      this.offsetX + this.scale * x,
      this.offsetY - this.scale * (y * this.cosT + z * this.sinT),
    ];
  }

  /** Inverse of project restricted to the sheet plane z = 0. */
  unproject(sx: number, sy: number): Point {
    return [
      (sx - this.offsetX) / this.scale,
      (this.offsetY - sy) / (this.scale * this.cosT),
    ];
  }

  /** Screen-pixel displacement to a world in-plane displacement. */
  unprojectDelta(dx: number, dy: number): Point {
    return [dx / this.scale, -dy / (this.scale * this.cosT)];
  }
}
