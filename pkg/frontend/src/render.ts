import type { Selection } from './editor';
import type { StateFrame } from './protocol';
import { TiltCamera } from './camera';

// Canvas 2D point-cloud view. Positions arrive as a flat (x, y, z) triple
// list; each point keeps the color sampled from a procedural checker at its
// first seen (rest) location, so the pattern advects with the material.

const POINT_PX = 2.5;

function checkerColor(x: number, y: number): string {
  const u = Math.floor(x * 8);
  const v = Math.floor(y * 8);
  const hue = ((u * 37 + v * 91) % 24) * 15;
  const light = (u + v) % 2 === 0 ? 62 : 48;
  return `hsl(${hue} 55% ${light}%)`;
}

export class PointCloudRenderer {
  private colors: string[] = [];
  private colorCount = -1;

  draw(ctx: CanvasRenderingContext2D, frame: StateFrame | null,
       camera: TiltCamera, selection: Selection | null = null): void {
    const w = ctx.canvas.width;
    const h = ctx.canvas.height;
    ctx.fillStyle = '#14161a';
    ctx.fillRect(0, 0, w, h);
    if (frame === null) return;

    const pos = frame.positions;
    const n = Math.floor(pos.length / 3);
    if (n !== this.colorCount) {
      this.colors = new Array(n);
      for (let i = 0; i < n; i++) {
        this.colors[i] = checkerColor(pos[3 * i], pos[3 * i + 1]);
      }
      this.colorCount = n;
    }

    const half = POINT_PX / 2;
    for (let i = 0; i < n; i++) {
      const [sx, sy] = camera.project(pos[3 * i], pos[3 * i + 1],
                                      pos[3 * i + 2]);
      ctx.fillStyle = this.colors[i];
      ctx.fillRect(sx - half, sy - half, POINT_PX, POINT_PX);
    }

    this.drawCuts(ctx, frame, camera, selection);
  }

  private drawCuts(ctx: CanvasRenderingContext2D, frame: StateFrame,
                   camera: TiltCamera, selection: Selection | null): void {
    ctx.lineWidth = 1.5;
    ctx.strokeStyle = '#ff5055';
    frame.cuts.forEach((poly, p) => {
      ctx.beginPath();
      poly.forEach(([x, y], v) => {
        const [sx, sy] = camera.project(x, y, 0);
        if (v === 0) ctx.moveTo(sx, sy);
        else ctx.lineTo(sx, sy);
      });
      ctx.stroke();
      poly.forEach(([x, y], v) => {
        const [sx, sy] = camera.project(x, y, 0);
        const picked = selection !== null && selection.polyline === p
          && selection.vertex === v;
        ctx.fillStyle = picked ? '#ffd24d' : '#ff5055';
        ctx.fillRect(sx - 3, sy - 3, 6, 6);
      });
    });
  }
}
