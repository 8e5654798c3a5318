import type { Point, Polyline, StateFrame } from './protocol';
import { messages } from './protocol';
import { TiltCamera } from './camera';
import { MessageThrottle } from './throttle';

export type ToolMode = 'draw_cut' | 'drag_vertex' | 'poke' | 'scrub_alpha';

export interface Selection {
  polyline: number;
  vertex: number;
}

export interface EditorOptions {
  hitRadiusPx?: number;
  pokeRadius?: number;
  pokeGain?: number;
  throttleMs?: number;
}

/** Pointer gestures to protocol messages. Holds no simulation state of its
 * own beyond the latest server frame: the dragged polyline is copied for the
 * duration of the gesture so outgoing edit_cut messages are complete, and
 * the copy is discarded on release in favor of whatever the server echoes. */
export class CutEditor {
  mode: ToolMode = 'drag_vertex';
  selection: Selection | null = null;
  viewWidth = 1;

  readonly camera: TiltCamera;
  readonly hitRadiusPx: number;
  readonly pokeRadius: number;
  readonly pokeGain: number;

  private readonly send: (msg: unknown) => void;
  private readonly throttle: MessageThrottle;
  private cuts: Polyline[] = [];
  private alpha = 1;
  private dragVertices: Polyline | null = null;
  private pokeStart: Point | null = null;
  private downScreen: Point | null = null;
  private drawId: number | null = null;

  constructor(send: (msg: unknown) => void, camera: TiltCamera,
              options: EditorOptions = {}) {
    this.send = send;
    this.camera = camera;
    this.hitRadiusPx = options.hitRadiusPx ?? 8;
    this.pokeRadius = options.pokeRadius ?? 0.08;
    this.pokeGain = options.pokeGain ?? 40;
    this.throttle = options.throttleMs === undefined
      ? new MessageThrottle(send)
      : new MessageThrottle(send, options.throttleMs);
  }

  applyFrame(frame: StateFrame): void {
    this.cuts = frame.cuts;
    this.alpha = frame.alpha;
  }

  setMode(mode: ToolMode): void {
    this.mode = mode;
    this.selection = null;
    this.dragVertices = null;
    this.pokeStart = null;
    this.drawId = null;
  }

  /** Nearest cut vertex within the hit radius, in screen space. */
  hitTest(sx: number, sy: number): Selection | null {
    let best: Selection | null = null;
    let bestD2 = this.hitRadiusPx * this.hitRadiusPx;
    this.cuts.forEach((poly, p) => {
      poly.forEach(([wx, wy], v) => {
        const [px, py] = this.camera.project(wx, wy, 0);
        const d2 = (px - sx) * (px - sx) + (py - sy) * (py - sy);
        if (d2 <= bestD2) {
          bestD2 = d2;
          best = { polyline: p, vertex: v };
        }
      });
    });
    return best;
  }

  pointerDown(sx: number, sy: number): void {
    this.downScreen = [sx, sy];
    switch (this.mode) {
      case 'drag_vertex': {
        this.selection = this.hitTest(sx, sy);
        if (this.selection !== null) {
          this.dragVertices =
            this.cuts[this.selection.polyline].map(([x, y]) => [x, y]);
        }
        break;
      }
      case 'draw_cut': {
        // clicks are discrete, they bypass the throttle; a new polyline id
        // equals the current count and the server buffers the first vertex
        if (this.drawId === null) this.drawId = this.cuts.length;
        this.send(messages.appendCutVertex(
          this.drawId, this.camera.unproject(sx, sy)));
        break;
      }
      case 'poke': {
        this.pokeStart = this.camera.unproject(sx, sy);
        break;
      }
      case 'scrub_alpha': {
        this.scrubAlpha(sx);
        break;
      }
    }
  }

  pointerMove(sx: number, sy: number): void {
    if (this.downScreen === null) return;
    switch (this.mode) {
      case 'drag_vertex': {
        if (this.selection === null || this.dragVertices === null) break;
        this.dragVertices[this.selection.vertex] =
          this.camera.unproject(sx, sy);
        this.throttle.push(messages.editCut(
          this.selection.polyline, this.dragVertices), 'edit_cut');
        break;
      }
      case 'poke': {
        if (this.pokeStart === null) break;
        const [dx, dy] = this.camera.unprojectDelta(
          sx - this.downScreen[0], sy - this.downScreen[1]);
        this.throttle.push(messages.poke(
          this.pokeStart,
          [this.pokeGain * dx, this.pokeGain * dy, 0],
          this.pokeRadius), 'poke');
        break;
      }
      case 'scrub_alpha': {
        this.scrubAlpha(sx);
        break;
      }
    }
  }

  pointerUp(): void {
    this.downScreen = null;
    this.selection = null;
    this.dragVertices = null;
    this.pokeStart = null;
  }

  setAlpha(alpha: number): void {
    this.throttle.push(messages.setAlpha(alpha), 'alpha');
  }

  dropPending(): void {
    this.throttle.clear();
  }

  private scrubAlpha(sx: number): void {
    this.setAlpha(sx / Math.max(this.viewWidth, 1));
  }
}
