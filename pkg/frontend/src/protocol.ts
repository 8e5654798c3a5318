// Message types for the simulation service, mirroring the JSON schema the
// server ships (src/windlift/schemas/service_message.schema.json). The
// builders are the only way the UI constructs outgoing messages, so the
// schema round-trip test covers every send site.

export type Point = [number, number];
export type Polyline = Point[];

export interface InitMessage {
  type: 'init';
  scene: Record<string, unknown>;
}

export interface StepMessage {
  type: 'step';
  n?: number;
}

export interface SetAlphaMessage {
  type: 'set_alpha';
  alpha: number;
}

export interface EditCutMessage {
  type: 'edit_cut';
  polyline_id: number;
  vertices: Polyline;
}

export interface AppendCutVertexMessage {
  type: 'append_cut_vertex';
  polyline_id: number;
  vertex: Point;
}

export interface PokeMessage {
  type: 'poke';
  location: Point;
  force: [number, number, number];
  radius: number;
}

export interface PauseMessage {
  type: 'pause';
}

export interface ResumeMessage {
  type: 'resume';
}

export interface QueryStateMessage {
  type: 'query_state';
  stride?: number;
}

export type ClientMessage =
  | InitMessage
  | StepMessage
  | SetAlphaMessage
  | EditCutMessage
  | AppendCutVertexMessage
  | PokeMessage
  | PauseMessage
  | ResumeMessage
  | QueryStateMessage;

export interface FrameStats {
  step_ms: number;
  solver_iters: number;
}

export interface StateFrame {
  type: 'state';
  frame_id: number;
  alpha: number;
  positions: number[];
  stride: number;
  cuts: Polyline[];
  stats: FrameStats;
}

export type ErrorCode =
  | 'invalid_message'
  | 'invalid_scene'
  | 'not_initialized'
  | 'solver_failure';

export interface ServiceError {
  type: 'error';
  code: ErrorCode;
  message: string;
}

export type ServerMessage = StateFrame | ServiceError;

const ERROR_CODES: readonly string[] = [
  'invalid_message', 'invalid_scene', 'not_initialized', 'solver_failure',
];

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

export const messages = {
  init(scene: Record<string, unknown>): InitMessage {
    return { type: 'init', scene };
  },
  step(n?: number): StepMessage {
    if (n === undefined) return { type: 'step' };
    return { type: 'step', n: Math.max(1, Math.round(n)) };
  },
  setAlpha(alpha: number): SetAlphaMessage {
    return { type: 'set_alpha', alpha: clamp01(alpha) };
  },
  editCut(polylineId: number, vertices: Polyline): EditCutMessage {
    if (vertices.length < 2) {
      throw new Error('a cut polyline needs at least two vertices');
    }
    return {
      type: 'edit_cut',
      polyline_id: Math.max(0, Math.round(polylineId)),
      vertices: vertices.map(([x, y]) => [x, y] as Point),
    };
  },
  appendCutVertex(polylineId: number, vertex: Point): AppendCutVertexMessage {
    return {
      type: 'append_cut_vertex',
      polyline_id: Math.max(0, Math.round(polylineId)),
      vertex: [vertex[0], vertex[1]],
    };
  },
  poke(location: Point, force: [number, number, number],
       radius: number): PokeMessage {
    if (!(radius > 0)) throw new Error('poke radius must be positive');
    return {
      type: 'poke',
      location: [location[0], location[1]],
      force: [force[0], force[1], force[2]],
      radius,
    };
  },
  pause(): PauseMessage {
    return { type: 'pause' };
  },
  resume(): ResumeMessage {
    return { type: 'resume' };
  },
  queryState(stride?: number): QueryStateMessage {
    if (stride === undefined) return { type: 'query_state' };
    return { type: 'query_state', stride: Math.max(1, Math.round(stride)) };
  },
};

function isPoint(v: unknown): v is Point {
  return Array.isArray(v) && v.length === 2
    && v.every((c) => typeof c === 'number');
}

function isPolyline(v: unknown): v is Polyline {
  return Array.isArray(v) && v.length >= 2 && v.every(isPoint);
}

/** Structural guard for incoming traffic; returns null on anything that is
 * not a well-formed server message. The full schema check lives in the test
 * suite, this is the cheap runtime gate. */
export function parseServerMessage(data: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof raw !== 'object' || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (msg.type === 'error') {
    if (typeof msg.code !== 'string' || !ERROR_CODES.includes(msg.code)) {
      return null;
    }
    if (typeof msg.message !== 'string') return null;
    return { type: 'error', code: msg.code as ErrorCode, message: msg.message };
  }
  if (msg.type !== 'state') return null;
  if (!Number.isInteger(msg.frame_id) || (msg.frame_id as number) < 0) {
    return null;
  }
  if (typeof msg.alpha !== 'number') return null;
  if (!Array.isArray(msg.positions)
      || !msg.positions.every((v) => typeof v === 'number')) {
    return null;
  }
  if (!Number.isInteger(msg.stride) || (msg.stride as number) < 1) return null;
  if (!Array.isArray(msg.cuts) || !msg.cuts.every(isPolyline)) return null;
  const stats = msg.stats as Record<string, unknown> | undefined;
  if (typeof stats !== 'object' || stats === null
      || typeof stats.step_ms !== 'number'
      || !Number.isInteger(stats.solver_iters)) {
    return null;
  }
  return {
    type: 'state',
    frame_id: msg.frame_id as number,
    alpha: msg.alpha,
    positions: msg.positions as number[],
    stride: msg.stride as number,
    cuts: msg.cuts as Polyline[],
    stats: {
      step_ms: stats.step_ms as number,
      solver_iters: stats.solver_iters as number,
    },
  };
}
