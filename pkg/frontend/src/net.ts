import type { ClientMessage, ServerMessage, StateFrame } from './protocol';
import { parseServerMessage } from './protocol';

export type ConnectionStatus = 'connecting' | 'open' | 'closed';

// Structural subset of the browser WebSocket so tests can hand in a fake.
// Handler params are typed loosely so the real WebSocket assigns cleanly.
export interface SocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onopen: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onmessage: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onclose: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onerror: ((ev: any) => void) | null;
}

const OPEN = 1;

export interface ConnectionHandlers {
  onFrame?: (frame: StateFrame) => void;
  onServiceError?: (err: Extract<ServerMessage, { type: 'error' }>) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

/** Owns one socket to the simulation service. Messages sent while the
 * socket is not open are dropped, not queued; the UI shows a banner and the
 * server remains the single source of truth once the link returns. */
export class ServiceConnection {
  status: ConnectionStatus = 'connecting';
  lastFrame: StateFrame | null = null;
  private readonly socket: SocketLike;
  private readonly handlers: ConnectionHandlers;

  constructor(socket: SocketLike, handlers: ConnectionHandlers = {}) {
    this.socket = socket;
    this.handlers = handlers;
    socket.onopen = () => this.setStatus('open');
    socket.onclose = () => this.setStatus('closed');
    socket.onerror = () => this.setStatus('closed');
    socket.onmessage = (ev) => this.receive(String(ev.data));
  }

  send(msg: ClientMessage): boolean {
    if (this.socket.readyState !== OPEN) return false;
    this.socket.send(JSON.stringify(msg));
    return true;
  }

  close(): void {
    this.socket.close();
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status === status) return;
    this.status = status;
    this.handlers.onStatus?.(status);
  }

  private receive(data: string): void {
    const msg = parseServerMessage(data);
    if (msg === null) return;
    if (msg.type === 'error') {
      this.handlers.onServiceError?.(msg);
      return;
    }
    // stale or duplicate frames keep the last good one on screen
    if (this.lastFrame !== null && msg.frame_id <= this.lastFrame.frame_id) {
      return;
    }
    this.lastFrame = msg;
    this.handlers.onFrame?.(msg);
  }
}
