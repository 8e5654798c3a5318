import { describe, expect, it } from 'vitest';

import { ConnectionStatus, ServiceConnection, SocketLike } from '../src/net';
import { ServiceError, StateFrame, messages } from '../src/protocol';

class FakeSocket implements SocketLike {
  readyState = 0;  // CONNECTING
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.readyState = 3;
    this.onclose?.();
  }

  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  deliver(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }
}

function stateFrame(frameId: number): StateFrame {
  return {
    type: 'state', frame_id: frameId, alpha: 0.2,
    positions: [0, 0, 0], stride: 1, cuts: [],
    stats: { step_ms: 5, solver_iters: 1 },
  };
}

describe('ServiceConnection', () => {
  it('drops messages until the socket is open', () => {
    const sock = new FakeSocket();
    const conn = new ServiceConnection(sock);
    expect(conn.send(messages.pause())).toBe(false);
    expect(sock.sent).toHaveLength(0);

    sock.open();
    expect(conn.send(messages.pause())).toBe(true);
    expect(sock.sent).toEqual(['{"type":"pause"}']);

    sock.close();
    expect(conn.send(messages.resume())).toBe(false);
    expect(sock.sent).toHaveLength(1);
  });

  it('reports status transitions', () => {
    const seen: ConnectionStatus[] = [];
    const sock = new FakeSocket();
    new ServiceConnection(sock, { onStatus: (s) => seen.push(s) });
    sock.open();
    sock.close();
    expect(seen).toEqual(['open', 'closed']);
  });

  it('dispatches frames and keeps the newest one', () => {
    const frames: number[] = [];
    const sock = new FakeSocket();
    const conn = new ServiceConnection(sock, {
      onFrame: (f) => frames.push(f.frame_id),
    });
    sock.open();
    sock.deliver(stateFrame(0));
    sock.deliver(stateFrame(1));
    sock.deliver(stateFrame(1));  // duplicate: ignored
    sock.deliver(stateFrame(0));  // stale: ignored
    expect(frames).toEqual([0, 1]);
    expect(conn.lastFrame?.frame_id).toBe(1);
  });

  it('routes typed errors and ignores garbage', () => {
    const errors: ServiceError[] = [];
    const sock = new FakeSocket();
    const conn = new ServiceConnection(sock, {
      onServiceError: (e) => errors.push(e),
    });
    sock.open();
    sock.onmessage?.({ data: 'not json' });
    sock.deliver({ type: 'mystery' });
    sock.deliver({ type: 'error', code: 'solver_failure', message: 'nan' });
    expect(errors).toEqual([
      { type: 'error', code: 'solver_failure', message: 'nan' },
    ]);
    expect(conn.lastFrame).toBeNull();
  });
});
