import { CutEditor, ToolMode } from './editor';
import { PointCloudRenderer } from './render';
import { ServiceConnection } from './net';
import { TiltCamera } from './camera';
import { messages } from './protocol';

// Default scene sent on connect; any field can be overridden by serving a
// different document from the service side and re-initializing.
const DEFAULT_SCENE = {
  format: 1,
  domain: { boundary: [[0, 0], [1, 0], [1, 1], [0, 1]] },
  material: { mu: 10.0, lambda: 10.0, density: 1.0, thickness: 0.01 },
  gravity: [0.0, 0.0, -9.8],
  pinned: [
    { type: 'circle', center: [0.05, 0.95], radius: 0.08 },
    { type: 'circle', center: [0.95, 0.95], radius: 0.08 },
  ],
  pin_weight: 1000.0,
  cuts: {
    polylines: [[[0.5, 0.05], [0.5, 0.95]]],
    alpha: 0.0,
    alpha_mode: 'sequential',
  },
  cubature: { n: 2048, seed: 7 },
  sim: { h: 1 / 60, tol: 0.0, max_iters: 200, stiffness_scale: 1.0 },
};

const DOMAIN_BOUNDS: [number, number, number, number] = [0, 1, 0, 1];

function main(): void {
  const canvas = document.getElementById('view') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d')!;
  const banner = document.getElementById('banner')!;
  const stats = document.getElementById('stats')!;
  const alphaSlider = document.getElementById('alpha') as HTMLInputElement;

  const params = new URLSearchParams(location.search);
  const host = params.get('host') ?? location.hostname ?? 'localhost';
  const port = params.get('port') ?? '8765';

  const camera = new TiltCamera();
  const renderer = new PointCloudRenderer();

  const socket = new WebSocket(`ws://${host}:${port}`);
  const conn = new ServiceConnection(socket, {
    onStatus: (status) => {
      banner.textContent = status === 'open'
        ? '' : `service ${status}; edits are dropped`;
      banner.style.display = status === 'open' ? 'none' : 'block';
      if (status === 'open') {
        conn.send(messages.init(DEFAULT_SCENE));
      } else {
        editor.dropPending();
      }
    },
    onFrame: (frame) => {
      editor.applyFrame(frame);
      if (Math.abs(Number(alphaSlider.value) - frame.alpha) > 1e-9
          && document.activeElement !== alphaSlider) {
        alphaSlider.value = String(frame.alpha);
      }
      stats.textContent =
        `frame ${frame.frame_id}  alpha ${frame.alpha.toFixed(2)}  `
        + `${frame.stats.step_ms.toFixed(1)} ms  `
        + `${frame.stats.solver_iters} iters`;
    },
    onServiceError: (err) => {
      banner.textContent = `${err.code}: ${err.message}`;
      banner.style.display = 'block';
    },
  });

  const editor = new CutEditor((msg) => conn.send(msg as never), camera);

  function resize(): void {
    canvas.width = canvas.clientWidth * devicePixelRatio;
    canvas.height = canvas.clientHeight * devicePixelRatio;
    camera.fit(DOMAIN_BOUNDS, canvas.width, canvas.height);
    editor.viewWidth = canvas.width;
  }
  window.addEventListener('resize', resize);
  resize();

  const scale = (): number => devicePixelRatio;
  canvas.addEventListener('pointerdown', (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    editor.pointerDown(ev.offsetX * scale(), ev.offsetY * scale());
  });
  canvas.addEventListener('pointermove', (ev) => {
    if (ev.buttons === 0) return;
    editor.pointerMove(ev.offsetX * scale(), ev.offsetY * scale());
  });
  canvas.addEventListener('pointerup', () => editor.pointerUp());
  canvas.addEventListener('pointercancel', () => editor.pointerUp());

  for (const input of document.querySelectorAll<HTMLInputElement>(
      'input[name=tool]')) {
    input.addEventListener('change', () => {
      if (input.checked) editor.setMode(input.value as ToolMode);
    });
  }
  alphaSlider.addEventListener('input', () => {
    editor.setAlpha(Number(alphaSlider.value));
  });
  document.getElementById('pause')!.addEventListener('click', () => {
    conn.send(messages.pause());
  });
  document.getElementById('resume')!.addEventListener('click', () => {
    conn.send(messages.resume());
  });

  function tick(): void {
    renderer.draw(ctx, conn.lastFrame, camera, editor.selection);
    requestAnimationFrame(tick);
  }
  requestAnimationFrame(tick);
}

main();
