"""Message-driven simulation sessions.

The core is transport agnostic: ``SimulationSession.handle(dict) -> dict``,
exactly one reply per message, either a state frame or an error. ``serve``
wires a session to a websocket plus a fixed-rate stepping task; the two run
as separate tasks that meet in a bounded command queue, and only the stepping
task touches the simulator, so queued edits always land between frames.

Pokes are one-shot: a poke message arms a force that the next step consumes.
``pause`` stops the automatic stepping loop only; explicit step messages
still advance the simulation frame by frame.
"""
from __future__ import annotations

import json

import jsonschema
import numpy as np

from .geometry import CutCurve
from .neural import NeuralBasis
from .scenefile import load_schema, scene_from_dict
from .sim import PokeForce, Scene, Simulator, SolverError

_CLIENT_VALIDATOR = None


def _client_validator() -> jsonschema.Draft7Validator:
    global _CLIENT_VALIDATOR
    if _CLIENT_VALIDATOR is None:
        schema = load_schema("service_message.schema.json")
        _CLIENT_VALIDATOR = jsonschema.Draft7Validator(
            {"$ref": "#/definitions/client_message",
             "definitions": schema["definitions"]})
    return _CLIENT_VALIDATOR


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


class SimulationSession:
    """One simulation steered by protocol messages.

    ``reference=True`` zeroes wall-clock stats in state frames so a replayed
    message log reproduces a bit-identical frame stream.
    """

    def __init__(self, basis: NeuralBasis, scene: Scene | None = None,
                 stride: int = 1, reference: bool = False):
        self.basis = basis
        self.sim: Simulator | None = None
        self.stride = int(stride)
        self.reference = reference
        self.paused = False
        self._frame_id = -1
        self._pokes: list[PokeForce] = []
        self._pending_vertex: tuple[int, list] | None = None
        if scene is not None:
            self.sim = Simulator(basis, scene)

    # -- state frames ---------------------------------------------------------

    @property
    def running(self) -> bool:
        """True when the automatic stepping loop should advance frames."""
        return self.sim is not None and not self.paused

    def state_message(self, stride: int | None = None) -> dict:
        stride = self.stride if stride is None else int(stride)
        sim = self.sim
        pos = sim.world_positions()[::stride]
        stats = sim.last_stats
        self._frame_id += 1
        return {
            "type": "state",
            "frame_id": self._frame_id,
            "alpha": sim.state.alpha,
            "positions": pos.ravel().tolist(),
            "stride": stride,
            "cuts": [p.tolist() for p in sim.scene.curve.polylines],
            "stats": {
                "step_ms": 0.0 if self.reference
                else stats["step_seconds"] * 1e3,
                "solver_iters": int(stats["iters"]),
            },
        }

    def _take_pokes(self) -> list[PokeForce]:
        pokes, self._pokes = self._pokes, []
        return pokes

    def auto_step(self) -> dict:
        """One frame for the serve loop; solver failure pauses the session."""
        try:
            self.sim.step(self._take_pokes())
        except SolverError as err:
            self.paused = True
            return _error("solver_failure", str(err))
        return self.state_message()

    # -- message handling -------------------------------------------------------

    def handle(self, msg) -> dict:
        if not isinstance(msg, dict):
            return _error("invalid_message", "message must be a JSON object")
        err = jsonschema.exceptions.best_match(
            _client_validator().iter_errors(msg))
        if err is not None:
            return _error("invalid_message", err.message)
        kind = msg["type"]
        if kind == "init":
            return self._handle_init(msg["scene"])
        if self.sim is None:
            return _error("not_initialized", "send init first")
        try:
            return getattr(self, f"_handle_{kind}")(msg)
        except SolverError as err:
            self.paused = True
            return _error("solver_failure", str(err))
        except ValueError as err:
            return _error("invalid_message", str(err))

    def _handle_init(self, scene_doc) -> dict:
        try:
            scene = scene_from_dict(scene_doc)
        except ValueError as err:
            return _error("invalid_scene", str(err))
        self.sim = Simulator(self.basis, scene)
        self.paused = False
        self._pokes = []
        self._pending_vertex = None
        return self.state_message()

    def _handle_step(self, msg) -> dict:
        for _ in range(int(msg.get("n", 1))):
            self.sim.step(self._take_pokes())
        return self.state_message()

    def _handle_set_alpha(self, msg) -> dict:
        self.sim.set_cut(alpha=float(msg["alpha"]))
        return self.state_message()

    def _set_polylines(self, polylines) -> None:
        cur = self.sim.scene.curve
        curve = CutCurve(polylines, alpha=cur.alpha,
                         alpha_mode=cur.alpha_mode)
        self.sim.set_cut(curve=curve, alpha=self.sim.state.alpha)

    def _handle_edit_cut(self, msg) -> dict:
        pid = int(msg["polyline_id"])
        polylines = [np.asarray(p) for p in self.sim.scene.curve.polylines]
        if pid > len(polylines):
            return _error("invalid_message", f"no polyline {pid}")
        if pid == len(polylines):
            polylines.append(msg["vertices"])
            self._pending_vertex = None
        else:
            polylines[pid] = msg["vertices"]
        self._set_polylines(polylines)
        return self.state_message()

    def _handle_append_cut_vertex(self, msg) -> dict:
        pid = int(msg["polyline_id"])
        vertex = [float(v) for v in msg["vertex"]]
        polylines = [np.asarray(p) for p in self.sim.scene.curve.polylines]
        if pid > len(polylines):
            return _error("invalid_message", f"no polyline {pid}")
        if pid < len(polylines):
            polylines[pid] = np.vstack([polylines[pid], [vertex]])
            self._set_polylines(polylines)
            return self.state_message()
        # first vertex of a new polyline waits for its pair
        if self._pending_vertex is None or self._pending_vertex[0] != pid:
            self._pending_vertex = (pid, [vertex])
            return self.state_message()
        self._pending_vertex[1].append(vertex)
        polylines.append(self._pending_vertex[1])
        self._pending_vertex = None
        self._set_polylines(polylines)
        return self.state_message()

    def _handle_poke(self, msg) -> dict:
        self._pokes.append(PokeForce(msg["location"], msg["force"],
                                     float(msg["radius"])))
        return self.state_message()

    def _handle_pause(self, msg) -> dict:
        self.paused = True
        return self.state_message()

    def _handle_resume(self, msg) -> dict:
        self.paused = False
        return self.state_message()

    def _handle_query_state(self, msg) -> dict:
        if "stride" in msg:
            self.stride = int(msg["stride"])
        return self.state_message()


# -- websocket transport ------------------------------------------------------

async def run_service(session: SimulationSession, host: str, port: int,
                      fps: float = 30.0, ready=None) -> None:
    """Serve one session over websockets until cancelled or signalled.

    The socket handler only enqueues; the stepping task drains the queue
    between frames, replies to each sender, and broadcasts the frames it
    produces to every connected client. ``ready``, if given, is a Future
    resolved with the bound port once the socket is listening.
    """
    import asyncio
    import signal

    from websockets.asyncio.server import serve as ws_serve

    queue: asyncio.Queue = asyncio.Queue(maxsize=256)
    clients: set = set()
    stop = asyncio.Event()

    async def handler(ws):
        clients.add(ws)
        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send(json.dumps(
                        _error("invalid_message", "payload is not JSON")))
                    continue
                await queue.put((ws, msg))
        finally:
            clients.discard(ws)

    async def broadcast(payload: str) -> None:
        for ws in list(clients):
            try:
                await ws.send(payload)
            except Exception:
                clients.discard(ws)

    async def step_loop():
        period = 1.0 / fps
        loop = asyncio.get_running_loop()
        while not stop.is_set():
            t0 = loop.time()
            while not queue.empty():
                ws, msg = queue.get_nowait()
                reply = session.handle(msg)
                try:
                    await ws.send(json.dumps(reply))
                except Exception:
                    clients.discard(ws)
            if session.running:
                await broadcast(json.dumps(session.auto_step()))
            delay = period - (loop.time() - t0)
            await asyncio.sleep(delay if delay > 0.0 else 0.0)

    loop = asyncio.get_running_loop()
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            loop.add_signal_handler(sig, stop.set)
        except NotImplementedError:
            pass  # not available on this platform; rely on cancellation
    async with ws_serve(handler, host, port) as server:
        if ready is not None:
            ready.set_result(server.sockets[0].getsockname()[1])
        stepper = asyncio.ensure_future(step_loop())
        try:
            await stop.wait()
        finally:
            stepper.cancel()


def serve(session: SimulationSession, host: str = "127.0.0.1",
          port: int = 8765, fps: float = 30.0) -> None:
    import asyncio

    asyncio.run(run_service(session, host, port, fps))
