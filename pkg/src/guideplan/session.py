"""Real-time session service for interactive trials.

One UI client per session drives the visitor avatar with velocity intents while
the planner keeps guiding. Messages are JSON over a WebSocket, schema `v: 1`:

  client -> server: {"v":1,"type":"join"} | {"v":1,"type":"human-move","dx":..,"dy":..}
                    | {"v":1,"type":"reset"}
  server -> client: scene, state-frame, trial-end, error
"""

from __future__ import annotations

import asyncio
import logging
import math

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import Settings
from .sim import InteractiveHuman, TrialSession, compute_metrics, solve_fields
from .world import Scene

log = logging.getLogger("guideplan.session")

PROTOCOL_VERSION = 1
_DISCONNECT = object()


def scene_message(scene: Scene) -> dict:
    occ = scene.grid.occupancy
    return {
        "v": PROTOCOL_VERSION,
        "type": "scene",
        "width": scene.grid.width,
        "height": scene.grid.height,
        "resolution": scene.grid.resolution,
        "occupied": [[int(x), int(y)] for y, x in zip(*np.nonzero(occ))],
        "goals": [list(g) for g in scene.goals],
        "guide_goal": scene.guide_goal,
        "affordance": [list(c) for c in sorted(scene.affordance_cells)],
        "name": scene.name,
    }


def _error(message: str) -> dict:
    return {"v": PROTOCOL_VERSION, "type": "error", "message": message}


class Session:
    """One trial per join; serialized message intake and frame emission."""

    def __init__(self, scene: Scene, settings: Settings, budget: int | None,
                 wall_clock_ms: float | None, seed: int = 0):
        self.scene = scene
        self.settings = settings
        self.budget = budget
        self.wall_clock_ms = wall_clock_ms
        self.seed = seed
        self.fields = solve_fields(scene, actions=settings.actions, params=settings.mdp_params)
        self.trial: TrialSession | None = None
        self.agent: InteractiveHuman | None = None
        self.ended = False

    @property
    def in_trial(self) -> bool:
        return self.trial is not None and not self.ended

    def start_trial(self) -> None:
        speed = self.scene.grid.resolution / self.settings.cost.t_per_step
        self.agent = InteractiveHuman(self.scene, speed=speed,
                                      t_per_step=self.settings.cost.t_per_step)
        self.trial = TrialSession(
            self.scene, self.agent, fields=self.fields, cost=self.settings.cost,
            social=self.settings.social, pred=self.settings.pred,
            mdp_params=self.settings.mdp_params, behaviors=self.settings.behaviors,
            seed=self.seed, budget=self.budget, wall_clock_ms=self.wall_clock_ms,
        )
        self.ended = False

    def state_frame(self) -> dict:
        trial = self.trial
        rec = trial.log.records[-1]
        return {
            "v": PROTOCOL_VERSION,
            "type": "state-frame",
            "t": rec.t,
            "human": list(rec.human),
            "robot": list(rec.robot),
            "behavior": rec.behavior,
            "distance": rec.distance,
            "in_affordance": rec.in_affordance,
            "layer": self._prediction_layer(),
            "metrics": compute_metrics(trial.log).to_json(),
        }

    def _prediction_layer(self) -> list[list[float]]:
        """Normalized next-position heatmap for the UI, from the model predictor."""
        from . import prediction

        trial = self.trial
        try:
            behavior = self.settings.behaviors[1 if trial.behavior_name == "point" else 0]
            arc = trial.planner.arc(trial.ctx.position, behavior)
            target = trial.robot
            candidates = arc if target in arc else (*arc, tuple(target))
            if math.dist(target, trial.ctx.position) < 1e-9:
                return []
            influence = prediction.RobotInfluence.build(
                trial.ctx.position, tuple(target), behavior, candidates, self.settings.pred)
            _, layer = prediction.predict_next(
                trial.ctx, self.fields, self.scene, self.settings.pred, self.settings.social,
                self.settings.mdp_params, influence=influence,
                rng=np.random.default_rng(0))
        except ValueError:
            return []
        total = float(layer.sum())
        if total <= 0:
            return []
        return [[round(float(v) / total, 6) for v in row] for row in layer]

    def trial_end(self) -> dict:
        trial = self.trial
        trial.log.outcome = trial.outcome or "timeout"
        self.ended = True
        return {
            "v": PROTOCOL_VERSION,
            "type": "trial-end",
            "outcome": trial.log.outcome,
            "metrics": compute_metrics(trial.log).to_json(),
        }


async def _reader(ws: WebSocket, queue: asyncio.Queue) -> None:
    """Parse incoming frames onto the queue; malformed input becomes an error frame."""
    try:
        while True:
            try:
                raw = await ws.receive_json()
            except WebSocketDisconnect:
                await queue.put(_DISCONNECT)
                return
            except (ValueError, KeyError):
                await ws.send_json(_error("malformed message: expected JSON"))
                continue
            if not isinstance(raw, dict) or raw.get("v") != PROTOCOL_VERSION:
                await ws.send_json(_error("malformed message: missing or wrong schema version"))
                continue
            await queue.put(raw)
    except RuntimeError:
        await queue.put(_DISCONNECT)


def create_app(scene: Scene, settings: Settings | None = None, *, step_hz: float = 2.0,
               budget: int | None = None, budget_ms: float | None = 300.0,
               seed: int = 0) -> FastAPI:
    """App factory. `step_hz` is the wall-clock step cadence; the interactive
    planner is wall-clock capped (budget_ms) unless an iteration budget is given."""
    settings = settings or Settings.from_params()
    if budget is not None:
        budget_ms = None
    app = FastAPI(title="guideplan session service")
    tick = 1.0 / step_hz

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        session = Session(scene, settings, budget, budget_ms, seed=seed)
        queue: asyncio.Queue = asyncio.Queue()
        reader = asyncio.create_task(_reader(ws, queue))
        loop_time = asyncio.get_event_loop().time
        next_step: float | None = None
        try:
            while True:
                if session.in_trial:
                    if next_step is None:
                        next_step = loop_time() + tick
                    timeout = next_step - loop_time()
                    if timeout <= 0.0:
                        msg = None  # step is due even if input keeps arriving
                    else:
                        try:
                            msg = await asyncio.wait_for(queue.get(), timeout=timeout)
                        except asyncio.TimeoutError:
                            msg = None
                else:
                    next_step = None
                    msg = await queue.get()
                if msg is _DISCONNECT:
                    break

                if msg is not None:
                    kind = msg.get("type")
                    if kind in ("join", "reset"):
                        if kind == "join" and session.in_trial:
                            await ws.send_json(_error("one active trial per session"))
                            continue
                        session.start_trial()
                        await ws.send_json(scene_message(scene))
                        await ws.send_json(session.state_frame())
                        if session.trial.done:
                            await ws.send_json(session.trial_end())
                        continue
                    if not session.in_trial:
                        await ws.send_json(_error(f"expected join, got {kind!r}"))
                        continue
                    if kind == "human-move":
                        dx, dy = msg.get("dx", 0.0), msg.get("dy", 0.0)
                        try:
                            dx, dy = float(dx), float(dy)
                        except (TypeError, ValueError):
                            await ws.send_json(_error("human-move: dx/dy must be numbers"))
                            continue
                        if not (math.isfinite(dx) and math.isfinite(dy)):
                            await ws.send_json(_error("human-move: dx/dy must be finite"))
                            continue
                        session.agent.push_intent(dx, dy)
                        continue
                    await ws.send_json(_error(f"unknown message type {kind!r}"))
                    continue

                # tick elapsed: apply the latest intent (hold if none), plan, step
                session.trial.step()
                session.agent.push_intent(0.0, 0.0)  # an intent applies for one step
                next_step = loop_time() + tick
                await ws.send_json(session.state_frame())
                if session.trial.done:
                    await ws.send_json(session.trial_end())
        except WebSocketDisconnect:
            pass
        finally:
            reader.cancel()
            if session.trial is not None and not session.ended:
                log.info("session disconnected; trial aborted at t=%s", session.trial.t)
    return app
