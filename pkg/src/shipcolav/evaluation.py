"""Deterministic policy rollouts and COLREGs encounter bookkeeping."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import VesselState, wrap_angle
from .env import EnvConfig, Scenario, VesselEnv, encounter_classifier

__all__ = ["EpisodeRecord", "EvalReport", "run_episode", "evaluate", "encounter_outcomes", "zero_policy"]


def zero_policy(obs):
    return np.zeros(2)


@dataclass
class EpisodeRecord:
    scenario: str
    seed: int | None
    outcome: str                    # goal | collision | timeout | left-world
    steps: int
    total_reward: float
    mean_cte: float
    max_cte: float
    progress: float
    encounters: list = field(default_factory=list)


@dataclass
class EvalReport:
    episodes: list

    def aggregates(self) -> dict:
        n = len(self.episodes)
        counts = {c: sum(e.outcome == c for e in self.episodes) for c in ("goal", "collision", "timeout", "left-world")}
        enc = {}
        for e in self.episodes:
            for ev in e.encounters:
                key = f"{ev['type']}:{ev['outcome']}"
                enc[key] = enc.get(key, 0) + 1
        return {
            "episodes": n,
            **{f"n_{k.replace('-', '_')}": v for k, v in counts.items()},
            "collision_rate": counts["collision"] / n if n else None,
            "success_rate": counts["goal"] / n if n else None,
            "mean_cte": float(np.mean([e.mean_cte for e in self.episodes])) if n else None,
            "max_cte": float(np.max([e.max_cte for e in self.episodes])) if n else None,
            "mean_progress": float(np.mean([e.progress for e in self.episodes])) if n else None,
            "mean_reward": float(np.mean([e.total_reward for e in self.episodes])) if n else None,
            "encounters": dict(sorted(enc.items())),
        }

    def to_dict(self) -> dict:
        return {"episodes": [asdict(e) for e in self.episodes], "aggregates": self.aggregates()}

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def encounter_outcomes(own_traj: np.ndarray, own_psi: np.ndarray, target_pos: np.ndarray,
                       target_vel: np.ndarray, encounter: str) -> str:
    """Label how an encounter resolved from sampled positions.

    Head-on: side of the target at the closest approach (``pass-port-side``
    when the target is on the own port side). Crossing: whether the own ship
    crossed the target's track line ahead of or astern of it.
    """
    rel = target_pos - own_traj
    dist = np.hypot(rel[:, 0], rel[:, 1])
    k = int(np.argmin(dist))
    if encounter == "head-on":
        bearing = wrap_angle(math.atan2(rel[k, 1], rel[k, 0]) - own_psi[k])
        return "pass-port-side" if bearing < 0 else "pass-starboard-side"
    if encounter.startswith("crossing"):
        speed = np.hypot(target_vel[:, 0], target_vel[:, 1])
        hd = target_vel / np.where(speed > 0, speed, 1.0)[:, None]
        own_rel = own_traj - target_pos
        side = hd[:, 0] * own_rel[:, 1] - hd[:, 1] * own_rel[:, 0]
        flips = np.flatnonzero(np.sign(side[1:]) != np.sign(side[:-1]))
        if len(flips) == 0:
            return "no-crossing"
        j = flips[0] + 1
        ahead = hd[j, 0] * own_rel[j, 0] + hd[j, 1] * own_rel[j, 1] > 0
        return "crossed-ahead" if ahead else "crossed-astern"
    if encounter == "overtaking":
        return "overtaking-clear"
    return "none"


def run_episode(policy, scenario: Scenario, cfg: EnvConfig, log: bool = False, classify_range: float = 3000.0):
    """Roll out a deterministic policy; returns (EpisodeRecord, env)."""
    env = VesselEnv(scenario, cfg, log=log)
    obs = env.reset()
    own, psi, ctes = [env.state.position], [env.state.psi], [env.last_nav.epsilon]
    tpos = {tv.id: [tv.position_at(0.0)] for tv in scenario.targets}
    tvel = {tv.id: [tv.velocity_at(0.0)] for tv in scenario.targets}
    first_class = {}
    total = 0.0
    res = None
    while True:
        for tv in scenario.targets:
            if tv.id not in first_class:
                ts = tv.state_at(env.t)
                c = encounter_classifier(env.state, ts, tv.velocity_at(env.t), classify_range)
                if c != "none":
                    first_class[tv.id] = c
        res = env.step(policy(obs))
        obs = res.observation
        total += res.reward
        own.append(env.state.position)
        psi.append(env.state.psi)
        ctes.append(res.info["cte"])
        for tv in scenario.targets:
            tpos[tv.id].append(tv.position_at(env.t))
            tvel[tv.id].append(tv.velocity_at(env.t))
        if res.done:
            break
    own_a, psi_a = np.array(own), np.array(psi)
    encounters = []
    for tid, kind in first_class.items():
        outcome = encounter_outcomes(own_a, psi_a, np.array(tpos[tid]), np.array(tvel[tid]), kind)
        encounters.append({"target": tid, "type": kind, "outcome": outcome})
    rec = EpisodeRecord(
        scenario=scenario.name,
        seed=scenario.seed,
        outcome=res.cause,
        steps=env.steps,
        total_reward=float(total),
        mean_cte=float(np.mean(ctes)),
        max_cte=float(np.max(ctes)),
        progress=float(env.last_nav.progress),
        encounters=encounters,
    )
    return rec, env


def evaluate(policy, scenarios, cfg: EnvConfig) -> EvalReport:
    """Evaluate over a sequence of scenarios; order of records follows the input."""
    return EvalReport([run_episode(policy, s, cfg)[0] for s in scenarios])
