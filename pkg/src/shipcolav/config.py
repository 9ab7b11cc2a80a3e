"""Run configuration: one JSON document merging every tunable setting.

Top-level keys: ``preset``, ``seed``, ``out_dir``, ``iterations``,
``ship_model``, ``model_overrides``, and one object per section: ``sensor``,
``reward``, ``ppo``, ``env``, ``generator``. Section keys are the field
names of the corresponding config dataclasses; anything omitted takes the
preset's value.
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .dynamics import ConfigError, load_model
from .env import EnvConfig, EnvFactory, GeneratorConfig
from .ppo import PpoConfig, config_hash
from .rewards import RewardConfig
from .sensing import SensorConfig

__all__ = ["RunConfig", "PRESET_NAMES", "smoke_ppo"]

SECTIONS = ("sensor", "reward", "ppo", "env", "generator")
_ENV_KEYS = ("dt", "delta_la", "collision_distance", "left_world_reward")


def smoke_ppo(iterations: int = 200) -> dict:
    """PPO settings for desk-scale smoke training (T=256, N_A=4, lr 1e-3 annealed linearly)."""
    return {"horizon": 256, "n_actors": 4, "learning_rate": 1e-3, "lr_schedule": "linear",
            "total_steps": iterations * 1024}


def _preset(name: str) -> dict:
    if name == "full":
        return {}
    if name in ("smoke", "smoke-obstacles"):
        n_static = 5 if name == "smoke-obstacles" else 0
        iters = 400 if n_static else 200
        return {
            "ppo": smoke_ppo(iters),
            "env": {"dt": 0.5, "delta_la": 30.0},
            "generator": {
                "path_length": [300.0, 300.0], "n_waypoints": [2, 2], "max_turn_deg": 0.0,
                "n_static": [n_static, n_static], "static_radius": [5.0, 15.0], "static_lateral": 15.0,
                "static_omega": [0.15, 0.9], "n_targets": [0, 0], "spawn_clearance": 15.0,
                "spawn_lateral": 10.0, "spawn_heading_deg": 20.0, "goal_radius": 5.0,
                "max_steps": 600, "bounds_margin": 300.0,
            },
        }
    raise ConfigError(f"preset: unknown preset {name!r}; choose from {list(PRESET_NAMES)}")


PRESET_NAMES = ("full", "smoke", "smoke-obstacles")


def _tuplify(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


@dataclass
class RunConfig:
    preset: str = "full"
    seed: int = 0
    out_dir: str = "runs/default"
    iterations: int | None = None
    ship_model: str | None = None
    model_overrides: dict = field(default_factory=dict)
    sensor: dict = field(default_factory=dict)
    reward: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    env: dict = field(default_factory=dict)
    generator: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown config key")
        base = _preset(d.get("preset", "full"))
        merged = {k: dict(base.get(k, {})) for k in SECTIONS}
        for k in SECTIONS:
            sec = d.get(k, {})
            if not isinstance(sec, dict):
                raise ConfigError(f"{k}: must be an object")
            merged[k].update(sec)
        top = {k: v for k, v in d.items() if k not in SECTIONS}
        cfg = cls(**top, **merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            d = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(d)

    # -- construction ---------------------------------------------------------

    def _build(self, section: str, cls, data: dict):
        names = {f.name for f in fields(cls)}
        aliases = getattr(cls, "ALIASES", {})
        for k in data:
            if aliases.get(k, k) not in names:
                raise ConfigError(f"{section}.{k}: unknown field")
        try:
            if cls is RewardConfig:
                return RewardConfig.from_dict(data)
            return cls(**_tuplify(data))
        except ConfigError as exc:
            raise ConfigError(f"{section}: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}: {exc}") from None

    def model(self):
        try:
            return load_model(self.ship_model, **self.model_overrides)
        except TypeError as exc:
            raise ConfigError(f"model_overrides: {exc}") from None

    def sensor_config(self) -> SensorConfig:
        return self._build("sensor", SensorConfig, self.sensor)

    def reward_config(self) -> RewardConfig:
        r = dict(self.reward)
        r.setdefault("U_max", self.model().U_max)
        return self._build("reward", RewardConfig, r)

    def ppo_config(self) -> PpoConfig:
        return self._build("ppo", PpoConfig, self.ppo)

    def generator_config(self) -> GeneratorConfig:
        return self._build("generator", GeneratorConfig, self.generator)

    def env_config(self) -> EnvConfig:
        for k in self.env:
            if k not in _ENV_KEYS:
                raise ConfigError(f"env.{k}: unknown field")
        try:
            return EnvConfig(model=self.model(), sensor=self.sensor_config(), reward=self.reward_config(), **self.env)
        except ConfigError as exc:
            msg = str(exc)
            raise ConfigError(msg if "." in msg.split(":")[0] else f"env: {msg}") from None

    def env_factory(self) -> EnvFactory:
        return EnvFactory(self.env_config(), self.generator_config())

    def validate(self) -> None:
        """Build every component once; raises ConfigError naming the field."""
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed: must be a non-negative integer")
        if self.iterations is not None and (not isinstance(self.iterations, int) or self.iterations < 0):
            raise ConfigError("iterations: must be a non-negative integer")
        env = self.env_config()
        ppo = self.ppo_config()
        self.generator_config()
        if env.obs_dim < 1 or ppo.batch_size < 1:
            raise ConfigError("config: empty observation or batch")

    def n_iterations(self) -> int:
        return self.iterations if self.iterations is not None else self.ppo_config().n_iterations

    # -- serialization ------------------------------------------------------------

    def effective(self) -> dict:
        """Fully expanded settings (every default spelled out)."""
        env = self.env_config()
        d = {
            "preset": self.preset,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "iterations": self.iterations,
            "ship_model": self.ship_model,
            "model_overrides": copy.deepcopy(self.model_overrides),
            "sensor": asdict(env.sensor),
            "reward": env.reward.to_dict(),
            "ppo": asdict(self.ppo_config()),
            "env": {k: getattr(env, k) for k in _ENV_KEYS},
            "generator": asdict(self.generator_config()),
        }
        return json.loads(json.dumps(d))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.effective(), indent=1, sort_keys=True) + "\n")

    def policy_settings(self) -> dict:
        """The settings that shape a trained policy (no seed, paths or budget)."""
        d = self.effective()
        for k in ("out_dir", "seed", "iterations", "preset"):
            d.pop(k)
        d["ppo"].pop("checkpoint_every")
        d["ppo"].pop("total_steps")
        return d

    def hash(self) -> str:
        return config_hash(self.policy_settings())
