"""Per-step reward: path following, static and dynamic obstacle penalties.

Angles are vessel-relative in radians, positive towards starboard. The
starboard, port and stern sectors split the circle at 0 and +-112.5 degrees.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .dynamics import ConfigError
from .guidance import NavFeatures
from .sensing import SensorFrame

__all__ = [
    "RewardConfig",
    "RewardTerms",
    "path_reward",
    "static_penalty",
    "static_colav_reward",
    "colregs_sector",
    "zeta_x",
    "zeta_v",
    "dynamic_penalty",
    "lambda_i",
    "dynamic_colav_reward",
    "total_reward",
    "EXP_CLAMP",
]

EXP_CLAMP = 50.0
STARBOARD, PORT, STERN = "starboard", "port", "stern"
_SECTOR_EDGE = math.radians(112.5)


@dataclass
class RewardConfig:
    gamma_eps: float = 0.5
    gamma_r: float = 0.1
    alpha_x: float = 75.0
    gamma_theta_stat: float = 10.0
    gamma_theta_dyn: float = 1.0
    gamma_x: float = 0.01
    gamma_v_stb_pos: float = 0.004
    gamma_v_stb_neg: float = 0.05
    gamma_v_port_pos: float = 0.007
    gamma_v_port_neg: float = 0.005
    gamma_v_stern_pos: float = 0.007
    gamma_v_stern_neg: float = 0.005
    gamma_x_stb: float = 0.007
    gamma_x_port: float = 0.009
    gamma_x_stern: float = 0.01
    alpha_lambda_pos: float = 4.0
    alpha_lambda_neg: float = 2.0
    gamma_lambda_pos: float = 0.003
    gamma_lambda_neg: float = 0.005
    r_collision: float = -10000.0
    r_exists: float = -1.0
    U_max: float = 2.0

    # names as printed in the reward parameter table
    ALIASES = {
        "gamma_e": "gamma_eps",
        "gamma_epsilon": "gamma_eps",
        "gamma_theta,stat": "gamma_theta_stat",
        "gamma_theta,dyn": "gamma_theta_dyn",
        "gamma_v,st.b.+": "gamma_v_stb_pos",
        "gamma_v,st.b.-": "gamma_v_stb_neg",
        "gamma_v,port+": "gamma_v_port_pos",
        "gamma_v,port-": "gamma_v_port_neg",
        "gamma_v,stern+": "gamma_v_stern_pos",
        "gamma_v,stern-": "gamma_v_stern_neg",
        "gamma_x,st.b.": "gamma_x_stb",
        "gamma_x,port": "gamma_x_port",
        "gamma_x,stern": "gamma_x_stern",
        "alpha_lambda+": "alpha_lambda_pos",
        "alpha_lambda-": "alpha_lambda_neg",
        "gamma_lambda+": "gamma_lambda_pos",
        "gamma_lambda-": "gamma_lambda_neg",
        "r_coll": "r_collision",
    }

    def __post_init__(self):
        if not (self.gamma_x_stb < self.gamma_x_port <= self.gamma_x_stern):
            raise ConfigError("reward config requires gamma_x,st.b. < gamma_x,port <= gamma_x,stern")
        if not self.r_collision < 0:
            raise ConfigError("r_collision must be negative")
        if not self.r_exists < 0:
            raise ConfigError("r_exists must be negative")
        if not self.U_max > 0:
            raise ConfigError("U_max must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "RewardConfig":
        names = {f.name for f in fields(cls)}
        kw = {}
        for k, v in d.items():
            key = cls.ALIASES.get(k, k)
            if key not in names:
                raise ConfigError(f"reward.{k}: unknown reward parameter")
            kw[key] = float(v)
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


def path_reward(nav: NavFeatures, cfg: RewardConfig) -> float:
    g = cfg.gamma_r
    vel = nav.u / cfg.U_max * math.cos(nav.psi_err) + g
    cte = math.exp(-cfg.gamma_eps * abs(nav.epsilon)) + g
    return vel * cte - g * g


def static_penalty(x, theta, cfg: RewardConfig):
    w = 1.0 / (1.0 + cfg.gamma_theta_stat * np.abs(theta))
    out = -w * cfg.alpha_x * np.exp(-cfg.gamma_x * np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def static_colav_reward(frame: SensorFrame, cfg: RewardConfig) -> float:
    """Weighted average of per-ray static penalties (dynamic hits count as clear)."""
    x = np.where(frame.hit_dynamic, frame.max_range, frame.distances)
    w = 1.0 / (1.0 + cfg.gamma_theta_stat * np.abs(frame.angles))
    raw = cfg.alpha_x * np.exp(-cfg.gamma_x * x)
    return -float(np.sum(w * raw) / np.sum(w))


def colregs_sector(theta: float) -> str:
    if 0.0 <= theta < _SECTOR_EDGE:
        return STARBOARD
    if -_SECTOR_EDGE <= theta < 0.0:
        return PORT
    return STERN


def _sector_codes(theta):
    theta = np.asarray(theta, dtype=float)
    return np.where((theta >= 0) & (theta < _SECTOR_EDGE), 0,
                    np.where((theta >= -_SECTOR_EDGE) & (theta < 0), 1, 2))


def zeta_x(theta, cfg: RewardConfig):
    table = np.array([cfg.gamma_x_stb, cfg.gamma_x_port, cfg.gamma_x_stern])
    out = table[_sector_codes(theta)]
    return float(out) if np.ndim(out) == 0 else out


def zeta_v(theta, v_y, cfg: RewardConfig):
    # the velocity table treats theta == 0 and theta == -112.5 deg as stern
    theta = np.asarray(theta, dtype=float)
    code = np.where((theta > 0) & (theta < _SECTOR_EDGE), 0,
                    np.where((theta > -_SECTOR_EDGE) & (theta < 0), 1, 2))
    pos = np.array([cfg.gamma_v_stb_pos, cfg.gamma_v_port_pos, cfg.gamma_v_stern_pos])
    neg = np.array([cfg.gamma_v_stb_neg, cfg.gamma_v_port_neg, cfg.gamma_v_stern_neg])
    out = np.where(np.asarray(v_y) >= 0, pos[code], neg[code])
    return float(out) if np.ndim(out) == 0 else out


def _dyn_raw(x, theta, v_y, cfg):
    arg = (zeta_v(theta, v_y, cfg) * np.asarray(v_y, dtype=float) - zeta_x(theta, cfg)) * np.asarray(x, dtype=float)
    return cfg.alpha_x * np.exp(np.clip(arg, -EXP_CLAMP, EXP_CLAMP))


def _dyn_weight(theta, cfg):
    return 1.0 / (1.0 + np.exp(cfg.gamma_theta_dyn * np.abs(theta)))


def dynamic_penalty(x, theta, v_y, cfg: RewardConfig):
    """Penalty for one dynamic obstacle reading; the exponent is clamped to +-50."""
    out = -_dyn_weight(theta, cfg) * _dyn_raw(x, theta, v_y, cfg)
    return float(out) if np.ndim(out) == 0 else out


def lambda_i(x, v_y, cfg: RewardConfig):
    v_y = np.asarray(v_y, dtype=float)
    a = np.where(v_y >= 0, cfg.alpha_lambda_pos, cfg.alpha_lambda_neg)
    g = np.where(v_y >= 0, cfg.gamma_lambda_pos, cfg.gamma_lambda_neg)
    out = 1.0 / (1.0 + np.exp(-g * np.asarray(x, dtype=float) + a))
    return float(out) if np.ndim(out) == 0 else out


def dynamic_colav_reward(frame: SensorFrame, cfg: RewardConfig) -> tuple[float, float]:
    """Return (r_colav_dyn, lambda_min).

    Rays without a dynamic hit enter at the sensor range with v_y = 0.
    """
    x = np.where(frame.hit_dynamic, frame.distances, frame.max_range)
    vy = np.where(frame.hit_dynamic, frame.ray_vy, 0.0)
    lam = lambda_i(x, vy, cfg)
    w = _dyn_weight(frame.angles, cfg)
    num = np.sum((1.0 - lam) * w * _dyn_raw(x, frame.angles, vy, cfg))
    return -float(num / np.sum(w)), float(np.min(lam))


@dataclass
class RewardTerms:
    total: float
    path: float
    colav_static: float
    colav_dynamic: float
    lambda_min: float
    collided: bool

    def to_dict(self) -> dict:
        return asdict(self)


def total_reward(nav: NavFeatures, frame: SensorFrame, collided: bool, cfg: RewardConfig) -> RewardTerms:
    r_path = path_reward(nav, cfg)
    r_stat = static_colav_reward(frame, cfg)
    r_dyn, lam = dynamic_colav_reward(frame, cfg)
    if collided:
        total = cfg.r_collision
    else:
        total = lam * r_path + (r_stat + r_dyn) + cfg.r_exists
    return RewardTerms(total, r_path, r_stat, r_dyn, lam, bool(collided))
