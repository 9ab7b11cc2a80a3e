"""Proximal policy optimization in plain numpy.

Gaussian policy with a state-independent log-std, separate tanh MLPs for the
action mean and the value estimate, generalized advantage estimation, the
clipped surrogate objective and Adam. Gradients are derived by hand for the
fixed two-hidden-layer topology.
"""
from __future__ import annotations

import hashlib
import json
import math
import pickle
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PpoConfig",
    "PolicyParams",
    "RunningMeanStd",
    "RolloutBatch",
    "UpdateAborted",
    "TrainingFault",
    "init_params",
    "policy_forward",
    "value_forward",
    "sample_action",
    "gaussian_log_prob",
    "gaussian_entropy",
    "compute_gae",
    "clipped_objective",
    "loss_and_grads",
    "update",
    "Adam",
    "Trainer",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "config_hash",
]

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
CHECKPOINT_VERSION = 1
_LOG_2PI = math.log(2.0 * math.pi)


class UpdateAborted(FloatingPointError):
    def __init__(self, epoch, minibatch, message="non-finite loss"):
        super().__init__(f"{message} at epoch {epoch}, minibatch {minibatch}")
        self.epoch = epoch
        self.minibatch = minibatch


class TrainingFault(RuntimeError):
    """An environment raised during rollout; a checkpoint was written first."""


@dataclass
class PpoConfig:
    gamma: float = 0.999
    horizon: int = 1024
    n_actors: int = 8
    n_epochs: int = 10
    total_steps: int = 1_000_000        # environment steps summed over actors
    learning_rate: float = 2e-4
    lr_schedule: str = "constant"       # or "linear": decay to lr / n_iterations over the step budget
    n_minibatches: int = 32
    gae_lambda: float = 0.95
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    clip: float = 0.2
    hidden: int = 64
    normalize_advantages: bool = True
    normalize_observations: bool = True
    obs_clip: float = 10.0
    scale_rewards: bool = True
    max_grad_norm: float | None = 0.5
    log_std_init: float = 0.0
    checkpoint_every: int = 10

    def __post_init__(self):
        if not (0 < self.gamma <= 1 and 0 < self.gae_lambda <= 1):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")
        if not 0 < self.clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        if self.lr_schedule not in ("constant", "linear"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.horizon < 1 or self.n_actors < 1 or self.n_minibatches < 1 or self.n_epochs < 0:
            raise ValueError("horizon, n_actors, n_minibatches must be >= 1")
        if self.horizon * self.n_actors < self.n_minibatches:
            raise ValueError("batch smaller than the number of minibatches")

    @property
    def batch_size(self) -> int:
        return self.horizon * self.n_actors

    @property
    def n_iterations(self) -> int:
        return self.total_steps // self.batch_size


def config_hash(cfg) -> str:
    d = cfg if isinstance(cfg, dict) else asdict(cfg)
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]


# -- networks ---------------------------------------------------------------

@dataclass
class PolicyParams:
    """Weights as ``[(W, b), ...]`` per layer, ``W`` shaped (in, out)."""

    pi: list
    vf: list
    log_std: np.ndarray

    @property
    def obs_dim(self) -> int:
        return self.pi[0][0].shape[0]

    @property
    def act_dim(self) -> int:
        return self.log_std.shape[0]

    def arrays(self) -> list:
        out = []
        for layers in (self.pi, self.vf):
            for W, b in layers:
                out += [W, b]
        return out + [self.log_std]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vec: np.ndarray) -> "PolicyParams":
        vec = np.asarray(vec, dtype=float)
        shapes = [a.shape for a in self.arrays()]
        parts, k = [], 0
        for s in shapes:
            n = int(np.prod(s))
            parts.append(vec[k:k + n].reshape(s).copy())
            k += n
        return _from_arrays(parts, len(self.pi), len(self.vf))

    def copy(self) -> "PolicyParams":
        return _from_arrays([a.copy() for a in self.arrays()], len(self.pi), len(self.vf))

    def to_npz_dict(self) -> dict:
        d = {}
        for name, layers in (("pi", self.pi), ("vf", self.vf)):
            for k, (W, b) in enumerate(layers):
                d[f"{name}_W{k}"] = W
                d[f"{name}_b{k}"] = b
        d["log_std"] = self.log_std
        return d

    @classmethod
    def from_npz_dict(cls, d) -> "PolicyParams":
        def layers(name):
            out, k = [], 0
            while f"{name}_W{k}" in d:
                out.append((np.array(d[f"{name}_W{k}"]), np.array(d[f"{name}_b{k}"])))
                k += 1
            return out
        return cls(layers("pi"), layers("vf"), np.array(d["log_std"]))


def _from_arrays(arrs, n_pi, n_vf) -> PolicyParams:
    pi = [(arrs[2 * k], arrs[2 * k + 1]) for k in range(n_pi)]
    off = 2 * n_pi
    vf = [(arrs[off + 2 * k], arrs[off + 2 * k + 1]) for k in range(n_vf)]
    return PolicyParams(pi, vf, arrs[-1])


def _dense_init(rng, n_in, n_out):
    # uniform(+-1/sqrt(fan_in)) for weights and biases
    bound = 1.0 / math.sqrt(n_in)
    return rng.uniform(-bound, bound, (n_in, n_out)), rng.uniform(-bound, bound, n_out)


def init_params(obs_dim: int, act_dim: int, hidden: int = 64, seed=0, log_std_init: float = 0.0) -> PolicyParams:
    rng = np.random.default_rng(seed)
    sizes = [obs_dim, hidden, hidden]
    pi = [_dense_init(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])] + [_dense_init(rng, hidden, act_dim)]
    vf = [_dense_init(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])] + [_dense_init(rng, hidden, 1)]
    return PolicyParams(pi, vf, np.full(act_dim, float(log_std_init)))


def _mlp_forward(layers, x):
    acts = [x]
    h = x
    for k, (W, b) in enumerate(layers):
        z = h @ W + b
        h = np.tanh(z) if k < len(layers) - 1 else z
        acts.append(h)
    return h, acts


def _mlp_backward(layers, acts, dout):
    grads = [None] * len(layers)
    g = dout
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        if k < len(layers) - 1:
            g = g * (1.0 - acts[k + 1] ** 2)
        grads[k] = (acts[k].T @ g, g.sum(axis=0))
        if k > 0:
            g = g @ W.T
    return grads


def _check_obs(params, obs):
    obs = np.asarray(obs, dtype=float)
    if obs.shape[-1] != params.obs_dim:
        raise ValueError(f"observation has {obs.shape[-1]} features, network expects {params.obs_dim}")
    return obs


def policy_forward(params: PolicyParams, obs):
    """Action mean and log-std for a single observation or a batch."""
    obs = _check_obs(params, obs)
    mean, _ = _mlp_forward(params.pi, np.atleast_2d(obs))
    if obs.ndim == 1:
        mean = mean[0]
    return mean, params.log_std.copy()


def value_forward(params: PolicyParams, obs):
    obs = _check_obs(params, obs)
    v, _ = _mlp_forward(params.vf, np.atleast_2d(obs))
    v = v[:, 0]
    return float(v[0]) if obs.ndim == 1 else v


def gaussian_log_prob(x, mean, log_std):
    z = (np.asarray(x) - mean) * np.exp(-log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * mean.shape[-1] * _LOG_2PI


def gaussian_entropy(log_std) -> float:
    return float(np.sum(log_std) + 0.5 * len(log_std) * (1.0 + _LOG_2PI))


def sample_action(params: PolicyParams, obs, rng: np.random.Generator):
    """Sample a ~ N(mean, std^2). Returns (clamped action, raw action, log-prob of raw)."""
    mean, log_std = policy_forward(params, obs)
    raw = mean + np.exp(log_std) * rng.standard_normal(np.shape(mean))
    return np.clip(raw, -1.0, 1.0), raw, gaussian_log_prob(raw, mean, log_std)


# -- advantage estimation and objective --------------------------------------

def compute_gae(rewards, values, dones, gamma: float, lam: float, last_value=0.0):
    """GAE over one actor's trajectory segment.

    ``dones[t]`` marks that the episode ended after step ``t``; ``last_value``
    bootstraps the step after the segment. Returns (advantages, returns).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    if not (len(rewards) == len(values) == len(dones)):
        raise ValueError("rewards, values and dones must have equal length")
    n = len(rewards)
    adv = np.zeros(n)
    next_v = float(last_value)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        live = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_v * live - values[t]
        acc = delta + gamma * lam * live * acc
        adv[t] = acc
        next_v = values[t]
    return adv, adv + values


def clipped_objective(logp_new, logp_old, advantage, epsilon: float):
    ratio = np.exp(np.asarray(logp_new) - np.asarray(logp_old))
    return np.minimum(ratio * advantage, np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage)


@dataclass
class RolloutBatch:
    obs: np.ndarray
    actions: np.ndarray         # raw (pre-clamp) samples
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self):
        return len(self.obs)


def loss_and_grads(params: PolicyParams, obs, actions, logp_old, adv, returns, cfg: PpoConfig,
                   terms=("policy", "value", "entropy")):
    """Combined loss -J_clip + c1 * MSE(V, R) - c2 * H and its gradient.

    ``terms`` selects which parts contribute (for isolated gradient checks).
    Returns (loss, grads as PolicyParams, info dict).
    """
    n = len(obs)
    mean, pi_acts = _mlp_forward(params.pi, obs)
    log_std = params.log_std
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean
    logp = -0.5 * np.sum(diff * diff * inv_var, axis=1) - np.sum(log_std) - 0.5 * params.act_dim * _LOG_2PI
    ratio = np.exp(logp - logp_old)
    eps = cfg.clip
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps)
    surr = np.minimum(ratio * adv, clipped * adv)
    # gradient of min() flows through the unclipped branch only when it is the active one
    active = (ratio * adv <= clipped * adv) | ((ratio > 1.0 - eps) & (ratio < 1.0 + eps))
    v, vf_acts = _mlp_forward(params.vf, obs)
    v = v[:, 0]
    verr = v - returns
    entropy = gaussian_entropy(log_std)

    loss = 0.0
    d_logp = np.zeros(n)
    d_v = np.zeros(n)
    d_log_std = np.zeros_like(log_std)
    if "policy" in terms:
        loss += -float(np.mean(surr))
        d_logp = -np.where(active, ratio * adv, 0.0) / n
    if "value" in terms:
        loss += cfg.vf_coef * float(np.mean(verr * verr))
        d_v = cfg.vf_coef * 2.0 * verr / n
    if "entropy" in terms:
        loss += -cfg.ent_coef * entropy
        d_log_std = d_log_std - cfg.ent_coef

    # logp wrt mean: diff / var; wrt log_std: diff^2 / var - 1
    d_mean = d_logp[:, None] * diff * inv_var
    d_log_std = d_log_std + np.sum(d_logp[:, None] * (diff * diff * inv_var - 1.0), axis=0)
    g_pi = _mlp_backward(params.pi, pi_acts, d_mean)
    g_vf = _mlp_backward(params.vf, vf_acts, d_v[:, None])
    grads = PolicyParams(g_pi, g_vf, d_log_std)
    info = {
        "policy_loss": -float(np.mean(surr)),
        "value_loss": float(np.mean(verr * verr)),
        "entropy": entropy,
        "approx_kl": float(np.mean(logp_old - logp)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > eps)),
    }
    return loss, grads, info


class Adam:
    def __init__(self, size: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        mhat = self.m / (1 - self.b1 ** self.t)
        vhat = self.v / (1 - self.b2 ** self.t)
        return theta - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def update(params: PolicyParams, batch: RolloutBatch, cfg: PpoConfig, rng: np.random.Generator,
           opt: Adam | None = None):
    """N_E epochs of shuffled minibatch Adam steps on the combined loss.

    Returns (new params, stats, optimizer). Raises UpdateAborted on a
    non-finite loss, leaving ``params`` untouched.
    """
    theta = params.flat()
    opt = opt or Adam(theta.size, cfg.learning_rate)
    adv = batch.advantages.copy()
    if cfg.normalize_advantages and len(adv) > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    n = len(batch)
    mb = n // cfg.n_minibatches
    cur = params.copy()
    hist = {k: [] for k in ("policy_loss", "value_loss", "entropy", "approx_kl", "clip_fraction")}
    for epoch in range(cfg.n_epochs):
        perm = rng.permutation(n)
        for k in range(cfg.n_minibatches):
            idx = perm[k * mb:(k + 1) * mb]
            loss, grads, info = loss_and_grads(cur, batch.obs[idx], batch.actions[idx], batch.log_probs[idx],
                                               adv[idx], batch.returns[idx], cfg)
            g = grads.flat()
            if not (math.isfinite(loss) and np.all(np.isfinite(g))):
                raise UpdateAborted(epoch, k)
            if cfg.max_grad_norm is not None:
                norm = float(np.linalg.norm(g))
                if norm > cfg.max_grad_norm:
                    g = g * (cfg.max_grad_norm / norm)
            theta = opt.step(theta, g)
            n_std = cur.act_dim
            theta[-n_std:] = np.clip(theta[-n_std:], LOG_STD_MIN, LOG_STD_MAX)
            cur = cur.with_flat(theta)
            for key in hist:
                hist[key].append(info[key])
    stats = {k: (float(np.mean(v)) if v else None) for k, v in hist.items()}
    return cur, stats, opt


# -- rollouts -----------------------------------------------------------------

class RunningMeanStd:
    """Per-feature running mean/variance (parallel Welford merge)."""

    def __init__(self, dim: int):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 1e-4

    def update(self, x: np.ndarray):
        x = np.atleast_2d(x)
        bm, bv, bn = x.mean(axis=0), x.var(axis=0), x.shape[0]
        delta = bm - self.mean
        tot = self.count + bn
        self.mean = self.mean + delta * bn / tot
        m2 = self.var * self.count + bv * bn + delta * delta * self.count * bn / tot
        self.var = m2 / tot
        self.count = tot

    def normalize(self, x, clip: float = 10.0):
        return np.clip((x - self.mean) / np.sqrt(self.var + 1e-8), -clip, clip)

    def state(self) -> dict:
        return {"mean": self.mean.copy(), "var": self.var.copy(), "count": float(self.count)}

    def load(self, st: dict):
        self.mean = np.array(st["mean"], dtype=float)
        self.var = np.array(st["var"], dtype=float)
        self.count = float(st["count"])


class _Identity:
    def update(self, x):
        pass

    def normalize(self, x, clip=None):
        return np.asarray(x, dtype=float)


def _json_num(x):
    return None if x is None or not math.isfinite(x) else float(x)


class Trainer:
    """PPO training loop over ``n_actors`` lockstepped environments.

    ``env_factory(seed)`` must return an object with ``obs_dim``, ``reset()``
    and ``step(action)``; ``act_dim`` defaults to 2.
    """

    def __init__(self, env_factory, cfg: PpoConfig, seed: int = 0, out_dir=None, run_config=None):
        self.cfg = cfg
        self.seed = seed
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.run_config = run_config if run_config is not None else asdict(cfg)
        ss = np.random.SeedSequence(seed)
        init_ss, update_ss, env_ss, act_ss = ss.spawn(4)
        env_seeds = env_ss.generate_state(cfg.n_actors)
        self.envs = [env_factory(int(s)) for s in env_seeds]
        self.act_rngs = [np.random.default_rng(s) for s in act_ss.spawn(cfg.n_actors)]
        self.update_rng = np.random.default_rng(update_ss)
        obs_dim = self.envs[0].obs_dim
        act_dim = getattr(self.envs[0], "act_dim", 2)
        self.params = init_params(obs_dim, act_dim, cfg.hidden, init_ss, cfg.log_std_init)
        self.opt = Adam(self.params.flat().size, cfg.learning_rate)
        self.obs_rms = RunningMeanStd(obs_dim) if cfg.normalize_observations else _Identity()
        self.ret_rms = RunningMeanStd(1)
        self.ret_acc = np.zeros(cfg.n_actors)
        self.obs = np.array([e.reset() for e in self.envs], dtype=float)
        self.obs_rms.update(self.obs)
        self.ep_reward = np.zeros(cfg.n_actors)
        self.iteration = 0
        self.metrics = []

    # reward scaling: divide by the std of the running discounted return
    def _scale(self, r):
        if not self.cfg.scale_rewards:
            return r
        return r / math.sqrt(float(self.ret_rms.var[0]) + 1e-8)

    def collect(self) -> tuple[RolloutBatch, dict]:
        cfg = self.cfg
        T, A = cfg.horizon, cfg.n_actors
        obs_dim = self.params.obs_dim
        buf_obs = np.zeros((T, A, obs_dim))
        buf_act = np.zeros((T, A, self.params.act_dim))
        buf_logp = np.zeros((T, A))
        buf_rew = np.zeros((T, A))
        buf_raw = np.zeros((T, A))
        buf_val = np.zeros((T, A))
        buf_done = np.zeros((T, A), dtype=bool)
        ep_rewards, ep_collisions, abs_cte = [], 0, []
        for t in range(T):
            nobs = self.obs_rms.normalize(self.obs, cfg.obs_clip)
            mean, log_std = policy_forward(self.params, nobs)
            values = value_forward(self.params, nobs)
            std = np.exp(log_std)
            raw = np.array([mean[a] + std * self.act_rngs[a].standard_normal(len(std)) for a in range(A)])
            logp = gaussian_log_prob(raw, mean, log_std)
            action = np.clip(raw, -1.0, 1.0)
            next_obs = np.zeros_like(self.obs)
            for a, env in enumerate(self.envs):
                try:
                    res = env.step(action[a])
                except Exception as exc:
                    path = self.save() if self.out_dir is not None else None
                    raise TrainingFault(
                        f"actor {a} failed at iteration {self.iteration}, step {t}: {exc!r}; checkpoint {path}"
                    ) from exc
                r = float(res.reward)
                buf_raw[t, a] = r
                self.ep_reward[a] += r
                cte = res.info.get("cte") if isinstance(res.info, dict) else None
                if cte is not None:
                    abs_cte.append(abs(cte))
                self.ret_acc[a] = self.ret_acc[a] * cfg.gamma + r
                rs = r
                if res.done:
                    if res.info.get("truncated", False):
                        term = self.obs_rms.normalize(np.asarray(res.observation, float), cfg.obs_clip)
                        rs = r + cfg.gamma * value_forward(self.params, term) * self._unscale_factor()
                    ep_rewards.append(self.ep_reward[a])
                    ep_collisions += res.cause == "collision"
                    self.ep_reward[a] = 0.0
                    next_obs[a] = env.reset()
                else:
                    next_obs[a] = res.observation
                buf_rew[t, a] = rs
                buf_done[t, a] = res.done
            self.ret_rms.update(self.ret_acc[:, None])
            self.ret_acc[buf_done[t]] = 0.0
            buf_obs[t], buf_act[t], buf_logp[t], buf_val[t] = nobs, raw, logp, values
            self.obs = next_obs
            self.obs_rms.update(self.obs)

        last_v = value_forward(self.params, self.obs_rms.normalize(self.obs, cfg.obs_clip))
        scaled = self._scale(buf_rew)
        adv = np.zeros((T, A))
        ret = np.zeros((T, A))
        for a in range(A):
            adv[:, a], ret[:, a] = compute_gae(scaled[:, a], buf_val[:, a], buf_done[:, a],
                                               cfg.gamma, cfg.gae_lambda, last_v[a])
        # actor-major flattening keeps each actor's segment contiguous
        flat = lambda x: np.swapaxes(x, 0, 1).reshape((A * T,) + x.shape[2:])
        batch = RolloutBatch(flat(buf_obs), flat(buf_act), flat(buf_logp), flat(scaled), flat(buf_val),
                             flat(buf_done), flat(adv), flat(ret))
        info = {
            "episodes": len(ep_rewards),
            "mean_episode_reward": float(np.mean(ep_rewards)) if ep_rewards else None,
            "collision_rate": ep_collisions / len(ep_rewards) if ep_rewards else None,
            "mean_abs_cte": float(np.mean(abs_cte)) if abs_cte else None,
            "mean_step_reward": float(np.mean(buf_raw)),
        }
        return batch, info

    def _unscale_factor(self):
        # bootstrap values live in scaled units; bring them back before rescaling
        if not self.cfg.scale_rewards:
            return 1.0
        return math.sqrt(float(self.ret_rms.var[0]) + 1e-8)

    def learning_rate(self) -> float:
        """Adam step size for the next update."""
        cfg = self.cfg
        if cfg.lr_schedule == "constant":
            return cfg.learning_rate
        n = max(cfg.n_iterations, 1)
        return cfg.learning_rate * (1.0 - min(self.iteration, n - 1) / n)

    def run_iteration(self) -> dict:
        batch, info = self.collect()
        self.opt.lr = self.learning_rate()
        self.params, stats, self.opt = update(self.params, batch, self.cfg, self.update_rng, self.opt)
        self.iteration += 1
        rec = {"iteration": self.iteration, "steps": self.iteration * self.cfg.batch_size}
        rec.update({k: _json_num(v) if isinstance(v, float) or v is None else v for k, v in info.items()})
        rec.update({k: _json_num(v) for k, v in stats.items()})
        rec["std"] = [float(x) for x in np.exp(self.params.log_std)]
        self.metrics.append(rec)
        if self.out_dir is not None:
            with open(self.out_dir / "metrics.jsonl", "a") as fh:
                fh.write(json.dumps(rec) + "\n")
            if self.cfg.checkpoint_every and self.iteration % self.cfg.checkpoint_every == 0:
                self.save()
        return rec

    def run(self, n_iterations: int | None = None):
        n = self.cfg.n_iterations if n_iterations is None else n_iterations
        while self.iteration < n:
            self.run_iteration()
        if self.out_dir is not None:
            self.save()
        return self.params, self.metrics

    def normalizer_state(self):
        return self.obs_rms.state() if isinstance(self.obs_rms, RunningMeanStd) else None

    def save(self):
        """Write the policy checkpoint and a resumable trainer snapshot."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "checkpoint.npz"
        save_checkpoint(path, self.params, self.normalizer_state(), self.run_config, self.iteration)
        tmp = self.out_dir / "resume.pkl.tmp"
        with open(tmp, "wb") as fh:
            pickle.dump(self, fh)
        tmp.replace(self.out_dir / "resume.pkl")
        return path

    @staticmethod
    def resume(out_dir) -> "Trainer":
        with open(Path(out_dir) / "resume.pkl", "rb") as fh:
            tr = pickle.load(fh)
        tr.out_dir = Path(out_dir)
        # drop metric lines written after the snapshot
        mfile = tr.out_dir / "metrics.jsonl"
        lines = mfile.read_text().splitlines(True) if mfile.exists() else []
        mfile.write_text("".join(lines[:tr.iteration]))
        return tr


def train(env_factory, cfg: PpoConfig, seed: int = 0, out_dir=None, n_iterations: int | None = None,
          run_config=None):
    """Train from scratch. Returns (params, metrics, trainer)."""
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "metrics.jsonl").write_text("")
    tr = Trainer(env_factory, cfg, seed, out_dir, run_config)
    params, metrics = tr.run(n_iterations)
    return params, metrics, tr


# -- checkpoints ----------------------------------------------------------------

def save_checkpoint(path, params: PolicyParams, normalizer: dict | None, run_config, iteration: int = 0):
    meta = {
        "version": CHECKPOINT_VERSION,
        "config_hash": config_hash(run_config),
        "config": run_config,
        "iteration": iteration,
        "normalize": normalizer is not None,
    }
    arrays = params.to_npz_dict()
    if normalizer is not None:
        arrays["obs_mean"] = normalizer["mean"]
        arrays["obs_var"] = normalizer["var"]
        arrays["obs_count"] = np.array(normalizer["count"])
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True, default=str).encode(), dtype=np.uint8)
    tmp = Path(str(path) + ".tmp.npz")
    np.savez(tmp, **arrays)
    tmp.replace(path)


def load_checkpoint(path):
    """Return (params, normalizer state or None, meta dict)."""
    with np.load(path) as d:
        meta = json.loads(bytes(d["meta"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        params = PolicyParams.from_npz_dict(d)
        norm = None
        if meta.get("normalize"):
            norm = {"mean": np.array(d["obs_mean"]), "var": np.array(d["obs_var"]),
                    "count": float(d["obs_count"])}
    return params, norm, meta


def make_policy(params: PolicyParams, normalizer: dict | None, obs_clip: float = 10.0):
    """Deterministic (mean-action) policy function over raw observations."""
    rms = None
    if normalizer is not None:
        rms = RunningMeanStd(params.obs_dim)
        rms.load(normalizer)

    def act(obs):
        x = rms.normalize(np.asarray(obs, float), obs_clip) if rms is not None else np.asarray(obs, float)
        mean, _ = policy_forward(params, x)
        return np.clip(mean, -1.0, 1.0)
    return act


__all__.append("make_policy")
