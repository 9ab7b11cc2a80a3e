"""Command line entry point: ``shipcolav {train,eval,plot,scenario}``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime fault.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PRESET_NAMES, RunConfig
from .dynamics import ConfigError
from .env import (Scenario, ScenarioError, crossing_scenario, generate_training_scenario,
                  head_on_scenario)

log = logging.getLogger("shipcolav")

EXIT_OK, EXIT_USAGE, EXIT_FAULT = 0, 1, 2
SCENARIO_SETS = ("head-on", "crossing-starboard", "crossing-port", "training-random")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_run_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig.from_dict({"preset": getattr(args, "preset", None) or "full"})
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "iterations", None) is not None:
        cfg.iterations = args.iterations
    cfg.validate()
    return cfg


# -- train ------------------------------------------------------------------------

def cmd_train(args) -> int:
    from .ppo import Trainer, train

    cfg = _load_run_config(args)
    out = Path(cfg.out_dir)
    n_iter = cfg.n_iterations()
    if args.resume:
        if not (out / "resume.pkl").exists():
            raise ConfigError(f"resume: no resume.pkl in {out}")
        tr = Trainer.resume(out)
        if tr.run_config != cfg.policy_settings():
            raise ConfigError("resume: config differs from the one the run was started with")
        tr.run(n_iter)
    else:
        out.mkdir(parents=True, exist_ok=True)
        cfg.dump(out / "config.json")
        ppo = cfg.ppo_config()
        train(cfg.env_factory(), ppo, cfg.seed, out, n_iter, run_config=cfg.policy_settings())
    print(f"trained {n_iter} iterations; outputs in {out}")
    return EXIT_OK


# -- eval ---------------------------------------------------------------------------

def _eval_scenarios(name, n, seed, cfg: RunConfig, args):
    env_cfg = cfg.env_config()
    u = env_cfg.model.U_max
    if name == "head-on":
        angles = np.linspace(-5.0, 5.0, n) if n > 1 else np.array([0.0])
        return [head_on_scenario(float(a), own_speed=u, dt=env_cfg.dt) for a in angles]
    if name in ("crossing-starboard", "crossing-port"):
        return [crossing_scenario(name.endswith("starboard"), own_speed=u, dt=env_cfg.dt)] * n
    if name == "training-random":
        gen = cfg.generator_config()
        seeds = np.random.SeedSequence(seed).generate_state(n)
        return [generate_training_scenario(int(s), gen) for s in seeds]
    if name.startswith("preset:"):
        from .data import load_preset
        if not args.terrain:
            raise ConfigError("--terrain is required for replay presets")
        return [load_preset(name.split(":", 1)[1], args.terrain, args.ais)] * n
    raise ConfigError(f"--scenario: unknown scenario set {name!r}")


def cmd_eval(args) -> int:
    from .evaluation import evaluate, run_episode, zero_policy
    from .ppo import init_params, load_checkpoint, make_policy

    policy_kind = args.policy
    if policy_kind == "checkpoint" and not args.checkpoint:
        raise ConfigError("--checkpoint is required unless --policy is init or zero")
    meta = None
    if args.checkpoint:
        if not Path(args.checkpoint).exists():
            raise ConfigError(f"checkpoint not found: {args.checkpoint}")
        params, norm, meta = load_checkpoint(args.checkpoint)
    if args.config:
        cfg = _load_run_config(args)
        if meta is not None and policy_kind == "checkpoint" and meta["config_hash"] != cfg.hash():
            raise ConfigError(
                f"checkpoint/config mismatch: checkpoint hash {meta['config_hash']}, config hash {cfg.hash()}")
    elif meta is not None:
        cfg = RunConfig.from_dict(meta["config"])
    else:
        cfg = _load_run_config(args)
    env_cfg = cfg.env_config()
    if policy_kind == "checkpoint":
        policy = make_policy(params, norm)
    elif policy_kind == "init":
        ss = np.random.SeedSequence(cfg.seed).spawn(4)[0]
        policy = make_policy(init_params(env_cfg.obs_dim, 2, cfg.ppo_config().hidden, ss), None)
    else:
        policy = zero_policy
    scenarios = _eval_scenarios(args.scenario, args.episodes, args.seed or 0, cfg, args)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    if args.log_trajectories and out is not None:
        records = []
        for k, s in enumerate(scenarios):
            rec, env = run_episode(policy, s, env_cfg, log=True)
            env.write_log(out / f"trajectory_{k:03d}.jsonl")
            records.append(rec)
        from .evaluation import EvalReport
        report = EvalReport(records)
    else:
        report = evaluate(policy, scenarios, env_cfg)
    agg = report.aggregates()
    if out is not None:
        report.write(out / "report.json")
    print(json.dumps(agg, indent=1))
    return EXIT_OK


# -- plot -----------------------------------------------------------------------------

def cmd_plot(args) -> int:
    from .plotting import read_trajectory_log, write_plots

    src = Path(args.input)
    if not src.exists():
        raise ConfigError(f"input not found: {src}")
    if src.suffix == ".jsonl":
        _, records = read_trajectory_log(src)
        if not records:
            log.warning("empty trajectory log %s; writing empty plots", src)
    out = args.out or str(src.parent)
    for p in write_plots(src, out):
        print(p)
    return EXIT_OK


# -- scenario ---------------------------------------------------------------------------

def cmd_scenario(args) -> int:
    if args.action == "generate":
        cfg = _load_run_config(args) if (args.config or args.preset) else RunConfig()
        scn = generate_training_scenario(args.seed if args.seed is not None else 0, cfg.generator_config())
        if not args.out:
            raise ConfigError("--out is required for generate")
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        scn.save(args.out)
        print(args.out)
        return EXIT_OK
    if not args.file:
        raise ConfigError(f"scenario {args.action} needs a scenario file")
    try:
        scn = Scenario.load(args.file)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{args.file}: {exc}") from None
    if args.action == "validate":
        problems = scn.validate()
        if problems:
            for p in problems:
                print(f"INVALID {p}")
            return EXIT_USAGE
        print("OK")
        return EXIT_OK
    n0, n1, e0, e1 = scn.bounds
    info = {
        "name": scn.name,
        "seed": scn.seed,
        "waypoints": int(len(scn.waypoints)),
        "path_length": round(scn.path.length, 3),
        "static_obstacles": len(scn.static_obstacles),
        "circles": sum(o.is_circle for o in scn.static_obstacles),
        "polygons": sum(not o.is_circle for o in scn.static_obstacles),
        "targets": len(scn.targets),
        "bounds": {"north": [n0, n1], "east": [e0, e1]},
        "spawn": [scn.spawn.x_n, scn.spawn.y_n, scn.spawn.psi],
        "goal_radius": scn.goal_radius,
        "max_steps": scn.max_steps,
    }
    print(json.dumps(info, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shipcolav", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("train", help="train a policy with PPO")
    t.add_argument("--config", help="run config JSON")
    t.add_argument("--preset", choices=PRESET_NAMES, help="use a built-in config instead of --config")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="output directory (overrides out_dir)")
    t.add_argument("--iterations", type=int, help="number of PPO iterations (overrides the step budget)")
    t.add_argument("--resume", action="store_true", help="continue the run snapshot in the output directory")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a policy with mean actions")
    e.add_argument("--checkpoint")
    e.add_argument("--config")
    e.add_argument("--preset", choices=PRESET_NAMES)
    e.add_argument("--policy", choices=("checkpoint", "init", "zero"), default="checkpoint")
    e.add_argument("--scenario", default="training-random",
                   help=f"one of {', '.join(SCENARIO_SETS)} or preset:NAME")
    e.add_argument("--episodes", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.add_argument("--terrain", help="terrain grid for replay presets")
    e.add_argument("--ais", help="AIS log for replay presets")
    e.add_argument("--log-trajectories", action="store_true", help="write one trajectory log per episode")
    e.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="write SVG plots for a trajectory log or report")
    pl.add_argument("input")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)

    s = sub.add_parser("scenario", help="generate, validate or describe scenario files")
    s.add_argument("action", choices=("generate", "validate", "describe"))
    s.add_argument("file", nargs="?")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--config")
    s.add_argument("--preset", choices=PRESET_NAMES)
    s.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_FAULT
    except Exception as exc:  # runtime fault
        print(f"fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
