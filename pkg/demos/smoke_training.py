"""Train a small policy on the straight-path smoke task and evaluate it.

Runs a handful of PPO iterations through the command line entry point,
reads the per-iteration metrics, then evaluates the checkpoint on a head-on
encounter and writes SVG plots of the trajectory. Pass a larger iteration
count as the first argument for a run that actually learns (200 is enough).
"""
import json
import sys
import tempfile
from pathlib import Path

from shipcolav.cli import main

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 10
work = Path(tempfile.mkdtemp(prefix="shipcolav-demo-"))
run = work / "run"

main(["train", "--preset", "smoke", "--seed", "0", "--iterations", str(iterations), "--out", str(run)])

rows = [json.loads(line) for line in (run / "metrics.jsonl").read_text().splitlines()]
print("\niter  mean|cte|  step reward  entropy")
for r in rows:
    print(f"{r['iteration']:>4}  {r['mean_abs_cte']:>9.2f}  {r['mean_step_reward']:>11.3f}  {r['entropy']:>7.3f}")

ev = work / "eval"
main(["eval", "--checkpoint", str(run / "checkpoint.npz"), "--scenario", "head-on",
      "--episodes", "1", "--out", str(ev), "--log-trajectories"])
main(["plot", str(ev / "trajectory_000.jsonl")])
print(f"\nall outputs under {work}")
