"""Static SVG plots written directly as text.

Scene plots are drawn top-down with north up: the desired path dashed black,
the own trajectory dashed blue and target vessels in red. Output depends only
on the input, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

__all__ = ["read_trajectory_log", "scene_svg", "timeseries_svg", "report_svg"]


def _f(x: float) -> str:
    return f"{x:.3f}"


def read_trajectory_log(path):
    """Return (scenario dict or None, list of step records)."""
    scenario, records = None, []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {ln}: {exc.msg}") from None
            if "scenario" in obj and "step" not in obj:
                scenario = obj["scenario"]
            else:
                records.append(obj)
    return scenario, records


def _svg(width, height, view, body):
    x0, y0, w, h = view
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="{_f(x0)} {_f(y0)} {_f(w)} {_f(h)}">')
    return "\n".join([head, *body, "</svg>", ""])


def _points(ne) -> str:
    # SVG x = east, y = -north
    return " ".join(f"{_f(e)},{_f(-n)}" for n, e in ne)


def scene_svg(scenario: dict | None, records: list, size: int = 800) -> str:
    own = np.array([r["pose"][:2] for r in records], dtype=float).reshape(-1, 2)
    pts = [own]
    path_pts = np.zeros((0, 2))
    shapes = []
    targets = {}
    for r in records:
        for tid, n, e in r.get("targets", []):
            targets.setdefault(tid, []).append((n, e))
    if scenario is not None:
        from .env import Scenario
        scn = Scenario.from_dict(scenario)
        path_pts = scn.path.sample(400)
        pts.append(path_pts)
        for o in scn.static_obstacles:
            if o.is_circle:
                c = np.array(o.center)
                pts.append(np.array([c - o.radius, c + o.radius]))
                shapes.append(f'<circle class="obstacle" cx="{_f(c[1])}" cy="{_f(-c[0])}" r="{_f(o.radius)}" '
                              f'fill="#bbbbbb" stroke="#555555"/>')
            else:
                pts.append(o.vertices)
                shapes.append(f'<polygon class="obstacle" points="{_points(o.vertices)}" fill="#bbbbbb" stroke="#555555"/>')
    for tr in targets.values():
        pts.append(np.array(tr, dtype=float))
    allp = np.concatenate([p for p in pts if len(p)]) if any(len(p) for p in pts) else np.zeros((1, 2))
    nmin, emin = allp.min(axis=0)
    nmax, emax = allp.max(axis=0)
    span = max(nmax - nmin, emax - emin, 1.0)
    pad = 0.05 * span
    view = (emin - pad, -nmax - pad, (emax - emin) + 2 * pad, (nmax - nmin) + 2 * pad)
    lw = span / 400.0
    body = [f'<rect class="background" x="{_f(view[0])}" y="{_f(view[1])}" width="{_f(view[2])}" '
            f'height="{_f(view[3])}" fill="white"/>']
    body += shapes
    if len(path_pts):
        body.append(f'<polyline class="path" points="{_points(path_pts)}" fill="none" stroke="black" '
                    f'stroke-width="{_f(lw)}" stroke-dasharray="{_f(6 * lw)},{_f(4 * lw)}"/>')
    for tid in sorted(targets):
        body.append(f'<polyline class="target" data-id="{tid}" points="{_points(targets[tid])}" fill="none" '
                    f'stroke="red" stroke-width="{_f(lw)}" stroke-dasharray="{_f(2 * lw)},{_f(2 * lw)}"/>')
        n, e = targets[tid][-1]
        body.append(f'<circle class="target-marker" cx="{_f(e)}" cy="{_f(-n)}" r="{_f(3 * lw)}" fill="red"/>')
    if len(own):
        body.append(f'<polyline class="own-trajectory" points="{_points(own)}" fill="none" stroke="blue" '
                    f'stroke-width="{_f(lw)}" stroke-dasharray="{_f(6 * lw)},{_f(3 * lw)}"/>')
        n, e = own[-1]
        body.append(f'<circle class="own-marker" cx="{_f(e)}" cy="{_f(-n)}" r="{_f(3 * lw)}" fill="blue"/>')
    else:
        body.append(f'<text x="{_f(view[0] + pad)}" y="{_f(view[1] + 2 * pad)}" font-size="{_f(pad)}">empty log</text>')
    h = int(round(size * view[3] / view[2])) if view[2] > 0 else size
    return _svg(size, max(h, 1), view, body)


def _panel(y0, h, w, t, y, label, color):
    body = [f'<text x="5" y="{_f(y0 + 14)}" font-size="12">{label}</text>',
            f'<rect x="50" y="{_f(y0)}" width="{_f(w - 60)}" height="{_f(h)}" fill="none" stroke="#888888"/>']
    if len(t) == 0:
        return body
    t0, t1 = float(t.min()), float(t.max())
    lo, hi = float(np.min(y)), float(np.max(y))
    if t1 == t0:
        t1 = t0 + 1.0
    if hi == lo:
        hi = lo + 1.0
    xs = 50 + (t - t0) / (t1 - t0) * (w - 60)
    ys = y0 + h - (y - lo) / (hi - lo) * h
    body.append(f'<polyline class="series" points="{" ".join(f"{_f(a)},{_f(b)}" for a, b in zip(xs, ys))}" '
                f'fill="none" stroke="{color}" stroke-width="1"/>')
    body.append(f'<text x="5" y="{_f(y0 + h)}" font-size="10">{lo:.3g}</text>')
    body.append(f'<text x="5" y="{_f(y0 + 28)}" font-size="10">{hi:.3g}</text>')
    return body


def timeseries_svg(records: list, width: int = 800, height: int = 400) -> str:
    t = np.array([r["t"] for r in records], dtype=float)
    rew = np.array([r["reward"] for r in records], dtype=float)
    cte = np.array([r["cte"] for r in records], dtype=float)
    h = (height - 30) / 2
    body = _panel(10, h, width, t, rew, "reward", "black") + _panel(20 + h, h, width, t, cte, "cross-track", "blue")
    return _svg(width, height, (0, 0, width, height), body)


def report_svg(report: dict, width: int = 800, height: int = 300) -> str:
    """Outcome counts and per-episode mean cross-track error of an evaluation report."""
    agg = report.get("aggregates", {})
    keys = ["n_goal", "n_collision", "n_timeout", "n_left_world"]
    counts = [agg.get(k, 0) or 0 for k in keys]
    top = max(max(counts), 1)
    body = []
    bw = (width / 2 - 40) / len(keys)
    colors = ["#2a9d2a", "#d62728", "#999999", "#ff9900"]
    for i, (k, c) in enumerate(zip(keys, counts)):
        bh = (height - 60) * c / top
        x = 20 + i * bw
        body.append(f'<rect class="bar" data-key="{k}" x="{_f(x)}" y="{_f(height - 30 - bh)}" width="{_f(bw * 0.8)}" '
                    f'height="{_f(bh)}" fill="{colors[i]}"/>')
        body.append(f'<text x="{_f(x)}" y="{height - 12}" font-size="10">{k[2:]} ({c})</text>')
    cte = np.array([e["mean_cte"] for e in report.get("episodes", [])], dtype=float)
    body += _panel(20, height - 60, width, np.arange(len(cte), dtype=float), cte, "", "blue") if len(cte) else []
    # shift the cte panel into the right half
    body = body[: 2 * len(keys)] + [f'<g transform="translate({_f(width / 2 - 40)},0) scale(0.5,1)">'] + \
        body[2 * len(keys):] + ["</g>"]
    return _svg(width, height, (0, 0, width, height), body)


def write_plots(input_path, out_dir) -> list[Path]:
    """Plot a trajectory log (``*.jsonl``) or an evaluation report (``*.json``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    src = Path(input_path)
    stem = src.stem
    written = []
    text = src.read_text()
    is_report = False
    if src.suffix == ".json":
        try:
            obj = json.loads(text)
            is_report = isinstance(obj, dict) and "episodes" in obj
        except json.JSONDecodeError:
            pass
    if is_report:
        p = out / f"{stem}_summary.svg"
        p.write_text(report_svg(obj))
        return [p]
    scenario, records = read_trajectory_log(src)
    p = out / f"{stem}_scene.svg"
    p.write_text(scene_svg(scenario, records))
    written.append(p)
    p = out / f"{stem}_series.svg"
    p.write_text(timeseries_svg(records))
    written.append(p)
    return written


__all__.append("write_plots")
