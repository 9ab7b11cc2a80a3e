import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from shipcolav.cli import main
from shipcolav.config import RunConfig
from shipcolav.dynamics import ConfigError
from shipcolav.env import VesselEnv, head_on_scenario, EnvConfig
from shipcolav.plotting import scene_svg

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["train", "--preset", "smoke", "--iterations", "2", "--out", str(out)]) == 0
    return out


# -- train ---------------------------------------------------------------------

def test_train_two_iterations(trained):
    lines = (trained / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert [json.loads(x)["iteration"] for x in lines] == [1, 2]
    assert (trained / "checkpoint.npz").exists() and (trained / "config.json").exists()
    # the dumped config reloads to the same effective settings
    assert RunConfig.load(trained / "config.json").effective()["ppo"]["horizon"] == 256


def test_resume_reproduces_uninterrupted(tmp_path):
    full, part = tmp_path / "full", tmp_path / "part"
    assert main(["train", "--preset", "smoke", "--iterations", "3", "--out", str(full)]) == 0
    assert main(["train", "--preset", "smoke", "--iterations", "2", "--out", str(part)]) == 0
    assert main(["train", "--preset", "smoke", "--iterations", "3", "--out", str(part), "--resume"]) == 0
    assert (full / "metrics.jsonl").read_bytes() == (part / "metrics.jsonl").read_bytes()
    a, b = np.load(full / "checkpoint.npz"), np.load(part / "checkpoint.npz")
    for k in a.files:
        assert np.array_equal(a[k], b[k])


def test_resume_without_snapshot(tmp_path, capsys):
    assert main(["train", "--preset", "smoke", "--out", str(tmp_path), "--resume"]) == 1
    assert "resume.pkl" in capsys.readouterr().err


def test_missing_config_no_outputs(tmp_path, capsys):
    out = tmp_path / "never"
    code = main(["train", "--config", str(tmp_path / "nope.json"), "--out", str(out)])
    assert code == 1
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_invalid_field_named(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"preset": "smoke", "sensor": {"gamma_c": 0.13}}))
    assert main(["train", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "sensor" in capsys.readouterr().err
    p.write_text(json.dumps({"reward": {"bogus": 1}}))
    assert main(["train", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "reward.bogus" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_usage_error_exit_code(capsys):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    assert main(["eval", "--episodes", "many"]) == 1


# -- config ------------------------------------------------------------------------

def test_config_round_trip(tmp_path):
    for preset in ("full", "smoke", "smoke-obstacles"):
        cfg = RunConfig.from_dict({"preset": preset, "seed": 3, "reward": {"gamma_e": 0.4}})
        cfg.dump(tmp_path / "c.json")
        again = RunConfig.load(tmp_path / "c.json")
        assert again.effective() == cfg.effective()
        assert again.hash() == cfg.hash()


def test_config_defaults_mirror_tables():
    eff = RunConfig().effective()
    assert eff["ppo"]["gamma"] == 0.999 and eff["ppo"]["learning_rate"] == 2e-4
    assert eff["ppo"]["horizon"] == 1024 and eff["ppo"]["n_epochs"] == 10
    assert eff["reward"]["gamma_x_stb"] == 0.007
    assert eff["sensor"]["n_sensors"] == 180


def test_config_hash_ignores_seed_and_paths():
    a = RunConfig.from_dict({"seed": 1, "out_dir": "x"})
    b = RunConfig.from_dict({"seed": 2, "out_dir": "y", "iterations": 5})
    c = RunConfig.from_dict({"reward": {"r_exists": -2}})
    assert a.hash() == b.hash() != c.hash()


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown config key"):
        RunConfig.from_dict({"lr": 1})
    with pytest.raises(ConfigError, match="preset"):
        RunConfig.from_dict({"preset": "huge"})
    with pytest.raises(ConfigError, match="seed"):
        RunConfig.from_dict({"seed": -1})
    with pytest.raises(ConfigError, match="env.warp"):
        RunConfig.from_dict({"env": {"warp": 9}}).env_config()


# -- eval -------------------------------------------------------------------------

def test_head_on_zero_policy_collides(tmp_path, capsys):
    out = tmp_path / "ev"
    assert main(["eval", "--policy", "zero", "--preset", "smoke", "--scenario", "head-on",
                 "--episodes", "1", "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["episodes"][0]["outcome"] == "collision"
    assert rep["aggregates"]["n_collision"] == 1


def test_eval_aggregates_are_sums(tmp_path, trained):
    out = tmp_path / "ev"
    assert main(["eval", "--checkpoint", str(trained / "checkpoint.npz"), "--scenario", "training-random",
                 "--episodes", "4", "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    eps, agg = rep["episodes"], rep["aggregates"]
    assert agg["episodes"] == len(eps) == 4
    for cause in ("goal", "collision", "timeout", "left-world"):
        assert agg[f"n_{cause.replace('-', '_')}"] == sum(e["outcome"] == cause for e in eps)
    assert sum(agg[k] for k in ("n_goal", "n_collision", "n_timeout", "n_left_world")) == 4
    assert agg["mean_cte"] == pytest.approx(np.mean([e["mean_cte"] for e in eps]))
    assert agg["max_cte"] == max(e["max_cte"] for e in eps)


def test_eval_deterministic(tmp_path, trained):
    args = ["eval", "--checkpoint", str(trained / "checkpoint.npz"), "--scenario", "head-on", "--episodes", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_eval_hash_mismatch(tmp_path, trained, capsys):
    p = tmp_path / "other.json"
    p.write_text(json.dumps({"preset": "smoke", "reward": {"gamma_x_stb": 0.006}}))
    code = main(["eval", "--checkpoint", str(trained / "checkpoint.npz"), "--config", str(p), "--episodes", "1"])
    assert code == 1
    err = capsys.readouterr().err
    expected = RunConfig.load(p).hash()
    ckpt_hash = RunConfig.load(trained / "config.json").hash()
    assert expected in err and ckpt_hash in err


def test_eval_matching_config_accepted(trained):
    assert main(["eval", "--checkpoint", str(trained / "checkpoint.npz"), "--config",
                 str(trained / "config.json"), "--episodes", "1", "--scenario", "crossing-port"]) == 0


def test_eval_needs_checkpoint(capsys):
    assert main(["eval", "--scenario", "head-on"]) == 1
    assert main(["eval", "--policy", "zero", "--scenario", "nowhere"]) == 1


def test_eval_encounter_labels(tmp_path):
    out = tmp_path / "ev"
    assert main(["eval", "--policy", "zero", "--preset", "smoke", "--scenario", "crossing-starboard",
                 "--episodes", "1", "--out", str(out)]) == 0
    enc = json.loads((out / "report.json").read_text())["episodes"][0]["encounters"]
    assert enc and enc[0]["type"] == "crossing-from-starboard"


# -- plot --------------------------------------------------------------------------

@pytest.fixture
def traj_log(tmp_path):
    out = tmp_path / "ev"
    assert main(["eval", "--policy", "init", "--preset", "smoke", "--scenario", "crossing-starboard",
                 "--episodes", "1", "--out", str(out), "--log-trajectories"]) == 0
    return out / "trajectory_000.jsonl"


def test_plot_deterministic(tmp_path, traj_log):
    assert main(["plot", str(traj_log), "--out", str(tmp_path / "p1")]) == 0
    assert main(["plot", str(traj_log), "--out", str(tmp_path / "p2")]) == 0
    files = sorted(p.name for p in (tmp_path / "p1").iterdir())
    assert files == ["trajectory_000_scene.svg", "trajectory_000_series.svg"]
    for f in files:
        assert (tmp_path / "p1" / f).read_bytes() == (tmp_path / "p2" / f).read_bytes()


def _pairs(points):
    return np.array([[float(v) for v in p.split(",")] for p in points.split()])


def test_plot_bounding_box(tmp_path, traj_log):
    main(["plot", str(traj_log), "--out", str(tmp_path)])
    root = ET.parse(tmp_path / "trajectory_000_scene.svg").getroot()
    x0, y0, w, h = map(float, root.get("viewBox").split())
    pts = []
    for el in root.iter(f"{SVG}polyline"):
        pts.append(_pairs(el.get("points")))
    pts = np.concatenate(pts)
    assert np.all(pts[:, 0] >= x0) and np.all(pts[:, 0] <= x0 + w)
    assert np.all(pts[:, 1] >= y0) and np.all(pts[:, 1] <= y0 + h)
    classes = [el.get("class") for el in root.iter(f"{SVG}polyline")]
    assert "own-trajectory" in classes and "path" in classes and "target" in classes
    own = [el for el in root.iter(f"{SVG}polyline") if el.get("class") == "own-trajectory"][0]
    assert own.get("stroke") == "blue" and own.get("stroke-dasharray")


def test_one_step_log_single_marker(tmp_path):
    env = VesselEnv(head_on_scenario(), EnvConfig(dt=0.5, delta_la=30), log=True)
    env.reset()
    env.step([0.5, 0.0])
    p = tmp_path / "one.jsonl"
    env.write_log(p)
    assert main(["plot", str(p), "--out", str(tmp_path)]) == 0
    root = ET.parse(tmp_path / "one_scene.svg").getroot()
    markers = [el for el in root.iter(f"{SVG}circle") if el.get("class") == "own-marker"]
    assert len(markers) == 1


def test_empty_log_warns(tmp_path, caplog):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert main(["plot", str(p), "--out", str(tmp_path)]) == 0
    assert "empty trajectory log" in caplog.text
    assert "empty log" in (tmp_path / "empty_scene.svg").read_text()
    assert "<svg" in scene_svg(None, [])


def test_plot_report(tmp_path):
    out = tmp_path / "ev"
    main(["eval", "--policy", "zero", "--preset", "smoke", "--scenario", "head-on", "--episodes", "1",
          "--out", str(out)])
    assert main(["plot", str(out / "report.json"), "--out", str(tmp_path)]) == 0
    root = ET.parse(tmp_path / "report_summary.svg").getroot()
    bars = {el.get("data-key"): el for el in root.iter(f"{SVG}rect") if el.get("class") == "bar"}
    assert float(bars["n_collision"].get("height")) > 0 and float(bars["n_goal"].get("height")) == 0


def test_plot_missing_input(tmp_path):
    assert main(["plot", str(tmp_path / "nope.jsonl")]) == 1


# -- scenario ----------------------------------------------------------------------

def test_generate_then_validate(tmp_path, capsys):
    f = tmp_path / "s.json"
    assert main(["scenario", "generate", "--seed", "5", "--out", str(f)]) == 0
    assert main(["scenario", "validate", str(f)]) == 0
    assert "OK" in capsys.readouterr().out


def test_corrupted_spawn_named(tmp_path, capsys):
    f = tmp_path / "s.json"
    main(["scenario", "generate", "--seed", "5", "--out", str(f)])
    d = json.loads(f.read_text())
    sp = d["spawn"]
    d["static_obstacles"].append({"id": "reef-42", "type": "circle", "center": [sp["x_n"], sp["y_n"]],
                                  "radius": 10.0})
    f.write_text(json.dumps(d))
    capsys.readouterr()
    assert main(["scenario", "validate", str(f)]) == 1
    out = capsys.readouterr().out
    assert "reef-42" in out and "INVALID static_obstacles[" in out


def test_describe_counts(tmp_path, capsys):
    f = tmp_path / "s.json"
    main(["scenario", "generate", "--seed", "9", "--out", str(f)])
    d = json.loads(f.read_text())
    capsys.readouterr()
    assert main(["scenario", "describe", str(f)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["static_obstacles"] == len(d["static_obstacles"])
    assert info["targets"] == len(d["targets"])
    assert info["waypoints"] == len(d["waypoints"])


def test_scenario_bad_file(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert main(["scenario", "validate", str(f)]) == 1
    assert main(["scenario", "describe"]) == 1
    assert main(["scenario", "generate"]) == 1


def test_generate_deterministic(tmp_path):
    main(["scenario", "generate", "--seed", "3", "--out", str(tmp_path / "a.json")])
    main(["scenario", "generate", "--seed", "3", "--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
