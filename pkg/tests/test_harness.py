import json
import math
import os

import pytest
import yaml

from guideplan.cli import main
from guideplan.config import ConfigError, PARAM_REGISTRY, RunConfig, Settings
from guideplan.scenes import builtin_scene, resolve_scene
from guideplan.world import scene_document

REFERENCE_PLANNING = {"c": 1.0, "theta_s": math.pi / 3, "delta_theta": math.pi / 10,
                  "l_target": 2, "l_real": 2, "C_0": 10.0, "w_d": 1.0, "k_d": 100.0,
                  "w_t": 1.0, "w_aff": 1.0}
REFERENCE_PREDICTION = {"d_social": 2.0, "theta_m": math.pi / 3, "lambda": 1.0, "l": 2,
                    "beta_g": 0.5, "beta_a": 0.5, "w": 1.0, "gamma": 0.9}


def test_reference_parameter_names_all_addressable():
    for name in list(REFERENCE_PLANNING) + list(REFERENCE_PREDICTION) + ["xi_lead", "xi_point"]:
        assert name in PARAM_REGISTRY


def test_defaults_match_reference_values():
    s = Settings.from_params()
    assert s.cost.c == 1.0
    assert s.cost.theta_s == pytest.approx(math.pi / 3)
    assert s.cost.delta_theta == pytest.approx(math.pi / 10)
    assert s.cost.l_target == 2
    assert s.l_real == 2
    assert s.cost.C_0_aff == 10.0
    assert (s.cost.w_d, s.cost.k_d, s.cost.w_t, s.cost.w_aff) == (1.0, 100.0, 1.0, 1.0)
    assert s.social.d_social == 2.0
    assert s.pred.theta_m == pytest.approx(math.pi / 3)
    assert s.social.lam == 1.0
    assert s.pred.history_l == 2
    assert s.pred.beta_g == 0.5
    assert s.pred.beta_a == 0.5
    assert s.mdp_params.w == 1.0
    assert s.mdp_params.gamma == 0.9
    assert s.mdp_params.occupation_cost == 10.0
    assert s.behaviors[0].legibility_gain == 2.0
    assert s.behaviors[1].legibility_gain == 4.0


def test_settings_rejects_unknown_parameter():
    with pytest.raises(ConfigError, match="frobnication"):
        Settings.from_params({"frobnication": 3})


def test_settings_applies_overrides():
    s = Settings.from_params({"gamma": 0.8, "xi_point": 6.0, "budget": 50, "lambda": 0.5})
    assert s.mdp_params.gamma == 0.8
    assert s.behaviors[1].legibility_gain == 6.0
    assert s.cost.trial_budget == 50
    assert s.social.lam == 0.5


def test_run_config_round_trip():
    cfg = RunConfig(scenes=["A", "B"], methods=["full"], trials=3, seed=11,
                    out_dir="out", params={"gamma": 0.85, "budget": 32})
    again = RunConfig.from_yaml(cfg.to_yaml())
    assert again.to_dict() == cfg.to_dict()
    third = RunConfig.from_yaml(again.to_yaml())
    assert third.to_dict() == again.to_dict()


def test_run_config_validation():
    with pytest.raises(ConfigError, match="unknown parameter"):
        RunConfig(scenes=["A"], params={"zeta": 1})
    with pytest.raises(ConfigError, match="unknown method"):
        RunConfig(scenes=["A"], methods=["apf"])
    with pytest.raises(ConfigError, match="trials"):
        RunConfig(scenes=["A"], trials=0)
    with pytest.raises(ConfigError, match="unknown config field"):
        RunConfig.from_dict({"scenes": ["A"], "bogus": 1})


def test_resolve_scene_builtin_and_file(tmp_path):
    assert resolve_scene("A").name == "A"
    path = tmp_path / "custom.yaml"
    path.write_text(scene_document(builtin_scene("B")))
    scene = resolve_scene(str(path))
    assert scene.goals == builtin_scene("B").goals


# ------------------------------------------------------------------------ CLI


def _tiny_scene_file(tmp_path):
    doc = {
        "schema": 1,
        "name": "tiny",
        "map": {"width": 5, "height": 3, "resolution": 0.5,
                "occupied": [[x, y] for x in range(5) for y in (0, 2)]},
        "goals": [[4, 1]],
        "guide_goal": 0,
        "affordance": [],
        "human_start": [0.75, 0.75],
        "robot_start": [1.25, 0.75],
        "time_limit_s": 30.0,
    }
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_cli_solve_corridor(tmp_path, capsys):
    doc = {
        "schema": 1,
        "map": {"width": 3, "height": 1, "resolution": 0.5, "occupied": []},
        "goals": [[2, 0]],
        "guide_goal": 0,
        "affordance": [],
        "human_start": [0.25, 0.25],
        "robot_start": [0.75, 0.25],
    }
    path = tmp_path / "corr.yaml"
    path.write_text(yaml.safe_dump(doc))
    code = main(["solve", "--scene", str(path), "--goal", "0",
                 "--param", "alpha=0", "--param", "gamma=0.9"])
    assert code == 0
    assert capsys.readouterr().out == "-1.9 -1 0\n"


def test_cli_solve_rejects_bad_goal(tmp_path, capsys):
    path = _tiny_scene_file(tmp_path)
    assert main(["solve", "--scene", path, "--goal", "5"]) == 2
    assert "out of range" in capsys.readouterr().err


def test_cli_run_writes_outputs_and_is_deterministic(tmp_path, capsys):
    scene = _tiny_scene_file(tmp_path)
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    args = ["run", "--scene", scene, "--method", "full", "--trials", "2",
            "--seed", "4", "--param", "budget=16"]
    assert main(args + ["--out", out1]) == 0
    assert main(args + ["--out", out2]) == 0
    for name in ("results.txt", "summary.json", "config.yaml"):
        with open(os.path.join(out1, name), "rb") as a, open(os.path.join(out2, name), "rb") as b:
            assert a.read() == b.read()
    logs1 = sorted(os.listdir(os.path.join(out1, "logs")))
    assert logs1 == sorted(os.listdir(os.path.join(out2, "logs")))
    assert len(logs1) == 2
    for name in logs1:
        with open(os.path.join(out1, "logs", name), "rb") as a, \
             open(os.path.join(out2, "logs", name), "rb") as b:
            assert a.read() == b.read()
    summary = json.loads(open(os.path.join(out1, "summary.json")).read())
    assert summary["scenes"]["tiny"]["full"]["trials"] == 2


def test_cli_run_rejects_unknown_parameter(tmp_path, capsys):
    scene = _tiny_scene_file(tmp_path)
    code = main(["run", "--scene", scene, "--param", "nonsense=1", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "nonsense" in capsys.readouterr().err


def test_cli_run_with_config_file(tmp_path, capsys):
    scene = _tiny_scene_file(tmp_path)
    cfg = RunConfig(scenes=[scene], methods=["lead_only"], trials=1, seed=0,
                    out_dir=str(tmp_path / "out"), params={"budget": 8})
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(cfg.to_yaml())
    assert main(["run", "--config", str(cfg_path)]) == 0
    assert os.path.exists(tmp_path / "out" / "summary.json")


def test_cli_metrics_recompute(tmp_path, capsys):
    scene = _tiny_scene_file(tmp_path)
    out = str(tmp_path / "m")
    main(["run", "--scene", scene, "--method", "full", "--trials", "1",
          "--param", "budget=16", "--out", out])
    capsys.readouterr()
    log_file = os.path.join(out, "logs", sorted(os.listdir(os.path.join(out, "logs")))[0])
    assert main(["metrics", "--log", log_file, "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"success", "ambiguity_ratio", "discomfort_ratio_p", "discomfort_ratio_i"}


def test_cli_bad_scene_path_fails_cleanly(capsys):
    assert main(["solve", "--scene", "/nonexistent/scene.yaml"]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_solve_occupied_cell_dump(tmp_path, capsys):
    """Occupied cells are enterable at a cost: their dumped value sits below the
    goal-side free neighbor's value."""
    doc = {
        "schema": 1,
        "map": {"width": 4, "height": 1, "resolution": 0.5, "occupied": [[1, 0]]},
        "goals": [[3, 0]],
        "guide_goal": 0,
        "affordance": [],
        "human_start": [0.25, 0.25],
        "robot_start": [1.25, 0.25],
    }
    import yaml as _yaml
    path = tmp_path / "occ.yaml"
    path.write_text(_yaml.safe_dump(doc))
    assert main(["solve", "--scene", str(path)]) == 0
    values = [float(v) for v in capsys.readouterr().out.split()]
    assert len(values) == 4
    assert values[1] < values[2] < values[3] == 0.0
