"""Command line entry points: run experiments, solve value fields, serve the
interactive session service, and recompute metrics from stored logs."""

from __future__ import annotations

import argparse
import json
import os
import sys

import yaml

from . import mdp
from .config import ConfigError, RunConfig, Settings
from .scenes import builtin_scene_names, resolve_scene
from .sim import TrialLog, compute_metrics, experiment_summary, experiment_table, run_experiment
from .world import SceneError


def _parse_param(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise ConfigError(f"--param expects name=value, got {text!r}")
    name, raw = text.split("=", 1)
    try:
        value = int(raw)
    except ValueError:
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"--param {name}: {raw!r} is not a number") from None
    return name.strip(), value


def _build_run_config(args) -> RunConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = RunConfig.from_yaml(fh.read())
    else:
        cfg = RunConfig()
    if args.scene:
        cfg.scenes = list(args.scene)
    if args.method:
        cfg.methods = list(args.method)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    for p in args.param or []:
        name, value = _parse_param(p)
        cfg.params[name] = value
    return RunConfig.from_dict(cfg.to_dict())  # revalidate merged config


def cmd_run(args) -> int:
    cfg = _build_run_config(args)
    settings = cfg.build_settings()
    scenes = [resolve_scene(s) for s in cfg.scenes]
    result = run_experiment(
        scenes,
        methods=cfg.methods,
        trials=cfg.trials,
        seed_base=cfg.seed,
        cost=settings.cost,
        social=settings.social,
        pred=settings.pred,
        mdp_params=settings.mdp_params,
        behaviors=settings.behaviors,
        actions=settings.actions,
        decisiveness=settings.decisiveness,
    )
    table = experiment_table(result)
    os.makedirs(cfg.out_dir, exist_ok=True)
    log_dir = os.path.join(cfg.out_dir, "logs")
    os.makedirs(log_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "results.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    with open(os.path.join(cfg.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(experiment_summary(result), sort_keys=True, indent=2) + "\n")
    echo = cfg.to_dict()
    echo.pop("out_dir")  # destination is not part of the experiment identity
    with open(os.path.join(cfg.out_dir, "config.yaml"), "w", encoding="utf-8") as fh:
        fh.write(yaml.safe_dump(echo, sort_keys=True))
    for (scene, method, trial), log in result.logs.items():
        safe = "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in scene)
        path = os.path.join(log_dir, f"{safe}_{method}_{trial:04d}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(log.to_jsonl())
    sys.stdout.write(table)
    return 0


def cmd_solve(args) -> int:
    scene = resolve_scene(args.scene)
    settings = Settings.from_params(dict(_parse_param(p) for p in (args.param or [])))
    goal = args.goal if args.goal is not None else scene.guide_goal
    if not (0 <= goal < len(scene.goals)):
        raise ConfigError(f"--goal {goal} out of range for {len(scene.goals)} goals")
    field = mdp.solve(scene.goals[goal], scene.grid, settings.actions, settings.mdp_params)
    text = mdp.value_matrix_text(field)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_metrics(args) -> int:
    with open(args.log, "r", encoding="utf-8") as fh:
        log = TrialLog.from_jsonl(fh.read())
    metrics = compute_metrics(log, d_p=args.d_p, d_i=args.d_i)
    if args.json:
        sys.stdout.write(json.dumps(metrics.to_json(), sort_keys=True) + "\n")
    else:
        sys.stdout.write(
            f"outcome: {log.outcome}\n"
            f"success: {metrics.success}\n"
            f"ambiguity_ratio: {metrics.ambiguity_ratio:.4f}\n"
            f"discomfort_ratio_p: {metrics.discomfort_ratio_p:.4f}\n"
            f"discomfort_ratio_i: {metrics.discomfort_ratio_i:.4f}\n"
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .session import create_app

    settings = Settings.from_params(dict(_parse_param(p) for p in (args.param or [])))
    scene = resolve_scene(args.scene)
    app = create_app(scene, settings, step_hz=args.hz, budget_ms=args.budget_ms)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guideplan",
                                     description="Guide-robot behavior planning and simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch experiment and write results files")
    run.add_argument("--config", help="YAML run configuration")
    run.add_argument("--scene", action="append",
                     help=f"scene path or builtin name ({'/'.join(builtin_scene_names())}); repeatable")
    run.add_argument("--method", action="append", choices=["full", "lead_only"])
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory")
    run.add_argument("--param", action="append", help="named parameter override name=value")
    run.set_defaults(func=cmd_run)

    solve = sub.add_parser("solve", help="solve and dump a per-goal value field")
    solve.add_argument("--scene", required=True)
    solve.add_argument("--goal", type=int, help="goal index (default: guide goal)")
    solve.add_argument("--out")
    solve.add_argument("--param", action="append")
    solve.set_defaults(func=cmd_solve)

    metrics = sub.add_parser("metrics", help="recompute metrics from a stored trial log")
    metrics.add_argument("--log", required=True)
    metrics.add_argument("--d-p", type=float, default=1.2, dest="d_p")
    metrics.add_argument("--d-i", type=float, default=0.45, dest="d_i")
    metrics.add_argument("--json", action="store_true")
    metrics.set_defaults(func=cmd_metrics)

    serve = sub.add_parser("serve", help="serve the interactive session service")
    serve.add_argument("--scene", default="A")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--hz", type=float, default=2.0, help="step cadence (wall clock)")
    serve.add_argument("--budget-ms", type=float, default=300.0, dest="budget_ms")
    serve.add_argument("--param", action="append")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SceneError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
