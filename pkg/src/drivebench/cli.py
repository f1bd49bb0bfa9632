"""Command-line surface: generate, plan, evaluate, cluster.

All bulk data is JSON Lines; reports are single JSON documents carrying
their own parameterization. Every command is deterministic given the same
inputs and seeds. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .anchors import cluster_anchor_boxes, cluster_polylines, kmeans, save_anchors
from .config import RunConfig
from .instances import MapPolyline
from .metrics import (collision_rate_grid, collision_rate_obb,
                      motion_metrics, planning_l2)
from .pipeline import (motion_samples, planning_samples, run_scenario,
                       tracking_eval_input)
from .sim import Scenario, generate_scenario, scenario_from_jsonl, scenario_to_jsonl
from .tracking import tracking_metrics

ENV_OUT_DIR = "DRIVEBENCH_OUT"


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def scenario_seed(master_seed: int, index: int) -> int:
    """Per-scenario seed derived with a splittable counter scheme, so any
    subset of scenarios can be regenerated independently."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1)[0])


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.from_json(args.config)
    else:
        cfg = RunConfig()
    overrides = {}
    for name in ("seed", "n_scenarios"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    if getattr(args, "no_rescore", False):
        cfg = dataclasses.replace(
            cfg, planner=dataclasses.replace(cfg.planner, rescore=False))
    if getattr(args, "sigma_pos", None) is not None:
        cfg = dataclasses.replace(
            cfg, noise=dataclasses.replace(cfg.noise, sigma_pos=args.sigma_pos))
    if getattr(args, "grid_resolution", None) is not None:
        cfg = dataclasses.replace(
            cfg, metrics=dataclasses.replace(cfg.metrics,
                                             grid_resolution=args.grid_resolution))
    cfg.validate()
    return cfg


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(ENV_OUT_DIR) or "drivebench_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    scen_dir = out / "scenarios"
    scen_dir.mkdir(exist_ok=True)
    entries = []
    for i in range(cfg.n_scenarios):
        seed = scenario_seed(cfg.seed, i)
        scenario = generate_scenario(seed, cfg.sim)
        path = scen_dir / f"scenario_{i:04d}.jsonl"
        scenario_to_jsonl(scenario, path)
        entries.append({"file": path.name, "index": i, "seed": seed,
                        "sha256": _sha256(path)})
    manifest = {
        "version": __version__,
        "master_seed": cfg.seed,
        "n_scenarios": cfg.n_scenarios,
        "seed_scheme": "numpy SeedSequence([master_seed, index])",
        "config": cfg.to_dict(),
        "scenarios": entries,
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    print(f"wrote {len(entries)} scenario(s) to {scen_dir}")
    for e in entries:
        print(f"  {e['file']}  seed={e['seed']}  sha256={e['sha256'][:16]}")
    return 0


def _scenario_files(args, out: Path) -> list[Path]:
    if args.scenarios:
        files = [Path(p) for p in args.scenarios]
    else:
        files = sorted((out / "scenarios").glob("scenario_*.jsonl"))
    if not files:
        raise DataError("no scenario files found")
    for f in files:
        if not f.exists():
            raise DataError(f"missing scenario file: {f}")
    return files


def _read_scenario(path: Path) -> Scenario:
    try:
        return scenario_from_jsonl(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def cmd_plan(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    plan_dir = out / "plans"
    plan_dir.mkdir(exist_ok=True)
    noise = dataclasses.asdict(cfg.noise)
    for path in _scenario_files(args, out):
        scenario = _read_scenario(path)
        logs = run_scenario(scenario, noise, cfg.planner,
                            perturb_seed=cfg.seed)
        plan_path = plan_dir / path.name.replace("scenario_", "plan_")
        with open(plan_path, "w") as f:
            header = {
                "type": "plan",
                "scenario": path.name,
                "seed": scenario.seed,
                "rescore": cfg.planner.rescore,
                "planner": dataclasses.asdict(cfg.planner),
            }
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for log in logs:
                f.write(json.dumps({
                    "frame": log.frame,
                    "tracks": log.tracks,
                    "forecasts": log.forecasts,
                    "plan": log.plan,
                }, sort_keys=True) + "\n")
        print(f"planned {path.name} -> {plan_path.name}  "
              f"sha256={_sha256(plan_path)[:16]}  rescore="
              f"{'on' if cfg.planner.rescore else 'off'}")
    return 0


def _read_plan(path: Path):
    try:
        with open(path) as f:
            lines = []
            for lineno, raw in enumerate(f, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    lines.append(json.loads(raw))
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}: line {lineno}: invalid JSON") from exc
    except OSError as exc:
        raise DataError(f"cannot read plan file: {path}") from exc
    if not lines or lines[0].get("type") != "plan":
        raise DataError(f"not a plan file: {path}")
    return lines[0], lines[1:]


def _rebuild_logs(scenario: Scenario, records):
    from .pipeline import FrameLog
    logs = []
    if len(records) != len(scenario.frames):
        raise DataError("plan/scenario frame count mismatch")
    for rec in records:
        log = FrameLog(frame=rec["frame"])
        log.tracks = [tuple(t) for t in rec["tracks"]]
        log.forecasts = rec["forecasts"]
        log.plan = rec["plan"]
        logs.append(log)
    return logs


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    scen_files = _scenario_files(args, out)
    plan_dir = out / "plans"
    pairs = []
    rescore_used = None
    for path in scen_files:
        plan_path = plan_dir / path.name.replace("scenario_", "plan_")
        if not plan_path.exists():
            raise DataError(f"no plan for scenario: {path.name}")
        scenario = _read_scenario(path)
        header, records = _read_plan(plan_path)
        if rescore_used is None:
            rescore_used = header.get("rescore", True)
        elif rescore_used != header.get("rescore", True):
            raise DataError("mixed rescore settings across plan files")
        logs = _rebuild_logs(scenario, records)
        pairs.append((scenario, logs))

    plan_samples = []
    all_motion = []
    total_fp = 0
    for scenario, logs in pairs:
        plan_samples.extend(planning_samples(scenario, logs, cfg.planner))
        ms, fp = motion_samples(scenario, logs, cfg.planner,
                                cfg.metrics.match_dist)
        all_motion.extend(ms)
        total_fp += fp
    if not plan_samples:
        raise DataError("no planning frames to evaluate")

    l2 = planning_l2(plan_samples, dt=pairs[0][0].dt,
                     cumulative=cfg.metrics.l2_cumulative)
    obb = collision_rate_obb(plan_samples, dt=pairs[0][0].dt)
    grid = collision_rate_grid(plan_samples, cfg.metrics.grid_resolution,
                               dt=pairs[0][0].dt)
    motion = motion_metrics(all_motion, total_fp,
                            miss_threshold=cfg.metrics.miss_threshold,
                            epa_alpha=cfg.metrics.epa_alpha,
                            epa_threshold=cfg.metrics.epa_threshold)
    track_input = tracking_eval_input(pairs)
    amota, amotp, recall, ids = tracking_metrics(track_input,
                                                 cfg.metrics.match_dist)

    report = {
        "planning": {
            "l2": l2,
            "collision_obb": obb,
            "collision_grid": grid,
        },
        "motion": motion,
        "tracking": {"amota": amota, "amotp": amotp,
                     "recall": recall, "ids": ids},
        "params": {
            "l2_mode": "cumulative" if cfg.metrics.l2_cumulative else "single_step",
            "grid_resolution": cfg.metrics.grid_resolution,
            "match_dist": cfg.metrics.match_dist,
            "miss_threshold": cfg.metrics.miss_threshold,
            "epa_alpha": cfg.metrics.epa_alpha,
            "epa_threshold": cfg.metrics.epa_threshold,
            "rescore": rescore_used,
            "n_scenarios": len(pairs),
            "n_planning_frames": len(plan_samples),
        },
    }
    report_path = out / (args.report or "report.json")
    with open(report_path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    print(_format_report(report))
    print(f"report written to {report_path}")
    return 0


def _format_report(report: dict) -> str:
    cols = ["1s", "2s", "3s", "avg"]
    lines = ["", "planning" + " " * 12 + "  ".join(f"{c:>8}" for c in cols)]
    for name, key in (("L2 (m)", "l2"), ("col. OBB", "collision_obb"),
                      ("col. grid", "collision_grid")):
        row = report["planning"][key]
        lines.append(f"{name:<20}" + "  ".join(f"{row[c]:8.4f}" for c in cols))
    m = report["motion"]
    lines.append("")
    lines.append(f"motion    minADE {m['minade']:.4f}  minFDE {m['minfde']:.4f}  "
                 f"MR {m['miss_rate']:.4f}  EPA {m['epa']:.4f}")
    t = report["tracking"]
    lines.append(f"tracking  AMOTA {t['amota']:.4f}  AMOTP {t['amotp']:.4f}  "
                 f"recall {t['recall']:.4f}  IDS {t['ids']}")
    return "\n".join(lines)


def cmd_cluster(args) -> int:
    try:
        with open(args.corpus) as f:
            corpus = json.load(f)
    except OSError as exc:
        raise DataError(f"cannot read corpus: {args.corpus}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.corpus}: invalid JSON: {exc}") from exc

    centers = corpus.get("centers", [])
    polylines = [MapPolyline(np.asarray(p)) for p in corpus.get("polylines", [])]
    try:
        boxes = cluster_anchor_boxes(centers, args.k, seed=args.seed or 0) \
            if centers else []
        lines = cluster_polylines(polylines, args.k_polylines, seed=args.seed or 0) \
            if polylines and args.k_polylines else []
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    out = Path(args.anchors_out)
    save_anchors(out, boxes, lines)
    if centers:
        objective = kmeans(np.asarray(centers), args.k, seed=args.seed or 0).objective
        print(f"clustered {len(centers)} centers into {args.k} anchors, "
              f"objective {objective:.6f}")
    print(f"anchors written to {out}  sha256={_sha256(out)[:16]}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="drivebench",
                     description="Generate, plan and evaluate synthetic "
                                 "driving scenarios.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (flags override it)")
    common.add_argument("--out", help=f"output directory (or ${ENV_OUT_DIR})")
    common.add_argument("--seed", type=int, help="master seed")

    g = sub.add_parser("generate", parents=[common],
                       help="write scenario JSONL files and a manifest")
    g.add_argument("--n-scenarios", dest="n_scenarios", type=int)
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("plan", parents=[common],
                       help="track, forecast and plan through scenarios")
    p.add_argument("scenarios", nargs="*", help="scenario files (default: all)")
    p.add_argument("--no-rescore", action="store_true",
                   help="disable collision-aware rescoring")
    p.add_argument("--sigma-pos", dest="sigma_pos", type=float)
    p.set_defaults(func=cmd_plan)

    e = sub.add_parser("evaluate", parents=[common],
                       help="score plans against scenario ground truth")
    e.add_argument("scenarios", nargs="*", help="scenario files (default: all)")
    e.add_argument("--report", help="report filename (default: report.json)")
    e.add_argument("--grid-resolution", dest="grid_resolution", type=float)
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("cluster", parents=[common],
                       help="K-Means anchors from a corpus JSON")
    c.add_argument("corpus", help='JSON with "centers" and/or "polylines"')
    c.add_argument("--k", type=int, required=True, help="number of anchor boxes")
    c.add_argument("--k-polylines", dest="k_polylines", type=int, default=0)
    c.add_argument("--anchors-out", default="anchors.json")
    c.set_defaults(func=cmd_cluster)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"drivebench: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
