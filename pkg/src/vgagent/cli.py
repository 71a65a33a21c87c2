"""Command line: world bundles, benchmark batches, semantic-field training and reports.

Exit codes: 0 success, 2 usage or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from .errors import Diverged, VGAgentError

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

log = logging.getLogger("vgagent")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


class InputError(Exception):
    """Bad user input: missing files, unreadable configs, malformed JSON."""


def _need_file(path, what):
    if not path or not os.path.isfile(path):
        raise InputError(f"{what} not found: {path}")
    return path


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------ prepare


def cmd_prepare(args) -> int:
    from .benchmark import LEVELS, build_demo_world, generate_scenarios, save_scenarios, validate_scenario
    from .world import WorldModel, load_landmarks, load_obj, save_bundle

    if args.demo:
        world = build_demo_world(seed=args.seed, resolution=args.resolution)
    else:
        if not args.mesh:
            raise InputError("either --demo or --mesh/--landmarks is required")
        _need_file(args.mesh, "mesh file")
        _need_file(args.landmarks, "landmarks file")
        try:
            mesh = load_obj(args.mesh)
            lms = load_landmarks(args.landmarks)
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(str(exc)) from exc
        world = WorldModel.from_mesh(mesh, lms, resolution=args.resolution, align=args.align, seed=args.seed)

    levels = [lv for lv in args.levels.split(",") if lv] if args.levels else []
    bad = [lv for lv in levels if lv not in LEVELS]
    if bad:
        raise InputError(f"unknown level(s): {', '.join(bad)}")

    save_bundle(world, args.out)
    g = world.grid
    print(f"grid {g.shape[0]} x {g.shape[1]} cells at {g.resolution} m, "
          f"{int(g.cells.sum())} occupied ({100 * g.cells.mean():.1f}%), {len(world.landmarks)} landmarks")
    for lv in levels:
        scs = generate_scenarios(world, lv, n_landmarks=min(args.n_landmarks, len(world.landmarks)),
                                 per_landmark=args.per_landmark, seed=args.scenario_seed)
        problems = [(sc.id, p) for sc in scs for p in validate_scenario(world, sc)]
        if problems:
            raise RuntimeError(f"invalid scenario {problems[0][0]}: {problems[0][1]}")
        save_scenarios(scs, os.path.join(args.out, f"scenarios_{lv}.json"))
        print(f"{lv}: {len(scs)} scenarios")
    return EXIT_OK


# ------------------------------------------------------------------ bench

BENCH_DEFAULTS = {
    "world": None,
    "levels": ["simnav"],
    "scenarios": [],
    "limit": 0,
    "planner": "oracle",
    "runs": 1,
    "seed": 0,
    "jobs": 1,
    "out": "runs",
    "episode": {"max_decisions": 60, "style": "walk", "detect_fail_rate": 0.0},
    "endpoint": {"url": None, "model": "mock", "timeout": 30.0, "max_retries": 2, "api_key_env": "VGAGENT_API_KEY"},
}


def load_run_config(path=None, overrides=None) -> dict:
    """Defaults, then the TOML file (paths relative to it), then non-None CLI overrides."""
    cfg = json.loads(json.dumps(BENCH_DEFAULTS))
    if path:
        _need_file(path, "config file")
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc
        unknown = set(data) - set(cfg)
        if unknown:
            raise InputError(f"{path}: unknown keys {sorted(unknown)}")
        base = os.path.dirname(os.path.abspath(path))
        for key in ("episode", "endpoint"):
            cfg[key].update(data.pop(key, {}))
        cfg.update(data)
        if cfg["world"]:
            cfg["world"] = os.path.join(base, cfg["world"])
        cfg["scenarios"] = [os.path.join(base, s) for s in cfg["scenarios"]]
        if "out" in data:
            cfg["out"] = os.path.join(base, cfg["out"])
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("max_decisions", "style", "detect_fail_rate"):
            cfg["episode"][key] = val
        elif key in ("endpoint", "model"):
            cfg["endpoint"]["url" if key == "endpoint" else key] = val
        else:
            cfg[key] = val
    if not cfg["world"]:
        raise InputError("no world bundle given (--world or world = ... in the config)")
    if not os.path.isdir(cfg["world"]):
        raise InputError(f"world bundle not found: {cfg['world']}")
    if cfg["planner"] == "vlm" and not cfg["endpoint"]["url"]:
        raise InputError("the vlm planner needs --endpoint (a URL or 'mock')")
    return cfg


def config_stamp(cfg) -> str:
    """Short hash of everything that affects results (the output location excluded)."""
    key = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:10]


def _scenario_files(cfg):
    if cfg["scenarios"]:
        files = cfg["scenarios"]
    else:
        files = [os.path.join(cfg["world"], f"scenarios_{lv}.json") for lv in cfg["levels"]]
    for f in files:
        _need_file(f, "scenario file")
    return files


def cmd_bench(args) -> int:
    from .benchmark import (
        BatchConfig, EpisodeConfig, compute_metrics, format_table, load_scenarios, run_batch, write_jsonl,
        write_summary_csv,
    )
    from .world import load_bundle

    overrides = {k: getattr(args, k) for k in ("world", "planner", "runs", "seed", "jobs", "out", "limit",
                                                "max_decisions", "style", "endpoint", "model")}
    if args.scenarios:
        overrides["scenarios"] = args.scenarios
    if args.levels:
        overrides["levels"] = args.levels.split(",")
    cfg = load_run_config(args.config, overrides)
    files = _scenario_files(cfg)
    try:
        world = load_bundle(cfg["world"])
        scenarios = [sc for f in files for sc in (load_scenarios(f)[: cfg["limit"]] if cfg["limit"] else
                                                  load_scenarios(f))]
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read inputs: {exc}") from exc
    if not scenarios:
        raise InputError("no scenarios to run")

    run_dir = os.path.join(cfg["out"], f"{cfg['planner']}-{config_stamp(cfg)}")
    os.makedirs(run_dir, exist_ok=True)
    _write_json(cfg, os.path.join(run_dir, "config.json"))
    transcripts = os.path.join(run_dir, "transcripts")
    if os.path.isdir(os.path.join(transcripts, "vlm")):  # transcripts append; start clean
        for name in os.listdir(os.path.join(transcripts, "vlm")):
            os.remove(os.path.join(transcripts, "vlm", name))

    server = endpoint = None
    if cfg["planner"] == "vlm":
        from .vlm_client import EndpointConfig, MockVLMServer

        ep = dict(cfg["endpoint"])
        url = ep.pop("url")
        if url == "mock":
            server = MockVLMServer().start()
            url = server.url
        endpoint = EndpointConfig(url, **ep)
    try:
        ecfg = EpisodeConfig(**cfg["episode"])
        batch = BatchConfig(cfg["planner"], cfg["runs"], cfg["seed"], cfg["jobs"], endpoint,
                            transcripts if cfg["planner"] == "vlm" else None, ecfg)
        results = run_batch(world, scenarios, batch)
    finally:
        if server is not None:
            server.stop()

    write_jsonl(results, os.path.join(run_dir, "results.jsonl"))
    report = compute_metrics(results, runs=cfg["runs"])
    write_summary_csv({cfg["planner"]: report}, os.path.join(run_dir, "summary.csv"))
    table = format_table({cfg["planner"]: report})
    with open(os.path.join(run_dir, "table.md"), "w") as fh:
        fh.write(table + "\n")
    print(table)
    failed = sum(r.error is not None for r in results)
    if failed:
        print(f"{failed} episode(s) ended on a planner error (recorded in results.jsonl)")
    print(f"outputs in {run_dir}")
    return EXIT_OK


# ------------------------------------------------------------------ semfield


def _load_scene(path):
    from .semantic_field import Camera, SplatScene

    _need_file(path, "scene file")
    try:
        with open(path) as fh:
            data = json.load(fh)
        scene = SplatScene.from_json(data["splats"], dim=int(data.get("feature_dim", 16)))
        views = [Camera.from_json(v) for v in data["views"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad scene JSON ({type(exc).__name__}: {exc})") from exc
    if not views:
        raise InputError(f"{path}: no views")
    if np.all(scene.gt < 0):
        raise InputError(f"{path}: splats carry no gt_instance labels to train against")
    return scene, views


def scene_json(scene, views) -> dict:
    """The --scene file layout: splats (with gt_instance labels) plus camera views."""
    return {"feature_dim": scene.dim, "splats": scene.to_json(), "views": [v.to_json() for v in views]}


def cmd_semfield(args) -> int:
    from .semantic_field import FieldConfig, label_masks, make_fixture, run_pipeline

    if args.export_fixture:
        fx = make_fixture(args.fixture_seed)
        with open(args.export_fixture, "w") as fh:
            json.dump(scene_json(fx.scene, fx.views), fh)
        print(f"fixture scene written to {args.export_fixture}")
        return EXIT_OK
    if args.scene:
        scene, views = _load_scene(args.scene)
    else:
        fx = make_fixture(args.fixture_seed)
        scene, views = fx.scene, fx.views
    cfg = FieldConfig(lift_iters=args.lift_iters, lift_lr=args.lift_lr, k1=args.k1, k2=args.k2,
                      quant_iters=args.quant_iters, delta_vis=args.delta_vis,
                      use_occlusion=not args.no_occlusion_masks, use_view_selection=not args.no_view_selection,
                      seed=args.seed)
    try:
        res = run_pipeline(scene, views, cfg)
    except Diverged as exc:
        print(f"error: training diverged at iteration {exc.iteration}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    os.makedirs(args.out, exist_ok=True)
    np.save(os.path.join(args.out, "features.npy"), res.refined)
    np.save(os.path.join(args.out, "labels.npy"), res.labels)
    book = res.codebook
    _write_json({
        "k2": book.k2,
        "root_centroids": book.root_centroids.tolist(),
        "leaf_centroids": [c.tolist() for c in book.leaf_centroids],
        "assignment": book.assignment.tolist(),
    }, os.path.join(args.out, "codebook.json"))
    masks = {}
    for v, cam in enumerate(views):
        img = np.full((cam.height, cam.width), -1, dtype=np.int64)
        for lab, m in label_masks(scene, res.labels, cam).items():
            img[m] = lab
        masks[f"view{v:03d}"] = img
    np.savez_compressed(os.path.join(args.out, "masks.npz"), **masks)
    report = {
        "mIoU": round(res.miou, 6),
        "mAcc": round(res.macc, 6),
        "segments": int(len(np.unique(res.labels))),
        "codes": int(book.n_codes),
        "splats": len(scene),
        "views": len(views),
        "config": asdict(cfg),
    }
    _write_json(report, os.path.join(args.out, "report.json"))
    print(f"mIoU {res.miou:.4f}  mAcc {res.macc:.4f}  ({report['segments']} segments, {report['codes']} codes)")
    return EXIT_OK


# ------------------------------------------------------------------ report


def cmd_report(args) -> int:
    from .benchmark import compute_metrics, format_table, read_jsonl, write_summary_csv

    by_planner = {}
    for path in args.results:
        _need_file(path, "results file")
        try:
            rows = read_jsonl(path)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: {exc}") from exc
        for r in rows:
            by_planner.setdefault(r.planner, []).append(r)
    if not by_planner:
        raise InputError("no episode results in the given files")
    try:
        reports = {name: compute_metrics(rs, runs=args.runs) for name, rs in by_planner.items()}
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    table = format_table(reports)
    print(table)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_summary_csv(reports, os.path.join(args.out, "summary.csv"))
        with open(os.path.join(args.out, "table.md"), "w") as fh:
            fh.write(table + "\n")
    return EXIT_OK


# ------------------------------------------------------------------ entry


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vgagent", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="build a world bundle and scenario files")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--demo", action="store_true", help="use the procedural demo district")
    src.add_argument("--mesh", help="OBJ scene mesh")
    s.add_argument("--landmarks", help="landmark JSON (with --mesh)")
    s.add_argument("--out", required=True)
    s.add_argument("--resolution", type=float, default=0.5)
    s.add_argument("--no-align", dest="align", action="store_false", help="skip gravity alignment")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--levels", default="simnav,obstnav,socialnav,multigoal",
                   help="comma-separated levels to generate scenarios for ('' for none)")
    s.add_argument("--n-landmarks", type=int, default=40)
    s.add_argument("--per-landmark", type=int, default=5)
    s.add_argument("--scenario-seed", type=int, default=0)
    s.set_defaults(func=cmd_prepare)

    b = sub.add_parser("bench", help="run a planner over scenarios and write metrics")
    b.add_argument("--config", help="TOML run config; flags below override it")
    b.add_argument("--world")
    b.add_argument("--scenarios", action="append", help="scenario file (repeatable)")
    b.add_argument("--levels", help="comma-separated levels, read from the bundle")
    b.add_argument("--limit", type=int, help="first N scenarios per file")
    b.add_argument("--planner", choices=("oracle", "greedy", "vlm"))
    b.add_argument("--endpoint", help="chat-completion base URL, or 'mock'")
    b.add_argument("--model")
    b.add_argument("--runs", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--jobs", type=int)
    b.add_argument("--max-decisions", type=int)
    b.add_argument("--style", choices=("walk", "run"))
    b.add_argument("--out", help="base output directory")
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("semfield", help="lift and quantize splat features, then score segmentation")
    f.add_argument("--scene", help="JSON with 'splats' and 'views'; default is the built-in fixture")
    f.add_argument("--fixture-seed", type=int, default=0)
    f.add_argument("--export-fixture", metavar="PATH", help="write the built-in fixture as a scene file and exit")
    f.add_argument("--out", default="semfield_out")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--no-occlusion-masks", action="store_true")
    f.add_argument("--no-view-selection", action="store_true")
    f.add_argument("--lift-iters", type=int, default=150)
    f.add_argument("--lift-lr", type=float, default=0.05)
    f.add_argument("--quant-iters", type=int, default=100)
    f.add_argument("--k1", type=int, default=4)
    f.add_argument("--k2", type=int, default=2)
    f.add_argument("--delta-vis", type=int, default=50)
    f.set_defaults(func=cmd_semfield)

    r = sub.add_parser("report", help="aggregate results.jsonl files into a table and CSV")
    r.add_argument("results", nargs="+")
    r.add_argument("--runs", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (VGAgentError, RuntimeError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
