"""Batch execution over scenarios x runs, optionally across worker processes, plus report files."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..collision import build_index
from ..planning import GreedyPlanner, OraclePlanner
from .episode import EpisodeConfig, EpisodeContext, EpisodeResult, run_episode
from .metrics import KEYS, MetricsReport

PLANNERS = ("oracle", "greedy", "vlm")


@dataclass(frozen=True)
class BatchConfig:
    planner: str = "oracle"
    runs: int = 1
    seed: int = 0
    jobs: int = 1
    endpoint: object = None  # EndpointConfig for the vlm planner
    transcript_dir: str = None
    episode: EpisodeConfig = EpisodeConfig()

    def __post_init__(self):
        if self.planner not in PLANNERS:
            raise ValueError(f"planner must be one of {PLANNERS}")
        if self.runs < 1 or self.jobs < 1:
            raise ValueError("runs and jobs must be positive")
        if self.planner == "vlm" and self.endpoint is None:
            raise ValueError("the vlm planner needs an endpoint")


def episode_rng(seed, scenario_index, run):
    return np.random.default_rng(np.random.SeedSequence([seed, scenario_index, run]))


def _planner(cfg: BatchConfig, ctx: EpisodeContext, label):
    if cfg.planner == "oracle":
        return OraclePlanner(ctx.world), None
    if cfg.planner == "greedy":
        return GreedyPlanner(), None
    from ..vlm_client import VLMClient, VLMPlanner

    path = None
    if cfg.transcript_dir:
        os.makedirs(os.path.join(cfg.transcript_dir, "vlm"), exist_ok=True)
        path = os.path.join(cfg.transcript_dir, "vlm", label + ".jsonl")
    client = VLMClient(cfg.endpoint, transcript_path=path)
    return VLMPlanner(client), client


# worker state, filled by _init in each process (or directly when jobs == 1)
_STATE = {}


def _init(world, cfg):
    _STATE.update(world=world, cfg=cfg, index=build_index(world.obstacle_mesh), contexts={})


def _run_one(task):
    i, run, sc = task
    world, cfg = _STATE["world"], _STATE["cfg"]
    ctx = _STATE["contexts"].get(sc.id)
    if ctx is None:
        ctx = _STATE["contexts"][sc.id] = EpisodeContext.build(world, sc, _STATE["index"])
    label = f"{sc.id}_r{run}"
    planner, client = _planner(cfg, ctx, label)
    ep = cfg.episode
    if cfg.transcript_dir and ep.transcript_dir is None:
        ep = replace(ep, transcript_dir=os.path.join(cfg.transcript_dir, "frames"))
    try:
        return run_episode(world, sc, planner, ep, run=run, rng=episode_rng(cfg.seed, i, run), context=ctx)
    finally:
        if client is not None:
            client.close()


def run_batch(world, scenarios, cfg: BatchConfig = BatchConfig()) -> list:
    """Results come back in (run, scenario) order whatever the completion order."""
    tasks = [(i, run, sc) for run in range(cfg.runs) for i, sc in enumerate(scenarios)]
    if cfg.jobs == 1:
        _init(world, cfg)
        try:
            return [_run_one(t) for t in tasks]
        finally:
            _STATE.clear()
    with ProcessPoolExecutor(cfg.jobs, initializer=_init, initargs=(world, cfg)) as pool:
        return list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))


# ------------------------------------------------------------------ outputs


def write_jsonl(results, path):
    with open(path, "w") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [EpisodeResult.from_json(json.loads(line)) for line in fh if line.strip()]


def _fmt(v):
    return f"{100 * v:.1f}"


def write_summary_csv(reports: dict, path):
    """One row per (planner, level), plus an ``all`` row per planner."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["planner", "level", *KEYS, "runs", "episodes"])
        for name, report in reports.items():
            for lv, r in [("all", report)] + sorted(report.per_level.items()):
                w.writerow([name, lv, *(f"{getattr(r, k):.6f}" for k in KEYS), r.runs, r.episodes])


def format_table(reports: dict) -> str:
    """Rows per planner, SR/SPL/CR column groups per task level (percent)."""
    levels = sorted({lv for r in reports.values() for lv in r.per_level})
    head = "| planner | " + " | ".join(f"{lv} SR | {lv} SPL | {lv} CR" for lv in levels) + " |"
    sep = "|---" * (1 + 3 * len(levels)) + "|"
    lines = [head, sep]
    for name, rep in reports.items():
        cells = []
        for lv in levels:
            r = rep.per_level.get(lv)
            cells += [_fmt(r.SR), _fmt(r.SPL), _fmt(r.CR)] if r else ["-"] * 3
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    runs = {r.runs for r in reports.values()}
    lines.append("")
    lines.append(f"Values in percent, averaged over {', '.join(map(str, sorted(runs)))} run(s).")
    return "\n".join(lines)
