"""SR / SPL / CR / PR / PPL over episode results, averaged across repeated runs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyResults

KEYS = ("SR", "SPL", "CR", "PR", "PPL")


@dataclass(frozen=True)
class MetricsReport:
    SR: float
    SPL: float
    CR: float
    PR: float
    PPL: float
    runs: int
    episodes: int
    per_level: dict = field(default_factory=dict)

    def as_dict(self):
        out = {k: getattr(self, k) for k in KEYS}
        out.update(runs=self.runs, episodes=self.episodes)
        if self.per_level:
            out["per_level"] = {lv: r.as_dict() for lv, r in sorted(self.per_level.items())}
        return out


def episode_terms(r) -> np.ndarray:
    """Per-episode contributions (S, S*l/max(p,l), collided, progress, progress*l_reached/max(p,l_reached))."""
    l = r.optimal_length
    if l <= 0 or r.path_length < 0:
        raise ValueError(f"{r.scenario_id}: need l > 0 and p >= 0")
    s = 1.0 if r.success else 0.0
    spl = s * l / max(r.path_length, l)
    prog = r.progress_ratio
    lr = r.reached_optimal
    ppl = prog * lr / max(r.path_length, lr) if lr > 0 else 0.0
    return np.array([s, spl, 1.0 if r.collisions > 0 else 0.0, prog, ppl])


def _mean_over_runs(results):
    by_run = defaultdict(list)
    for r in results:
        by_run[r.run].append(episode_terms(r))
    per_run = np.array([np.mean(v, axis=0) for _, v in sorted(by_run.items())])
    return per_run.mean(axis=0), len(by_run)


def compute_metrics(results, runs=None) -> MetricsReport:
    results = list(results)
    if not results:
        raise EmptyResults("no episode results")
    vals, n_runs = _mean_over_runs(results)
    if runs is not None and n_runs != runs:
        raise ValueError(f"expected {runs} runs, found {n_runs}")
    levels = sorted({r.level for r in results})
    per_level = {}
    for lv in levels:
        sub = [r for r in results if r.level == lv]
        v, n = _mean_over_runs(sub)
        per_level[lv] = MetricsReport(*map(float, v), n, len(sub) // n)
    return MetricsReport(*map(float, vals), n_runs, len(results) // n_runs, per_level)
