"""
Walking the demo district
=========================

Build the procedural city block, sample a few SimNav and ObstNav episodes,
and compare the map-aware oracle with the myopic greedy planner.
"""

import numpy as np

from vgagent.benchmark import (
    BatchConfig, build_demo_world, compute_metrics, format_table, generate_scenarios, run_batch, run_episode,
)
from vgagent.planning import OraclePlanner

# the world: a triangle mesh, a 0.5 m occupancy grid and 51 landmarks
world = build_demo_world(seed=0)
g = world.grid
print(f"grid {g.shape}, {g.cells.mean():.1%} occupied, {len(world.landmarks)} landmarks")
print("first landmark:", world.landmarks[1].description)

# scenarios start 6-15 m from the goal, facing it give or take 30 degrees
simnav = generate_scenarios(world, "simnav", n_landmarks=6, per_landmark=2, seed=1)
obstnav = generate_scenarios(world, "obstnav", n_landmarks=6, per_landmark=2, seed=1)
sc = simnav[0]
print(f"\n{sc.id}: goal {sc.goals[0]}, start {np.round(sc.start, 2)}, optimal {sc.optimal_length:.2f} m")

# one oracle episode, decision by decision
res = run_episode(world, sc, OraclePlanner(world))
for row in res.trace[:5]:
    print(f"  d{row['decision']:02d} at ({row['x']:.1f}, {row['y']:.1f}) status {row['status']:9s} -> {row['action']}")
print(f"success {res.success}, walked {res.path_length:.2f} m in {res.decisions} decisions")

# batches: the greedy planner bumps into obstacles placed on the shortest path
reports = {}
for name in ("oracle", "greedy"):
    results = run_batch(world, simnav + obstnav, BatchConfig(name, seed=0))
    reports[name] = compute_metrics(results)
print()
print(format_table(reports))
