"""Scenario generation, episode execution and navigation metrics."""

from .demo_world import build_demo_world, landmark_sites
from .episode import EpisodeConfig, EpisodeContext, EpisodeResult, run_episode
from .metrics import KEYS, MetricsReport, compute_metrics, episode_terms
from .runner import (
    PLANNERS, BatchConfig, episode_rng, format_table, read_jsonl, run_batch, write_jsonl, write_summary_csv,
)
from .scenarios import (
    LEVELS, OBSTACLE_CATALOG, Obstacle, Pedestrian, Scenario, augment_obstnav, augment_socialnav, chain_optimal,
    extend_multigoal, generate_scenarios, load_scenarios, save_scenarios, scenario_world, start_candidates,
    validate_scenario,
)
