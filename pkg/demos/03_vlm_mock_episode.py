"""
A VLM planner against a local mock endpoint
===========================================

The client speaks the chat-completion protocol; the mock server answers with the
middle arrow. Prompt images and the request/response transcript land in ./vlm_demo.
"""

import json
import os

from vgagent.benchmark import EpisodeConfig, build_demo_world, generate_scenarios, run_episode
from vgagent.vlm_client import EndpointConfig, MockVLMServer, VLMClient, VLMPlanner

out = "vlm_demo"
os.makedirs(out, exist_ok=True)
world = build_demo_world()
sc = generate_scenarios(world, "simnav", n_landmarks=1, per_landmark=1, seed=3)[0]
print(f"{sc.id}: find {world.landmark(sc.goals[0]).description}")

log = os.path.join(out, "transcript.jsonl")
if os.path.exists(log):
    os.remove(log)

with MockVLMServer() as server, VLMClient(EndpointConfig(server.url), transcript_path=log) as client:
    res = run_episode(world, sc, VLMPlanner(client), EpisodeConfig(max_decisions=8, transcript_dir=out))
    print(f"{len(server.calls)} requests served")

print(f"success {res.success}, {res.decisions} decisions, {res.collisions} collisions")
first = json.loads(open(log).readline())
print("first reply action:", first["decision"]["action"])
print("prompt images:", sorted(f for f in os.listdir(out) if f.endswith(".png"))[:3], "...")
