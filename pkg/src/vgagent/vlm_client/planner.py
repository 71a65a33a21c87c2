"""Planner adapter that asks a chat-completion VLM for each decision."""

from __future__ import annotations

from dataclasses import dataclass

from ..perception import compose_prompt_image, png_bytes
from ..planning import Decision
from .client import VLMClient
from .prompts import PromptContext, build_request


@dataclass
class VLMPlanner:
    client: VLMClient
    name = "vlm"
    needs_image = True

    def decide(self, pose, goal, space, *, obs, status, memory, step, goal_box=None, humans=(), social=False,
               tag=None, **_) -> Decision:
        image = png_bytes(compose_prompt_image(obs, space.primitives, goal_box, humans_boxes(humans)))
        ctx = PromptContext(
            step=step,
            status=status,
            goal_description=goal.description or goal.label,
            position=tuple(pose.position),
            yaw=pose.yaw,
            space=space,
            memory=memory,
            humans=[{k: v for k, v in h.items() if k != "box_px"} | {"bbox": list(h["box_px"])} for h in humans],
            social=social,
            goal_visible=goal_box is not None,
        )
        bundle = build_request(ctx, image)
        return self.client.query(bundle, space, tag=tag)


def humans_boxes(humans):
    return [(h["id"], h["box_px"]) for h in humans]
