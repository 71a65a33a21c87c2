"""Prompt construction, reply parsing, HTTP client and mock server for VLM planning."""

from .client import EndpointConfig, VLMClient, fallback_decision
from .mock import MockVLMServer
from .parse import parse_response
from .planner import VLMPlanner
from .prompts import GUIDANCE, HEADERS, PromptBundle, PromptContext, build_request, system_text

__all__ = [
    "EndpointConfig", "VLMClient", "fallback_decision", "MockVLMServer", "parse_response", "VLMPlanner",
    "GUIDANCE", "HEADERS", "PromptBundle", "PromptContext", "build_request", "system_text",
]
