"""Strict validation of five-key planner replies."""

from __future__ import annotations

import json

from ..errors import MalformedJson, MissingKey
from ..planning import ActionSpace, Decision, validate_action

KEYS = ("observation", "goal_analysis", "plan", "thought", "action")


def extract_json_block(text: str) -> str:
    """First balanced {...} block in ``text``, honoring JSON string escapes."""
    start = text.find("{")
    if start < 0:
        raise MalformedJson("no JSON object in reply")
    depth, in_str, esc = 0, False, False
    for i in range(start, len(text)):
        ch = text[i]
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise MalformedJson("unbalanced JSON object in reply")


def _coerce_action(a):
    if isinstance(a, bool):
        return a
    if isinstance(a, float) and a.is_integer():
        return int(a)
    if isinstance(a, str) and a.strip().lstrip("-").isdigit():
        return int(a.strip())
    return a


def parse_response(text: str, space: ActionSpace, lenient=False) -> Decision:
    """Parse a reply into a Decision.

    Strict mode requires the whole reply to be one JSON object. Lenient mode
    first extracts the first balanced object from surrounding prose.
    """
    if not isinstance(text, str):
        raise MalformedJson("reply is not text")
    body = extract_json_block(text) if lenient else text.strip()
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedJson("reply is not a JSON object")
    for k in KEYS:
        if k not in obj:
            raise MissingKey(k)
    extra = sorted(set(obj) - set(KEYS))
    if extra:
        raise MalformedJson(f"unexpected keys: {extra}")
    for k in ("observation", "goal_analysis", "thought"):
        if not isinstance(obj[k], str):
            raise MalformedJson(f"{k} must be a string")
    plan = obj["plan"]
    if not isinstance(plan, list) or not plan or not all(isinstance(s, str) for s in plan):
        raise MalformedJson("plan must be a non-empty list of strings")
    action = validate_action(_coerce_action(obj["action"]), space)
    return Decision(obj["observation"], obj["goal_analysis"], tuple(plan), obj["thought"], action)
