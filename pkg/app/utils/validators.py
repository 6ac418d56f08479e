"""Input validators for JSON payloads and query strings.

Each ``validate_*`` function returns a list of messages; an empty list
means the payload is usable.
"""
import math
from typing import Any, Dict, List, Mapping, Tuple

from ..engine.model import BRUTE_FORCE_LIMIT, ISING_RING, MAXCUT, SINGLE_SPIN, TWO_LEVEL
from ..engine.schedule import DRIVE_FORMS, LAMBDA_FORMS
from ..models import COMMANDS

INSTANCE_KINDS = (TWO_LEVEL, SINGLE_SPIN, ISING_RING, MAXCUT, "regular")
MAX_LIMIT = 200
MAX_RING_SITES = 2000


def sanitize_string(value: Any, max_length: int = 64) -> str:
    if value is None:
        return ""
    sanitized = str(value).strip().replace("\x00", "")
    return sanitized[:max_length]


def sanitize_integer(value: Any, min_val: int | None = None, max_val: int | None = None) -> int | None:
    """Integer within ``[min_val, max_val]`` or None. Booleans are rejected."""
    if value is None or isinstance(value, bool):
        return None
    try:
        num = int(value)
    except (TypeError, ValueError):
        return None
    if isinstance(value, float) and num != value:
        return None
    if min_val is not None and num < min_val:
        return None
    if max_val is not None and num > max_val:
        return None
    return num


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate_instance_payload(data: Dict) -> List[str]:
    errors: List[str] = []
    kind = sanitize_string(data.get("kind"))
    if not kind:
        return ["kind is required."]
    if kind not in INSTANCE_KINDS:
        return [f"kind must be one of {', '.join(INSTANCE_KINDS)}."]

    if kind == ISING_RING:
        n = sanitize_integer(data.get("N"), min_val=4, max_val=MAX_RING_SITES)
        if n is None or n % 2:
            errors.append(f"N must be an even integer between 4 and {MAX_RING_SITES}.")
    elif kind == MAXCUT:
        edges = data.get("edges")
        if not isinstance(edges, list) or not edges:
            errors.append("edges must be a non-empty list of vertex pairs.")
        else:
            for edge in edges:
                if (not isinstance(edge, (list, tuple)) or len(edge) != 2
                        or any(sanitize_integer(v, min_val=0, max_val=BRUTE_FORCE_LIMIT - 1) is None for v in edge)):
                    errors.append(f"edge {edge!r} must be a pair of vertex indices below {BRUTE_FORCE_LIMIT}.")
                    break
    elif kind == "regular":
        degree = sanitize_integer(data.get("degree"), min_val=1, max_val=BRUTE_FORCE_LIMIT - 1)
        n = sanitize_integer(data.get("n"), min_val=2, max_val=BRUTE_FORCE_LIMIT)
        if degree is None:
            errors.append("degree must be a positive integer.")
        if n is None:
            errors.append(f"n must be an integer between 2 and {BRUTE_FORCE_LIMIT}.")
        if degree is not None and n is not None and (n <= degree or (degree * n) % 2):
            errors.append("no regular graph exists with this degree and n.")
        if data.get("seed") is not None and sanitize_integer(data.get("seed"), min_val=0) is None:
            errors.append("seed must be a non-negative integer.")
    return errors


def _validate_form(part: Any, name: str, forms: Mapping) -> List[str]:
    if part is None:
        return []
    if not isinstance(part, dict):
        return [f"{name} must be an object."]
    if "knots" in part:
        knots = part["knots"]
        if (not isinstance(knots, list) or len(knots) < 2
                or not all(isinstance(k, (list, tuple)) and len(k) == 2 and all(_is_number(v) for v in k)
                           for k in knots)):
            return [f"{name}.knots must be a list of at least two [u, value] pairs."]
        return []
    form = part.get("form")
    if form not in forms:
        return [f"{name}.form must be one of {', '.join(sorted(forms))}."]
    params = part.get("params") or {}
    if not isinstance(params, dict) or not all(_is_number(v) for v in params.values()):
        return [f"{name}.params must map names to numbers."]
    return []


def validate_schedule_payload(data: Dict) -> List[str]:
    errors: List[str] = []
    T = data.get("T", data.get("total_time"))
    if T is None:
        errors.append("T is required.")
    elif not _is_number(T) or T <= 0:
        errors.append("T must be a positive number.")
    errors += _validate_form(data.get("lambda"), "lambda", LAMBDA_FORMS)
    errors += _validate_form(data.get("s"), "s", DRIVE_FORMS)
    return errors


def validate_angles_payload(data: Dict) -> List[str]:
    errors: List[str] = []
    gammas, betas = data.get("gammas"), data.get("betas")
    for name, values in (("gammas", gammas), ("betas", betas)):
        if not isinstance(values, list) or not values:
            errors.append(f"{name} must be a non-empty list.")
        elif not all(_is_number(v) for v in values):
            errors.append(f"{name} must contain finite numbers only.")
    if not errors and len(gammas) != len(betas):
        errors.append("gammas and betas must have the same length.")
    return errors


def validate_run_filters(args: Mapping) -> Tuple[Dict, List[str]]:
    """Filters for the run listing from query-string arguments."""
    errors: List[str] = []
    filters: Dict = {}
    command = sanitize_string(args.get("command"))
    if command:
        if command not in COMMANDS:
            errors.append(f"command must be one of {', '.join(COMMANDS)}.")
        else:
            filters["command"] = command
    if args.get("problem_id") is not None:
        problem_id = sanitize_integer(args.get("problem_id"), min_val=1)
        if problem_id is None:
            errors.append("problem_id must be a positive integer.")
        else:
            filters["problem_id"] = problem_id
    limit = sanitize_integer(args.get("limit", 50), min_val=1, max_val=MAX_LIMIT)
    if limit is None:
        errors.append(f"limit must be an integer between 1 and {MAX_LIMIT}.")
    filters["limit"] = limit
    return filters, errors
