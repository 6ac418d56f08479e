"""Run configuration and file plumbing for the command-line pipeline."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .engine.matching import AngleSet, OptimizerConfig
from .engine.settings import (
    BCH_ORDER,
    DENSE_QUBIT_CAP,
    MAGNUS_ORDER,
    MAX_BCH_ORDER,
    MAX_MAGNUS_ORDER,
    PRUNE_THRESHOLD,
    RK4_STEPS,
    SMOOTHNESS_THRESHOLD,
    STATEVECTOR_QUBIT_CAP,
)
from .errors import ValidationError

# Flask config key -> (section, name) inside RunConfig.
_APP_DEFAULTS = {
    "NM_XATOL": ("optimizer", "xatol"),
    "NM_MAXFEV": ("optimizer", "maxfev"),
    "MATCH_T_BRACKET": ("optimizer", "t_bracket"),
    "MATCH_T_RTOL": ("optimizer", "t_rtol"),
    "STEP_ERROR_CEILING": ("optimizer", "step_error_ceiling"),
    "SMOOTHNESS_THRESHOLD": ("numerics", "smoothness_threshold"),
    "RK4_STEPS": ("numerics", "rk4_steps"),
    "DENSE_QUBIT_CAP": ("numerics", "dense_qubit_cap"),
    "STATEVECTOR_QUBIT_CAP": ("numerics", "statevector_qubit_cap"),
    "PAULI_PRUNE_THRESHOLD": ("numerics", "prune_threshold"),
}

_NUMERIC_DEFAULTS = {
    "smoothness_threshold": SMOOTHNESS_THRESHOLD,
    "rk4_steps": RK4_STEPS,
    "dense_qubit_cap": DENSE_QUBIT_CAP,
    "statevector_qubit_cap": STATEVECTOR_QUBIT_CAP,
    "prune_threshold": PRUNE_THRESHOLD,
}


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def stable_digest(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def parse_instance(value: str | Mapping | None, seed: int | None = None) -> dict:
    """Instance spec from a JSON file path, a dict or a shorthand.

    Shorthands: ``two_level``, ``single_spin``, ``ring:N``, ``path:N``,
    ``regular:DEGREE:N[:SEED]``.
    """
    if value is None:
        raise ValidationError("an instance is required (--instance)")
    if isinstance(value, Mapping):
        spec = dict(value.get("instance", value))
    elif os.path.isfile(value):
        payload = read_json(value)
        spec = dict(payload.get("instance", payload))
    else:
        spec = _instance_shorthand(value)
    if spec.get("kind") == "regular" and spec.get("seed") is None and seed is not None:
        spec["seed"] = int(seed)
    return spec


def _instance_shorthand(value: str) -> dict:
    name, *args = value.strip().split(":")
    try:
        numbers = [int(a) for a in args]
    except ValueError:
        raise ValidationError(f"cannot parse instance {value!r}") from None
    if name in ("two_level", "pair") and not numbers:
        return {"kind": "two_level"}
    if name == "single_spin" and not numbers:
        return {"kind": "single_spin"}
    if name in ("ring", "chain") and len(numbers) == 1:
        return {"kind": "ising_ring", "N": numbers[0]}
    if name == "path" and len(numbers) == 1:
        return {"kind": "maxcut", "edges": [[i, i + 1] for i in range(numbers[0] - 1)]}
    if name == "regular" and len(numbers) in (2, 3):
        spec = {"kind": "regular", "degree": numbers[0], "n": numbers[1]}
        if len(numbers) == 3:
            spec["seed"] = numbers[2]
        return spec
    raise ValidationError(f"unknown instance {value!r}; use a JSON file or two_level, single_spin, "
                          "ring:N, path:N, regular:D:N[:SEED]")


def parse_schedule(value: str | Mapping | None, total_time: float | None = None) -> dict:
    """Schedule payload from a JSON file path, a dict or a shorthand.

    Shorthands: ``linear``, ``smoothstep``, ``sin_squared``,
    ``power_law:R``, ``sine:S0``, each optionally followed by ``@T``.
    """
    if value is None:
        payload = {"lambda": {"form": "linear"}, "s": {"form": "zero"}}
    elif isinstance(value, Mapping):
        payload = dict(value.get("schedule", value))
    elif os.path.isfile(value):
        data = read_json(value)
        payload = dict(data.get("schedule", data))
    else:
        payload = _schedule_shorthand(value)
    if total_time is not None:
        payload["T"] = float(total_time)
    return payload


def _schedule_shorthand(value: str) -> dict:
    body, _, at = value.strip().partition("@")
    name, *args = body.split(":")
    try:
        numbers = [float(a) for a in args]
        T = float(at) if at else None
    except ValueError:
        raise ValidationError(f"cannot parse schedule {value!r}") from None
    payload = {"lambda": {"form": "linear"}, "s": {"form": "zero"}}
    if name in ("linear", "smoothstep", "sin_squared") and not numbers:
        payload["lambda"] = {"form": name}
    elif name == "power_law" and len(numbers) == 1:
        payload["lambda"] = {"form": "power_law", "params": {"r": numbers[0]}}
    elif name == "sine" and len(numbers) == 1:
        payload["s"] = {"form": "sine", "params": {"s0": numbers[0]}}
    else:
        raise ValidationError(f"unknown schedule {value!r}; use a JSON file or linear, smoothstep, "
                              "sin_squared, power_law:R, sine:S0 (optionally @T)")
    if T is not None:
        payload["T"] = T
    return payload


def parse_int_list(value: str | int | Sequence[int] | None, name: str = "p") -> list[int]:
    if value is None or value == "":
        return []
    if isinstance(value, int):
        items = [value]
    elif isinstance(value, str):
        try:
            items = [int(v) for v in value.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"{name} must be a comma-separated list of integers", value=value) from None
    else:
        items = [int(v) for v in value]
    if any(v < 1 for v in items):
        raise ValidationError(f"{name} values must be positive", value=items)
    return items


def parse_float_list(value: str | Sequence[float] | None, name: str = "T") -> list[float]:
    if value is None or value == "":
        return []
    if isinstance(value, str):
        try:
            return [float(v) for v in value.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"{name} must be a comma-separated list of numbers", value=value) from None
    return [float(v) for v in value]


def parse_orders(value: str | Sequence[int] | None) -> tuple[int, int]:
    if value is None:
        return BCH_ORDER, MAGNUS_ORDER
    items = parse_int_list(value, "orders") if isinstance(value, str) else [int(v) for v in value]
    if len(items) != 2:
        raise ValidationError("orders take the form BCH,MAGNUS", value=value)
    bch, magnus = items
    if not (1 <= bch <= MAX_BCH_ORDER and 1 <= magnus <= MAX_MAGNUS_ORDER):
        raise ValidationError(f"orders must satisfy 1 <= BCH <= {MAX_BCH_ORDER} and 1 <= MAGNUS <= {MAX_MAGNUS_ORDER}",
                              bch=bch, magnus=magnus)
    return bch, magnus


def read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path} must hold a JSON object")
    return data


def load_angles(path: str) -> AngleSet:
    """Angles from a JSON file (an angle set or a match report) or a CSV table."""
    if path.endswith(".csv"):
        try:
            with open(path, encoding="utf-8", newline="") as handle:
                rows = [r for r in csv.DictReader(line for line in handle if not line.startswith("#"))]
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
        try:
            return AngleSet([r["gamma"] for r in rows], [r["beta"] for r in rows])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{path} needs gamma and beta columns: {exc}") from None
    payload = read_json(path)
    return AngleSet.from_dict(payload.get("angles", payload)).without_taus()


@dataclass
class RunConfig:
    """Everything needed to reproduce one command run."""

    command: str
    instance: dict
    schedule: dict | None = None
    p: list[int] = field(default_factory=list)
    orders: tuple[int, int] = (BCH_ORDER, MAGNUS_ORDER)
    optimizer: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=lambda: dict(_NUMERIC_DEFAULTS))
    options: dict = field(default_factory=dict)
    seed: int | None = None
    out: str | None = None

    @classmethod
    def build(
        cls,
        command: str,
        config_path: str | None = None,
        app_config: Mapping | None = None,
        **flags,
    ) -> "RunConfig":
        """Layer defaults, then ``app_config``, then the JSON file, then non-None CLI flags."""
        base = read_json(config_path) if config_path else {}
        optimizer: dict = {}
        numerics = dict(_NUMERIC_DEFAULTS)
        for key, (section, name) in _APP_DEFAULTS.items():
            if app_config is not None and app_config.get(key) is not None:
                (optimizer if section == "optimizer" else numerics)[name] = app_config[key]
        optimizer.update(base.get("optimizer") or {})
        numerics.update(base.get("numerics") or {})
        if app_config is not None and app_config.get("BCH_ORDER") and app_config.get("MAGNUS_ORDER"):
            orders = (int(app_config["BCH_ORDER"]), int(app_config["MAGNUS_ORDER"]))
        else:
            orders = (BCH_ORDER, MAGNUS_ORDER)
        options = dict(base.get("options") or {})

        seed = flags.pop("seed", None)
        seed = seed if seed is not None else base.get("seed")
        instance = flags.pop("instance", None) or base.get("instance")
        schedule = flags.pop("schedule", None) or base.get("schedule")
        total_time = flags.pop("total_time", None)
        p = flags.pop("p", None) or base.get("p")
        order_flag = flags.pop("orders", None) or base.get("orders")
        out = flags.pop("out", None) or base.get("out")
        options.update({k: v for k, v in flags.items() if v is not None})

        config = cls(
            command=command,
            instance=parse_instance(instance, seed) if instance is not None else {},
            schedule=parse_schedule(schedule, total_time) if (schedule is not None or total_time is not None) else None,
            p=parse_int_list(p),
            orders=parse_orders(order_flag) if order_flag is not None else orders,
            optimizer=optimizer,
            numerics=numerics,
            options=options,
            seed=None if seed is None else int(seed),
            out=out,
        )
        config.optimizer_config()
        return config

    def optimizer_config(self) -> OptimizerConfig:
        settings = dict(self.optimizer)
        bracket = settings.get("t_bracket")
        if isinstance(bracket, str):
            settings["t_bracket"] = tuple(parse_float_list(bracket, "t_bracket"))
        try:
            return OptimizerConfig(**settings)
        except TypeError as exc:
            raise ValidationError(f"unknown optimizer setting: {exc}") from None

    def numeric(self, name: str):
        return self.numerics.get(name, _NUMERIC_DEFAULTS.get(name))

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload.pop("out")
        payload["orders"] = list(self.orders)
        payload["optimizer"] = self.optimizer_config().to_dict()
        return payload

    @property
    def digest(self) -> str:
        return stable_digest(self.to_dict())


def resolve_output(path: str | None, results_dir: str | None = None) -> str | None:
    if not path or path == "-":
        return None
    if results_dir and not os.path.isabs(path):
        path = os.path.join(results_dir, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def dump_json(payload: Mapping) -> str:
    return json.dumps(payload, indent=2, default=_jsonable)


def dump_csv(header: Sequence[str], rows: Iterable[Sequence], digest: str | None = None) -> str:
    buffer = io.StringIO()
    if digest:
        buffer.write(f"# config_digest={digest}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buffer.getvalue()


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def sibling_path(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix
