"""Threshold sequences ``c_1, c_2, ...`` shared by all three selection models.

A schedule is indexed by selection attempt: ``threshold_at(s, i)`` is the
criterion applied while picking the i-th sample, i.e. after ``i - 1``
acceptances.  Real-valued schedules (interval and skyline models) live in
(0, 1] and are nonincreasing; integer schedules (tree model) are positive and
nondecreasing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

REAL = "real"
INTEGER = "integer"

_KIND_ALIASES = {
    "power": "power",
    "powerdecay": "power",
    "log": "log",
    "loggrowth": "log",
    "poly": "poly",
    "polygrowth": "poly",
    "const": "constant",
    "constant": "constant",
    "explicit": "explicit",
}

_DEFAULT_DOMAIN = {"power": REAL, "log": INTEGER, "poly": INTEGER}


class ScheduleError(ValueError):
    """Raised for schedule parameters outside their legal range."""


@dataclass(frozen=True)
class ThresholdSchedule:
    kind: str
    params: tuple[float, ...] = ()
    domain: str = REAL
    values: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.domain not in (REAL, INTEGER):
            raise ScheduleError(f"unknown domain hint {self.domain!r}")
        _validate(self)

    @property
    def is_integer(self) -> bool:
        return self.domain == INTEGER

    def __call__(self, i: int):
        return threshold_at(self, i)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "domain": self.domain}
        if self.kind == "power":
            d["alpha"] = self.params[0]
        elif self.kind == "log":
            d["offset"] = self.params[0]
        elif self.kind == "poly":
            d["exponent"], d["scale"] = self.params
        elif self.kind == "constant":
            d["value"] = self.params[0]
        else:
            d["values"] = list(self.values)
        return d

    def __str__(self) -> str:
        if self.kind == "explicit":
            return "explicit:" + ",".join(f"{v:g}" for v in self.values)
        name = "const" if self.kind == "constant" else self.kind
        return name + ":" + ":".join(f"{p:g}" for p in self.params)


def power_decay(alpha: float) -> ThresholdSchedule:
    return ThresholdSchedule("power", (float(alpha),), REAL)


def log_growth(offset: float = 0.0) -> ThresholdSchedule:
    return ThresholdSchedule("log", (float(offset),), INTEGER)


def poly_growth(exponent: float, scale: float = 1.0) -> ThresholdSchedule:
    return ThresholdSchedule("poly", (float(exponent), float(scale)), INTEGER)


def constant(value: float, domain: str = REAL) -> ThresholdSchedule:
    return ThresholdSchedule("constant", (float(value),), domain)


def explicit(values: Sequence[float], domain: str = REAL) -> ThresholdSchedule:
    return ThresholdSchedule("explicit", (), domain, tuple(float(v) for v in values))


def _validate(s: ThresholdSchedule) -> None:
    if s.kind == "power":
        (alpha,) = s.params
        if not 0.0 <= alpha < 1.0:
            raise ScheduleError(f"power decay needs 0 <= alpha < 1, got {alpha}")
        if s.domain != REAL:
            raise ScheduleError("power decay is a real-valued schedule")
    elif s.kind in ("log", "poly"):
        if s.domain != INTEGER:
            raise ScheduleError(f"{s.kind} growth is an integer-valued schedule")
        if s.kind == "poly":
            exponent, scale = s.params
            if exponent < 0 or scale <= 0:
                raise ScheduleError("poly growth needs exponent >= 0 and scale > 0")
        elif not math.isfinite(s.params[0]):
            raise ScheduleError("log growth offset must be finite")
    elif s.kind == "constant":
        (value,) = s.params
        _check_value(value, s.domain)
    elif s.kind == "explicit":
        if not s.values:
            raise ScheduleError("explicit schedule must be non-empty")
        for v in s.values:
            _check_value(v, s.domain)
        diffs = np.diff(s.values)
        if s.domain == REAL and np.any(diffs > 0):
            raise ScheduleError("real-valued explicit schedule must be nonincreasing")
        if s.domain == INTEGER and np.any(diffs < 0):
            raise ScheduleError("integer-valued explicit schedule must be nondecreasing")
    else:
        raise ScheduleError(f"unknown schedule kind {s.kind!r}")


def _check_value(v: float, domain: str) -> None:
    if domain == REAL:
        if not 0.0 < v <= 1.0:
            raise ScheduleError(f"real threshold must lie in (0, 1], got {v}")
    elif v < 1 or v != int(v):
        raise ScheduleError(f"integer threshold must be a positive integer, got {v}")


def threshold_at(s: ThresholdSchedule, i: int):
    """Threshold used while selecting the ``i``-th sample (``i >= 1``)."""
    if i < 1:
        raise ValueError(f"selection index must be >= 1, got {i}")
    if s.kind == "power":
        return float(i) ** (-s.params[0])
    if s.kind == "log":
        return max(1, math.ceil(math.log2(i) + s.params[0]))
    if s.kind == "poly":
        exponent, scale = s.params
        return max(1, math.ceil(scale * float(i) ** exponent))
    if s.kind == "constant":
        v = s.params[0]
        return int(v) if s.is_integer else v
    v = s.values[min(i, len(s.values)) - 1]
    return int(v) if s.is_integer else v


def thresholds(s: ThresholdSchedule, n: int) -> np.ndarray:
    """Array ``[c_1, ..., c_n]``; identical to calling :func:`threshold_at` per index."""
    vals = [threshold_at(s, i) for i in range(1, n + 1)]
    return np.array(vals, dtype=np.int64 if s.is_integer else np.float64)


def build_schedule(spec: str | Mapping[str, Any] | ThresholdSchedule,
                   domain: str | None = None) -> ThresholdSchedule:
    """Build a validated schedule from a ``kind:params`` string or a mapping.

    Accepted strings: ``power:0.5``, ``log:2``, ``poly:0.5:3`` (exponent,
    scale), ``const:4``, ``explicit:0.5,0.25``.  Mappings use the field names
    of :meth:`ThresholdSchedule.to_dict`; a JSON object string also works.
    ``domain`` overrides the kind's default domain hint.
    """
    if isinstance(spec, ThresholdSchedule):
        if domain is not None and domain != spec.domain:
            raise ScheduleError(f"schedule {spec} has domain {spec.domain}, expected {domain}")
        return spec
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("{"):
            return build_schedule(json.loads(text), domain)
        return _from_string(text, domain)
    return _from_mapping(dict(spec), domain)


def _resolve_domain(kind: str, domain: str | None, values: Sequence[float]) -> str:
    if domain is not None:
        return domain
    if kind in _DEFAULT_DOMAIN:
        return _DEFAULT_DOMAIN[kind]
    return REAL if all(v <= 1 for v in values) else INTEGER


def _from_string(text: str, domain: str | None) -> ThresholdSchedule:
    head, _, rest = text.partition(":")
    kind = _KIND_ALIASES.get(head.lower())
    if kind is None:
        raise ScheduleError(f"unknown schedule kind {head!r}")
    try:
        if kind == "explicit":
            vals = [float(v) for v in rest.split(",") if v.strip()]
            return explicit(vals, _resolve_domain(kind, domain, vals))
        args = [float(v) for v in rest.split(":") if v.strip()]
    except ValueError as exc:
        raise ScheduleError(f"bad schedule parameters in {text!r}") from exc
    return _assemble(kind, args, domain, text)


def _from_mapping(d: dict[str, Any], domain: str | None) -> ThresholdSchedule:
    kind = _KIND_ALIASES.get(str(d.get("kind", "")).lower())
    if kind is None:
        raise ScheduleError(f"unknown schedule kind {d.get('kind')!r}")
    domain = domain or d.get("domain")
    if kind == "explicit":
        vals = [float(v) for v in d.get("values", [])]
        return explicit(vals, _resolve_domain(kind, domain, vals))
    keys = {"power": ["alpha"], "log": ["offset"], "poly": ["exponent", "scale"],
            "constant": ["value"]}[kind]
    args = [float(d[k]) for k in keys if k in d]
    return _assemble(kind, args, domain, d)


def _assemble(kind: str, args: list[float], domain: str | None, src) -> ThresholdSchedule:
    if kind == "power" and len(args) == 1:
        return ThresholdSchedule("power", (args[0],), domain or REAL)
    if kind == "log" and len(args) <= 1:
        return ThresholdSchedule("log", (args[0] if args else 0.0,), domain or INTEGER)
    if kind == "poly" and len(args) in (1, 2):
        scale = args[1] if len(args) == 2 else 1.0
        return ThresholdSchedule("poly", (args[0], scale), domain or INTEGER)
    if kind == "constant" and len(args) == 1:
        return constant(args[0], _resolve_domain(kind, domain, args))
    raise ScheduleError(f"wrong number of parameters for {kind} schedule: {src!r}")
