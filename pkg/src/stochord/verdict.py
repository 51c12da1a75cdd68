"""Three-valued order verdicts."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any


class Status(str, Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Witness:
    """Where a claimed inequality fails: location plus both sides' values."""

    location: Any
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)

    def to_json(self) -> dict:
        return {"location": _plain(self.location), "lhs": float(self.lhs), "rhs": float(self.rhs)}


@dataclass(frozen=True)
class OrderVerdict:
    status: Status
    margin: float
    witness: Witness | None = None
    reason: str = ""
    label: str = ""

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def violated(self) -> bool:
        return self.status is Status.VIOLATED

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "margin": _plain(self.margin),
            "witness": self.witness.to_json() if self.witness else None,
            "label": self.label,
        }
        if self.reason:
            out["reason"] = self.reason
        return out


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if hasattr(x, "item"):
        return x.item()
    if isinstance(x, float) and x != x:
        return None
    return x


def holds(margin: float, label: str = "") -> OrderVerdict:
    return OrderVerdict(Status.HOLDS, float(margin), label=label)


def violated(margin: float, witness: Witness, label: str = "") -> OrderVerdict:
    return OrderVerdict(Status.VIOLATED, float(margin), witness=witness, label=label)


def inconclusive(margin: float, reason: str, label: str = "") -> OrderVerdict:
    return OrderVerdict(Status.INCONCLUSIVE, float(margin), reason=reason, label=label)
