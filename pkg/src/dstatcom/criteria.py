"""Integral error criteria and the weighted tuning objective."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Criterion",
    "ErrorSeries",
    "ObjectiveTerm",
    "ObjectiveSpec",
    "MalformedSeries",
    "HorizonExceedsTrajectory",
    "integrate_criterion",
    "objective_value",
    "all_criteria",
    "canonical_objective",
]


class MalformedSeries(ValueError):
    pass


class HorizonExceedsTrajectory(ValueError):
    pass


class Criterion(str, enum.Enum):
    IAE = "IAE"
    ISE = "ISE"
    ITAE = "ITAE"
    ITSE = "ITSE"


@dataclass(frozen=True)
class ErrorSeries:
    t: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        e = np.asarray(self.e, dtype=float)
        if t.ndim != 1 or e.shape != t.shape:
            raise MalformedSeries("t and e must be 1-D arrays of equal length")
        if t.size < 2:
            raise MalformedSeries("need at least two samples")
        if not np.all(np.diff(t) > 0):
            raise MalformedSeries("sample times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "e", e)


def _integrand(series: ErrorSeries, c: Criterion) -> np.ndarray:
    t, e = series.t, series.e
    c = Criterion(c)
    if c is Criterion.IAE:
        return np.abs(e)
    if c is Criterion.ISE:
        return e * e
    if c is Criterion.ITAE:
        return t * np.abs(e)
    return t * e * e


def integrate_criterion(series: ErrorSeries, c: Criterion) -> float:
    """Trapezoid-rule value of IAE, ISE, ITAE or ITSE over the series span."""
    return float(np.trapezoid(_integrand(series, c), series.t))


def all_criteria(series: ErrorSeries) -> dict[str, float]:
    return {c.value: integrate_criterion(series, c) for c in Criterion}


@dataclass(frozen=True)
class ObjectiveTerm:
    """One weighted term: ``weight * criterion(signal - reference)``.

    ``reference`` names another trajectory field or is a constant; when
    omitted it defaults to ``<signal>_ref``.
    """

    signal: str = "vdc"
    criterion: Criterion = Criterion.ITAE
    weight: float = 1.0
    reference: Union[str, float, None] = None

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if not self.weight >= 0:
            raise ValueError("term weights must be non-negative")

    @property
    def reference_name(self) -> Union[str, float]:
        return f"{self.signal}_ref" if self.reference is None else self.reference


@dataclass(frozen=True)
class ObjectiveSpec:
    terms: Sequence[ObjectiveTerm] = field(default_factory=lambda: (ObjectiveTerm(),))
    scale: float = 1000.0
    horizon: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("objective needs at least one term")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


def canonical_objective(horizon: float = 0.1) -> ObjectiveSpec:
    """``1000 * ITAE(vdc - vdc_ref)`` over ``[0, horizon]``."""
    return ObjectiveSpec((ObjectiveTerm("vdc", Criterion.ITAE, 1.0),), 1000.0, horizon)


def _window(t: np.ndarray, horizon: float) -> int:
    if horizon > t[-1] * (1 + 1e-12) + 1e-15:
        raise HorizonExceedsTrajectory(
            f"objective horizon {horizon} s exceeds trajectory end {t[-1]} s"
        )
    return int(np.searchsorted(t, horizon * (1 + 1e-12), side="right"))


def objective_value(traj, spec: ObjectiveSpec) -> float:
    """Weighted sum of criteria over ``[0, spec.horizon]``.

    ``traj`` is any object exposing ``t`` and the named signal arrays as
    attributes (e.g. a :class:`~dstatcom.simharness.Trajectory`).
    """
    t = np.asarray(traj.t, dtype=float)
    n = _window(t, spec.horizon)
    total = 0.0
    for term in spec.terms:
        y = np.asarray(getattr(traj, term.signal), dtype=float)[:n]
        ref = term.reference_name
        r = float(ref) if not isinstance(ref, str) else np.asarray(getattr(traj, ref))[:n]
        total += term.weight * integrate_criterion(ErrorSeries(t[:n], y - r), term.criterion)
    return spec.scale * total
