"""Closed-loop experiments: scenarios, trajectories, step metrics, fitness.

Each simulation step: evaluate references, run the PI regulator (held over
the step), then advance the plant with RK4 while the inner proportional loops
and the linearizing law are re-evaluated at every RK4 stage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import _kernel
from .control import (
    DEFAULT_ID_MAX,
    ControllerGains,
    PiState,
    VdcTooLow,
    feedback_linearize,
    inner_loop,
    pi_update,
    saturate,
)
from .criteria import ErrorSeries, ObjectiveSpec, all_criteria, canonical_objective, objective_value
from .model import (
    DEFAULT_VDC_MIN,
    IntegrationDiverged,
    PlantParams,
    PlantState,
    canonical_params,
    step_rk4,
)

__all__ = [
    "StepSpec",
    "Scenario",
    "Trajectory",
    "PerfMetrics",
    "GainSet",
    "ComparisonRow",
    "SimulationDiverged",
    "StepNotInWindow",
    "canonical_scenario",
    "run_closed_loop",
    "step_metrics",
    "make_fitness",
    "compare_gains",
    "PAPER_GAIN_SETS",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("t", "id", "iq", "vdc", "id_ref", "iq_ref", "u1", "u2", "m", "alpha", "p", "q")


class SimulationDiverged(RuntimeError):
    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


class StepNotInWindow(ValueError):
    pass


@dataclass(frozen=True)
class StepSpec:
    initial: float
    final: float
    step_time: float = 0.0

    def __post_init__(self):
        if not self.step_time >= 0:
            raise ValueError("step_time must be non-negative")

    @classmethod
    def constant(cls, value: float) -> "StepSpec":
        return cls(value, value, 0.0)

    @property
    def magnitude(self) -> float:
        return self.final - self.initial

    def as_row(self) -> tuple[float, float, float]:
        return (float(self.initial), float(self.final), float(self.step_time))


@dataclass(frozen=True)
class Scenario:
    plant: PlantParams = field(default_factory=canonical_params)
    gains: ControllerGains = field(default_factory=ControllerGains)
    vdc_ref: StepSpec = StepSpec.constant(200.0)
    iq_ref: StepSpec = StepSpec(0.0, 15.0, 0.02)
    id_ref_source: Union[str, StepSpec] = "pi"
    initial_state: PlantState = PlantState(0.0, 0.0, 200.0)
    dt: float = 2e-5
    t_end: float = 0.1
    id_max: float = DEFAULT_ID_MAX
    vdc_min_guard: float = DEFAULT_VDC_MIN

    def __post_init__(self):
        object.__setattr__(self, "initial_state", PlantState(*map(float, self.initial_state)))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be at least dt")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be an integer multiple of dt")
        if isinstance(self.id_ref_source, str) and self.id_ref_source != "pi":
            raise ValueError("id_ref_source must be 'pi' or a StepSpec")
        if not self.id_max > 0:
            raise ValueError("id_max must be positive")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def uses_pi(self) -> bool:
        return isinstance(self.id_ref_source, str)

    def with_gains(self, kp: float, ki: float) -> "Scenario":
        return replace(self, gains=self.gains.with_pi(kp, ki))


def canonical_scenario(kp: float = 1.0, ki: float = 70.0) -> Scenario:
    """The reference experiment: 200 V DC link held constant while the
    reactive current reference steps 0 -> 15 A at 20 ms; 0.1 s at 20 us."""
    return Scenario(gains=ControllerGains(1000.0, 1000.0, kp, ki))


@dataclass
class Trajectory:
    t: np.ndarray
    id: np.ndarray
    iq: np.ndarray
    vdc: np.ndarray
    id_ref: np.ndarray
    iq_ref: np.ndarray
    vdc_ref: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    m: np.ndarray
    alpha: np.ndarray
    p: np.ndarray
    q: np.ndarray
    diverged: bool = False
    message: str = ""

    @classmethod
    def from_columns(cls, t, id, iq, vdc, id_ref, iq_ref, vdc_ref, u1, u2, vs, diverged=False, message=""):
        m = np.hypot(u1, u2)
        alpha = np.arctan2(u2, u1)
        alpha[alpha == -np.pi] = np.pi
        return cls(
            t, id, iq, vdc, id_ref, iq_ref, vdc_ref, u1, u2, m, alpha,
            1.5 * vs * id, 1.5 * vs * iq, diverged, message,
        )

    def __len__(self) -> int:
        return self.t.size

    def states(self) -> PlantState:
        return PlantState(self.id, self.iq, self.vdc)

    def table(self, columns: Sequence[str] = CSV_COLUMNS) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in columns])


class PerfMetrics(NamedTuple):
    overshoot: Optional[float]
    rise_time: Optional[float]
    settling_time: Optional[float]
    steady_state_error: Optional[float]


class GainSet(NamedTuple):
    name: str
    kp: float
    ki: float


PAPER_GAIN_SETS = (
    GainSet("random", 3.2145, 14.2455),
    GainSet("trial", 1.0, 70.0),
    GainSet("pso", 415.2451, 31.0245),
)


def _status_message(status: int, t: float) -> str:
    if status == _kernel.NONFINITE:
        return f"non-finite state at t={t:.6g} s"
    return f"vdc fell below guard at t={t:.6g} s"


def _run_kernel(sc: Scenario) -> Trajectory:
    p, g = sc.plant, sc.gains
    refs = np.array(
        [
            sc.vdc_ref.as_row(),
            sc.iq_ref.as_row(),
            sc.id_ref_source.as_row() if not sc.uses_pi else (0.0, 0.0, 0.0),
        ]
    )
    buf, n, status = _kernel.simulate(
        np.array([p.rs, p.ls, p.c, p.omega, p.vs]),
        np.array([g.lambda1, g.lambda2, g.kp, g.ki]),
        refs,
        sc.uses_pi,
        np.array(sc.initial_state, dtype=float),
        sc.dt,
        sc.n_steps,
        sc.id_max,
        sc.vdc_min_guard,
    )
    t = np.arange(n) * sc.dt
    cols = [buf[:n, j].copy() for j in range(_kernel.NCOLS)]
    diverged = status != _kernel.OK
    msg = _status_message(status, n * sc.dt) if diverged else ""
    return Trajectory.from_columns(t, *cols, vs=p.vs, diverged=diverged, message=msg)


def _ref_at(step: StepSpec, k: int, dt: float) -> float:
    return step.final if k * dt >= step.step_time - 1e-9 * dt else step.initial


def _run_python(sc: Scenario) -> Trajectory:
    p, g, dt = sc.plant, sc.gains, sc.dt
    x = sc.initial_state
    pi = PiState()
    rows = []
    status = ""
    for k in range(sc.n_steps + 1):
        vdc_ref = _ref_at(sc.vdc_ref, k, dt)
        iq_ref = _ref_at(sc.iq_ref, k, dt)
        if sc.uses_pi:
            id_ref, pi = pi_update(vdc_ref, x.vdc, pi, g, dt, sc.id_max)
        else:
            id_ref = _ref_at(sc.id_ref_source, k, dt)

        def law(s, id_ref=id_ref, iq_ref=iq_ref):
            v1, v2 = inner_loop(s, id_ref, iq_ref, g)
            return saturate(feedback_linearize(s, v1, v2, p, sc.vdc_min_guard))

        try:
            u = law(x)
        except VdcTooLow as exc:
            status = f"{exc} at t={k * dt:.6g} s"
            break
        rows.append((*x, id_ref, iq_ref, vdc_ref, *u))
        if k == sc.n_steps:
            break
        try:
            x = step_rk4(x, law, p, dt, sc.vdc_min_guard)
        except (IntegrationDiverged, VdcTooLow) as exc:
            status = f"{exc} at t={(k + 1) * dt:.6g} s"
            break
    data = np.array(rows, dtype=float).reshape(-1, _kernel.NCOLS)
    t = np.arange(data.shape[0]) * dt
    return Trajectory.from_columns(
        t, *(data[:, j].copy() for j in range(_kernel.NCOLS)), vs=p.vs,
        diverged=bool(status), message=status,
    )


def run_closed_loop(sc: Scenario, engine: str = "numba", strict: bool = False) -> Trajectory:
    """Simulate ``sc`` and return the sampled trajectory.

    A diverged run returns the samples up to the failure with
    ``trajectory.diverged`` set; with ``strict=True`` it raises
    :class:`SimulationDiverged` instead. ``engine="python"`` runs the
    same loop out of the plain module functions (slow, used as a check).
    """
    if engine == "numba":
        traj = _run_kernel(sc)
    elif engine == "python":
        traj = _run_python(sc)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    if strict and traj.diverged:
        raise SimulationDiverged(traj.message, traj)
    return traj


def step_metrics(
    traj: Trajectory,
    signal: str,
    step: StepSpec,
    band: float = 0.02,
    scale: Optional[float] = None,
) -> PerfMetrics:
    """Overshoot (%), 10-90% rise time, settling time and final error.

    Times are measured from ``step.step_time``. Percentages and the settling
    band are relative to ``scale``, which defaults to the step magnitude or,
    for a pure regulation signal (zero magnitude), to ``|final|``. Rise time
    is undefined for a zero-magnitude step. Settling time is ``None`` when the
    signal is still outside the band at the last sample.
    """
    t = np.asarray(traj.t)
    y = np.asarray(getattr(traj, signal), dtype=float)
    if t.size == 0 or step.step_time > t[-1] or step.step_time < t[0]:
        raise StepNotInWindow(f"step at {step.step_time} s outside [{t[0] if t.size else 0}, {t[-1] if t.size else 0}]")
    i0 = int(np.searchsorted(t, step.step_time - 1e-9 * max(step.step_time, 1e-300), side="left"))
    tw, yw = t[i0:], y[i0:]
    t0 = step.step_time
    delta = step.magnitude
    if scale is None:
        scale = abs(delta) if delta != 0 else abs(step.final)
    if scale == 0:
        scale = 1.0

    final_err = abs(yw[-1] - step.final)
    if delta != 0:
        sgn = math.copysign(1.0, delta)
        excess = sgn * (yw - step.final)
        overshoot = max(0.0, float(excess.max())) / scale * 100.0
        progress = sgn * (yw - step.initial) / abs(delta)
        hit_lo = np.flatnonzero(progress >= 0.1)
        hit_hi = np.flatnonzero(progress >= 0.9)
        rise = float(tw[hit_hi[0]] - tw[hit_lo[0]]) if hit_hi.size and hit_lo.size else None
    else:
        overshoot = float(np.abs(yw - step.final).max()) / scale * 100.0
        rise = None

    outside = np.flatnonzero(np.abs(yw - step.final) > band * scale)
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == yw.size - 1:
        settling = None
    else:
        settling = float(tw[outside[-1] + 1] - t0)
    return PerfMetrics(overshoot, rise, settling, float(final_err))


class _Fitness:
    """Callable ``z = (kp, ki) -> objective``; diverged runs score ``inf``."""

    def __init__(self, template: Scenario, spec: ObjectiveSpec):
        self.template = template
        self.spec = spec

    def __call__(self, z) -> float:
        kp, ki = float(z[0]), float(z[1])
        try:
            sc = self.template.with_gains(kp, ki)
        except ValueError:
            return math.inf
        traj = _run_kernel(sc)
        if traj.diverged:
            return math.inf
        return objective_value(traj, self.spec)


def make_fitness(sc_template: Scenario, spec: Optional[ObjectiveSpec] = None) -> _Fitness:
    if spec is None:
        spec = canonical_objective(sc_template.t_end)
    return _Fitness(sc_template, spec)


@dataclass
class ComparisonRow:
    name: str
    kp: float
    ki: float
    trajectory: Trajectory
    metrics: Optional[PerfMetrics]
    criteria: dict
    fitness: float
    diverged: bool
    message: str = ""


def compare_gains(
    sc: Scenario,
    gain_sets: Iterable[Union[GainSet, tuple]],
    spec: Optional[ObjectiveSpec] = None,
    band: float = 0.02,
) -> list[ComparisonRow]:
    """Simulate each named gain set and score the DC-link response."""
    gain_sets = [GainSet(*g) for g in gain_sets]
    if not gain_sets:
        raise ValueError("need at least one gain set")
    if spec is None:
        spec = canonical_objective(sc.t_end)
    rows = []
    for name, kp, ki in gain_sets:
        try:
            traj = run_closed_loop(sc.with_gains(kp, ki))
        except ValueError as exc:
            empty = np.empty(0)
            traj = Trajectory(*([empty] * 13), diverged=True, message=str(exc))
        if traj.diverged:
            nan = float("nan")
            rows.append(ComparisonRow(
                name, kp, ki, traj, None, {c: nan for c in ("ITAE", "IAE", "ISE", "ITSE")},
                math.inf, True, traj.message,
            ))
            continue
        series = ErrorSeries(traj.t, traj.vdc - traj.vdc_ref)
        step = sc.iq_ref if sc.vdc_ref.magnitude == 0 else sc.vdc_ref
        vdc_step = StepSpec(sc.vdc_ref.initial, sc.vdc_ref.final, step.step_time)
        rows.append(ComparisonRow(
            name, kp, ki, traj,
            step_metrics(traj, "vdc", vdc_step, band=band),
            all_criteria(series),
            objective_value(traj, spec),
            False,
        ))
    return rows
