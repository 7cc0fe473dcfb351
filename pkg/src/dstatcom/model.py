"""Averaged dq-frame model of a DSTATCOM.

State is ``(id, iq, vdc)``; the control vector ``(u1, u2) = (M cos a, M sin a)``
enters both the current equations and the DC-link equation::

    did/dt  = -(rs/ls) id + omega iq - u1 vdc / ls + vs / ls
    diq/dt  = -omega id - (rs/ls) iq - u2 vdc / ls
    dvdc/dt = (u1 id + u2 iq) / c

The u-dependent terms cancel in the stored-energy balance, so
``d/dt [ls/2 (id^2 + iq^2) + c/2 vdc^2] = vs id - rs (id^2 + iq^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

__all__ = [
    "PlantParams",
    "PlantState",
    "ControlInput",
    "StateDerivative",
    "IntegrationDiverged",
    "derivative",
    "step_rk4",
    "compute_power",
    "stored_energy",
    "power_balance_rhs",
    "phase_peak_from_line_rms",
    "canonical_params",
    "DEFAULT_VDC_MIN",
]

DEFAULT_VDC_MIN = 1.0


class IntegrationDiverged(RuntimeError):
    """Raised when an integration step produces a non-finite state or a
    collapsed DC link (``vdc`` at or below the guard)."""

    def __init__(self, message: str, state: "PlantState | None" = None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class PlantParams:
    rs: float
    ls: float
    c: float
    omega: float
    vs: float

    def __post_init__(self):
        for name in ("rs", "ls", "c", "omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.vs >= 0:
            # vs = 0 is allowed for the unforced (decay) test system
            raise ValueError(f"vs must be non-negative, got {self.vs!r}")

    def replace(self, **changes) -> "PlantParams":
        fields = {k: getattr(self, k) for k in ("rs", "ls", "c", "omega", "vs")}
        fields.update(changes)
        return PlantParams(**fields)


class PlantState(NamedTuple):
    id: float
    iq: float
    vdc: float


class ControlInput(NamedTuple):
    u1: float
    u2: float


class StateDerivative(NamedTuple):
    did_dt: float
    diq_dt: float
    dvdc_dt: float


def phase_peak_from_line_rms(v_ll_rms: float) -> float:
    """Peak phase amplitude of a balanced set given its line-to-line RMS value."""
    return v_ll_rms * math.sqrt(2.0) / math.sqrt(3.0)


def canonical_params() -> PlantParams:
    """Distribution system used throughout the tuning study
    (C = 4900 uF, 50 Hz, Rs = 0.28 ohm, L = 1.3 mH, 110 V rms line-to-line)."""
    return PlantParams(
        rs=0.28,
        ls=0.0013,
        c=4900e-6,
        omega=2.0 * math.pi * 50.0,
        vs=phase_peak_from_line_rms(110.0),
    )


def derivative(state: PlantState, u: ControlInput, p: PlantParams) -> StateDerivative:
    """Right-hand side of the averaged model.

    Works elementwise when the state and input components are numpy arrays.
    """
    i_d, i_q, vdc = state
    u1, u2 = u
    r_over_l = p.rs / p.ls
    return StateDerivative(
        -r_over_l * i_d + p.omega * i_q - (u1 / p.ls) * vdc + p.vs / p.ls,
        -p.omega * i_d - r_over_l * i_q - (u2 / p.ls) * vdc,
        (u1 / p.c) * i_d + (u2 / p.c) * i_q,
    )


InputLike = Union[ControlInput, Callable[[PlantState], ControlInput]]


def step_rk4(
    state: PlantState,
    u: InputLike,
    p: PlantParams,
    dt: float,
    vdc_min: float = DEFAULT_VDC_MIN,
) -> PlantState:
    """Advance ``state`` by one classical RK4 step of size ``dt``.

    ``u`` is either a fixed :class:`ControlInput` (zero-order hold over the
    step) or a state-feedback callable evaluated at every RK4 stage.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    law = u if callable(u) else (lambda _x, _u=ControlInput(*u): _u)

    x0, x1, x2 = state
    k1 = derivative(state, law(state), p)
    s2 = PlantState(x0 + 0.5 * dt * k1[0], x1 + 0.5 * dt * k1[1], x2 + 0.5 * dt * k1[2])
    k2 = derivative(s2, law(s2), p)
    s3 = PlantState(x0 + 0.5 * dt * k2[0], x1 + 0.5 * dt * k2[1], x2 + 0.5 * dt * k2[2])
    k3 = derivative(s3, law(s3), p)
    s4 = PlantState(x0 + dt * k3[0], x1 + dt * k3[1], x2 + dt * k3[2])
    k4 = derivative(s4, law(s4), p)

    h = dt / 6.0
    new = PlantState(
        x0 + h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x1 + h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        x2 + h * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    )
    if not np.all(np.isfinite(np.asarray(new, dtype=float))):
        raise IntegrationDiverged("non-finite state after RK4 step", new)
    if np.any(np.asarray(new.vdc) <= vdc_min):
        raise IntegrationDiverged(f"vdc fell to or below guard {vdc_min} V", new)
    return new


def compute_power(state: PlantState, p: PlantParams) -> tuple[float, float]:
    """Active and reactive power with the d-axis aligned to the grid voltage."""
    return 1.5 * p.vs * state[0], 1.5 * p.vs * state[1]


def stored_energy(state: PlantState, p: PlantParams):
    i_d, i_q, vdc = state
    return 0.5 * p.ls * (i_d * i_d + i_q * i_q) + 0.5 * p.c * vdc * vdc


def power_balance_rhs(state: PlantState, p: PlantParams):
    """Rate of change of stored energy implied by the model: grid input minus
    resistive loss."""
    i_d, i_q, _ = state
    return p.vs * i_d - p.rs * (i_d * i_d + i_q * i_q)
