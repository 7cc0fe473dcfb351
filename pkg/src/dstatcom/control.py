"""Exact feedback-linearizing current control with an outer PI DC-voltage loop.

The inner law cancels the plant's current dynamics so that ``did/dt = v1`` and
``diq/dt = v2``; two proportional loops ``v = lambda (i_ref - i)`` then give
first-order current tracking with time constant ``1/lambda``. The outer PI
regulator turns the DC-link voltage error into the d-axis current reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .model import DEFAULT_VDC_MIN, ControlInput, PlantParams, PlantState

__all__ = [
    "ControllerGains",
    "PiState",
    "ModulationCommand",
    "VdcTooLow",
    "pi_update",
    "inner_loop",
    "feedback_linearize",
    "saturate",
    "to_modulation",
    "DEFAULT_ID_MAX",
]

DEFAULT_ID_MAX = 50.0


class VdcTooLow(ValueError):
    """The linearizing law divides by vdc and is singular as vdc -> 0."""


@dataclass(frozen=True)
class ControllerGains:
    lambda1: float = 1000.0
    lambda2: float = 1000.0
    kp: float = 1.0
    ki: float = 70.0

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("inner-loop gains must be positive")
        if not (self.kp >= 0 and self.ki >= 0):
            raise ValueError("PI gains must be non-negative")

    def with_pi(self, kp: float, ki: float) -> "ControllerGains":
        return replace(self, kp=float(kp), ki=float(ki))


@dataclass(frozen=True)
class PiState:
    integral: float = 0.0


class ModulationCommand(NamedTuple):
    m: float
    alpha: float


def pi_update(
    vdc_ref: float,
    vdc: float,
    st: PiState,
    g: ControllerGains,
    dt: float,
    id_max: float = DEFAULT_ID_MAX,
) -> tuple[float, PiState]:
    """One forward-Euler step of the DC-voltage PI regulator.

    Anti-windup is by conditional integration: when the output would exceed
    ``id_max`` it is clamped and the integrator keeps its previous value. The
    integral is also bounded by ``id_max / ki``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    e = vdc_ref - vdc
    integral = st.integral + e * dt
    out = g.kp * e + g.ki * integral
    if abs(out) > id_max:
        return math.copysign(id_max, out), st
    if g.ki > 0:
        bound = id_max / g.ki
        integral = min(max(integral, -bound), bound)
    return out, PiState(integral)


def inner_loop(
    x: PlantState, id_ref: float, iq_ref: float, g: ControllerGains
) -> tuple[float, float]:
    return g.lambda1 * (id_ref - x[0]), g.lambda2 * (iq_ref - x[1])


def feedback_linearize(
    x: PlantState,
    v1,
    v2,
    p: PlantParams,
    vdc_min: float = DEFAULT_VDC_MIN,
) -> ControlInput:
    """Control vector that makes the current derivatives equal ``(v1, v2)``.

    Vectorizes over numpy arrays.
    """
    i_d, i_q, vdc = x
    if np.any(np.asarray(vdc) < vdc_min):
        raise VdcTooLow(f"vdc below {vdc_min} V; linearizing law is singular")
    r_over_l = p.rs / p.ls
    k = p.ls / vdc
    u1 = k * (-r_over_l * i_d + p.omega * i_q + p.vs / p.ls - v1)
    u2 = k * (-p.omega * i_d - r_over_l * i_q - v2)
    return ControlInput(u1, u2)


def saturate(u: ControlInput) -> ControlInput:
    """Clamp to the unit disk, preserving direction."""
    u1, u2 = u
    mag = math.hypot(u1, u2)
    if mag <= 1.0:
        return ControlInput(u1, u2)
    return ControlInput(u1 / mag, u2 / mag)


def to_modulation(u: ControlInput) -> ModulationCommand:
    """Polar form of the control vector; ``alpha`` is measured from the d-axis."""
    alpha = math.atan2(u[1], u[0])
    if alpha == -math.pi:
        alpha = math.pi
    return ModulationCommand(math.hypot(u[0], u[1]), alpha)
