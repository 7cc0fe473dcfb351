"""Compiled closed-loop simulation.

Mirrors ``simharness.run_closed_loop(engine="python")`` operation for
operation; the Python path is the readable reference and the test oracle for
this one.
"""
import math

import numpy as np
from numba import njit

OK = 0
NONFINITE = 1
VDC_GUARD = 2

# columns of the output buffer
ID, IQ, VDC, ID_REF, IQ_REF, VDC_REF, U1, U2 = range(8)
NCOLS = 8


@njit(cache=True, nogil=True)
def _ref(k, dt, initial, final, step_time):
    if k * dt >= step_time - 1e-9 * dt:
        return final
    return initial


@njit(cache=True, nogil=True)
def _law(x0, x1, x2, id_ref, iq_ref, rs, ls, omega, vs, lam1, lam2):
    v1 = lam1 * (id_ref - x0)
    v2 = lam2 * (iq_ref - x1)
    r_over_l = rs / ls
    k = ls / x2
    u1 = k * (-r_over_l * x0 + omega * x1 + vs / ls - v1)
    u2 = k * (-omega * x0 - r_over_l * x1 - v2)
    mag = math.hypot(u1, u2)
    if mag > 1.0:
        u1 /= mag
        u2 /= mag
    return u1, u2


@njit(cache=True, nogil=True)
def _rhs(x0, x1, x2, u1, u2, rs, ls, c, omega, vs):
    r_over_l = rs / ls
    return (
        -r_over_l * x0 + omega * x1 - (u1 / ls) * x2 + vs / ls,
        -omega * x0 - r_over_l * x1 - (u2 / ls) * x2,
        (u1 / c) * x0 + (u2 / c) * x1,
    )


@njit(cache=True, nogil=True)
def simulate(plant, gains, refs, id_from_pi, x_init, dt, n_steps, id_max, vdc_min):
    """Run the closed loop.

    plant = (rs, ls, c, omega, vs); gains = (lambda1, lambda2, kp, ki);
    refs = 3x3 array of (initial, final, step_time) rows for vdc, iq, id.
    Returns (buffer, samples_written, status).
    """
    rs, ls, c, omega, vs = plant[0], plant[1], plant[2], plant[3], plant[4]
    lam1, lam2, kp, ki = gains[0], gains[1], gains[2], gains[3]
    out = np.empty((n_steps + 1, NCOLS))
    x0, x1, x2 = x_init[0], x_init[1], x_init[2]
    integral = 0.0
    bound = id_max / ki if ki > 0 else np.inf
    h = 0.5 * dt

    for k in range(n_steps + 1):
        vdc_ref = _ref(k, dt, refs[0, 0], refs[0, 1], refs[0, 2])
        iq_ref = _ref(k, dt, refs[1, 0], refs[1, 1], refs[1, 2])
        if id_from_pi:
            e = vdc_ref - x2
            cand = integral + e * dt
            id_ref = kp * e + ki * cand
            if abs(id_ref) > id_max:
                id_ref = id_max if id_ref > 0 else -id_max
            else:
                integral = min(max(cand, -bound), bound)
        else:
            id_ref = _ref(k, dt, refs[2, 0], refs[2, 1], refs[2, 2])

        if x2 < vdc_min:
            return out, k, VDC_GUARD
        u1, u2 = _law(x0, x1, x2, id_ref, iq_ref, rs, ls, omega, vs, lam1, lam2)
        row = out[k]
        row[ID] = x0
        row[IQ] = x1
        row[VDC] = x2
        row[ID_REF] = id_ref
        row[IQ_REF] = iq_ref
        row[VDC_REF] = vdc_ref
        row[U1] = u1
        row[U2] = u2
        if k == n_steps:
            break

        a0, a1, a2 = _rhs(x0, x1, x2, u1, u2, rs, ls, c, omega, vs)
        y0, y1, y2 = x0 + h * a0, x1 + h * a1, x2 + h * a2
        if y2 < vdc_min:
            return out, k + 1, VDC_GUARD
        w1, w2 = _law(y0, y1, y2, id_ref, iq_ref, rs, ls, omega, vs, lam1, lam2)
        b0, b1, b2 = _rhs(y0, y1, y2, w1, w2, rs, ls, c, omega, vs)
        y0, y1, y2 = x0 + h * b0, x1 + h * b1, x2 + h * b2
        if y2 < vdc_min:
            return out, k + 1, VDC_GUARD
        w1, w2 = _law(y0, y1, y2, id_ref, iq_ref, rs, ls, omega, vs, lam1, lam2)
        c0, c1, c2 = _rhs(y0, y1, y2, w1, w2, rs, ls, c, omega, vs)
        y0, y1, y2 = x0 + dt * c0, x1 + dt * c1, x2 + dt * c2
        if y2 < vdc_min:
            return out, k + 1, VDC_GUARD
        w1, w2 = _law(y0, y1, y2, id_ref, iq_ref, rs, ls, omega, vs, lam1, lam2)
        d0, d1, d2 = _rhs(y0, y1, y2, w1, w2, rs, ls, c, omega, vs)

        s = dt / 6.0
        x0 = x0 + s * (a0 + 2.0 * b0 + 2.0 * c0 + d0)
        x1 = x1 + s * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        x2 = x2 + s * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        if not (math.isfinite(x0) and math.isfinite(x1) and math.isfinite(x2)):
            return out, k + 1, NONFINITE
        if x2 <= vdc_min:
            return out, k + 1, VDC_GUARD
    return out, n_steps + 1, OK
