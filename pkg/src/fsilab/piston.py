"""One-dimensional piston benchmark: a rigid block closing one end of a
fluid channel, driven by a prescribed end pressure.

The fluid column is spatially uniform (its velocity equals the body
velocity), so the whole fluid acts through its added mass

    M_a(t) = rho H W (L - x_I(t)),

where x_I is the wetted face of the body, and the body obeys

    (m_b + M_a(t)) dv/dt = -H W p_L(t).

The reference motion prescribes x_I(t) = alpha_b sin(2 pi t), which fixes
the applied end pressure p_L(t) = -(m_b + M_a) a_b / (H W) and, with it,
the full exact solution: the channel pressure is linear in x between
p(x_I) = m_b a_b / (-H W) ... p_L, giving the momentum identity
m_b a_b = -H W p(x_I) at all times.

The partitioned update mirrors the interface coupling of the full scheme,
reduced to one degree of freedom: leapfrog position extrapolation fixes the
added mass for a predictor acceleration solve, trapezoidal velocity and
position updates follow, and one correction pass repeats the solve at the
corrected geometry.  The effective inertia m_b + M_a stays positive for a
body of any density, including zero, so the update never degenerates; the
scheme is second order and exact whenever the acceleration is constant in
time (the trapezoid rule is exact for linear integrands and the leapfrog
extrapolation for quadratic paths).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import IllPosedError

__all__ = [
    "PistonParams",
    "PistonState",
    "added_mass",
    "exact_state",
    "exact_end_pressure",
    "PistonStepper",
    "simulate_piston",
    "convergence_study",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PistonParams:
    """Channel and body geometry.  The body has mass rho_b L_b H W; the
    prescribed motion amplitude must keep fluid in the channel."""

    rho: float = 1.0
    height: float = 1.0
    width: float = 1.0
    length: float = 1.5
    body_length: float = 1.0
    rho_b: float = 1.0
    alpha_b: float = 0.25

    def __post_init__(self):
        if min(self.rho, self.height, self.width, self.length, self.body_length) <= 0:
            raise ValueError("geometry and density must be positive")
        if self.rho_b < 0:
            raise ValueError("rho_b must be non-negative")
        if self.alpha_b >= self.length:
            raise ValueError("prescribed motion would empty the channel")

    @property
    def m_b(self) -> float:
        return self.rho_b * self.body_length * self.height * self.width

    @property
    def section(self) -> float:
        return self.height * self.width


def added_mass(x_i: float, p: PistonParams) -> float:
    """Fluid column inertia rho H W (L - x_I)."""
    if x_i >= p.length:
        raise ValueError(f"interface x_I={x_i} at or past the channel end")
    return p.rho * p.section * (p.length - x_i)


@dataclass
class PistonState:
    """Body state plus the one history value the leapfrog predictor needs."""

    t: float
    x_b: float
    v_b: float
    a_b: float
    prev_x_b: float


@dataclass(frozen=True)
class ExactPiston:
    """Exact solution sample: body kinematics, end pressure, and the
    linear-in-x channel pressure."""

    t: float
    x_b: float
    v_b: float
    a_b: float
    x_i: float
    m_a: float
    p_l: float
    pressure: Callable[[np.ndarray], np.ndarray]


def exact_state(t: float, p: PistonParams) -> ExactPiston:
    """Exact fields for the prescribed motion x_I = alpha_b sin(2 pi t)."""
    x_i = p.alpha_b * math.sin(TWO_PI * t)
    v = p.alpha_b * TWO_PI * math.cos(TWO_PI * t)
    a = -p.alpha_b * TWO_PI**2 * math.sin(TWO_PI * t)
    m_a = added_mass(x_i, p)
    p_l = -(p.m_b + m_a) * a / p.section
    ratio = p.m_b / m_a

    def pressure(x):
        x = np.asarray(x, dtype=float)
        return p_l + (p.length - x) / (p.length - x_i) * (-p_l / (ratio + 1.0))

    return ExactPiston(t=t, x_b=x_i - p.body_length / 2, v_b=v, a_b=a,
                       x_i=x_i, m_a=m_a, p_l=p_l, pressure=pressure)


def exact_end_pressure(t, p: PistonParams):
    """Applied pressure at the fixed channel end (vectorized)."""
    t = np.asarray(t, dtype=float)
    x_i = p.alpha_b * np.sin(TWO_PI * t)
    a = -p.alpha_b * TWO_PI**2 * np.sin(TWO_PI * t)
    m_a = p.rho * p.section * (p.length - x_i)
    out = -(p.m_b + m_a) * a / p.section
    return float(out) if out.ndim == 0 else out


class PistonStepper:
    """Predictor-corrector update of the 1-DOF piston driven by an end
    pressure (defaults to the exact one, making the exact solution the
    reference)."""

    def __init__(self, p: PistonParams, p_l: Callable[[float], float] | None = None):
        self.p = p
        self.p_l = p_l if p_l is not None else (lambda t: exact_end_pressure(t, p))

    def _acceleration(self, x_b: float, t: float) -> float:
        x_i = x_b + self.p.body_length / 2
        if x_i >= self.p.length:
            raise IllPosedError(f"fluid column vanished at t={t:g}")
        m_eff = self.p.m_b + added_mass(x_i, self.p)
        return -self.p.section * self.p_l(t) / m_eff

    def initial_state(self, dt: float, t0: float = 0.0) -> PistonState:
        ex = exact_state(t0, self.p)
        # Taylor seed for the leapfrog history, consistent to O(dt^3)
        prev = ex.x_b - dt * ex.v_b + 0.5 * dt**2 * ex.a_b
        return PistonState(t=t0, x_b=ex.x_b, v_b=ex.v_b, a_b=ex.a_b, prev_x_b=prev)

    def step(self, s: PistonState, dt: float) -> PistonState:
        if dt <= 0:
            raise ValueError("dt must be positive")
        t1 = s.t + dt
        # prediction at leapfrog-extrapolated geometry
        x_e = s.prev_x_b + 2.0 * dt * s.v_b
        a_star = self._acceleration(x_e, t1)
        v_star = s.v_b + 0.5 * dt * (a_star + s.a_b)
        x_star = s.x_b + 0.5 * dt * (v_star + s.v_b)
        # correction at the predicted geometry
        a_new = self._acceleration(x_star, t1)
        v_new = s.v_b + 0.5 * dt * (a_new + s.a_b)
        x_new = s.x_b + 0.5 * dt * (v_new + s.v_b)
        return PistonState(t=t1, x_b=x_new, v_b=v_new, a_b=a_new, prev_x_b=s.x_b)


def simulate_piston(p: PistonParams, dt: float, t_final: float,
                    p_l: Callable[[float], float] | None = None):
    """Run the stepper; returns arrays (t, x_b, v_b, a_b)."""
    stepper = PistonStepper(p, p_l)
    n = int(round(t_final / dt))
    out = np.empty((n + 1, 4))
    s = stepper.initial_state(dt)
    out[0] = (s.t, s.x_b, s.v_b, s.a_b)
    for k in range(1, n + 1):
        s = stepper.step(s, dt)
        out[k] = (s.t, s.x_b, s.v_b, s.a_b)
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


def convergence_study(p: PistonParams, dts=(0.02, 0.01, 0.005, 0.0025),
                      t_final: float = 0.8):
    """Max-norm endpoint errors in (x_b, v_b) against the exact solution and
    the observed orders between successive step sizes."""
    ref = exact_state(t_final, p)
    errs = []
    for dt in dts:
        t, x, v, _ = simulate_piston(p, dt, t_final)
        errs.append(max(abs(x[-1] - ref.x_b), abs(v[-1] - ref.v_b)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    return list(dts), errs, orders
