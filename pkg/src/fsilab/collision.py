"""Repulsive-force collision model for rigid bodies near walls and hinges.

A body approaching a contact threshold y0 feels a penalty force that is
zero above an activation layer of width delta, ramps quadratically inside
it, and saturates below the threshold:

    g_rf(y) = 0                          for y > y0 + delta
            = (1/eps) ((y-y0-delta)/delta)^2   for y0 <= y <= y0 + delta
            = 1/eps                      for y < y0

with a damping coefficient B(y) of the same shape (magnitude B0) modelling
collision energy loss.  The angular variants g_rt / B(theta) bound a hinge
angle to [theta_min, theta_max] with separate stiffnesses at the two stops,
and a pairwise variant repels two spheres along their centre line.

The one-dimensional channel model reduces to a two-state ODE for the body:
the fluid contributes only its added mass M_a = rho L H, and after
normalizing by (m_b + M_a),

    dv/dt = f(t) + g_rf(y; eps_t) - B(y; B0_t) v,
    eps_t = eps (m_b + M_a),    B0_t = B0 / (m_b + M_a).

For the constant drive f = -1 the undamped dynamics conserve

    E = v^2/2 + y - (y - y0 - delta)^3 / (3 eps_t delta^2)

inside the layer (the cubic term vanishes at the layer edge, so E is
continuous there); with damping dE/dt = -B v^2 <= 0.  Trajectories are
integrated with the classical fourth-order Runge-Kutta step.  Four regimes:
penetration when the ramp cannot stop the body (min y < y0), an elastic
rebound when it can, and under/over-damped approaches to the equilibrium
inside the layer when damping acts (distinguished by the number of velocity
sign changes after layer entry).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericsError

__all__ = [
    "RepulsionParams",
    "AngularRepulsionParams",
    "MprfSystem",
    "Trajectory",
    "repulsive_force",
    "damping_coefficient",
    "repulsive_torque",
    "angular_damping_coefficient",
    "pairwise_repulsion",
    "simulate",
    "energy",
]


@dataclass(frozen=True)
class RepulsionParams:
    """Linear contact model: threshold y0, layer width delta, stiffness eps
    (force saturates at 1/eps) and damping magnitude b0."""

    y0: float
    delta: float
    eps: float
    b0: float = 0.0

    def __post_init__(self):
        if self.delta <= 0 or self.eps <= 0 or self.b0 < 0:
            raise ValueError("need delta > 0, eps > 0, b0 >= 0")


@dataclass(frozen=True)
class AngularRepulsionParams:
    """Hinge-stop model on [theta_min, theta_max]: stiffness eps1 at the
    lower stop (positive torque), eps2 at the upper stop (negative)."""

    theta_min: float
    theta_max: float
    delta: float
    eps1: float
    eps2: float
    b0: float = 0.0

    def __post_init__(self):
        if self.delta <= 0 or self.eps1 <= 0 or self.eps2 <= 0 or self.b0 < 0:
            raise ValueError("need delta > 0, eps1/eps2 > 0, b0 >= 0")
        if self.theta_min + self.delta >= self.theta_max - self.delta:
            raise ValueError("activation layers overlap: need "
                             "theta_min + delta < theta_max - delta")


def _ramp(s):
    """Quadratic activation profile on s in [-1, 0] with value 1 at s = -1."""
    return s * s


def repulsive_force(y, p: RepulsionParams):
    """Penalty force g_rf(y); vectorized."""
    y = np.asarray(y, dtype=float)
    s = (y - p.y0 - p.delta) / p.delta
    out = np.where(y > p.y0 + p.delta, 0.0,
                   np.where(y < p.y0, 1.0 / p.eps, _ramp(s) / p.eps))
    return float(out) if out.ndim == 0 else out


def damping_coefficient(y, p: RepulsionParams):
    """Damping coefficient B(y), same activation shape, magnitude b0."""
    y = np.asarray(y, dtype=float)
    s = (y - p.y0 - p.delta) / p.delta
    out = np.where(y > p.y0 + p.delta, 0.0,
                   np.where(y < p.y0, p.b0, p.b0 * _ramp(s)))
    return float(out) if out.ndim == 0 else out


def repulsive_torque(theta, p: AngularRepulsionParams):
    """Hinge-stop torque: +1/eps1 ramping off above theta_min, -1/eps2
    ramping on below theta_max, zero in the dead zone between layers."""
    t = np.asarray(theta, dtype=float)
    lo = (t - p.theta_min - p.delta) / p.delta
    hi = (t - p.theta_max + p.delta) / p.delta
    out = np.where(
        t <= p.theta_min, 1.0 / p.eps1,
        np.where(t <= p.theta_min + p.delta, _ramp(lo) / p.eps1,
                 np.where(t < p.theta_max - p.delta, 0.0,
                          np.where(t <= p.theta_max, -_ramp(hi) / p.eps2,
                                   -1.0 / p.eps2))))
    return float(out) if out.ndim == 0 else out


def angular_damping_coefficient(theta, p: AngularRepulsionParams):
    """Symmetric damping ramps with plateau b0 outside the stops.  The
    plateau takes precedence outside [theta_min, theta_max] (the branch
    values agree at the stops, so only the bookkeeping is affected)."""
    t = np.asarray(theta, dtype=float)
    lo = (t - p.theta_min - p.delta) / p.delta
    hi = (t - p.theta_max + p.delta) / p.delta
    out = np.where(
        (t < p.theta_min) | (t > p.theta_max), p.b0,
        np.where(t <= p.theta_min + p.delta, p.b0 * _ramp(lo),
                 np.where(t < p.theta_max - p.delta, 0.0, p.b0 * _ramp(hi))))
    return float(out) if out.ndim == 0 else out


def pairwise_repulsion(x1, x2, r1: float, r2: float, delta: float, eps: float) -> np.ndarray:
    """Repulsive force on body 1 from body 2, along the centre line:
    magnitude (1/eps)((D - r1 - r2 - delta)/delta)^2 once the gap closes
    below delta, zero beyond."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    dvec = x1 - x2
    dist = float(np.linalg.norm(dvec))
    if dist == 0.0:
        raise ValueError("coincident centres")
    if dist > r1 + r2 + delta:
        return np.zeros_like(dvec)
    s = (dist - r1 - r2 - delta) / delta
    return (_ramp(s) / eps) * dvec / dist


@dataclass(frozen=True)
class MprfSystem:
    """Channel model: body mass, added mass (rho L H for the channel), and
    the normalized drive f(t).  Normalized stiffness and damping follow as
    eps_t = eps (m_b + M_a) and b0_t = b0 / (m_b + M_a)."""

    m_b: float
    M_a: float
    contact: RepulsionParams
    f: Callable[[float], float] = field(default=lambda t: -1.0)

    def __post_init__(self):
        if self.m_b + self.M_a <= 0:
            raise ValueError("need m_b + M_a > 0")

    @property
    def eps_tilde(self) -> float:
        return self.contact.eps * (self.m_b + self.M_a)

    @property
    def b0_tilde(self) -> float:
        return self.contact.b0 / (self.m_b + self.M_a)

    @property
    def normalized_contact(self) -> RepulsionParams:
        return RepulsionParams(self.contact.y0, self.contact.delta,
                               self.eps_tilde, self.b0_tilde)


def energy(y, v, p: RepulsionParams):
    """Total energy for the constant drive f = -1: kinetic + gravity +
    penalty potential.  ``p`` carries the normalized stiffness.  Continuous
    across both layer edges; conserved without damping while the drive is
    -1."""
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    s3 = (y - p.y0 - p.delta) ** 3 / (3.0 * p.eps * p.delta**2)
    pot = np.where(y > p.y0 + p.delta, 0.0,
                   np.where(y >= p.y0, -s3,
                            p.delta / (3 * p.eps) - (y - p.y0) / p.eps))
    out = 0.5 * v**2 + y + pot
    return float(out) if out.ndim == 0 else out


@dataclass
class Trajectory:
    """Simulated path: times, positions, velocities, energies and regime
    flags (inside activation layer / below threshold)."""

    t: np.ndarray
    y: np.ndarray
    v: np.ndarray
    e: np.ndarray
    in_layer: np.ndarray
    below: np.ndarray
    params: RepulsionParams

    @property
    def penetrated(self) -> bool:
        return bool(np.any(self.y < self.params.y0))

    def sign_changes_after_entry(self) -> int:
        entered = np.flatnonzero(self.in_layer | self.below)
        if entered.size == 0:
            return 0
        v = self.v[entered[0]:]
        s = np.sign(v[np.abs(v) > 1e-12])
        return int(np.sum(s[1:] != s[:-1]))

    def classify(self) -> str:
        """Regimes: I penetration, II elastic rebound, III under-damped,
        IV over-damped (no velocity reversal after layer entry)."""
        if self.penetrated:
            return "I"
        if self.params.b0 == 0.0:
            return "II"
        return "III" if self.sign_changes_after_entry() >= 2 else "IV"


def simulate(sys: MprfSystem, dt: float = 1e-4, t_final: float = 3.0,
             y0: float = 1.0, v0: float = 0.0) -> Trajectory:
    """Integrate the normalized two-state ODE with classical RK4.

    Raises
    ------
    NumericsError
        If |y| or |v| exceeds 1e12 (blow-up guard).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = sys.normalized_contact
    f = sys.f

    def rhs(t, y, v):
        return v, f(t) + repulsive_force(y, p) - damping_coefficient(y, p) * v

    n = int(round(t_final / dt))
    t = np.empty(n + 1)
    ys = np.empty(n + 1)
    vs = np.empty(n + 1)
    y, v = float(y0), float(v0)
    t[0], ys[0], vs[0] = 0.0, y, v
    for k in range(1, n + 1):
        tk = (k - 1) * dt
        k1y, k1v = rhs(tk, y, v)
        k2y, k2v = rhs(tk + dt / 2, y + dt / 2 * k1y, v + dt / 2 * k1v)
        k3y, k3v = rhs(tk + dt / 2, y + dt / 2 * k2y, v + dt / 2 * k2v)
        k4y, k4v = rhs(tk + dt, y + dt * k3y, v + dt * k3v)
        y += dt / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if abs(y) > 1e12 or abs(v) > 1e12:
            raise NumericsError(f"trajectory blow-up at t={k * dt:g}")
        t[k], ys[k], vs[k] = k * dt, y, v
    return Trajectory(
        t=t, y=ys, v=vs, e=energy(ys, vs, p),
        in_layer=(ys >= p.y0) & (ys <= p.y0 + p.delta),
        below=ys < p.y0,
        params=p,
    )
