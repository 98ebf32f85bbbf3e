"""Added-mass model problem: a rigid sphere of mass ``m_b`` translating in
inviscid fluid filling the shell ``r1 < r < r2``.

Separating the polar angle leaves radial profiles (p_hat, u_hat, v_hat) and
the scalar body velocity w_b.  The fluid reacts instantaneously, so the body
obeys

    (m_b + M_a) dw_b/dt = f_e(t),
    M_a = (4/3) rho pi r1^3 (1 + 2 q) / (2 - 2 q),   q = (r1/r2)^3,

and the semi-discrete pressure step of the partitioned scheme reduces to a
two-point boundary-value problem

    d/dr (r^2 dp/dr) - 2 p = 0,
    dp/dr(r1) + rho a = 0,   dp/dr(r2) = 0,
    m_b a + (4 pi r1^2 / 3) p(r1) = f_e,

whose solution reproduces the exact pressure and acceleration whenever
``m_b + M_a`` is bounded away from zero.  ``solve_pressure_bvp`` assembles
and solves that little linear system directly (general solution
``c1 r + c2 / r^2``), which makes it an independent cross-check of the
closed-form fields returned by ``exact_state``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import IllPosedError
from .specfun import ShellGeometry

__all__ = [
    "AmProblem",
    "AmExactState",
    "added_mass",
    "exact_state",
    "solve_pressure_bvp",
    "is_wellposed",
    "adaptive_trapezoid",
]


def added_mass(geom: ShellGeometry, rho: float) -> float:
    """Added mass of a sphere of radius r1 translating in the shell.

    Positive, strictly decreasing in r2, divergent as r2 -> r1, and tending
    to the free-space value (2/3) rho pi r1^3 as r2 -> infinity.
    """
    if rho < 0:
        raise ValueError("rho must be non-negative")
    q = (geom.r1 / geom.r2) ** 3
    return (4.0 / 3.0) * rho * math.pi * geom.r1**3 * (1 + 2 * q) / (2 - 2 * q)


def is_wellposed(m_b: float, M_a: float, K: float) -> bool:
    """Semi-discrete scheme is unconditionally stable iff m_b + M_a >= K > 0."""
    if K <= 0:
        raise ValueError("threshold K must be positive")
    return m_b + M_a >= K


def adaptive_trapezoid(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       tol: float = 1e-10, max_doublings: int = 22) -> float:
    """Composite trapezoid with interval doubling until two successive
    levels agree to ``tol`` relative (floor of ``tol`` absolute)."""
    if a == b:
        return 0.0
    n = 16
    x = np.linspace(a, b, n + 1)
    fx = np.asarray(f(x), dtype=float)
    total = np.trapezoid(fx, x)
    for _ in range(max_doublings):
        # new midpoints only; trapezoid refines by averaging in midpoint sums
        h = (b - a) / n
        mids = a + h * (np.arange(n) + 0.5)
        fm = np.asarray(f(mids), dtype=float)
        refined = 0.5 * total + 0.5 * h * fm.sum()
        n *= 2
        if abs(refined - total) <= tol * max(1.0, abs(refined)):
            return float(refined)
        total = refined
    return float(total)


@dataclass(frozen=True)
class AmProblem:
    """Problem data: geometry, fluid density, body mass, initial velocity,
    and the external force as a callable of time (vectorized)."""

    geom: ShellGeometry
    rho: float
    m_b: float
    w_b0: float = 0.0
    f_e: Callable[[np.ndarray], np.ndarray] = field(default=lambda t: np.zeros_like(np.asarray(t, dtype=float)))
    K: float | None = None  # explicit well-posedness threshold; default is relative

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.m_b < 0:
            raise ValueError("m_b must be non-negative")

    @property
    def M_a(self) -> float:
        return added_mass(self.geom, self.rho)

    @property
    def wellposed_threshold(self) -> float:
        """K if given, else a tiny fraction of the total effective inertia."""
        if self.K is not None:
            return self.K
        return 1e-12 * (self.m_b + self.M_a)


@dataclass(frozen=True)
class AmExactState:
    """Exact solution at time t.  The radial profiles are callables of r;
    the cos/sin angular factors are separated exactly and not represented."""

    t: float
    w_b: float
    a_w: float
    p_hat: Callable[[np.ndarray], np.ndarray]
    u_hat: Callable[[np.ndarray], np.ndarray]
    v_hat: Callable[[np.ndarray], np.ndarray]


def _pressure_profile(geom: ShellGeometry, rho: float, a_w: float):
    r1, r2 = geom.r1, geom.r2
    amp = rho * r1 * a_w / ((r2 / r1) ** 2 - r1 / r2)

    def p_hat(r):
        r = np.asarray(r, dtype=float)
        return amp * (r / r2 + r2**2 / (2 * r**2))

    return p_hat


def exact_state(problem: AmProblem, t: float, quad_tol: float = 1e-10,
                quad_n: int | None = None) -> AmExactState:
    """Exact fields at time ``t``.

    ``w_b`` integrates the forcing with an adaptive composite trapezoid
    (tolerance ``quad_tol``); pass ``quad_n`` to force a fixed resolution
    instead (used by convergence tests).

    Raises
    ------
    IllPosedError
        If ``m_b + M_a`` is below the well-posedness threshold.
    """
    M_a = problem.M_a
    denom = problem.m_b + M_a
    if denom < problem.wellposed_threshold or denom <= 0.0:
        raise IllPosedError(f"m_b + M_a = {denom:g} below threshold")
    if quad_n is not None:
        ts = np.linspace(0.0, t, quad_n + 1)
        impulse = float(np.trapezoid(np.asarray(problem.f_e(ts), dtype=float), ts)) if t != 0 else 0.0
    else:
        impulse = adaptive_trapezoid(problem.f_e, 0.0, t, tol=quad_tol)
    w_b = impulse / denom + problem.w_b0
    a_w = float(problem.f_e(np.asarray(t, dtype=float))) / denom

    geom = problem.geom
    r1, r2 = geom.r1, geom.r2

    def u_hat(r):
        r = np.asarray(r, dtype=float)
        return (r2**3 - r**3) / (r2**3 - r1**3) * (r1 / r) ** 3 * w_b

    def v_hat(r):
        r = np.asarray(r, dtype=float)
        return (2 * r**3 + r2**3) / (2 * r1**3 - 2 * r2**3) * (r1 / r) ** 3 * w_b

    return AmExactState(
        t=t, w_b=w_b, a_w=a_w,
        p_hat=_pressure_profile(geom, problem.rho, a_w),
        u_hat=u_hat, v_hat=v_hat,
    )


def solve_pressure_bvp(problem: AmProblem, f_e_np1: float):
    """Solve the semi-discrete pressure/acceleration step for a given force
    value at the new time level.

    The general solution of ``(r^2 p')' - 2 p = 0`` is ``c1 r + c2 / r^2``;
    the two Neumann conditions and the body equation close a 3x3 linear
    system in (c1, c2, a).  Returns ``(p_star, a_star)`` with ``p_star`` a
    callable radial profile.

    Raises
    ------
    IllPosedError
        If the system is singular (m_b + M_a below threshold).
    """
    geom, rho, m_b = problem.geom, problem.rho, problem.m_b
    if problem.m_b + problem.M_a < problem.wellposed_threshold:
        raise IllPosedError("pressure step singular: m_b + M_a below threshold")
    r1, r2 = geom.r1, geom.r2
    # rows: dp/dr(r1) + rho a = 0; dp/dr(r2) = 0; m_b a + (4 pi r1^2/3) p(r1) = f
    A = np.array([
        [1.0, -2.0 / r1**3, rho],
        [1.0, -2.0 / r2**3, 0.0],
        [(4 * math.pi * r1**2 / 3) * r1, (4 * math.pi * r1**2 / 3) / r1**2, m_b],
    ])
    rhs = np.array([0.0, 0.0, f_e_np1])
    try:
        c1, c2, a_star = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise IllPosedError(f"singular pressure system: {exc}") from exc

    def p_star(r):
        r = np.asarray(r, dtype=float)
        return c1 * r + c2 / r**2

    return p_star, float(a_star)
