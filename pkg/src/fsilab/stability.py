"""Per-step amplification analysis of the partitioned rotating-sphere
scheme.

With the normal-mode substitution (state at step n proportional to A^n),
the scheme admits a nontrivial solution exactly when the transcendental
characteristic function vanishes:

    N(A) = gamma_v (A - 1)^3
         + gamma_0 [ Ibar (A - 1) + C2 (A + 1) ] A^2,

    gamma_v = (2 beta_d Dbar - C1)^2,
    gamma_0 = Ibar + 4 beta_d Dbar - C1,
    Dbar    = 1 - exp(-delta),

where C1 and C2 are dimensionless Dirichlet-to-Neumann transfer
coefficients of the shell profile,

    C_m = (r1/2) [ 3 phi_m(r1)/r1 - 4 phi_m(r1+dr)/(r1+dr)
                   + phi_m(r1+2dr)/(r1+2dr) ],

with phi_1 evaluated at zeta_1 = delta/dr and phi_2 at
zeta_2 = zeta_1 sqrt((A-1)/(A+1)) (principal root; the profile is even in
zeta so the branch is immaterial).  The scheme is stable in the
Godunov-Ryabenkii sense iff N has no roots with |A| > 1.

The number of roots is not known a priori, so roots outside the unit
circle are counted with the argument principle over the annulus
1 + eps < |A| < R (N is analytic there: the resonances of phi_2 require
(A-1)/(A+1) on the negative real axis, i.e. A strictly inside the unit
interval) and located by recursive contour subdivision plus Newton polish.
Stability boundaries in the (delta, beta_d) plane are traced by
pseudo-arclength continuation of the two-real-equation system
N(e^{i theta}; delta, beta_d) = 0 in the unknowns (theta, delta, beta_d).

Everything here is pure; grid scans may fan cells out to a process pool.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ContourError, ConvergenceError
from .specfun import ShellGeometry, dirichlet_profile

__all__ = [
    "StabilityParams",
    "StabilityVerdict",
    "transfer_coefficient",
    "characteristic_function",
    "count_unstable_roots",
    "find_unstable_roots",
    "scan_region",
    "StabilityMap",
    "CellResult",
    "trace_boundary",
]


@dataclass(frozen=True)
class StabilityParams:
    """Dimensionless analysis point: shell geometry, surface-derivative
    spacing, boundary-layer ratio delta, damping parameter beta_d and
    dimensionless body inertia."""

    geom: ShellGeometry
    dr: float
    delta: float
    beta_d: float
    i_bar: float = 0.0

    def __post_init__(self):
        if self.dr <= 0 or self.delta <= 0:
            raise ValueError("dr and delta must be positive")
        if self.beta_d < 0 or self.i_bar < 0:
            raise ValueError("beta_d and i_bar must be non-negative")
        if self.geom.r1 + 2 * self.dr >= self.geom.r2:
            raise ValueError("need r1 + 2 dr < r2 for the surface stencil")

    @property
    def zeta1(self) -> float:
        return self.delta / self.dr

    @property
    def dww_bar(self) -> float:
        return -math.expm1(-self.delta)


@dataclass
class StabilityVerdict:
    """Roots with |A| > 1 (empty means stable).  ``max_modulus`` is the
    largest root modulus, or 1.0 when no unstable root exists."""

    unstable_root_count: int
    roots: list[complex] = field(default_factory=list)
    max_modulus: float = 1.0

    @property
    def stable(self) -> bool:
        return self.unstable_root_count == 0


def transfer_coefficient(zeta, p: StabilityParams):
    """Dimensionless Dirichlet-to-Neumann coefficient of the shell profile
    at parameter ``zeta`` (vectorized; conjugate-symmetric in ``zeta``)."""
    r1, dr = p.geom.r1, p.dr
    radii = np.array([r1, r1 + dr, r1 + 2 * dr])
    z = np.asarray(zeta, dtype=complex)
    phi = dirichlet_profile(z[..., None], radii, p.geom)
    c = (r1 / 2.0) * (3.0 * phi[..., 0] / radii[0]
                      - 4.0 * phi[..., 1] / radii[1]
                      + phi[..., 2] / radii[2])
    return complex(c) if np.ndim(zeta) == 0 else c


class _Characteristic:
    """Callable N(A) with the A-independent pieces precomputed."""

    def __init__(self, p: StabilityParams):
        self.p = p
        self.c1 = transfer_coefficient(p.zeta1, p)
        self.gamma_v = (2.0 * p.beta_d * p.dww_bar - self.c1) ** 2
        self.gamma_0 = p.i_bar + 4.0 * p.beta_d * p.dww_bar - self.c1

    def _c2(self, A):
        zeta2 = self.p.zeta1 * np.sqrt((A - 1.0) / (A + 1.0))
        return transfer_coefficient(zeta2, self.p)

    def __call__(self, A):
        A = np.asarray(A, dtype=complex)
        if np.any(np.abs(A + 1.0) < 1e-12):
            raise ValueError("characteristic function is singular at A = -1")
        c2 = self._c2(A)
        out = (self.gamma_v * (A - 1.0) ** 3
               + self.gamma_0 * (self.p.i_bar * (A - 1.0) + c2 * (A + 1.0)) * A**2)
        return out

    def scale(self, A):
        """Magnitude of the assembled terms; reference for residual tests."""
        A = np.asarray(A, dtype=complex)
        c2 = self._c2(A)
        return (abs(self.gamma_v) * np.abs(A - 1.0) ** 3
                + abs(self.gamma_0) * (self.p.i_bar * np.abs(A - 1.0)
                                       + np.abs(c2) * np.abs(A + 1.0)) * np.abs(A) ** 2)

    def derivative(self, A):
        """4th-order central difference with step 1e-5 max(1, |A|)."""
        A = np.asarray(A, dtype=complex)
        h = 1e-5 * np.maximum(1.0, np.abs(A))
        return (-self(A + 2 * h) + 8 * self(A + h)
                - 8 * self(A - h) + self(A - 2 * h)) / (12 * h)


def characteristic_function(A, p: StabilityParams):
    """Evaluate N(A); vectorized over A.  See the module docstring."""
    out = _Characteristic(p)(A)
    return complex(out) if np.ndim(A) == 0 else out


def _path_integral(nv: _Characteristic, path, dpath, t0: float, t1: float,
                   m0: int = 64, m_max: int = 1 << 20, tol: float = 0.02):
    """integral of N'/N along A = path(t), t in [t0, t1], by trapezoid with
    interval doubling.

    A zero at distance d from the path makes the integrand a Lorentzian of
    width ~d, so agreement between two coarse levels can be pure aliasing;
    doubling therefore continues until the sample spacing also resolves the
    observed peak of |N'/N|.  Raises ContourError if the path grazes a zero.
    """
    prev = None
    m = m0
    while m <= m_max:
        t = np.linspace(t0, t1, m + 1)
        A = path(t)
        f = nv(A)
        absf = np.abs(f)
        if np.min(absf) < 1e-12 * np.median(absf):
            raise ContourError("contour passes through a zero")
        integrand = nv.derivative(A) / f * dpath(t)
        val = np.trapezoid(integrand, t)
        resolved = m >= 4.0 * abs(t1 - t0) * float(np.max(np.abs(integrand)))
        if resolved and prev is not None and abs(val - prev) < tol:
            return val
        prev = val if resolved else None
        m *= 2
    raise ConvergenceError("contour integral did not converge")


def _winding_circle(nv: _Characteristic, radius: float, m0: int = 64) -> int:
    path = lambda t: radius * np.exp(1j * t)
    dpath = lambda t: 1j * radius * np.exp(1j * t)
    val = _path_integral(nv, path, dpath, 0.0, 2.0 * math.pi, m0=m0)
    w = val / (2j * math.pi)
    wr = round(w.real)
    if abs(w - wr) > 0.1:
        raise ConvergenceError(f"non-integer winding number {w:.4f}")
    return wr


def _winding_circle_robust(nv: _Characteristic, radius: float) -> tuple[int, float]:
    """Circle winding with radius jitter when a zero sits on or hugs the
    contour.  Returns (winding, radius actually used)."""
    last: Exception | None = None
    for fac in (1.0, 1.097, 0.911, 1.203, 0.831, 1.318):
        try:
            r = radius * fac
            return _winding_circle(nv, r), r
        except (ContourError, ConvergenceError) as exc:
            last = exc
    raise ConvergenceError(f"no zero-free circle near radius {radius:g}: {last}")


def _winding_cell(nv: _Characteristic, r_lo, r_hi, t_lo, t_hi) -> int:
    """Winding around the polar rectangle [r_lo, r_hi] x [t_lo, t_hi]."""
    total = 0j
    # outer arc, forward
    total += _path_integral(nv, lambda t: r_hi * np.exp(1j * t),
                            lambda t: 1j * r_hi * np.exp(1j * t), t_lo, t_hi, m0=32)
    # radial edge at t_hi, inward
    e_hi = cmath.exp(1j * t_hi)
    total += _path_integral(nv, lambda s: s * e_hi,
                            lambda s: np.full_like(s, e_hi, dtype=complex),
                            r_hi, r_lo, m0=32)
    # inner arc, backward
    total += _path_integral(nv, lambda t: r_lo * np.exp(1j * t),
                            lambda t: 1j * r_lo * np.exp(1j * t), t_hi, t_lo, m0=32)
    # radial edge at t_lo, outward
    e_lo = cmath.exp(1j * t_lo)
    total += _path_integral(nv, lambda s: s * e_lo,
                            lambda s: np.full_like(s, e_lo, dtype=complex),
                            r_lo, r_hi, m0=32)
    w = total / (2j * math.pi)
    wr = round(w.real)
    if abs(w - wr) > 0.1:
        raise ConvergenceError(f"non-integer cell winding {w:.4f}")
    return wr


def _inner_winding(nv: _Characteristic, eps: float) -> tuple[int, float]:
    """Winding of |A| = 1 + eps with jitter retries if a zero sits on it."""
    for attempt in range(6):
        try:
            return _winding_circle(nv, 1.0 + eps), eps
        except (ContourError, ConvergenceError):
            eps *= 1.17
    raise ContourError("could not place inner contour off the zeros")


def _degree_at_infinity(nv: _Characteristic) -> int:
    """Number of zeros of N outside every sufficiently large circle's
    interior, i.e. the degree of the leading behaviour N ~ L_k A^k.

    Expanding C2(A) = C1 - zeta1 C'(zeta1)/A + O(A^-2) gives

        A^3 coefficient: L3 = gamma_v + gamma_0 (Ibar + C1)
                            = (2 beta_d Dbar + Ibar)^2      (exactly),
        A^2 coefficient: L2 = -3 gamma_v + gamma_0 (C1 - Ibar - zeta1 C'(zeta1)).

    So the cubic degenerates if and only if beta_d = 0 and Ibar = 0; on that
    edge the single "unstable" root sits at infinity (its modulus grows like
    beta_d^-2 as beta_d -> 0).
    """
    p = nv.p
    if 2.0 * p.beta_d * p.dww_bar + p.i_bar > 0.0:
        return 3
    h = 1e-6 * max(1.0, p.zeta1)
    cp = (transfer_coefficient(p.zeta1 + h, p)
          - transfer_coefficient(p.zeta1 - h, p)) / (2 * h)
    l2 = -3.0 * nv.gamma_v + nv.gamma_0 * (nv.c1 - p.i_bar - p.zeta1 * cp)
    s2 = 3 * abs(nv.gamma_v) + abs(nv.gamma_0) * (abs(nv.c1) + p.i_bar
                                                  + abs(p.zeta1 * cp)) + 1e-300
    if abs(l2) > 1e-8 * s2:
        return 2
    raise ConvergenceError(
        "characteristic function degenerates past degree 2 at infinity; "
        "root count is not certifiable for these parameters")


def _outer_winding(nv: _Characteristic, r_outer: float) -> tuple[int, float]:
    """Winding of the outer circle, expanded until it equals the zero count
    at infinity.  W(R) is nondecreasing in R (N has no poles outside the
    unit disk), so stopping at the asymptotic degree is exact.  Roots can
    sit at enormous moduli for nearly vanishing damping (|A| ~ beta_d^-2),
    hence the generous cap."""
    target = _degree_at_infinity(nv)
    w, r = _winding_circle_robust(nv, r_outer)
    while w != target:
        if w > target or r > 1e12:
            raise ConvergenceError(
                f"outer winding {w} never reached asymptotic degree {target}")
        w, r = _winding_circle_robust(nv, 4.0 * r)
    return w, r


def count_unstable_roots(p: StabilityParams, eps: float = 1e-3,
                         r_outer: float = 10.0) -> int:
    """Number of roots of the characteristic function with |A| > 1 + eps,
    by the argument principle over the annulus 1 + eps < |A| < R."""
    nv = _Characteristic(p)
    w_in, _ = _inner_winding(nv, eps)
    w_out, _ = _outer_winding(nv, r_outer)
    count = w_out - w_in
    if count < 0:
        raise ConvergenceError(f"inconsistent windings: {w_out} < {w_in}")
    return count


def _newton_polish(nv: _Characteristic, a0: complex, tol: float = 1e-12,
                   max_iter: int = 60) -> complex:
    a = complex(a0)
    for _ in range(max_iter):
        f = complex(nv(a))
        if abs(f) <= tol * max(float(nv.scale(a)), 1e-300):
            return a
        df = complex(nv.derivative(a))
        if df == 0:
            break
        step = f / df
        a = a - step
    f = complex(nv(a))
    if abs(f) <= 10 * tol * max(float(nv.scale(a)), 1e-300):
        return a
    raise ConvergenceError(f"Newton polish stalled at A={a:.6g}, |N|={abs(f):.3g}")


def _in_cell(z: complex, r_lo, r_hi, t_lo, t_hi, slack: float = 0.1) -> bool:
    mod = abs(z)
    if not (r_lo * (1 - slack) <= mod <= r_hi * (1 + slack)):
        return False
    span = t_hi - t_lo
    if span >= 2 * math.pi - 1e-12:
        return True
    tc = 0.5 * (t_lo + t_hi)
    d = (cmath.phase(z) - tc) % (2 * math.pi)
    if d > math.pi:
        d -= 2 * math.pi
    return abs(d) <= 0.5 * span + slack * max(span, 0.01)


def _ray_angle(nv: _Characteristic, r_lo: float, r_hi: float) -> float:
    """Angle of a radial cut staying well clear of zeros (roots come in
    conjugate pairs, so the cut at t and its mirror t + pi are equally
    safe)."""
    radii = np.geomspace(r_lo, r_hi, 64)
    best_t, best_q = 0.5, -1.0
    for t in np.linspace(0.15, math.pi - 0.15, 12):
        A = radii * np.exp(1j * t)
        vals = np.abs(nv(A)) / np.maximum(nv.scale(A), 1e-300)
        q = float(np.min(vals))
        if q > best_q:
            best_t, best_q = float(t), q
    return best_t


def _subdivide(nv: _Characteristic, r_lo, r_hi, t_lo, t_hi, count, roots, depth=0):
    """Recursively localize ``count`` zeros in the polar rectangle, then
    Newton-polish.  Full-circle cells are split radially (circle windings
    only; their radial edges cancel) until thin, then cut in theta along a
    probed zero-free ray."""
    if count == 0:
        return
    if depth > 40:
        raise ConvergenceError(
            f"max subdivision depth in cell r=[{r_lo:.3g},{r_hi:.3g}] "
            f"t=[{t_lo:.3g},{t_hi:.3g}]")
    full_span = (t_hi - t_lo) >= 2 * math.pi - 1e-12
    small = math.log(r_hi / r_lo) < 1e-8 and (full_span or (t_hi - t_lo) < 1e-8)
    if count == 1 or small:
        center = math.sqrt(r_lo * r_hi) * cmath.exp(0.5j * (t_lo + t_hi))
        try:
            root = _newton_polish(nv, center)
        except ConvergenceError:
            root = None
        # the polish must stay in its cell and, whatever the slack, must
        # never slide under the unit circle (those are interior roots)
        if root is not None and abs(root) > 1.0 and \
                (small or _in_cell(root, r_lo, r_hi, t_lo, t_hi)):
            roots.extend([root] * count)
            return
        if small:
            raise ConvergenceError(
                f"Newton failed on shrunken cell near {center:.6g}")
        # polish wandered out of the cell: localize harder

    if full_span and math.log(r_hi / r_lo) > math.pi:
        # radial split by circle windings alone
        w_mid, r_mid = _winding_circle_robust(nv, math.sqrt(r_lo * r_hi))
        w_lo, r_lo_used = _winding_circle_robust(nv, r_lo)
        c_lo = w_mid - w_lo
        if not 0 <= c_lo <= count:
            raise ConvergenceError("inconsistent circle windings in split")
        _subdivide(nv, r_lo_used, r_mid, t_lo, t_hi, c_lo, roots, depth + 1)
        _subdivide(nv, r_mid, r_hi, t_lo, t_hi, count - c_lo, roots, depth + 1)
        return
    if full_span:
        # cut the annulus along a zero-free ray and its mirror
        t0 = _ray_angle(nv, r_lo, r_hi)
        c_lo = _winding_cell(nv, r_lo, r_hi, t0, t0 + math.pi)
        if not 0 <= c_lo <= count:
            raise ConvergenceError("inconsistent half-annulus winding")
        _subdivide(nv, r_lo, r_hi, t0, t0 + math.pi, c_lo, roots, depth + 1)
        _subdivide(nv, r_lo, r_hi, t0 + math.pi, t0 + 2 * math.pi,
                   count - c_lo, roots, depth + 1)
        return
    # split the longer side (radial side measured logarithmically)
    jitter = 0.5
    for attempt in range(5):
        try:
            if math.log(r_hi / r_lo) > (t_hi - t_lo):
                r_mid = r_lo * (r_hi / r_lo) ** jitter
                c_lo = _winding_cell(nv, r_lo, r_mid, t_lo, t_hi)
                _subdivide(nv, r_lo, r_mid, t_lo, t_hi, c_lo, roots, depth + 1)
                _subdivide(nv, r_mid, r_hi, t_lo, t_hi, count - c_lo, roots, depth + 1)
            else:
                t_mid = t_lo + (t_hi - t_lo) * jitter
                c_lo = _winding_cell(nv, r_lo, r_hi, t_lo, t_mid)
                _subdivide(nv, r_lo, r_hi, t_lo, t_mid, c_lo, roots, depth + 1)
                _subdivide(nv, r_lo, r_hi, t_mid, t_hi, count - c_lo, roots, depth + 1)
            return
        except ContourError:
            jitter = 0.5 + 0.08 * (attempt + 1)
    raise ConvergenceError("could not split cell off the zeros")


def find_unstable_roots(p: StabilityParams, eps: float = 1e-3,
                        r_outer: float = 10.0) -> StabilityVerdict:
    """Locate all roots with |A| > 1 + eps: winding-number counts on
    recursively subdivided annulus cells, then Newton polish.  The verdict
    is consistent with :func:`count_unstable_roots` by construction."""
    nv = _Characteristic(p)
    w_in, eps_used = _inner_winding(nv, eps)
    w_out, r_used = _outer_winding(nv, r_outer)
    count = w_out - w_in
    if count < 0:
        raise ConvergenceError(f"inconsistent windings: {w_out} < {w_in}")
    if count == 0:
        return StabilityVerdict(0, [], 1.0)
    roots: list[complex] = []
    _subdivide(nv, 1.0 + eps_used, r_used, 0.0, 2.0 * math.pi, count, roots)
    # dedupe Newton results that converged to the same simple root
    unique: list[complex] = []
    for r in roots:
        if not any(abs(r - u) < 1e-7 * max(1.0, abs(u)) for u in unique):
            unique.append(r)
    if len(unique) != count and len(roots) != count:
        raise ConvergenceError(
            f"located {len(unique)} distinct roots, winding says {count}")
    moduli = [abs(r) for r in roots]
    return StabilityVerdict(count, sorted(roots, key=lambda z: (-abs(z), z.imag)),
                            max(moduli))


@dataclass
class CellResult:
    delta: float
    beta_d: float
    count: int = -1
    max_modulus: float = float("nan")
    error: str | None = None

    @property
    def verdict(self) -> str:
        if self.error is not None:
            return "error"
        return "stable" if self.count == 0 else "unstable"


@dataclass
class StabilityMap:
    """Classification of a (delta, beta_d) grid at fixed i_bar."""

    i_bar: float
    cells: list[CellResult]

    def rows(self):
        for c in self.cells:
            yield (c.delta, c.beta_d, c.verdict, c.max_modulus)


def _scan_cell(args) -> CellResult:
    geom_r1, geom_r2, dr, i_bar, delta, beta_d, eps, r_outer = args
    p = StabilityParams(ShellGeometry(geom_r1, geom_r2), dr, delta, beta_d, i_bar)
    try:
        verdict = find_unstable_roots(p, eps=eps, r_outer=r_outer)
        return CellResult(delta, beta_d, verdict.unstable_root_count,
                          verdict.max_modulus)
    except Exception as exc:  # per-cell failures recorded, scan continues
        return CellResult(delta, beta_d, error=f"{type(exc).__name__}: {exc}")


def scan_region(delta_grid, beta_grid, i_bar: float, geom: ShellGeometry,
                dr: float, eps: float = 1e-3, r_outer: float = 10.0,
                workers: int = 1) -> StabilityMap:
    """Classify every (delta, beta_d) cell of the grid.  Cells are
    independent pure evaluations; ``workers > 1`` uses a process pool.
    Results are returned in deterministic row-major order."""
    deltas = list(delta_grid)
    betas = list(beta_grid)
    if any(b <= a for a, b in zip(deltas, deltas[1:])) or \
       any(b <= a for a, b in zip(betas, betas[1:])):
        raise ValueError("grids must be strictly increasing")
    jobs = [(geom.r1, geom.r2, dr, i_bar, d, b, eps, r_outer)
            for d in deltas for b in betas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_scan_cell, jobs))
    else:
        cells = [_scan_cell(j) for j in jobs]
    return StabilityMap(i_bar, cells)


def _boundary_residual(nv_factory, x) -> np.ndarray:
    """F(theta, delta, beta) = [Re N, Im N](e^{i theta}) at the point."""
    theta, delta, beta = x
    nv = nv_factory(delta, beta)
    val = complex(nv(cmath.exp(1j * theta)))
    s = max(float(nv.scale(cmath.exp(1j * theta))), 1e-300)
    return np.array([val.real, val.imag]) / s


def trace_boundary(p_base: StabilityParams, start: tuple[float, float],
                   step: float = 0.08, n_points: int = 80,
                   delta_bounds: tuple[float, float] = (1e-3, 1e3),
                   beta_bounds: tuple[float, float] = (1e-4, 10.0),
                   ftol: float = 1e-10) -> list[tuple[float, float, float]]:
    """Trace a stability boundary through the (delta, beta_d) plane.

    Starting from a near-boundary guess ``start = (delta, beta_d)``, first
    solves the two-real-equation system N(e^{i theta}) = 0 for
    (theta, beta_d) at fixed delta, then continues the curve by
    pseudo-arclength steps in the unknowns (theta, ln delta, beta_d) with
    step halving at folds.  Each accepted point satisfies
    |N(e^{i theta})| < ftol relative to the term magnitudes.

    Returns the polyline as (delta, beta_d, theta) tuples.
    """

    def nv_factory(delta, beta):
        return _Characteristic(StabilityParams(p_base.geom, p_base.dr,
                                               delta, beta, p_base.i_bar))

    def residual(x):
        return _boundary_residual(nv_factory, (x[0], math.exp(x[1]), x[2]))

    def jac(x, h=1e-7):
        cols = []
        for i in range(3):
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            cols.append((residual(xp) - residual(xm)) / (2 * h))
        return np.array(cols).T  # 2 x 3

    def newton_2x2(x, free, max_iter=40):
        """Solve residual = 0 adjusting the two coordinates in ``free``."""
        x = x.copy()
        for _ in range(max_iter):
            F = residual(x)
            if np.max(np.abs(F)) < ftol:
                return x
            J = jac(x)[:, free]
            try:
                dx = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(f"singular boundary Jacobian: {exc}") from exc
            x[free] += np.clip(dx, -0.5, 0.5)
        raise ConvergenceError("boundary Newton did not converge")

    delta0, beta0 = start
    # bracket theta by scanning the upper unit semicircle
    thetas = np.linspace(1e-3, math.pi - 1e-3, 181)
    nv0 = nv_factory(delta0, beta0)
    vals = np.abs(nv0(np.exp(1j * thetas))) / np.maximum(nv0.scale(np.exp(1j * thetas)), 1e-300)
    x = np.array([thetas[int(np.argmin(vals))], math.log(delta0), beta0])
    x = newton_2x2(x, free=[0, 2])

    points = [(math.exp(x[1]), x[2], x[0])]
    tangent = None
    ds = step
    fails = 0
    while len(points) < n_points:
        J = jac(x)
        # tangent: null vector of the 2x3 Jacobian
        _, _, vt = np.linalg.svd(J)
        t = vt[-1]
        if tangent is not None and np.dot(t, tangent) < 0:
            t = -t
        elif tangent is None and t[1] < 0:
            t = -t  # start off toward increasing delta
        pred = x + ds * t

        # corrector: Newton on [residual; arclength constraint]
        y = pred.copy()
        ok = False
        for _ in range(30):
            F = residual(y)
            g = np.dot(t, y - pred)
            if np.max(np.abs(F)) < ftol and abs(g) < 1e-12:
                ok = True
                break
            Jy = jac(y)
            K = np.vstack([Jy, t])
            try:
                dy = np.linalg.solve(K, -np.array([F[0], F[1], g]))
            except np.linalg.LinAlgError:
                break
            y += dy
        if not ok:
            ds *= 0.5
            fails += 1
            if fails > 12:
                raise ConvergenceError("continuation lost the boundary (fold?)")
            continue
        fails = 0
        ds = min(ds * 1.3, step)
        tangent = t
        x = y
        delta, beta = math.exp(x[1]), x[2]
        points.append((delta, beta, x[0]))
        if not (delta_bounds[0] <= delta <= delta_bounds[1]) or \
           not (beta_bounds[0] <= beta <= beta_bounds[1]):
            break
    return points
