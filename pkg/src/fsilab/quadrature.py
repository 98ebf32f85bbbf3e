"""Volume and surface quadrature weights on composite (overlapping) grids
via the left null vector of a discrete Neumann operator.

The Neumann problem (Laplacian with prescribed outward normal derivative)
is solvable only when the volume integral of the interior data balances the
surface integral of the boundary data.  Its discrete counterpart A phi = f
is solvable only when w^T f = 0 for the left null vector w of A, so w holds
quadrature coefficients: entries at interior rows approximate cell volumes,
entries at boundary rows approximate (minus) surface weights, and points
covered twice by overlapping component grids are downweighted so nothing is
double counted.  The vector is fixed up to one constant, which is pinned by
matching a far-from-overlap interior entry to its cell volume.

Operator rows, one per grid point:

    interior       second-order Laplacian (1D: phi'', polar:
                   phi_rr + phi_r / r + phi_tt / r^2)
    boundary       second-order one-sided outward normal derivative
    interpolation  phi_i - sum(c_k phi_donor_k) = 0, quadratic (3-point)
                   stencils with donors on discretization points only

The desk-scale grid catalog: a single interval, two overlapping intervals
with unequal spacings, a single periodic annulus, and two half-annulus
patches with angular overlap (the smallest configuration with overlap, a
curved boundary, and genuine surface weights).

Null-vector extraction is single-threaded per grid; different grids can be
processed concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, NumericsError

__all__ = [
    "INTERIOR",
    "BOUNDARY",
    "INTERP",
    "UNUSED",
    "Component",
    "CompositeGrid",
    "WeightVector",
    "interval_grid",
    "two_interval_grid",
    "annulus_grid",
    "two_patch_annulus_grid",
    "build_neumann_operator",
    "left_null_vector",
    "extract_weights",
    "integrate",
    "integrate_surface",
]

INTERIOR, BOUNDARY, INTERP, UNUSED = 0, 1, 2, 3


@dataclass
class Component:
    """One structured component grid.

    kind "interval": nodes ``x`` (uniform); kind "polar": tensor grid of
    radii ``r`` and angles ``theta`` (uniform, optionally periodic), points
    flattened row-major as ``i_r * len(theta) + i_theta``.
    """

    name: str
    kind: str
    x: np.ndarray | None = None
    r: np.ndarray | None = None
    theta: np.ndarray | None = None
    periodic: bool = False
    classification: np.ndarray = field(default=None)
    boundary_label: dict = field(default_factory=dict)  # flat index -> label

    @property
    def n_points(self) -> int:
        return self.classification.size

    @property
    def shape(self):
        if self.kind == "interval":
            return (len(self.x),)
        return (len(self.r), len(self.theta))

    def positions(self) -> np.ndarray:
        """Cartesian coordinates of every point, shape (n, 2); intervals
        embed on the x-axis."""
        if self.kind == "interval":
            return np.stack([self.x, np.zeros_like(self.x)], axis=1)
        rr, tt = np.meshgrid(self.r, self.theta, indexing="ij")
        return np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=1)

    def cell_volume(self, flat: int) -> float:
        if self.kind == "interval":
            return float(self.x[1] - self.x[0])
        nt = len(self.theta)
        i = flat // nt
        hr = float(self.r[1] - self.r[0])
        ht = float(self.theta[1] - self.theta[0])
        return float(self.r[i]) * hr * ht

    def surface_element(self, flat: int) -> float:
        """Exact surface measure per boundary point (oracle only)."""
        if self.kind == "interval":
            return 1.0
        nt = len(self.theta)
        i = flat // nt
        return float(self.r[i]) * float(self.theta[1] - self.theta[0])

    def index_distance(self, mask: np.ndarray) -> np.ndarray:
        """Per point, index-space (Chebyshev) distance in cells to the
        nearest marked point; +inf if the mask is empty."""
        cls = mask.reshape(self.shape)
        out = np.full(cls.shape, np.inf)
        idx = np.argwhere(cls)
        if idx.size == 0:
            return out.ravel()
        if self.kind == "interval":
            pts = np.arange(cls.shape[0])[:, None]
            d = np.min(np.abs(pts - idx[:, 0][None, :]), axis=1)
            return d.astype(float)
        ii, jj = np.meshgrid(np.arange(cls.shape[0]), np.arange(cls.shape[1]),
                             indexing="ij")
        d = np.full(cls.shape, np.inf)
        for (a, b) in idx:
            dj = np.abs(jj - b)
            if self.periodic:
                dj = np.minimum(dj, cls.shape[1] - dj)
            d = np.minimum(d, np.maximum(np.abs(ii - a), dj))
        return d.ravel()

    def contains(self, positions: np.ndarray) -> np.ndarray:
        """Whether Cartesian positions fall inside this component's domain."""
        if self.kind == "interval":
            lo, hi = float(self.x[0]), float(self.x[-1])
            return (positions[:, 0] >= lo - 1e-12) & (positions[:, 0] <= hi + 1e-12)
        r = np.hypot(positions[:, 0], positions[:, 1])
        inside_r = (r >= self.r[0] - 1e-12) & (r <= self.r[-1] + 1e-12)
        if self.periodic:
            return inside_r
        t = np.arctan2(positions[:, 1], positions[:, 0])
        t0, t1 = float(self.theta[0]), float(self.theta[-1])
        rel = (t - t0) % (2 * math.pi)
        return inside_r & (rel <= (t1 - t0) + 1e-12)

    def boundary_distance(self) -> np.ndarray:
        """Per point, distance in cells to the nearest physical boundary
        point of this component."""
        return self.index_distance(self.classification == BOUNDARY)


@dataclass
class CompositeGrid:
    """Component grids plus explicit interpolation stencils.

    ``stencils`` maps a global point index to (donor_component_index,
    donor_flat_indices, coefficients); every interpolation point must have
    one, and all donors must be discretization points.
    """

    components: list
    stencils: dict

    def __post_init__(self):
        self.offsets = np.cumsum([0] + [c.n_points for c in self.components])
        cls = self.classification
        for g in np.flatnonzero(cls == INTERP):
            if g not in self.stencils:
                raise ValueError(f"interpolation point {g} has no donor stencil")
            comp, donors, _ = self.stencils[g]
            dc = self.components[comp].classification
            if np.any(dc[np.asarray(donors)] == INTERP) or \
               np.any(dc[np.asarray(donors)] == UNUSED):
                raise ValueError(f"stencil of point {g} uses non-discretization donors")

    @property
    def n_points(self) -> int:
        return int(self.offsets[-1])

    @property
    def classification(self) -> np.ndarray:
        return np.concatenate([c.classification for c in self.components])

    def global_index(self, comp: int, flat) -> int:
        return int(self.offsets[comp]) + flat

    def component_of(self, g: int) -> tuple[int, int]:
        comp = int(np.searchsorted(self.offsets, g, side="right") - 1)
        return comp, int(g - self.offsets[comp])

    def positions(self) -> np.ndarray:
        return np.concatenate([c.positions() for c in self.components], axis=0)

    def overlap_region_distance(self, comp_idx: int) -> np.ndarray:
        """Per point of one component, index distance in cells to the
        nearest point lying in the geometric overlap (covered by another
        component or part of an interpolation fringe)."""
        comp = self.components[comp_idx]
        pos = comp.positions()
        covered = comp.classification == INTERP
        for k, other in enumerate(self.components):
            if k != comp_idx:
                covered = covered | other.contains(pos)
        return comp.index_distance(covered)


def _quadratic_stencil(nodes: np.ndarray, target: float) -> tuple[list, np.ndarray]:
    """Three-point Lagrange interpolation from a uniform 1D node set."""
    h = nodes[1] - nodes[0]
    j = int(round((target - nodes[0]) / h))
    j = min(max(j, 1), len(nodes) - 2)
    idx = [j - 1, j, j + 1]
    xs = nodes[idx]
    c = np.array([
        (target - xs[1]) * (target - xs[2]) / ((xs[0] - xs[1]) * (xs[0] - xs[2])),
        (target - xs[0]) * (target - xs[2]) / ((xs[1] - xs[0]) * (xs[1] - xs[2])),
        (target - xs[0]) * (target - xs[1]) / ((xs[2] - xs[0]) * (xs[2] - xs[1])),
    ])
    return idx, c


# ---------------------------------------------------------------------------
# grid catalog


def interval_grid(a: float = 0.0, b: float = 1.0, n_cells: int = 32) -> CompositeGrid:
    """Single uniform interval; both ends are physical boundaries."""
    x = np.linspace(a, b, n_cells + 1)
    cls = np.full(x.shape, INTERIOR)
    cls[0] = cls[-1] = BOUNDARY
    comp = Component("interval", "interval", x=x, classification=cls,
                     boundary_label={0: "left", n_cells: "right"})
    return CompositeGrid([comp], {})


def two_interval_grid(a: float = 0.0, b: float = 1.0, n_cells: int = 32,
                      reach: float = 0.6) -> CompositeGrid:
    """Two overlapping intervals covering [a, b]: the left one spans
    [a, a + reach (b-a)], the right one [b - reach (b-a), b] with one more
    cell (so the lattices are incommensurate and the interpolation is
    genuinely quadratic).  Each grid's inner end is an interpolation fringe
    fed by the other grid."""
    if not 0.5 < reach < 1.0:
        raise ValueError("reach must be in (0.5, 1) to give an overlap")
    span = b - a
    xl = np.linspace(a, a + reach * span, n_cells + 1)
    xr = np.linspace(b - reach * span, b, n_cells + 2)
    cl = np.full(xl.shape, INTERIOR)
    cl[0] = BOUNDARY
    cl[-1] = INTERP
    cr = np.full(xr.shape, INTERIOR)
    cr[-1] = BOUNDARY
    cr[0] = INTERP
    left = Component("left", "interval", x=xl, classification=cl,
                     boundary_label={0: "left"})
    right = Component("right", "interval", x=xr, classification=cr,
                      boundary_label={len(xr) - 1: "right"})
    grid = CompositeGrid.__new__(CompositeGrid)
    grid.components = [left, right]
    stencils = {}
    n_left = left.n_points
    idx, c = _quadratic_stencil(xr, float(xl[-1]))
    stencils[n_left - 1] = (1, idx, c)
    idx, c = _quadratic_stencil(xl, float(xr[0]))
    stencils[n_left + 0] = (0, idx, c)
    grid.stencils = stencils
    CompositeGrid.__post_init__(grid)
    return grid


def annulus_grid(r1: float = 1.0, r2: float = 2.0, nr_cells: int = 16,
                 n_theta: int = 64) -> CompositeGrid:
    """Single periodic polar annulus; the two circles are physical
    boundaries."""
    r = np.linspace(r1, r2, nr_cells + 1)
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    cls = np.full((nr_cells + 1, n_theta), INTERIOR)
    cls[0, :] = BOUNDARY
    cls[-1, :] = BOUNDARY
    labels = {j: "inner" for j in range(n_theta)}
    labels.update({nr_cells * n_theta + j: "outer" for j in range(n_theta)})
    comp = Component("annulus", "polar", r=r, theta=theta, periodic=True,
                     classification=cls.ravel(), boundary_label=labels)
    return CompositeGrid([comp], {})


def two_patch_annulus_grid(r1: float = 1.0, r2: float = 2.0, nr_cells: int = 10,
                           n_theta: int = 40, overlap_cells: int = 2) -> CompositeGrid:
    """Annulus covered by two half-annulus patches with angular overlap.

    Patch A spans theta in [-o h, pi + o h]; patch B is the same patch
    rotated by pi and staggered by h/2 so its lattice never coincides with
    A's.  The first and last angular columns of each patch interpolate from
    the other patch; both patches discretize the overlap, which is exactly
    the double-counting the null vector must resolve."""
    if overlap_cells < 1:
        raise ValueError("need at least one overlap cell")
    ht = math.pi / n_theta
    o = overlap_cells
    n_cols = n_theta + 2 * o + 1
    r = np.linspace(r1, r2, nr_cells + 1)

    def make_patch(name, theta0):
        theta = theta0 + ht * np.arange(n_cols)
        cls = np.full((nr_cells + 1, n_cols), INTERIOR)
        cls[0, 1:-1] = BOUNDARY
        cls[-1, 1:-1] = BOUNDARY
        cls[:, 0] = INTERP
        cls[:, -1] = INTERP
        labels = {}
        for j in range(1, n_cols - 1):
            labels[0 * n_cols + j] = "inner"
            labels[nr_cells * n_cols + j] = "outer"
        return Component(name, "polar", r=r, theta=theta, periodic=False,
                         classification=cls.ravel(), boundary_label=labels)

    pa = make_patch("half_a", -o * ht)
    pb = make_patch("half_b", math.pi - o * ht + 0.5 * ht)

    grid = CompositeGrid.__new__(CompositeGrid)
    grid.components = [pa, pb]
    stencils = {}

    def connect(src_idx, src, dst_idx, dst):
        """Fringe columns of src interpolate along theta from dst's columns
        on the same radial line (the radial lattices coincide)."""
        n_cols_s = len(src.theta)
        offset = 0 if src_idx == 0 else pa.n_points
        for col in (0, n_cols_s - 1):
            t = float(src.theta[col]) % (2 * math.pi)
            # donor angles unwrapped onto dst's span
            dt = dst.theta
            tt = t
            if tt < dt[0] - 1e-12:
                tt += 2 * math.pi
            if tt > dt[-1] + 1e-12:
                tt -= 2 * math.pi
            idx, c = _quadratic_stencil(dt, tt)
            for i in range(len(src.r)):
                g = offset + i * n_cols_s + col
                donors = [i * len(dst.theta) + j for j in idx]
                stencils[g] = (dst_idx, donors, c)

    connect(0, pa, 1, pb)
    connect(1, pb, 0, pa)
    grid.stencils = stencils
    CompositeGrid.__post_init__(grid)
    return grid


# ---------------------------------------------------------------------------
# operator assembly


def _interval_rows(comp: Component, offset: int, add):
    x = comp.x
    h = float(x[1] - x[0])
    n = len(x)
    cls = comp.classification
    for j in range(n):
        g = offset + j
        if cls[j] == INTERIOR:
            add(g, [g - 1, g, g + 1], [1 / h**2, -2 / h**2, 1 / h**2])
        elif cls[j] == BOUNDARY:
            if j == 0:
                add(g, [g, g + 1, g + 2],
                    [3 / (2 * h), -4 / (2 * h), 1 / (2 * h)])
            else:
                add(g, [g, g - 1, g - 2],
                    [3 / (2 * h), -4 / (2 * h), 1 / (2 * h)])


def _polar_rows(comp: Component, offset: int, add):
    r = comp.r
    nt = len(comp.theta)
    hr = float(r[1] - r[0])
    ht = float(comp.theta[1] - comp.theta[0])
    cls = comp.classification.reshape(comp.shape)
    nr = len(r)
    for i in range(nr):
        ri = float(r[i])
        for j in range(nt):
            g = offset + i * nt + j
            kind = cls[i, j]
            if kind == INTERIOR:
                jm = (j - 1) % nt if comp.periodic else j - 1
                jp = (j + 1) % nt if comp.periodic else j + 1
                cr = 1 / hr**2
                cr1 = 1 / (2 * hr * ri)
                ct = 1 / (ht**2 * ri**2)
                add(g,
                    [offset + (i - 1) * nt + j, g, offset + (i + 1) * nt + j,
                     offset + i * nt + jm, offset + i * nt + jp],
                    [cr - cr1, -2 * cr - 2 * ct, cr + cr1, ct, ct])
            elif kind == BOUNDARY:
                if i == 0:
                    add(g, [g, offset + nt + j, offset + 2 * nt + j],
                        [3 / (2 * hr), -4 / (2 * hr), 1 / (2 * hr)])
                else:
                    add(g, [g, offset + (i - 1) * nt + j, offset + (i - 2) * nt + j],
                        [3 / (2 * hr), -4 / (2 * hr), 1 / (2 * hr)])


def build_neumann_operator(grid: CompositeGrid) -> sp.csr_matrix:
    """Square sparse operator with one row per point: interior Laplacian,
    boundary outward normal derivative, interpolation identities."""
    rows, cols, vals = [], [], []

    def add(g, cs, vs):
        rows.extend([g] * len(cs))
        cols.extend(cs)
        vals.extend(vs)

    for comp_idx, comp in enumerate(grid.components):
        offset = int(grid.offsets[comp_idx])
        if comp.kind == "interval":
            _interval_rows(comp, offset, add)
        else:
            _polar_rows(comp, offset, add)

    for g, (dst, donors, coeffs) in grid.stencils.items():
        off = int(grid.offsets[dst])
        add(g, [g] + [off + d for d in donors], [1.0] + list(-np.asarray(coeffs)))

    n = grid.n_points
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


# ---------------------------------------------------------------------------
# null vector and weights


def left_null_vector(A: sp.spmatrix, tol: float = 1e-12, seed: int = 0,
                     interior_mask: np.ndarray | None = None,
                     max_iter: int = 50) -> np.ndarray:
    """Unit-norm left null vector of A by shifted inverse iteration on A^T.

    Raises
    ------
    ConvergenceError
        If the residual does not reach ``tol * ||A||`` within the budget.
    NumericsError
        If a second independent null direction is detected.
    """
    at = sp.csc_matrix(A.T)
    norm_a = float(abs(A).sum(axis=1).max())
    shift = 1e-10 * norm_a
    lu = splu(at - shift * sp.identity(A.shape[0], format="csc"),
              permc_spec="COLAMD")
    rng = np.random.default_rng(seed)

    def iterate(v, deflate=None):
        for _ in range(max_iter):
            v = lu.solve(v)
            if deflate is not None:
                v = v - np.dot(deflate, v) * deflate
            v = v / np.linalg.norm(v)
            if np.linalg.norm(at @ v) < tol * norm_a:
                return v
        return None

    w = iterate(rng.standard_normal(A.shape[0]))
    if w is None:
        raise ConvergenceError("inverse iteration did not converge to a null vector")
    # a deflated restart converging to tolerance means the null space is
    # at least two-dimensional
    w2 = iterate(rng.standard_normal(A.shape[0]), deflate=w)
    if w2 is not None and abs(math.acos(min(1.0, abs(np.dot(w, w2))))) > 1e-3:
        raise NumericsError("left null space is multi-dimensional")

    mask = interior_mask if interior_mask is not None else np.ones(w.shape, bool)
    if np.sum(w[mask] > 0) < 0.5 * np.sum(mask):
        w = -w
    return w


@dataclass
class WeightVector:
    """Quadrature weights split by row type, plus the raw scaled vector for
    compatibility diagnostics (w^T A = 0 including interpolation rows)."""

    grid: CompositeGrid
    scale: float
    raw_scaled: np.ndarray
    volume_index: np.ndarray
    volume_weights: np.ndarray
    surface_index: np.ndarray
    surface_weights: np.ndarray
    surface_labels: list

    @property
    def volume_sum(self) -> float:
        return float(self.volume_weights.sum())

    def surface_sum(self, label: str | None = None) -> float:
        if label is None:
            return float(self.surface_weights.sum())
        keep = [k for k, lab in enumerate(self.surface_labels) if lab == label]
        return float(self.surface_weights[keep].sum())


def extract_weights(w: np.ndarray, grid: CompositeGrid,
                    min_separation: int = 3) -> WeightVector:
    """Scale the raw null vector and split it into volume and surface
    weights.

    The single scale factor is fixed at the interior discretization point
    farthest (at least ``min_separation`` cells) from any overlap fringe
    and from physical boundaries, matched against that point's cell volume.
    Interpolation-row entries stay in ``raw_scaled`` as diagnostics only.
    """
    cls = grid.classification
    best = None
    for comp_idx, comp in enumerate(grid.components):
        ovl = grid.overlap_region_distance(comp_idx)
        bnd = comp.boundary_distance()
        for flat in np.flatnonzero(comp.classification == INTERIOR):
            if min(ovl[flat], bnd[flat]) >= min_separation:
                g = grid.global_index(comp_idx, int(flat))
                # deep inside the single-coverage plateau: overlap clearance
                # first (the fringe ramp is wider than the boundary one)
                score = (ovl[flat], bnd[flat], -g)
                if best is None or score > best[0]:
                    best = (score, comp_idx, int(flat), g)
    if best is None:
        raise NumericsError(
            f"no interior point at least {min_separation} cells from overlap "
            "and boundary; cannot fix the quadrature scale")
    _, comp_idx, flat, g_ref = best
    w_ref = w[g_ref]
    if w_ref == 0:
        raise NumericsError("reference entry of the null vector vanishes")
    scale = grid.components[comp_idx].cell_volume(flat) / w_ref

    scaled = scale * np.asarray(w, dtype=float)
    vol_idx = np.flatnonzero(cls == INTERIOR)
    surf_idx = np.flatnonzero(cls == BOUNDARY)
    labels = []
    for g in surf_idx:
        comp, flat = grid.component_of(int(g))
        labels.append(grid.components[comp].boundary_label.get(flat, ""))
    return WeightVector(
        grid=grid,
        scale=float(scale),
        raw_scaled=scaled,
        volume_index=vol_idx,
        volume_weights=scaled[vol_idx],
        surface_index=surf_idx,
        surface_weights=-scaled[surf_idx],
        surface_labels=labels,
    )


def _sample(f, positions):
    if callable(f):
        return np.asarray(f(positions), dtype=float)
    return np.asarray(f, dtype=float)


def integrate(weights: WeightVector, f) -> float:
    """Volume integral: weighted sum of f over interior points.  ``f`` is a
    callable of (n, 2) Cartesian positions or an array matching the volume
    layout."""
    pos = weights.grid.positions()[weights.volume_index]
    vals = _sample(f, pos)
    if vals.shape != weights.volume_weights.shape:
        raise ValueError("sample layout does not match volume weights")
    return float(np.dot(weights.volume_weights, vals))


def integrate_surface(weights: WeightVector, g, label: str | None = None) -> float:
    """Surface integral of g over boundary points (optionally one labelled
    boundary group)."""
    keep = np.arange(len(weights.surface_index)) if label is None else \
        np.array([k for k, lab in enumerate(weights.surface_labels) if lab == label],
                 dtype=int)
    pos = weights.grid.positions()[weights.surface_index[keep]]
    vals = _sample(g, pos)
    if vals.shape != (len(keep),):
        raise ValueError("sample layout does not match surface weights")
    return float(np.dot(weights.surface_weights[keep], vals))
