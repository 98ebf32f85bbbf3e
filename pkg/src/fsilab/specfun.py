"""Modified spherical Bessel functions of order one (complex argument) and
the Dirichlet boundary-layer profile on a spherical shell.

The closed forms

    i1(z) = (z cosh z - sinh z) / z**2
    k1(z) = exp(-z) (z + 1) / z**2

both solve the modified spherical Bessel equation of order one,

    z**2 f'' + 2 z f' - (z**2 + 2) f = 0.

The shell profile for a complex parameter ``zeta`` is

    phi(r) = [i1(zeta r) k1(zeta r2) - i1(zeta r2) k1(zeta r)]
           / [i1(zeta r1) k1(zeta r2) - i1(zeta r2) k1(zeta r1)],

the unique solution of ``L phi = zeta**2 phi`` on ``[r1, r2]`` with
``phi(r1) = 1`` and ``phi(r2) = 0``, where

    L f = (1/r**2) d/dr (r**2 df/dr) - 2 f / r**2.

The profile depends on ``zeta`` only through ``zeta**2``, so either branch
of a square root producing ``zeta`` gives the same value; this module
normalizes to ``Re(zeta) >= 0`` up front, which makes the evenness exact.

All functions accept scalars or numpy arrays (broadcast together) and are
pure, so they are safe to call from any number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResonanceError

__all__ = [
    "ShellGeometry",
    "sph_bessel_i1",
    "sph_bessel_k1",
    "steady_profile",
    "dirichlet_profile",
]

# |z| below which i1 switches to its odd Taylor series.  The closed form
# loses about |z|**-2 digits to cancellation, so at 1e-2 roughly 4 digits
# would be gone; the 3-term series is accurate to ~1e-18 relative there.
I1_SERIES_RADIUS = 1e-2

# |zeta|*(r2-r1) below which the profile switches to the zeta -> 0 steady
# solution of L phi = 0.
STEADY_THRESHOLD = 1e-6

# Re(zeta)*r2 above which the profile is evaluated in the analytically
# rescaled form (cosh overflows the double range near 710).
SCALED_THRESHOLD = 300.0


@dataclass(frozen=True)
class ShellGeometry:
    """Spherical shell between an inner radius ``r1`` and outer ``r2``."""

    r1: float
    r2: float

    def __post_init__(self):
        if not 0.0 < self.r1 < self.r2:
            raise ValueError(f"need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")

    @property
    def width(self) -> float:
        return self.r2 - self.r1


def _as_complex(z):
    return np.asarray(z, dtype=np.complex128)


def _maybe_scalar(out, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return complex(out)
    return out


def sph_bessel_i1(z):
    """Modified spherical Bessel function of the first kind, order one.

    Evaluates ``(z cosh z - sinh z)/z**2`` directly, switching to the odd
    series ``z/3 + z**3/30 + z**5/840`` for ``|z| < 1e-2`` where the closed
    form cancels catastrophically.  Total function: ``i1(0) = 0``.
    """
    zc = _as_complex(z)
    small = np.abs(zc) < I1_SERIES_RADIUS
    safe = np.where(small, 1.0, zc)  # keep the closed form off 0/0
    closed = (safe * np.cosh(safe) - np.sinh(safe)) / safe**2
    series = zc / 3.0 + zc**3 / 30.0 + zc**5 / 840.0
    out = np.where(small, series, closed)
    return _maybe_scalar(out, z)


def sph_bessel_k1(z):
    """Modified spherical Bessel function of the second kind, order one:
    ``exp(-z) (z + 1)/z**2``.

    Raises
    ------
    ValueError
        If any argument is zero (the function has a pole there).
    """
    zc = _as_complex(z)
    if np.any(zc == 0):
        raise ValueError("k1 is singular at z = 0")
    out = np.exp(-zc) * (zc + 1.0) / zc**2
    return _maybe_scalar(out, z)


def steady_profile(r, geom: ShellGeometry):
    """Zero-parameter limit of the shell profile: the solution of
    ``L phi = 0`` with ``phi(r1) = 1``, ``phi(r2) = 0``."""
    r = np.asarray(r, dtype=float)
    r1, r2 = geom.r1, geom.r2
    out = (r2**3 / r**2 - r) * r1**2 / (r2**3 - r1**3)
    return float(out) if out.ndim == 0 else out


def _cross(zeta, ra, rb):
    """i1(zeta ra) k1(zeta rb) - i1(zeta rb) k1(zeta ra), plus a magnitude
    scale of the two products for resonance detection."""
    t1 = sph_bessel_i1(zeta * ra) * sph_bessel_k1(zeta * rb)
    t2 = sph_bessel_i1(zeta * rb) * sph_bessel_k1(zeta * ra)
    return t1 - t2, np.abs(t1) + np.abs(t2)


def _profile_naive(zeta, r, geom: ShellGeometry):
    num, _ = _cross(zeta, r, geom.r2)
    den, scale = _cross(zeta, geom.r1, geom.r2)
    return num, den, scale


def _profile_scaled(zeta, r, geom: ShellGeometry):
    """Profile numerator/denominator with the growing exponential factored
    out analytically.  Exact rewrite of the i1/k1 cross products:

        cross(r) * 2 zeta**4 r**2 r2**2 * e^{zeta (r2 - r1)}
            = e^{-zeta (2 r2 - r - r1)} (zeta r - 1)(zeta r2 + 1)
            - e^{-zeta (r - r1)}        (zeta r2 - 1)(zeta r + 1)

    so for Re(zeta) >= 0 and r in [r1, r2] every exponent has non-positive
    real part and nothing overflows.  The common prefactor cancels in the
    ratio; the r**-2 does not and is restored by the caller.
    """
    r1, r2 = geom.r1, geom.r2
    t1n = np.exp(-zeta * (2 * r2 - r - r1)) * (zeta * r - 1) * (zeta * r2 + 1)
    t2n = np.exp(-zeta * (r - r1)) * (zeta * r2 - 1) * (zeta * r + 1)
    num = (t1n - t2n) / r**2
    t1d = np.exp(-2 * zeta * (r2 - r1)) * (zeta * r1 - 1) * (zeta * r2 + 1)
    t2d = (zeta * r2 - 1) * (zeta * r1 + 1)
    den = (t1d - t2d) / r1**2
    scale = (np.abs(t1d) + np.abs(t2d)) / r1**2
    return num, den, scale


def dirichlet_profile(zeta, r, geom: ShellGeometry, singular_tol: float = 1e-13):
    """Shell profile ``phi(r)`` with ``phi(r1) = 1`` and ``phi(r2) = 0``.

    Parameters
    ----------
    zeta : complex scalar or array
        Square root of the profile parameter; only ``zeta**2`` matters, so
        the sign branch is immaterial (normalized to ``Re >= 0`` here).
    r : scalar or array
        Radii in ``[r1, r2]``; broadcast against ``zeta``.
    geom : ShellGeometry
    singular_tol : float
        Relative denominator magnitude below which a resonance is declared.

    Raises
    ------
    ResonanceError
        If the cross-product denominator vanishes, i.e. ``zeta**2`` sits at
        a Dirichlet eigenvalue of the radial operator.
    """
    zc = _as_complex(zeta)
    rr = np.asarray(r, dtype=float)
    zc, rr = np.broadcast_arrays(zc, rr)
    # Evenness in zeta: fold onto Re >= 0 so the scaled form applies.
    zc = np.where(zc.real < 0, -zc, zc)

    out = np.empty(zc.shape, dtype=np.complex128)
    absz = np.abs(zc)
    steady = absz * geom.width < STEADY_THRESHOLD
    big = zc.real * geom.r2 > SCALED_THRESHOLD
    mid = ~steady & ~big

    if np.any(steady):
        out[steady] = steady_profile(rr[steady], geom)
    for mask, evaluate in ((mid, _profile_naive), (big, _profile_scaled)):
        if not np.any(mask):
            continue
        num, den, scale = evaluate(zc[mask], rr[mask], geom)
        bad = np.abs(den) <= singular_tol * scale
        if np.any(bad):
            z_bad = zc[mask][bad].flat[0]
            raise ResonanceError(
                f"profile denominator vanished at zeta={z_bad:.6g} "
                f"(zeta**2 at a Dirichlet eigenvalue)"
            )
        out[mask] = num / den
    return _maybe_scalar(out, zeta, r)
