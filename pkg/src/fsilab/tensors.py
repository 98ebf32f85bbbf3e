"""Added-damping tensors of a rigid body in viscous flow.

The viscous shear force and torque responses to body motion are captured by
four 3x3 tensors assembled from surface integrals

    Dvv = mu * int (1/dn) (I - n n^T) dS
    Dvw = mu * int (1/dn) (I - n n^T) [r - x_b]_x^T dS
    Dwv = mu * int (1/dn) [r - x_b]_x (I - n n^T) dS
    Dww = mu * int (1/dn) [r - x_b]_x (I - n n^T) [r - x_b]_x^T dS

where [u]_x is the cross-product matrix and dn is the added-damping length

    dn = ds_n / (1 - exp(-delta)),   delta = ds_n / sqrt(alpha nu dt),

built from the normal mesh spacing ds_n and the implicit-scheme coefficient
alpha = 1/2.  Every surface point contributes c * B B^T with
B = [P; X P] stacked from the projector P = I - n n^T, so the composite 6x6
tensor is symmetric positive semidefinite by construction.  For a sphere of
radius r the integrals close to (mu/dn)(8/3) pi r^2 I and
(mu/dn)(8/3) pi r^4 I with vanishing coupling blocks.

Tensors follow a rotating body by conjugation of each block with the
rotation matrix; they are assembled once from the initial state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SurfaceMesh",
    "Tensor6",
    "damping_length",
    "assemble_tensors",
    "sphere_tensors",
    "rotate_tensor",
    "latlong_sphere_mesh",
]


@dataclass(frozen=True)
class SurfaceMesh:
    """Discrete closed surface: positions, outward unit normals, quadrature
    weights (areas), per-point normal mesh spacing and the body centre."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    ds_n: np.ndarray
    x_b: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        nrm = np.asarray(self.normals, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        ds = np.broadcast_to(np.asarray(self.ds_n, dtype=float), w.shape)
        if pts.shape != nrm.shape or pts.shape[0] != w.shape[0]:
            raise ValueError("points/normals/weights shapes disagree")
        norms = np.linalg.norm(nrm, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("normals must be unit vectors (within 1e-12)")
        if np.any(w <= 0) or np.any(ds <= 0):
            raise ValueError("weights and ds_n must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ds_n", np.array(ds))
        object.__setattr__(self, "x_b", np.asarray(self.x_b, dtype=float))

    @property
    def area(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class Tensor6:
    """Composite added-damping tensor: four 3x3 blocks with d_vw = d_wv^T."""

    d_vv: np.ndarray
    d_vw: np.ndarray
    d_wv: np.ndarray
    d_ww: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.block([[self.d_vv, self.d_vw], [self.d_wv, self.d_ww]])

    def blocks(self):
        return (self.d_vv, self.d_vw, self.d_wv, self.d_ww)


def damping_length(ds_n, nu: float, dt: float, alpha: float = 0.5):
    """Added-damping length dn = ds_n/(1 - exp(-delta)),
    delta = ds_n/sqrt(alpha nu dt).  Limits: dn -> ds_n for delta -> inf,
    dn -> sqrt(alpha nu dt) for delta -> 0.  Vectorized in ds_n."""
    ds = np.asarray(ds_n, dtype=float)
    if np.any(ds <= 0) or nu <= 0 or dt <= 0 or alpha <= 0:
        raise ValueError("ds_n, nu, dt, alpha must be positive")
    delta = ds / math.sqrt(alpha * nu * dt)
    out = ds / (-np.expm1(-delta))
    return float(out) if out.ndim == 0 else out


def _cross_matrices(u: np.ndarray) -> np.ndarray:
    """Skew matrices [u]_x for an (N, 3) array of vectors."""
    out = np.zeros(u.shape[:-1] + (3, 3))
    out[..., 0, 1] = -u[..., 2]
    out[..., 0, 2] = u[..., 1]
    out[..., 1, 0] = u[..., 2]
    out[..., 1, 2] = -u[..., 0]
    out[..., 2, 0] = -u[..., 1]
    out[..., 2, 1] = u[..., 0]
    return out


def assemble_tensors(mesh: SurfaceMesh, mu: float, nu: float, dt: float,
                     alpha: float = 0.5) -> Tensor6:
    """Discrete surface-integral approximation of the four blocks using the
    per-point damping length."""
    dn = damping_length(mesh.ds_n, nu, dt, alpha)
    c = mu * mesh.weights / dn
    n = mesh.normals
    proj = np.eye(3)[None, :, :] - n[:, :, None] * n[:, None, :]
    xmat = _cross_matrices(mesh.points - mesh.x_b[None, :])
    xp = np.einsum("iab,ibc->iac", xmat, proj)
    d_vv = np.einsum("i,iab->ab", c, proj)
    d_wv = np.einsum("i,iab->ab", c, xp)
    d_ww = np.einsum("i,iab,icb->ac", c, xp, xmat)
    return Tensor6(d_vv=d_vv, d_vw=d_wv.T.copy(), d_wv=d_wv, d_ww=d_ww)


def sphere_tensors(radius: float, mu: float, delta_n: float) -> Tensor6:
    """Closed forms for a sphere: (mu/dn)(8/3) pi r^2 I translational,
    (mu/dn)(8/3) pi r^4 I rotational, zero coupling."""
    if radius <= 0 or delta_n <= 0:
        raise ValueError("radius and delta_n must be positive")
    base = mu / delta_n * (8.0 / 3.0) * math.pi
    return Tensor6(
        d_vv=base * radius**2 * np.eye(3),
        d_vw=np.zeros((3, 3)),
        d_wv=np.zeros((3, 3)),
        d_ww=base * radius**4 * np.eye(3),
    )


def rotate_tensor(t6: Tensor6, rot: np.ndarray) -> Tensor6:
    """Transport to a rotated body state: each block conjugated R B R^T."""
    r = np.asarray(rot, dtype=float)
    if r.shape != (3, 3) or np.max(np.abs(r @ r.T - np.eye(3))) > 1e-10 \
            or abs(np.linalg.det(r) - 1.0) > 1e-10:
        raise ValueError("rot must be a proper rotation matrix")
    return Tensor6(*(r @ b @ r.T for b in t6.blocks()))


def latlong_sphere_mesh(radius: float, n_theta: int, n_phi: int,
                        center=(0.0, 0.0, 0.0), ds_n: float = 0.05) -> SurfaceMesh:
    """Latitude-longitude quadrature mesh of a sphere.

    Nodes sit at cell midpoints in the polar angle, so there are no pole
    points; each ring weight is its exact zone area (the polar caps are the
    first and last zones), and the weights sum to the exact sphere area.
    """
    if n_theta < 2 or n_phi < 3:
        raise ValueError("need n_theta >= 2 and n_phi >= 3")
    center = np.asarray(center, dtype=float)
    dtheta = math.pi / n_theta
    theta = (np.arange(n_theta) + 0.5) * dtheta
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    normals = np.stack([np.sin(tt) * np.cos(pp),
                        np.sin(tt) * np.sin(pp),
                        np.cos(tt)], axis=-1).reshape(-1, 3)
    points = center[None, :] + radius * normals
    # exact zone area split uniformly over the ring's n_phi cells
    ring = radius**2 * (np.cos(theta - 0.5 * dtheta)
                        - np.cos(theta + 0.5 * dtheta)) * 2.0 * math.pi / n_phi
    weights = np.repeat(ring, n_phi)
    return SurfaceMesh(points=points, normals=normals, weights=weights,
                       ds_n=np.full(weights.shape, ds_n), x_b=center)
