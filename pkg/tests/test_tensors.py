"""Tests for added-damping tensor assembly and transport."""

import math

import numpy as np
import pytest

from fsilab.tensors import (
    SurfaceMesh,
    Tensor6,
    assemble_tensors,
    damping_length,
    latlong_sphere_mesh,
    rotate_tensor,
    sphere_tensors,
)


def test_damping_length_value_and_limits():
    # frozen from 50-digit arithmetic: 0.1/(1 - 1/e) with alpha nu dt = 0.01
    got = damping_length(0.1, nu=1.0, dt=0.02, alpha=0.5)
    assert got == pytest.approx(0.15819767068693264, rel=1e-13)
    # delta -> inf: dn -> ds_n
    assert damping_length(0.1, 1.0, 1e-10, 0.5) == pytest.approx(0.1, rel=1e-12)
    # delta -> 0: dn -> sqrt(alpha nu dt)
    assert damping_length(1e-7, 1.0, 2.0, 0.5) == pytest.approx(1.0, rel=1e-6)
    assert damping_length(0.1, 1.0, 0.02) >= max(0.1, 0.1)


def test_sphere_closed_forms():
    t = sphere_tensors(0.5, mu=2.0, delta_n=0.25)
    # (8/3) pi 0.25 and (8/3) pi 0.0625, frozen
    assert t.d_vv[0, 0] == pytest.approx(2.0943951023931953 * 2.0 / 0.25, rel=1e-13)
    assert t.d_ww[2, 2] == pytest.approx(0.52359877559829887 * 2.0 / 0.25, rel=1e-13)
    assert np.all(t.d_vw == 0) and np.all(t.d_wv == 0)
    # r = 1: rotational equals translational
    t1 = sphere_tensors(1.0, 1.0, 1.0)
    np.testing.assert_allclose(t1.d_ww, t1.d_vv, rtol=1e-14)


def test_mesh_assembly_matches_closed_form():
    mu, nu, dt = 0.7, 0.9, 0.004
    ds = 0.02
    mesh = latlong_sphere_mesh(0.5, 40, 80, ds_n=ds)
    assert mesh.area == pytest.approx(4 * math.pi * 0.25, rel=1e-12)
    got = assemble_tensors(mesh, mu, nu, dt)
    want = sphere_tensors(0.5, mu, damping_length(ds, nu, dt))
    for g, w in zip((got.d_vv, got.d_ww), (want.d_vv, want.d_ww)):
        diag = np.diag(g)
        assert np.max(np.abs(diag - np.diag(w))) < 5e-3 * np.max(np.diag(w))
        off = g - np.diag(diag)
        assert np.max(np.abs(off)) < 1e-4 * np.max(diag)
    assert np.max(np.abs(got.d_vw)) < 1e-10 * np.max(got.d_vv)


def test_mesh_refinement_second_order():
    mu, nu, dt, ds = 1.0, 1.0, 0.01, 0.05
    want = sphere_tensors(0.5, mu, damping_length(ds, nu, dt))
    errs = []
    for n in (10, 20, 40):
        got = assemble_tensors(latlong_sphere_mesh(0.5, n, 2 * n, ds_n=ds), mu, nu, dt)
        errs.append(np.max(np.abs(got.matrix() - want.matrix())))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(r > 1.7 for r in rates)


def test_single_point_projector():
    mesh = SurfaceMesh(points=np.array([[0.0, 0.0, 1.0]]),
                       normals=np.array([[0.0, 0.0, 1.0]]),
                       weights=np.array([2.5]),
                       ds_n=np.array([0.1]),
                       x_b=np.zeros(3))
    mu, nu, dt = 3.0, 1.0, 0.02
    dn = damping_length(0.1, nu, dt)
    got = assemble_tensors(mesh, mu, nu, dt)
    np.testing.assert_allclose(got.d_vv, mu * 2.5 / dn * np.diag([1.0, 1.0, 0.0]),
                               rtol=1e-13)


def _random_mesh(rng, n=40):
    pts = rng.normal(size=(n, 3))
    nrm = rng.normal(size=(n, 3))
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    return SurfaceMesh(points=pts, normals=nrm,
                       weights=rng.uniform(0.1, 1.0, n),
                       ds_n=rng.uniform(0.01, 0.2, n),
                       x_b=rng.normal(size=3))


def test_composite_symmetric_psd_random_meshes():
    """Each point contributes c B B^T, so the 6x6 must be symmetric PSD for
    arbitrary meshes."""
    rng = np.random.default_rng(17)
    for _ in range(50):
        t = assemble_tensors(_random_mesh(rng), mu=1.3, nu=0.8, dt=0.05)
        m = t.matrix()
        scale = np.linalg.norm(m)
        assert np.max(np.abs(m - m.T)) < 1e-12 * scale
        np.testing.assert_allclose(t.d_vw, t.d_wv.T, rtol=0, atol=1e-13 * scale)
        eigs = np.linalg.eigvalsh(m)
        assert eigs.min() >= -1e-10 * scale


def test_rotate_tensor():
    rng = np.random.default_rng(23)
    t = assemble_tensors(_random_mesh(rng), mu=1.0, nu=1.0, dt=0.01)
    # identity leaves blocks alone
    same = rotate_tensor(t, np.eye(3))
    np.testing.assert_array_equal(same.d_vv, t.d_vv)
    # isotropic sphere tensors are rotation invariant
    sph = sphere_tensors(0.5, 1.0, 0.1)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    rot = rotate_tensor(sph, q)
    np.testing.assert_allclose(rot.matrix(), sph.matrix(), atol=1e-12)
    # eigenvalues of each block invariant under conjugation
    rot_t = rotate_tensor(t, q)
    for b0, b1 in zip(t.blocks(), rot_t.blocks()):
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(b1).real),
                                   np.sort(np.linalg.eigvals(b0).real),
                                   atol=1e-9 * np.linalg.norm(b0))
    with pytest.raises(ValueError):
        rotate_tensor(t, 2.0 * np.eye(3))
    with pytest.raises(ValueError):
        rotate_tensor(t, np.diag([1.0, 1.0, -1.0]))  # reflection


def test_mesh_validation():
    with pytest.raises(ValueError):
        SurfaceMesh(points=np.zeros((2, 3)),
                    normals=np.array([[1.0, 0, 0], [0.5, 0, 0]]),
                    weights=np.ones(2), ds_n=np.ones(2), x_b=np.zeros(3))
    with pytest.raises(ValueError):
        SurfaceMesh(points=np.zeros((1, 3)), normals=np.array([[1.0, 0, 0]]),
                    weights=np.array([-1.0]), ds_n=np.ones(1), x_b=np.zeros(3))
