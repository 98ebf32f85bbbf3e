"""Tests for the rotating-sphere stepper and its building blocks."""

import math

import numpy as np
import pytest

from fsilab.added_damping import (
    AddedDampingStepper,
    AdParams,
    AdState,
    CrankNicolson,
    RadialGrid,
    added_damping_scalar,
    apply_shear_laplacian,
    matching_params,
    measure_growth,
    one_sided_derivative,
)
from fsilab.errors import IllPosedError
from fsilab.specfun import ShellGeometry, steady_profile

GEOM = ShellGeometry(1.0, 2.0)


def _grid(n=100):
    return RadialGrid(GEOM, n)


def test_grid_invariants():
    grid = _grid(64)
    assert grid.nodes[0] == GEOM.r1
    assert grid.nodes[-1] == pytest.approx(GEOM.r2, rel=1e-15)
    assert np.all(np.diff(grid.nodes) > 0)
    with pytest.raises(ValueError):
        RadialGrid(GEOM, 4)


def test_shear_laplacian_kernel_and_value():
    grid = _grid(200)
    r = grid.nodes
    # r is annihilated exactly by the conservative form
    assert np.max(np.abs(apply_shear_laplacian(r, grid))) < 1e-10
    # 1/r^2 is in the continuous kernel: O(h^2) residual
    res1 = np.max(np.abs(apply_shear_laplacian(1 / r**2, grid)))
    grid2 = _grid(400)
    res2 = np.max(np.abs(apply_shear_laplacian(1 / grid2.nodes**2, grid2)))
    assert res2 < 0.3 * res1
    # L r^2 = 4
    val = apply_shear_laplacian(r**2, grid)[1:-1]
    assert np.max(np.abs(val - 4.0)) < 2e-5


def test_shear_laplacian_shape_mismatch():
    with pytest.raises(ValueError):
        apply_shear_laplacian(np.zeros(7), _grid(100))


def test_cn_zero_fixed_point():
    grid = _grid(64)
    cn = CrankNicolson(AdParams(1.0, 1.0, 0.0, 1.0, 0.01), grid)
    w = cn.solve(np.zeros(grid.n_cells + 1), 0.0)
    assert np.all(w == 0.0)


def test_cn_residual_identity():
    """Back-substituted Crank-Nicolson identity below 1e-12."""
    grid = _grid(128)
    params = AdParams(1.0, 2.0, 0.0, 1.0, 0.003)
    cn = CrankNicolson(params, grid)
    rng = np.random.default_rng(2)
    w_old = rng.standard_normal(grid.n_cells + 1)
    bc = 0.37
    w_new = cn.solve(w_old, bc)
    k = 0.5 * params.nu * params.dt
    lhs = w_new[1:-1]
    rhs = (w_old[1:-1]
           + k * (apply_shear_laplacian(w_new, grid)[1:-1]
                  + apply_shear_laplacian(w_old, grid)[1:-1]))
    scale = np.max(np.abs(w_new)) + np.max(np.abs(w_old))
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * scale
    assert w_new[0] == bc and w_new[-1] == 0.0


def test_cn_converges_to_steady_profile():
    """Fixed wall velocity drives the fluid to the closed-form steady state
    r1^3 omega (r2^3/r^2 - r)/(r2^3 - r1^3)."""
    grid = _grid(800)
    h = grid.dr_grid
    # dt balancing smooth-mode decay against high-frequency CN ringing
    k = 1.0 / math.sqrt(10.0 * 4.0 / h**2)
    cn = CrankNicolson(AdParams(1.0, 1.0, 0.0, 1.0, 2 * k), grid)
    omega = 0.7
    bc = GEOM.r1 * omega
    w = np.zeros(grid.n_cells + 1)
    w[0] = bc
    for _ in range(6000):
        w = cn.solve(w, bc)
    ws = bc * steady_profile(grid.nodes, GEOM)
    err = np.max(np.abs(w[1:-1] - ws[1:-1])) / np.max(np.abs(ws))
    assert err < 1e-6


def test_one_sided_derivative():
    assert one_sided_derivative([1.0, 1.3, 1.6], 0.3) == pytest.approx(1.0, rel=1e-14)
    f = lambda r: r**2
    assert one_sided_derivative([f(1.0), f(1.1), f(1.2)], 0.1) == pytest.approx(2.0, rel=1e-12)
    g = lambda r: r**3
    # one-sided stencil error for cubics: -dr^2 f'''/3 = -0.02
    assert one_sided_derivative([g(1.0), g(1.1), g(1.2)], 0.1) == pytest.approx(2.98, rel=1e-12)


def test_added_damping_scalar_value_and_limits():
    # frozen from 50-digit arithmetic: (8/3) pi (1 - 1/e) / 0.1
    got = added_damping_scalar(mu=1.0, nu=1.0, dt=0.02, r1=1.0, dr=0.1)
    assert got == pytest.approx(52.956408101303241, rel=1e-13)
    # delta -> infinity: mu (8/3) pi r1^4 / dr
    big = added_damping_scalar(1.0, 1.0, 1e-12, 1.0, 0.1)
    assert big == pytest.approx((8 / 3) * math.pi / 0.1, rel=1e-9)
    # delta -> 0: mu (8/3) pi r1^4 / sqrt(nu dt / 2)
    small = added_damping_scalar(1.0, 1.0, 2e6, 1.0, 1e-4)
    assert small == pytest.approx((8 / 3) * math.pi / math.sqrt(1e6), rel=1e-3)
    # monotone increasing in delta at fixed prefactor
    dts = [2.0, 0.5, 0.02, 0.002]
    vals = [added_damping_scalar(1.0, 1.0, dt, 1.0, 0.1) for dt in dts]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_params_validation():
    with pytest.raises(ValueError):
        AdParams(0.0, 1.0, 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        AdParams(1.0, 1.0, -1.0, 1.0, 0.1)
    p = AdParams(2.0, 1.0, 0.0, 1.0, 0.1)
    assert p.nu == 0.5
    # dr override must be a multiple of the grid spacing
    grid = _grid(100)
    assert AdParams(1.0, 1.0, 0.0, 1.0, 0.1, dr=0.05).resolve_dr(grid) == (0.05, 5)
    with pytest.raises(ValueError):
        AdParams(1.0, 1.0, 0.0, 1.0, 0.1, dr=0.0137).resolve_dr(grid)


def test_singular_body_solve():
    with pytest.raises(IllPosedError):
        AddedDampingStepper(AdParams(1.0, 1.0, 0.0, 0.0, 0.1), _grid())


def test_step_preserves_zero():
    grid = _grid(64)
    stepper = AddedDampingStepper(AdParams(1.0, 1.0, 0.5, 1.0, 0.01), grid)
    state = stepper.initial_state(np.zeros(grid.n_cells + 1), 0.0)
    for _ in range(5):
        state = stepper.step(state, 0.0)
    assert state.omega_b == 0.0 and state.b_omega == 0.0
    assert np.all(state.w_hat == 0.0)


def test_step_boundary_conditions_hold():
    grid = _grid(64)
    stepper = AddedDampingStepper(AdParams(1.0, 1.0, 0.2, 1.0, 0.01), grid)
    rng = np.random.default_rng(4)
    state = stepper.initial_state(rng.standard_normal(grid.n_cells + 1), 0.3)
    for _ in range(20):
        state = stepper.step(state, g_e=math.sin(0.1))
        assert state.w_hat[0] == pytest.approx(GEOM.r1 * state.omega_b, rel=1e-14)
        assert state.w_hat[-1] == 0.0


def test_stable_point_bounded():
    """beta_d = 1 sits inside the stability band: no growth over 1000 steps
    from random data, massless body."""
    grid = _grid(200)
    params = matching_params(delta=1.0, beta_d=1.0, i_bar=0.0, geom=GEOM, dr=0.05)
    growth = measure_growth(params, grid, n_steps=1000, n_transient=200, seed=3)
    assert growth <= 1.0 + 1e-3


def test_unstable_point_grows():
    """Small beta_d leaves the added-damping instability unsuppressed."""
    grid = _grid(200)
    params = matching_params(delta=1.0, beta_d=0.05, i_bar=0.0, geom=GEOM, dr=0.05)
    growth = measure_growth(params, grid, n_steps=400, n_transient=100, seed=3)
    assert growth > 10.0


def test_pure_diffusion_decays():
    """Huge body inertia pins omega; the fluid substep alone must decay."""
    grid = _grid(100)
    params = AdParams(rho=1.0, mu=1.0, i_b=1e30, beta_d=1.0, dt=0.01)
    stepper = AddedDampingStepper(params, grid)
    rng = np.random.default_rng(9)
    state = stepper.initial_state(rng.standard_normal(grid.n_cells + 1), 0.0)
    norm0 = np.max(np.abs(state.w_hat))
    for _ in range(200):
        state = stepper.step(state)
    assert abs(state.omega_b) < 1e-20
    assert np.max(np.abs(state.w_hat)) < norm0


def test_measure_growth_renormalization():
    """Violently unstable run exceeds 1e200 and must still report a finite
    growth factor."""
    grid = _grid(100)
    params = matching_params(delta=0.1, beta_d=0.05, i_bar=0.0, geom=GEOM, dr=0.05)
    growth = measure_growth(params, grid, n_steps=300, n_transient=50, seed=1)
    assert np.isfinite(growth) and growth > 100.0


def test_matching_params_roundtrip():
    p = matching_params(delta=2.5, beta_d=0.7, i_bar=1.3, geom=GEOM, dr=0.05,
                        rho=2.0, mu=0.5)
    delta = 0.05 / math.sqrt(p.nu * p.dt / 2)
    assert delta == pytest.approx(2.5, rel=1e-12)
    v_b = 4 / 3 * math.pi
    i_bar = p.i_b * delta**2 / (p.rho * 2 * v_b * 1.0 * 0.05)
    assert i_bar == pytest.approx(1.3, rel=1e-12)
    assert p.beta_d == 0.7


def test_velocity_correction_flag():
    grid = _grid(64)
    params = AdParams(1.0, 1.0, 0.5, 1.0, 0.01)
    rng = np.random.default_rng(8)
    w0 = rng.standard_normal(grid.n_cells + 1)
    s_on = AddedDampingStepper(params, grid, velocity_correction=True)
    s_off = AddedDampingStepper(params, grid, velocity_correction=False)
    a = s_on.step(s_on.initial_state(w0, 0.3))
    b = s_off.step(s_off.initial_state(w0, 0.3))
    # same body update, different fluid profile
    assert a.omega_b == pytest.approx(b.omega_b, rel=1e-14)
    assert np.max(np.abs(a.w_hat - b.w_hat)) > 0
