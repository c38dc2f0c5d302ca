import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biham.dynamics import (
    IntegratorSpec,
    NlsParams,
    TrajectoryRecord,
    madelung_consistency,
    madelung_from_state,
    madelung_rhs,
    run,
    step_lse,
    step_nls,
)
from biham.functionals import K0, K1, Hn, Kminus1
from biham.grid import Grid1D, PhasePair, random_state
from biham.structures import SchrodingerOperator

GRID = Grid1D(20.0, 256)


def gaussian(grid, center=0.0, momentum=0.0, width=1.0):
    u = PhasePair.from_psi(grid, np.exp(-0.5 * ((grid.x - center) / width) ** 2
                                        + 1j * momentum * grid.x))
    return u * (1 / u.norm())


def test_integrator_spec_validation():
    with pytest.raises(ValueError):
        IntegratorSpec(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorSpec(steps=0)
    with pytest.raises(ValueError):
        IntegratorSpec(scheme="euler")


def test_plane_wave_phase():
    hbar, mass, dt, k = 1.0, 1.0, 1e-2, 2 * np.pi * 3 / GRID.L
    op = SchrodingerOperator.free(GRID, hbar, mass)
    u = PhasePair.from_psi(GRID, np.exp(1j * k * GRID.x))
    out = step_lse(u, op, dt)
    expected = u.psi * np.exp(-1j * hbar * k**2 * dt / (2 * mass))
    assert np.max(np.abs(out.psi - expected)) < 1e-10


@pytest.mark.parametrize("scheme", ["strang-split", "rk4"])
def test_zero_step_is_identity(scheme):
    op = SchrodingerOperator.harmonic(GRID)
    u = gaussian(GRID, 1.0, 0.5)
    assert (step_lse(u, op, 0.0, scheme) - u).max_abs() < 1e-15
    assert (step_nls(u, 1.0, 0.5, 1.0, 0.0, scheme) - u).max_abs() < 1e-15


def test_ground_state_density_is_stationary():
    # the ground state of the one-step propagator (dense, from its columns);
    # the analytic Gaussian is stationary only up to the O(dt^2) splitting error
    grid = Grid1D(20.0, 128)
    op = SchrodingerOperator.harmonic(grid)
    cols = [step_lse(PhasePair.from_psi(grid, e), op, 1e-3).psi for e in np.eye(grid.N)]
    vals, vecs = np.linalg.eig(np.column_stack(cols))
    overlap = np.abs(vecs.conj().T @ gaussian(grid).psi)
    u0 = PhasePair.from_psi(grid, vecs[:, np.argmax(overlap)])
    u0 = u0 * (1 / u0.norm())
    assert np.max(np.abs(np.abs(u0.psi) - np.abs(gaussian(grid).psi))) < 1e-5
    psi, dens0 = u0, u0.density
    for _ in range(1000):
        psi = step_lse(psi, op, 1e-3)
    assert np.max(np.abs(psi.density - dens0)) < 1e-9


def test_nls_without_coupling_is_free_lse():
    u = gaussian(GRID, 0.5, 1.0)
    a = step_nls(u, 1.0, 0.5, 0.0, 1e-3)
    b = step_lse(u, SchrodingerOperator.free(GRID, 1.0, 0.5), 1e-3)
    assert np.array_equal(a.q, b.q) and np.array_equal(a.p, b.p)


@pytest.mark.parametrize("scheme", ["strang-split", "rk4"])
def test_constant_state_rotates(scheme):
    A, b, hbar, dt = 0.7, 1.3, 1.0, 1e-3
    u = PhasePair.from_psi(GRID, np.full(GRID.N, A + 0j))
    out = step_nls(u, hbar, 0.5, b, dt, scheme)
    expected = A * np.exp(-1j * b * A**2 * dt / hbar)
    assert np.max(np.abs(out.psi - expected)) < 1e-10


def test_soliton_profile_is_preserved():
    """hbar = 2m = 1, b = -2: psi = sech(x - 2 v t) exp(i v x + i (1 - v^2) t)."""
    grid = Grid1D(50.0, 512)
    v, T = 0.5, 5.0
    u0 = PhasePair.from_psi(grid, np.exp(1j * v * grid.x) / np.cosh(grid.x))
    rec = run("nls", u0, NlsParams(1.0, 0.5, -2.0), IntegratorSpec(dt=1e-3, steps=5000, stride=5000),
              [Kminus1()])
    final = rec.states[-1]
    assert np.max(np.abs(np.abs(final.psi) - 1 / np.cosh(grid.x - 2 * v * T))) < 1e-5
    exact = np.exp(1j * v * grid.x + 1j * (1 - v**2) * T) / np.cosh(grid.x - 2 * v * T)
    assert np.max(np.abs(final.psi - exact)) < 1e-4


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_single_steps_preserve_norm(seed):
    u = random_state(GRID, np.random.default_rng(seed))
    op = SchrodingerOperator.harmonic(GRID)
    h0 = Hn(0, op)
    assert abs(h0(step_lse(u, op, 1e-3)) - h0(u)) < 1e-12
    assert abs(Kminus1()(step_nls(u * 3.0, 1.0, 0.5, -2.0, 1e-3)) - Kminus1()(u * 3.0)) < 1e-12 * 9


@pytest.mark.parametrize("scheme", ["strang-split", "rk4"])
def test_time_reversal(scheme):
    op = SchrodingerOperator.harmonic(GRID)
    u = gaussian(GRID, 1.0, 0.5)
    back = step_lse(step_lse(u, op, 1e-3, scheme), op, -1e-3, scheme)
    assert (back - u).max_abs() < 1e-10
    back = step_nls(step_nls(u, 1.0, 0.5, -2.0, 1e-3, scheme), 1.0, 0.5, -2.0, -1e-3, scheme)
    assert (back - u).max_abs() < 1e-10


def test_strang_is_second_order():
    params = NlsParams(1.0, 0.5, -2.0)
    u0 = PhasePair.from_psi(GRID, 1.2 * np.exp(0.5j * GRID.x) / np.cosh(1.2 * GRID.x))

    def evolve(dt, T=0.5):
        rec = run("nls", u0, params, IntegratorSpec(dt=dt, steps=int(round(T / dt)), stride=10**6),
                  [Kminus1()])
        return rec.states[-1]

    ref = evolve(1e-4)
    errs = [(evolve(dt) - ref).norm() for dt in (2e-2, 1e-2, 5e-3)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.6 < r < 4.4 for r in ratios), ratios


def test_strang_needs_periodic_grid():
    d = Grid1D(20.0, 64, "decaying")
    with pytest.raises(ValueError):
        step_lse(gaussian(d), SchrodingerOperator.free(d), 1e-3)
    # rk4 works on decaying grids
    out = step_lse(gaussian(d), SchrodingerOperator.free(d), 1e-3, "rk4")
    assert abs(out.norm() - 1.0) < 1e-6


def test_run_records_and_drift():
    op = SchrodingerOperator.harmonic(GRID)
    rec = run("lse", gaussian(GRID, 1.0), op, IntegratorSpec(dt=1e-3, steps=1005, stride=100),
              [Hn(0, op), Hn(1, op), Hn(2, op)])
    assert len(rec.times) == len(rec.states) == 12
    assert rec.times[-1] == pytest.approx(1.005)
    assert all(len(v) == len(rec.times) for v in rec.values.values())
    assert rec.drift == rec.recompute_drift()
    assert all(d < 1e-5 for d in rec.drift.values())
    assert TrajectoryRecord.drift_of(np.array([2.0, 2.5, 1.0])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        run("lse", gaussian(GRID), op, IntegratorSpec(), [Hn(0, op), Hn(0, op)])
    with pytest.raises(ValueError):
        run("kdv", gaussian(GRID), op, IntegratorSpec(), [Hn(0, op)])


def test_momentum_conservation_depends_on_potential():
    u0 = gaussian(GRID, 1.0, 1.0)
    integ = IntegratorSpec(dt=1e-3, steps=3000, stride=100)
    free = run("lse", u0, SchrodingerOperator.free(GRID), integ, [K0(1.0, 1.0)], keep_states=False)
    trap = run("lse", u0, SchrodingerOperator.harmonic(GRID), integ, [K0(1.0, 1.0)],
               keep_states=False)
    assert free.drift["K0"] < 1e-7
    assert trap.drift["K0"] > 1e-2


def test_nls_tower_is_conserved():
    grid = Grid1D(50.0, 512)
    params = NlsParams(1.0, 0.5, -2.0)
    u0 = PhasePair.from_psi(grid, np.exp(0.5j * grid.x) / np.cosh(grid.x))
    rec = run("nls", u0, params, IntegratorSpec(dt=1e-3, steps=2000, stride=100),
              [Kminus1(), K0(1.0, 0.5), K1(1.0, 0.5, -2.0)], keep_states=False)
    assert rec.drift["K-1"] < 1e-11
    assert rec.drift["K0"] < 1e-5 and rec.drift["K1"] < 1e-5


def test_blow_up_is_reported():
    op = SchrodingerOperator.harmonic(GRID)
    with pytest.raises(FloatingPointError):
        run("lse", gaussian(GRID), op, IntegratorSpec("rk4", dt=0.5, steps=2000, stride=1),
            [Hn(0, op)], keep_states=False)


def test_madelung_real_gaussian():
    u = PhasePair(GRID, np.exp(-0.5 * GRID.x**2), np.zeros(GRID.N))
    f = madelung_from_state(u, 1.0, 1.0)
    assert np.allclose(f.chi, np.exp(-GRID.x**2))
    assert np.all(f.pi == 0.0) and np.max(np.abs(f.current)) < 1e-14
    assert GRID.integrate(f.chi) == pytest.approx(GRID.integrate(u.density), abs=1e-12)


def test_madelung_plane_wave():
    hbar, mass, k = 1.0, 0.5, 2 * np.pi * 4 / GRID.L
    u = PhasePair.from_psi(GRID, np.exp(1j * k * GRID.x))
    f = madelung_from_state(u, hbar, mass)
    theta = 2 * f.pi
    assert np.allclose(np.diff(theta), k * GRID.h)
    assert np.allclose(f.current, hbar * k / mass * f.chi)
    dchi, dpi = madelung_rhs(f, np.zeros(GRID.N), hbar, mass)
    assert np.max(np.abs(dchi)) < 1e-10
    # the exact solution has theta = k x - (hbar k^2 / 2m) t
    assert np.max(np.abs(dpi + hbar * k**2 / (4 * mass))) < 1e-8


def test_madelung_rhs_constant_fields():
    hbar = 0.8
    u = PhasePair.from_psi(GRID, np.full(GRID.N, 0.6 * np.exp(0.3j)))
    f = madelung_from_state(u, hbar, 1.0)
    U = 0.1 * GRID.x**2
    dchi, dpi = madelung_rhs(f, U, hbar, 1.0)
    assert np.max(np.abs(dchi)) < 1e-12
    assert np.max(np.abs(dpi + U / (2 * hbar))) < 1e-12


def test_madelung_ground_state():
    op = SchrodingerOperator.harmonic(GRID)
    u = gaussian(GRID)
    f = madelung_from_state(u, 1.0, 1.0)
    dchi, _ = madelung_rhs(f, op.potential, 1.0, 1.0)
    assert np.max(np.abs(dchi[f.mask])) < 1e-6
    assert madelung_consistency(u, op).residual < 1e-6


def test_madelung_coherent_state():
    op = SchrodingerOperator.harmonic(GRID, hbar=0.9, mass=1.2)
    chk = madelung_consistency(gaussian(GRID, 1.5, 0.5, width=1 / np.sqrt(1.2 / 0.9)), op)
    assert chk.residual < 1e-5 and chk.continuity < 1e-5
    assert 0 < chk.mask_fraction < 1


def test_madelung_masks_nodes():
    op = SchrodingerOperator.harmonic(GRID)
    x = GRID.x
    node = GRID.N // 2 - 1  # a grid point just left of the origin
    u = PhasePair.from_psi(GRID, (x - x[node]) * np.exp(-0.5 * x**2) * np.exp(0.2j * x))
    f = madelung_from_state(u, 1.0, 1.0, floor=1e-4)
    assert not f.mask[node]
    chk = madelung_consistency(u, op, floor=1e-4)
    assert np.isfinite(chk.residual) and chk.residual < 1e-3
    with pytest.raises(ValueError):
        madelung_from_state(u, 1.0, 1.0, floor=0.0)
