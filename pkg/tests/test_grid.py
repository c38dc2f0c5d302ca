import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biham.grid import Grid1D, PhasePair, fd_gradient, fornberg_weights, make_grid, random_state


def gaussian_grid(N=256):
    return Grid1D(20.0, N, "decaying")


def test_grid_construction():
    g = make_grid(2 * np.pi, 64, "periodic")
    assert g.h == pytest.approx(2 * np.pi / 64)
    d = make_grid(20, 256, "decaying")
    assert d.h == pytest.approx(20 / 256)
    assert d.x[0] == -10.0 and d.x[-1] < 10.0
    with pytest.raises(ValueError):
        make_grid(1, 7, "periodic")
    with pytest.raises(ValueError):
        make_grid(-1, 8)
    with pytest.raises(ValueError):
        make_grid(1, 8, "dirichlet")


def test_grid_is_immutable():
    g = make_grid(1.0, 8)
    with pytest.raises(Exception):
        g.N = 16
    with pytest.raises(ValueError):
        g.x[0] = 1.0


def test_integrate_examples():
    g = Grid1D(2 * np.pi, 64)
    x = g.x + np.pi  # integrand is periodic so the offset is harmless
    assert g.integrate(np.sin(x) ** 2) == pytest.approx(np.pi, abs=1e-12)
    assert g.integrate(np.ones(64)) == pytest.approx(2 * np.pi, rel=1e-14)
    d = gaussian_grid()
    assert abs(d.integrate(np.exp(-d.x**2)) - np.sqrt(np.pi)) < 1e-10


def test_derivative_examples():
    g = Grid1D(2 * np.pi, 64)
    x = g.x
    assert np.max(np.abs(g.derivative(np.sin(x), 1) - np.cos(x))) < 1e-10
    assert np.max(np.abs(g.derivative(np.cos(3 * x), 2) + 9 * np.cos(3 * x))) < 1e-9
    d = gaussian_grid()
    for order in (1, 2, 3, 4):
        assert np.max(np.abs(g.derivative(np.full(64, 2.5), order))) < 1e-12
        # one-sided closures amplify roundoff like h^-order
        assert np.max(np.abs(d.derivative(np.full(256, 2.5), order))) < 1e-11 / d.h**order
    with pytest.raises(ValueError):
        g.derivative(x, 5)


def test_fd_derivatives_against_closed_forms():
    d = gaussian_grid(512)
    x = d.x
    f = np.exp(-x**2)
    exact = {
        1: -2 * x * f,
        2: (4 * x**2 - 2) * f,
        3: (-8 * x**3 + 12 * x) * f,
        4: (16 * x**4 - 48 * x**2 + 12) * f,
    }
    for order, ref in exact.items():
        assert np.max(np.abs(d.derivative(f, order) - ref)) < 1e-6


def test_fornberg_weights_reproduce_known_stencils():
    w = fornberg_weights(0.0, np.array([-1.0, 0.0, 1.0]), 2)
    assert np.allclose(w[1], [-0.5, 0.0, 0.5])
    assert np.allclose(w[2], [1.0, -2.0, 1.0])


@pytest.mark.parametrize("boundary", ["periodic", "decaying"])
def test_integral_of_derivative_vanishes(boundary):
    g = Grid1D(20.0, 256, boundary)
    f = np.exp(-g.x**2) * np.cos(3 * g.x)
    assert abs(g.integrate(g.derivative(f, 1))) < 1e-10


def test_dminus1_examples():
    d = gaussian_grid()
    x = d.x
    g = np.exp(-0.5 * x**2) * np.sin(x)
    assert np.max(np.abs(d.dminus1(d.derivative(g, 1)) - g)) < 1e-8
    # samples symmetric about x = 0 start at index 1
    out = d.dminus1(np.exp(-x**2))[1:]
    assert np.max(np.abs(out + out[::-1])) < 1e-12
    gauss = np.exp(-x**2) / np.sqrt(np.pi)
    res = d.dminus1(gauss)
    assert res[-1] == pytest.approx(0.5, abs=1e-10)
    assert res[0] == pytest.approx(-0.5, abs=1e-10)


def test_dminus1_periodic_needs_zero_mean():
    g = Grid1D(2 * np.pi, 64)
    with pytest.raises(ValueError):
        g.dminus1(np.ones(64) + np.sin(g.x))
    out = g.dminus1(np.cos(g.x))
    assert np.max(np.abs(out - np.sin(g.x))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dminus1_inverts_derivative_and_is_skew(seed):
    d = gaussian_grid(512)
    rng = np.random.default_rng(seed)
    f = random_state(d, rng).q
    g = random_state(d, rng).p
    assert np.max(np.abs(d.derivative(d.dminus1(f), 1) - f)) < 1e-8 * max(1, np.max(np.abs(f)))
    skew = d.inner(d.dminus1(f), g) + d.inner(f, d.dminus1(g))
    assert abs(skew) < 1e-8


def test_phase_pair_basics():
    g = Grid1D(2 * np.pi, 16)
    u = PhasePair.from_psi(g, np.exp(1j * g.x))
    assert np.allclose(u.density, 1.0)
    assert u.norm() == pytest.approx(np.sqrt(2 * np.pi))
    v = u.rotate(np.pi / 2)
    assert np.allclose(v.psi, 1j * u.psi)
    assert np.allclose((u + u - u * 2).q, 0.0)
    with pytest.raises(ValueError):
        PhasePair(g, np.full(16, np.nan), np.zeros(16))
    with pytest.raises(ValueError):
        u + PhasePair.from_psi(Grid1D(2 * np.pi, 32), np.zeros(32))


def test_fd_gradient_examples():
    g = Grid1D(2 * np.pi, 32)
    u = random_state(g, np.random.default_rng(0))
    grad = fd_gradient(lambda v: 0.5 * (v.grid.inner(v.q, v.q) + v.grid.inner(v.p, v.p)), u)
    assert (grad - u).max_abs() < 1e-6
    lin = fd_gradient(lambda v: v.grid.integrate(v.q), u)
    assert np.allclose(lin.q, 1.0, atol=1e-6) and np.allclose(lin.p, 0.0, atol=1e-6)


def test_fd_gradient_second_order_in_eps():
    g = Grid1D(20.0, 32, "decaying")
    u = random_state(g, np.random.default_rng(1))

    def cubic(v):
        return v.grid.integrate(v.q**3 + v.q * v.p**2)

    exact = PhasePair(g, 3 * u.q**2 + u.p**2, 2 * u.q * u.p)
    errs = [(fd_gradient(cubic, u, eps) - exact).norm() for eps in (1e-2, 5e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("boundary", ["periodic", "decaying"])
def test_random_state_is_smooth_and_normalized(boundary):
    g = Grid1D(20.0, 128, boundary)
    u = random_state(g, np.random.default_rng(3))
    assert u.norm() == pytest.approx(1.0)
    spec = np.abs(np.fft.fft(u.psi))
    cut = int(np.ceil(len(spec) / 3))
    top = spec[cut: len(spec) - cut + 1]
    assert np.max(top) < 1e-8 * np.max(spec)
    a = random_state(g, np.random.default_rng(3))
    assert np.array_equal(a.q, u.q)
