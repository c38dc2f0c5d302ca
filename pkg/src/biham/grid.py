"""
One-dimensional grids, quadrature, differentiation and the nonlocal
antiderivative D^-1 used throughout the package.

Two boundary modes are supported:

``periodic``
    samples x_i = x0 + i*h on [-L/2, L/2); derivatives are spectral and the
    quadrature is the (spectrally exact) rectangle rule.
``decaying``
    fields are assumed negligible near both ends of [-L/2, L/2); derivatives
    are high-order centered finite differences with one-sided closures and the
    quadrature is the trapezoid rule.

Fields are plain ``numpy`` arrays of length ``grid.N``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

PERIODIC = "periodic"
DECAYING = "decaying"
BOUNDARIES = (PERIODIC, DECAYING)


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at ``z`` on nodes ``x``.

    Fornberg's recursion; returns an array of shape (m+1, len(x)).
    """
    n = len(x)
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


@lru_cache(maxsize=64)
def _fd_matrix(n: int, h: float, order: int, accuracy: int) -> np.ndarray:
    # centered stencil of 2*half+1 points, same width shifted inward near the ends
    half = (order + 1) // 2 + accuracy // 2 - 1
    width = 2 * half + 1
    if width > n:
        raise ValueError(f"grid with N={n} too small for a {width}-point stencil")
    mat = np.zeros((n, n))
    offsets = np.arange(width, dtype=float)
    for i in range(n):
        start = min(max(i - half, 0), n - width)
        w = fornberg_weights(float(i - start), offsets, order)[order]
        mat[i, start:start + width] = w / h**order
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``N`` points covering an interval of length ``L``.

    Both modes center the interval on the origin, i.e. x_i = -L/2 + i*h.
    ``fd_order`` is the accuracy order of the decaying-mode finite differences.
    """

    L: float
    N: int
    boundary: str = PERIODIC
    fd_order: int = 8
    x: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if int(self.N) != self.N or self.N < 8:
            raise ValueError(f"N must be an integer >= 8, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))
        if self.N % 2:
            raise ValueError(f"N must be even for the spectral transforms, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.fd_order < 4 or self.fd_order % 2:
            raise ValueError("fd_order must be an even integer >= 4")
        x = -0.5 * self.L + self.h * np.arange(self.N)
        w = np.full(self.N, self.h)
        if self.boundary == DECAYING:
            w[0] *= 0.5
            w[-1] *= 0.5
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "weights", w)

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return np.asarray(func(self.x), dtype=float) * np.ones(self.N)

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != (self.N,):
            raise ValueError(f"field has shape {f.shape}, grid expects ({self.N},)")
        return f

    def integrate(self, f: np.ndarray) -> float:
        """Quadrature sum of ``f`` with the grid weights."""
        return float(np.dot(self.weights, self.check(f)))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.dot(self.weights, self.check(f) * self.check(g)))

    def derivative(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        if order not in (1, 2, 3, 4):
            raise ValueError(f"unsupported derivative order {order}")
        f = self.check(f)
        if self.periodic:
            k = 2 * np.pi * np.fft.rfftfreq(self.N, d=self.h)
            mult = (1j * k) ** order
            if order % 2:
                mult[-1] = 0.0  # Nyquist mode has no odd derivative
            return np.fft.irfft(mult * np.fft.rfft(f), n=self.N)
        return _fd_matrix(self.N, self.h, order, self.fd_order) @ f

    def dminus1(self, f: np.ndarray, mean_tol: float = 1e-9) -> np.ndarray:
        """Skew antiderivative 1/2 (int_{-inf}^x - int_x^{inf}) f.

        On periodic grids only zero-mean input is accepted and the zero mode is
        annihilated. On decaying grids the cumulative trapezoid sums carry
        Euler-Maclaurin endpoint corrections through fourth order in h.
        """
        f = self.check(f)
        if self.periodic:
            mean = f.mean()
            if abs(mean) > mean_tol * max(1.0, float(np.max(np.abs(f)))):
                raise ValueError(
                    f"D^-1 on a periodic grid needs zero-mean input (mean={mean:.3e})"
                )
            k = 2 * np.pi * np.fft.rfftfreq(self.N, d=self.h)
            fk = np.fft.rfft(f)
            out = np.zeros_like(fk)
            out[1:-1] = fk[1:-1] / (1j * k[1:-1])
            return np.fft.irfft(out, n=self.N)

        h = self.h
        trap = np.concatenate(([0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))))
        total = trap[-1]
        f1 = self.derivative(f, 1)
        f3 = self.derivative(f, 3)
        # int_{x0}^{xi} and int_{xi}^{xN-1} with Euler-Maclaurin corrections
        left = trap - h**2 / 12 * (f1 - f1[0]) + h**4 / 720 * (f3 - f3[0])
        right = (total - trap) - h**2 / 12 * (f1[-1] - f1) + h**4 / 720 * (f3[-1] - f3)
        return 0.5 * (left - right)


def make_grid(L: float, N: int, boundary: str = PERIODIC, fd_order: int = 8) -> Grid1D:
    return Grid1D(L, N, boundary, fd_order)


@dataclass(frozen=True, eq=False)
class PhasePair:
    """Realified wave function psi = q + i p sampled on ``grid``.

    Also used for covectors (dF/dq, dF/dp) and tangent vectors (dq/dt, dp/dt).
    """

    grid: Grid1D
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.grid.check(self.q), dtype=float)
        p = np.array(self.grid.check(self.p), dtype=float)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("PhasePair samples must be finite")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def _trusted(cls, grid: Grid1D, q: np.ndarray, p: np.ndarray) -> "PhasePair":
        # skips validation; callers pass finite arrays of the right shape
        obj = object.__new__(cls)
        q, p = q.copy(), p.copy()
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "q", q)
        object.__setattr__(obj, "p", p)
        return obj

    @classmethod
    def from_psi(cls, grid: Grid1D, psi: np.ndarray) -> "PhasePair":
        psi = np.asarray(psi, dtype=complex)
        return cls(grid, psi.real, psi.imag)

    @property
    def psi(self) -> np.ndarray:
        return self.q + 1j * self.p

    @property
    def density(self) -> np.ndarray:
        return self.q**2 + self.p**2

    def _same_grid(self, other: "PhasePair"):
        if other.grid != self.grid:
            raise ValueError("PhasePair operands live on different grids")

    def __add__(self, other: "PhasePair") -> "PhasePair":
        self._same_grid(other)
        return PhasePair(self.grid, self.q + other.q, self.p + other.p)

    def __sub__(self, other: "PhasePair") -> "PhasePair":
        self._same_grid(other)
        return PhasePair(self.grid, self.q - other.q, self.p - other.p)

    def __mul__(self, scalar: float) -> "PhasePair":
        return PhasePair(self.grid, scalar * self.q, scalar * self.p)

    __rmul__ = __mul__

    def __neg__(self) -> "PhasePair":
        return PhasePair(self.grid, -self.q, -self.p)

    def inner(self, other: "PhasePair") -> float:
        self._same_grid(other)
        return self.grid.inner(self.q, other.q) + self.grid.inner(self.p, other.p)

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.q)), np.max(np.abs(self.p))))

    def rotate(self, theta: float) -> "PhasePair":
        """Global phase rotation psi -> exp(i theta) psi."""
        c, s = np.cos(theta), np.sin(theta)
        return PhasePair(self.grid, c * self.q - s * self.p, s * self.q + c * self.p)

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> "PhasePair":
        return PhasePair(self.grid, func(self.q), func(self.p))


def fd_gradient(functional: Callable[[PhasePair], float], u: PhasePair,
                eps: float = 1e-5) -> PhasePair:
    """Central-difference gradient of ``functional`` at ``u``.

    The gradient is taken with respect to the quadrature-weighted inner
    product, so F(u + e*delta_i) - F(u) ~ e * w_i * g_i. The step is ``eps``
    scaled by the magnitude of ``u``.
    """
    grid = u.grid
    step = eps * max(1.0, u.max_abs())
    comps = []
    for name in ("q", "p"):
        base = {"q": np.array(u.q), "p": np.array(u.p)}
        g = np.empty(grid.N)
        for i in range(grid.N):
            orig = base[name][i]
            base[name][i] = orig + step
            fp = functional(PhasePair._trusted(grid, base["q"], base["p"]))
            base[name][i] = orig - step
            fm = functional(PhasePair._trusted(grid, base["q"], base["p"]))
            base[name][i] = orig
            g[i] = (fp - fm) / (2 * step * grid.weights[i])
        comps.append(g)
    return PhasePair(grid, comps[0], comps[1])


def random_state(grid: Grid1D, rng: np.random.Generator, band: float | None = None,
                 normalize: bool = True) -> PhasePair:
    """Random smooth band-limited state.

    Periodic grids keep Fourier modes below ``band`` * Nyquist (default 2/3,
    i.e. the top third of the spectrum is zeroed). Decaying grids use a much
    narrower band (default 1/16 of Nyquist) under a Gaussian envelope that is
    below 1e-13 at the interval ends.
    """
    n = grid.N
    if band is None:
        band = 2 / 3 if grid.periodic else 1 / 16
    kmax = int(band * n / 2)
    coeffs = np.zeros(n, dtype=complex)
    idx = np.concatenate((np.arange(0, kmax + 1), np.arange(n - kmax, n)))
    coeffs[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    psi = np.fft.ifft(coeffs) * n
    if not grid.periodic:
        sigma = grid.L / 16
        psi = psi * np.exp(-0.5 * (grid.x / sigma) ** 2)
    u = PhasePair.from_psi(grid, psi)
    if normalize:
        u = u * (1.0 / u.norm())
    return u
