"""
Time evolution of the linear and cubic Schrodinger equations with
conservation monitoring, and the Madelung (eikonal) transform.

States are :class:`PhasePair` objects; the loops work on psi = q + i p.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .functionals import FunctionalSpec
from .grid import Grid1D, PhasePair
from .structures import SchrodingerOperator

log = logging.getLogger(__name__)

SCHEMES = ("strang-split", "rk4")


@dataclass(frozen=True)
class IntegratorSpec:
    scheme: str = "strang-split"
    dt: float = 1e-3
    steps: int = 1000
    stride: int = 10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 1 or self.stride < 1:
            raise ValueError("steps and stride must be >= 1")


@dataclass(frozen=True)
class NlsParams:
    """Parameters of i hbar psi_t = -(hbar^2/2m) psi_xx + b |psi|^2 psi."""

    hbar: float = 1.0
    mass: float = 0.5
    b: float = 1.0


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    values: dict
    states: list = field(repr=False)
    drift: dict = field(default_factory=dict)

    @staticmethod
    def drift_of(series: np.ndarray) -> float:
        """max_t |f(t) - f(0)| / max(|f(0)|, 1)."""
        series = np.asarray(series)
        return float(np.max(np.abs(series - series[0])) / max(abs(series[0]), 1.0))

    def recompute_drift(self) -> dict:
        return {name: self.drift_of(vals) for name, vals in self.values.items()}


def _complex_apply(grid: Grid1D, func, psi: np.ndarray) -> np.ndarray:
    return func(psi.real) + 1j * func(psi.imag)


def _second_derivative(grid: Grid1D, psi: np.ndarray) -> np.ndarray:
    return _complex_apply(grid, lambda f: grid.derivative(f, 2), psi)


class _Stepper:
    """Precomputed single-step map psi -> psi(t + dt)."""

    def __init__(self, grid: Grid1D, dt: float, scheme: str, hbar: float, mass: float,
                 potential: np.ndarray | None = None, b: float = 0.0):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if scheme == "strang-split" and not grid.periodic:
            raise ValueError("strang-split needs a periodic grid; use rk4 on decaying grids")
        self.grid, self.dt, self.scheme = grid, dt, scheme
        self.hbar, self.mass, self.b = hbar, mass, b
        self.potential = np.zeros(grid.N) if potential is None else np.asarray(potential)
        if scheme == "strang-split":
            k = grid.wavenumbers
            self.kinetic = np.exp(-1j * hbar * k**2 * dt / (2 * mass))
            self.half_potential = np.exp(-0.5j * self.potential * dt / hbar)

    def rhs(self, psi: np.ndarray) -> np.ndarray:
        kin = -self.hbar**2 / (2 * self.mass) * _second_derivative(self.grid, psi)
        return -1j / self.hbar * (kin + (self.potential + self.b * np.abs(psi) ** 2) * psi)

    def _half_local(self, psi: np.ndarray) -> np.ndarray:
        psi = psi * self.half_potential
        if self.b != 0:
            psi = psi * np.exp(-0.5j * self.b * np.abs(psi) ** 2 * self.dt / self.hbar)
        return psi

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        if self.scheme == "strang-split":
            psi = self._half_local(psi)
            psi = np.fft.ifft(self.kinetic * np.fft.fft(psi))
            return self._half_local(psi)
        dt = self.dt
        k1 = self.rhs(psi)
        k2 = self.rhs(psi + 0.5 * dt * k1)
        k3 = self.rhs(psi + 0.5 * dt * k2)
        k4 = self.rhs(psi + dt * k3)
        return psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_lse(u: PhasePair, op: SchrodingerOperator, dt: float,
             scheme: str = "strang-split") -> PhasePair:
    """Advance i hbar psi_t = H psi by ``dt`` (negative dt steps backwards)."""
    stepper = _Stepper(u.grid, dt, scheme, op.hbar, op.mass, op.potential)
    return PhasePair.from_psi(u.grid, stepper(u.psi))


def step_nls(u: PhasePair, hbar: float, mass: float, b: float, dt: float,
             scheme: str = "strang-split") -> PhasePair:
    """Advance i hbar psi_t = -(hbar^2/2m) psi_xx + b|psi|^2 psi by ``dt``.

    The Strang nonlinear substep is the exact pointwise phase rotation
    exp(-i b |psi|^2 dt / 2 hbar), which leaves |psi| unchanged.
    """
    stepper = _Stepper(u.grid, dt, scheme, hbar, mass, None, b)
    return PhasePair.from_psi(u.grid, stepper(u.psi))


def run(kind: str, u0: PhasePair, params, integ: IntegratorSpec,
        monitored: Sequence[FunctionalSpec], keep_states: bool = True) -> TrajectoryRecord:
    """Integrate and record monitored functionals every ``integ.stride`` steps.

    ``params`` is a :class:`SchrodingerOperator` for ``kind='lse'`` and an
    :class:`NlsParams` for ``kind='nls'``. The final step is always recorded.
    """
    grid = u0.grid
    if kind == "lse":
        stepper = _Stepper(grid, integ.dt, integ.scheme, params.hbar, params.mass,
                           params.potential)
    elif kind == "nls":
        stepper = _Stepper(grid, integ.dt, integ.scheme, params.hbar, params.mass,
                           None, params.b)
    else:
        raise ValueError(f"unknown equation kind {kind!r}")

    names = [m.name for m in monitored]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate monitored functionals: {names}")
    times, states = [], []
    values = {name: [] for name in names}

    def record(step: int, state: PhasePair):
        times.append(step * integ.dt)
        with np.errstate(over="ignore", invalid="ignore"):
            row = [spec.value(state) for spec in monitored]
        if not np.all(np.isfinite(row)):
            raise FloatingPointError(
                f"monitored functional overflowed at step {step} (t={step * integ.dt:g}); "
                f"try a smaller dt than {integ.dt:g}")
        for name, v in zip(names, row):
            values[name].append(v)
        if keep_states:
            states.append(state)

    psi = u0.psi
    record(0, u0)
    for n in range(1, integ.steps + 1):
        # overflow is reported below as FloatingPointError, not as warnings
        with np.errstate(over="ignore", invalid="ignore"):
            psi = stepper(psi)
        if n % integ.stride == 0 or n == integ.steps:
            if not np.all(np.isfinite(psi)):
                raise FloatingPointError(
                    f"non-finite state at step {n} (t={n * integ.dt:g}); "
                    f"try a smaller dt than {integ.dt:g}")
            record(n, PhasePair.from_psi(grid, psi))
    rec = TrajectoryRecord(np.array(times), {k: np.array(v) for k, v in values.items()}, states)
    rec.drift = rec.recompute_drift()
    log.debug("run %s: %d steps, drift %s", kind, integ.steps, rec.drift)
    return rec


@dataclass
class MadelungFields:
    """Density chi = |psi|^2, scaled phase pi = theta/2 and current J.

    ``mask`` marks points with chi >= floor; ``pi`` outside the mask is the
    raw unwrapped phase and carries no physical meaning, ``current`` is zero.
    """

    grid: Grid1D
    chi: np.ndarray
    pi: np.ndarray
    current: np.ndarray
    mask: np.ndarray
    floor: float

    def psi(self) -> np.ndarray:
        return np.sqrt(self.chi) * np.exp(2j * self.pi)


def madelung_from_state(u: PhasePair, hbar: float, mass: float,
                        floor: float | None = None) -> MadelungFields:
    chi = u.density
    if floor is None:
        floor = 1e-8 * float(chi.max())
    if not floor > 0:
        raise ValueError("density floor must be positive")
    mask = chi >= floor
    theta = np.unwrap(np.arctan2(u.p, u.q))
    if mask.any():
        anchor = np.argmax(mask)
        theta = theta - 2 * np.pi * np.round(theta[anchor] / (2 * np.pi))
    g = u.grid
    # chi * theta_x written without dividing by chi
    flux = u.q * g.derivative(u.p, 1) - u.p * g.derivative(u.q, 1)
    current = np.where(mask, hbar / mass * flux, 0.0)
    return MadelungFields(g, chi, 0.5 * theta, current, mask, floor)


def madelung_rhs(fields: MadelungFields, potential: np.ndarray, hbar: float,
                 mass: float) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives of (chi, pi) from the hydrodynamic equations::

        dchi/dt = -(2 hbar/m) d/dx (chi pi_x)
        dpi/dt  = (hbar/4m) (sqrt chi)_xx / sqrt chi - (hbar/m) pi_x^2 - U/(2 hbar)

    Derivatives are taken of the smooth field sqrt(chi) exp(2 i pi) rather
    than of the masked phase. Both outputs are zero outside the mask.
    """
    g = fields.grid
    psi = fields.psi()
    d1 = _complex_apply(g, lambda f: g.derivative(f, 1), psi)
    d2 = _complex_apply(g, lambda f: g.derivative(f, 2), psi)
    flux = np.imag(np.conj(psi) * d1)  # chi * theta_x
    dchi = -hbar / mass * g.derivative(flux, 1)
    m = fields.mask
    chi = np.where(m, fields.chi, 1.0)
    theta_x = flux / chi
    amp_ratio = np.real(np.conj(psi) * d2) / chi + theta_x**2  # (sqrt chi)_xx / sqrt chi
    dpi = hbar / (4 * mass) * amp_ratio - hbar / mass * (0.5 * theta_x) ** 2 \
        - np.asarray(potential) / (2 * hbar)
    return np.where(m, dchi, 0.0), np.where(m, dpi, 0.0)


@dataclass
class MadelungCheck:
    residual: float
    continuity: float
    chi_residual: float
    pi_residual: float
    mask_fraction: float


def madelung_consistency(u: PhasePair, op: SchrodingerOperator, dt: float = 1e-4,
                         floor: float | None = None, scheme: str = "strang-split") -> MadelungCheck:
    """Compare ``madelung_rhs`` with central time differences of the
    transformed state along ``step_lse`` (sup norms over the density mask)."""
    fields = madelung_from_state(u, op.hbar, op.mass, floor)
    dchi, dpi = madelung_rhs(fields, op.potential, op.hbar, op.mass)
    plus = step_lse(u, op, dt, scheme)
    minus = step_lse(u, op, -dt, scheme)
    dchi_t = (plus.density - minus.density) / (2 * dt)
    dpi_t = np.angle(plus.psi * np.conj(minus.psi)) / (4 * dt)
    m = fields.mask
    g = u.grid
    continuity = dchi_t + g.derivative(op.hbar / op.mass * (u.q * g.derivative(u.p, 1)
                                                            - u.p * g.derivative(u.q, 1)), 1)
    chi_res = float(np.max(np.abs(dchi_t - dchi)[m]))
    pi_res = float(np.max(np.abs(dpi_t - dpi)[m]))
    return MadelungCheck(max(chi_res, pi_res), float(np.max(np.abs(continuity)[m])),
                         chi_res, pi_res, float(m.mean()))
