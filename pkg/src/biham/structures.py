"""
Operator algebra: the Schrodinger operator, Poisson structures, recursion
operators, Poisson brackets and Jacobi residuals.

Convention: covectors are gradients (dF/dq, dF/dp) and tangent vectors are
(dq/dt, dp/dt), both stored as :class:`PhasePair` with named fields so no
matrix-ordering adapter is needed. With these conventions

* ``Canonical``            dq/dt = b/hbar,          dp/dt = -a/hbar
* ``SchrodingerWeighted``  dq/dt = (H b)/hbar,      dp/dt = -(H a)/hbar
* ``NlsNonlocal``          the nonlocal operator of the cubic NLS

for a covector (a, b), and the bracket is {F, G} = <grad F, P grad G>.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import Grid1D, PhasePair, fd_gradient

Functional = Callable[[PhasePair], float]


@dataclass(frozen=True, eq=False)
class SchrodingerOperator:
    """H = -(hbar^2/2m) d^2/dx^2 + U(x) on the grid of ``potential``."""

    grid: Grid1D
    potential: np.ndarray
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")
        u = np.array(self.grid.check(self.potential), dtype=float)
        if not np.all(np.isfinite(u)):
            raise ValueError("potential must be finite")
        u.setflags(write=False)
        object.__setattr__(self, "potential", u)

    @classmethod
    def free(cls, grid: Grid1D, hbar: float = 1.0, mass: float = 1.0) -> "SchrodingerOperator":
        return cls(grid, np.zeros(grid.N), hbar, mass)

    @classmethod
    def harmonic(cls, grid: Grid1D, omega: float = 1.0, hbar: float = 1.0,
                 mass: float = 1.0, center: float = 0.0) -> "SchrodingerOperator":
        return cls(grid, 0.5 * mass * omega**2 * (grid.x - center) ** 2, hbar, mass)

    @property
    def kinetic_coefficient(self) -> float:
        return self.hbar**2 / (2 * self.mass)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        return apply_schrodinger(self, f)

    def power(self, f: np.ndarray, n: int) -> np.ndarray:
        for _ in range(n):
            f = apply_schrodinger(self, f)
        return f

    def matrix(self) -> np.ndarray:
        """Dense matrix of the discretized operator (for small grids)."""
        eye = np.eye(self.grid.N)
        return np.column_stack([apply_schrodinger(self, e) for e in eye])


def apply_schrodinger(op: SchrodingerOperator, f: np.ndarray) -> np.ndarray:
    f = op.grid.check(f)
    return -op.kinetic_coefficient * op.grid.derivative(f, 2) + op.potential * f


class PoissonStructure:
    """Base class; ``apply`` maps a covector to a tangent vector."""

    state_dependent = False

    def apply(self, covector: PhasePair, u: PhasePair | None = None) -> PhasePair:
        raise NotImplementedError

    def __add__(self, other: "PoissonStructure") -> "SumStructure":
        return SumStructure((self, other))


@dataclass(frozen=True)
class Canonical(PoissonStructure):
    hbar: float = 1.0

    def apply(self, covector, u=None):
        return PhasePair(covector.grid, covector.p / self.hbar, -covector.q / self.hbar)


@dataclass(frozen=True)
class SchrodingerWeighted(PoissonStructure):
    op: SchrodingerOperator

    def apply(self, covector, u=None):
        hb = self.op.hbar
        return PhasePair(covector.grid, self.op(covector.p) / hb, -self.op(covector.q) / hb)


@dataclass(frozen=True)
class NlsNonlocal(PoissonStructure):
    """Second Hamiltonian operator of the cubic NLS.

    With c = hbar/sqrt(2m) and s = D^-1(p a - q b) for a covector (a, b)::

        dq/dt = (-c a_x + 2 alpha p s) / hbar
        dp/dt = (-c b_x - 2 alpha q s) / hbar

    The operator depends on the state u = (q, p) at which it is evaluated.
    """

    hbar: float = 1.0
    mass: float = 0.5
    alpha: float = 1.0

    state_dependent = True

    @classmethod
    def from_coupling(cls, hbar: float, mass: float, b: float) -> "NlsNonlocal":
        return cls(hbar, mass, b * np.sqrt(2 * mass) / hbar)

    @property
    def c(self) -> float:
        return self.hbar / np.sqrt(2 * self.mass)

    @property
    def coupling(self) -> float:
        """Cubic coefficient b = alpha hbar / sqrt(2m)."""
        return self.alpha * self.hbar / np.sqrt(2 * self.mass)

    def apply(self, covector, u=None):
        if u is None:
            raise ValueError("NlsNonlocal needs the base state u")
        grid = covector.grid
        a, b = covector.q, covector.p
        dq = -self.c * grid.derivative(a, 1)
        dp = -self.c * grid.derivative(b, 1)
        if self.alpha != 0:
            s = grid.dminus1(u.p * a - u.q * b)
            dq = dq + 2 * self.alpha * u.p * s
            dp = dp - 2 * self.alpha * u.q * s
        return PhasePair(grid, dq / self.hbar, dp / self.hbar)


@dataclass(frozen=True)
class SumStructure(PoissonStructure):
    parts: tuple

    @property
    def state_dependent(self):
        return any(part.state_dependent for part in self.parts)

    def apply(self, covector, u=None):
        out = self.parts[0].apply(covector, u)
        for part in self.parts[1:]:
            out = out + part.apply(covector, u)
        return out


def apply_poisson(P: PoissonStructure, covector: PhasePair, u: PhasePair | None = None) -> PhasePair:
    return P.apply(covector, u)


def poisson_bracket(P: PoissonStructure, grad_f: PhasePair, grad_g: PhasePair,
                    u: PhasePair | None = None) -> float:
    """{F, G} = <grad F, P grad G>; for ``Canonical`` this is
    (1/hbar) int (F_q G_p - F_p G_q)."""
    return grad_f.inner(P.apply(grad_g, u))


class RecursionOperator:
    """Maps the gradient of one conserved functional to the next."""

    def apply(self, covector: PhasePair) -> PhasePair:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearDiag(RecursionOperator):
    """diag(H, H): state independent, hence torsion free."""

    op: SchrodingerOperator

    def apply(self, covector):
        return PhasePair(covector.grid, self.op(covector.q), self.op(covector.p))


@dataclass(frozen=True, eq=False)
class NlsRecursion(RecursionOperator):
    """Lambda_1^-1 o Lambda_2 for the cubic NLS, frozen at base state ``u``::

        a' = c b_x + 2 alpha q D^-1(p a - q b)
        b' = -c a_x + 2 alpha p D^-1(p a - q b)
    """

    hbar: float
    mass: float
    alpha: float
    u: PhasePair

    @property
    def structure(self) -> NlsNonlocal:
        return NlsNonlocal(self.hbar, self.mass, self.alpha)

    def apply(self, covector):
        tangent = self.structure.apply(covector, self.u)
        # invert the canonical map (a, b) -> (b, -a)/hbar
        return PhasePair(covector.grid, -self.hbar * tangent.p, self.hbar * tangent.q)


def apply_recursion(T: RecursionOperator, covector: PhasePair) -> PhasePair:
    return T.apply(covector)


@dataclass(frozen=True)
class SymplecticFormSpec:
    """Declarative record of the symplectic forms; never formed as matrices.

    ``omega1`` is checked numerically by :func:`omega1_roundtrip`.
    """

    variant: str

    DESCRIPTIONS = {
        "omega1": "hbar int dp ^ dq  (inverse of Canonical)",
        "omega0": "hbar int H^-1 dp ^ dq  (inverse of SchrodingerWeighted)",
        "omega2": "hbar int H_N^-1 dp ^ dq  (inverse of NlsNonlocal)",
    }

    def __post_init__(self):
        if self.variant not in self.DESCRIPTIONS:
            raise ValueError(f"unknown symplectic form {self.variant!r}")

    @property
    def description(self) -> str:
        return self.DESCRIPTIONS[self.variant]


def omega1(hbar: float, X: PhasePair, Y: PhasePair) -> float:
    """omega_1(X, Y) = hbar int (X_p Y_q - X_q Y_p) for tangent vectors X, Y."""
    g = X.grid
    return hbar * (g.inner(X.p, Y.q) - g.inner(X.q, Y.p))


def omega1_roundtrip(hbar: float, covector: PhasePair, Y: PhasePair) -> float:
    """|omega_1(Y, Lambda_1 a) - <a, Y>|: zero when omega_1 inverts Lambda_1,
    with the convention dF(Y) = omega_1(Y, X_F) for the flow X_F = Lambda_1 dF."""
    X = Canonical(hbar).apply(covector)
    return abs(omega1(hbar, Y, X) - covector.inner(Y))


def jacobi_residual(P: PoissonStructure, F: Functional, G: Functional, H: Functional,
                    u: PhasePair, eps_outer: float = 1e-4, eps_inner: float = 1e-5,
                    return_terms: bool = False):
    """Cyclic sum {F,{G,H}} + {G,{H,F}} + {H,{F,G}} at ``u``.

    Inner brackets are functionals of the state (the structure is re-evaluated
    at each perturbed state); all gradients come from :func:`fd_gradient`.
    With ``return_terms`` the three cyclic terms are returned as well.
    """

    def bracket_functional(A: Functional, B: Functional) -> Functional:
        def value(v: PhasePair) -> float:
            return poisson_bracket(P, fd_gradient(A, v, eps_inner),
                                   fd_gradient(B, v, eps_inner), v)
        return value

    terms = []
    for X, Y, Z in ((F, G, H), (G, H, F), (H, F, G)):
        inner = bracket_functional(Y, Z)
        terms.append(poisson_bracket(P, fd_gradient(X, u, eps_inner),
                                     fd_gradient(inner, u, eps_outer), u))
    residual = abs(sum(terms))
    if return_terms:
        return residual, terms
    return residual


def relative_difference(a: PhasePair, b: PhasePair) -> float:
    scale = max(a.norm(), b.norm())
    return (a - b).norm() / scale if scale > 0 else 0.0


def fit_constant(pairs: Sequence[tuple[PhasePair, PhasePair]]) -> float:
    """Least-squares c minimising sum ||c x - y||^2 over (x, y) pairs."""
    num = sum(x.inner(y) for x, y in pairs)
    den = sum(x.inner(x) for x, _ in pairs)
    return num / den
