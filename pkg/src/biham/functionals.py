"""
Conserved functionals of the linear and cubic nonlinear Schrodinger equations.

Linear tower::

    H_n[q, p] = 1/2 int (p H^n p + q H^n q),    grad H_n = (H^n q, H^n p)

NLS functionals (c = hbar / sqrt(2m))::

    K_-1 = 1/2 int (p^2 + q^2)
    K_0  = c int q p_x
    K_1  = 1/2 int {(hbar^2/2m)(p_x^2 + q_x^2) + (b/2)(p^2 + q^2)^2}
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import PhasePair
from .structures import (
    LinearDiag,
    NlsRecursion,
    PoissonStructure,
    SchrodingerOperator,
    fit_constant,
    poisson_bracket,
)


class FunctionalSpec:
    name = "F"

    def __call__(self, u: PhasePair) -> float:
        return eval_functional(self, u)

    def value(self, u: PhasePair) -> float:
        raise NotImplementedError

    def gradient(self, u: PhasePair) -> PhasePair:
        raise NotImplementedError


@dataclass(frozen=True)
class Hn(FunctionalSpec):
    n: int
    op: SchrodingerOperator

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("H_n needs n >= 0")

    @property
    def name(self):
        return f"H{self.n}"

    def value(self, u):
        g = u.grid
        return 0.5 * (g.inner(u.p, self.op.power(u.p, self.n))
                      + g.inner(u.q, self.op.power(u.q, self.n)))

    def gradient(self, u):
        return PhasePair(u.grid, self.op.power(u.q, self.n), self.op.power(u.p, self.n))


@dataclass(frozen=True)
class Kminus1(FunctionalSpec):
    name = "K-1"

    def value(self, u):
        return 0.5 * u.grid.integrate(u.q**2 + u.p**2)

    def gradient(self, u):
        return PhasePair(u.grid, u.q, u.p)


@dataclass(frozen=True)
class K0(FunctionalSpec):
    hbar: float = 1.0
    mass: float = 0.5
    name = "K0"

    @property
    def c(self):
        return self.hbar / np.sqrt(2 * self.mass)

    def value(self, u):
        return self.c * u.grid.inner(u.q, u.grid.derivative(u.p, 1))

    def gradient(self, u):
        d = u.grid.derivative
        return PhasePair(u.grid, self.c * d(u.p, 1), -self.c * d(u.q, 1))


@dataclass(frozen=True)
class K1(FunctionalSpec):
    hbar: float = 1.0
    mass: float = 0.5
    b: float = 1.0
    name = "K1"

    def value(self, u):
        g = u.grid
        kin = self.hbar**2 / (2 * self.mass)
        qx, px = g.derivative(u.q, 1), g.derivative(u.p, 1)
        rho = u.q**2 + u.p**2
        return 0.5 * g.integrate(kin * (px**2 + qx**2) + 0.5 * self.b * rho**2)

    def gradient(self, u):
        g = u.grid
        kin = self.hbar**2 / (2 * self.mass)
        rho = u.q**2 + u.p**2
        return PhasePair(g, -kin * g.derivative(u.q, 2) + self.b * rho * u.q,
                         -kin * g.derivative(u.p, 2) + self.b * rho * u.p)


def eval_functional(spec: FunctionalSpec, u: PhasePair) -> float:
    return spec.value(u)


def grad_functional(spec: FunctionalSpec, u: PhasePair) -> PhasePair:
    return spec.gradient(u)


def involution_matrix(specs: Sequence[FunctionalSpec], P: PoissonStructure,
                      u: PhasePair, with_scale: bool = False):
    """Matrix of brackets {F_i, F_j}.

    With ``with_scale`` also returns the Cauchy-Schwarz scale
    ||grad F_i|| * ||P grad F_j|| of every entry.
    """
    grads = [s.gradient(u) for s in specs]
    flows = [P.apply(g, u) for g in grads]
    n = len(specs)
    mat = np.zeros((n, n))
    scale = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            mat[i, j] = grads[i].inner(flows[j])
            scale[i, j] = grads[i].norm() * flows[j].norm()
    if with_scale:
        return mat, scale
    return mat


@dataclass
class RecursionReport:
    chain: str
    residuals: list
    constant: float | None = None


def recursion_consistency(u: PhasePair, chain: str, op: SchrodingerOperator | None = None,
                          hbar: float = 1.0, mass: float = 0.5, b: float = 1.0,
                          levels: int = 4) -> RecursionReport:
    """Residuals of the recursion relations grad F_{n+1} = T grad F_n.

    ``linear``: ||grad H_{n+1} - T grad H_n|| / ||grad H_{n+1}|| for n < levels.
    ``nls``: one constant c is fitted by least squares over n = -1, 0 and the
    relative residuals ||c T_N grad K_n - grad K_{n+1}|| / ||grad K_{n+1}||
    are reported together with c.
    """
    if chain == "linear":
        if op is None:
            raise ValueError("linear chain needs a SchrodingerOperator")
        T = LinearDiag(op)
        res = []
        for n in range(levels):
            nxt = Hn(n + 1, op).gradient(u)
            res.append((nxt - T.apply(Hn(n, op).gradient(u))).norm() / nxt.norm())
        return RecursionReport("linear", res)
    if chain == "nls":
        alpha = b * np.sqrt(2 * mass) / hbar
        T = NlsRecursion(hbar, mass, alpha, u)
        tower = [Kminus1(), K0(hbar, mass), K1(hbar, mass, b)]
        pairs = [(T.apply(tower[i].gradient(u)), tower[i + 1].gradient(u)) for i in range(2)]
        c = fit_constant(pairs)
        res = [(c * x - y).norm() / y.norm() for x, y in pairs]
        return RecursionReport("nls", res, c)
    raise ValueError(f"unknown chain {chain!r}")


def functional_by_name(name: str, *, op: SchrodingerOperator | None = None,
                       hbar: float = 1.0, mass: float = 1.0, b: float = 0.0) -> FunctionalSpec:
    """Parse names such as ``H0``, ``H3``, ``K-1``, ``K0``, ``K1``."""
    if name in ("K-1", "Km1"):
        return Kminus1()
    if name == "K0":
        return K0(hbar, mass)
    if name == "K1":
        return K1(hbar, mass, b)
    if name.startswith("H") and name[1:].isdigit():
        if op is None:
            raise ValueError(f"{name} needs a Schrodinger operator")
        return Hn(int(name[1:]), op)
    raise ValueError(f"unknown functional {name!r}")


def bracket(P: PoissonStructure, F: FunctionalSpec, G: FunctionalSpec, u: PhasePair) -> float:
    return poisson_bracket(P, F.gradient(u), G.gradient(u), u)
