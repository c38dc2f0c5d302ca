"""
Exact differential-polynomial algebra in psi, conj(psi) and a potential U,
with formal D^-1 factors, and the recursion operators of the Schrodinger /
NLS hierarchy in units hbar = 2m = alpha = 1::

    Tlin P = -P_xx + U P
    TG   P = P_xx + psi_x D^-1[psi_x P]
    TK   P = P_xx + 2/3 psi P + 1/3 psi_x D^-1[P]
    TN   P = i (P_x + psi D^-1[psi conj(P) + conj(psi) P])

Coefficients are Gaussian rationals (exact ``Fraction`` real and imaginary
parts), so results can be compared structurally.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

PSI, CPSI, POT = "psi", "cpsi", "U"
_RANK = {PSI: 0, CPSI: 1, POT: 2}
_CONJ = {PSI: CPSI, CPSI: PSI, POT: POT}


@dataclass(frozen=True, order=True)
class Coeff:
    """Gaussian rational re + i*im."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __add__(self, other):
        return Coeff(self.re + other.re, self.im + other.im)

    def __neg__(self):
        return Coeff(-self.re, -self.im)

    def __mul__(self, other):
        if not isinstance(other, Coeff):
            other = Coeff(Fraction(other))
        return Coeff(self.re * other.re - self.im * other.im,
                     self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def conjugate(self):
        return Coeff(self.re, -self.im)

    def __truediv__(self, other: "Coeff"):
        den = other.re**2 + other.im**2
        num = self * other.conjugate()
        return Coeff(num.re / den, num.im / den)


ONE = Coeff(Fraction(1))
I = Coeff(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class Local:
    """u^(order) for u in {psi, cpsi, U}."""

    var: str
    order: int = 0

    @property
    def key(self):
        return (0, self.order, _RANK[self.var])


@dataclass(frozen=True)
class Nonlocal:
    """Formal D^-1[arg]; ``arg`` is a canonical single monomial with unit coefficient."""

    arg: "DiffPoly"

    @property
    def key(self):
        return (1, self.arg.key)


def _mono_key(mono: tuple) -> tuple:
    return tuple(f.key for f in mono)


def _canon_mono(factors: Iterable) -> tuple:
    return tuple(sorted(factors, key=lambda f: f.key))


class DiffPoly:
    """Immutable canonical differential polynomial.

    ``terms`` is a tuple of (monomial, Coeff) sorted by monomial key with no
    zero coefficients; a monomial is a sorted tuple of factors (repetition
    encodes powers). Equality is structural.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, mapping: dict | None = None):
        items = []
        for mono, c in (mapping or {}).items():
            if c:
                items.append((mono, c))
        items.sort(key=lambda t: _mono_key(t[0]))
        self.terms = tuple(items)
        self._hash = hash(self.terms)

    @classmethod
    def from_terms(cls, pairs: Iterable) -> "DiffPoly":
        acc: dict = {}
        for mono, c in pairs:
            mono = _canon_mono(mono)
            acc[mono] = acc.get(mono, Coeff()) + c
        return cls(acc)

    @classmethod
    def constant(cls, c) -> "DiffPoly":
        if not isinstance(c, Coeff):
            c = Coeff(Fraction(c))
        return cls({(): c})

    @classmethod
    def var(cls, name: str, order: int = 0) -> "DiffPoly":
        return cls({(Local(name, order),): ONE})

    @property
    def key(self):
        return tuple((_mono_key(m), (c.re, c.im)) for m, c in self.terms)

    def __eq__(self, other):
        return isinstance(other, DiffPoly) and self.terms == other.terms

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        return DiffPoly.from_terms(self.terms + _as_poly(other).terms)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({m: -c for m, c in self.terms})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        return DiffPoly.from_terms(
            (m1 + m2, c1 * c2) for m1, c1 in self.terms for m2, c2 in other.terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = DiffPoly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    @property
    def is_local(self) -> bool:
        return all(isinstance(f, Local) for m, _ in self.terms for f in m)

    def __repr__(self):
        return f"DiffPoly({render(self)})"

    def __str__(self):
        return render(self)


def _as_poly(x) -> DiffPoly:
    if isinstance(x, DiffPoly):
        return x
    if isinstance(x, (Coeff, int, Fraction)):
        return DiffPoly.constant(x)
    raise TypeError(f"cannot combine DiffPoly with {type(x).__name__}")


psi = DiffPoly.var(PSI)
cpsi = DiffPoly.var(CPSI)
U = DiffPoly.var(POT)
i_unit = DiffPoly.constant(I)


def _factor_derivative(f) -> DiffPoly:
    if isinstance(f, Local):
        return DiffPoly.var(f.var, f.order + 1)
    return f.arg


def differentiate(P: DiffPoly, times: int = 1) -> DiffPoly:
    """Total x-derivative (Leibniz rule; d/dx D^-1[Q] = Q)."""
    for _ in range(times):
        pieces = []
        for mono, c in P.terms:
            for k in range(len(mono)):
                if k and mono[k] == mono[k - 1]:
                    continue  # repeated factor: handled through the multiplicity
                mult = mono.count(mono[k])
                rest = mono[:k] + mono[k + 1:]
                dpoly = _factor_derivative(mono[k])
                for m2, c2 in dpoly.terms:
                    pieces.append((rest + m2, c * c2 * mult))
        P = DiffPoly.from_terms(pieces)
    return P


def conjugate(P: DiffPoly) -> DiffPoly:
    """Swap psi and conj(psi), conjugate coefficients; U and D^-1 are real."""

    def conj_factor(f):
        if isinstance(f, Local):
            return Local(_CONJ[f.var], f.order)
        return Nonlocal(conjugate(f.arg))

    return DiffPoly.from_terms(
        (tuple(conj_factor(f) for f in m), c.conjugate()) for m, c in P.terms)


def _partial(mono: tuple, factor: Local) -> tuple[int, tuple]:
    mult = mono.count(factor)
    if not mult:
        return 0, mono
    k = mono.index(factor)
    return mult, mono[:k] + mono[k + 1:]


def _homotopy(P: DiffPoly) -> DiffPoly:
    """1-D homotopy operator; returns Q with Q_x = P whenever P is exact."""
    by_degree: dict = {}
    for mono, c in P.terms:
        by_degree.setdefault(len(mono), []).append((mono, c))
    out = DiffPoly()
    for degree, terms in by_degree.items():
        if degree == 0:
            continue
        part = DiffPoly()
        for var in (PSI, CPSI, POT):
            top = max((f.order for m, _ in terms for f in m if f.var == var), default=0)
            for k in range(1, top + 1):
                pieces = []
                for mono, c in terms:
                    mult, rest = _partial(mono, Local(var, k))
                    if mult:
                        pieces.append((rest, c * mult))
                dPdk = DiffPoly.from_terms(pieces)
                if not dPdk:
                    continue
                for i in range(k):
                    inner = differentiate(dPdk, k - i - 1)
                    if (k - i - 1) % 2:
                        inner = -inner
                    part = part + DiffPoly.var(var, i) * inner
        out = out + part * Fraction(1, degree)
    return out


@lru_cache(maxsize=4096)
def integrate_exact(P: DiffPoly) -> DiffPoly | None:
    """Q with differentiate(Q) == P, or None when P is not a total derivative.

    Constants of integration are dropped. Only local polynomials are accepted.
    """
    if not P.is_local:
        raise ValueError("integrate_exact needs a polynomial without D^-1 factors")
    if not P:
        return DiffPoly()
    Q = _homotopy(P)
    return Q if differentiate(Q) == P else None


def dinv(Q: DiffPoly) -> DiffPoly:
    """D^-1[Q], localised wherever possible.

    The whole argument is integrated first; if that fails the argument is
    split into monomials, each of which is either integrated or kept as a
    formal ``Nonlocal`` factor with unit coefficient.
    """
    if not Q:
        return DiffPoly()
    if Q.is_local:
        whole = integrate_exact(Q)
        if whole is not None:
            return whole
    out = []
    for mono, c in Q.terms:
        single = DiffPoly({mono: ONE})
        local = integrate_exact(single) if single.is_local else None
        if local is not None:
            out.extend((m, c * c2) for m, c2 in local.terms)
        else:
            out.append(((Nonlocal(single),), c))
    return DiffPoly.from_terms(out)


@dataclass(frozen=True)
class SymbolicOperator:
    """One of the recursion operators ``Tlin``, ``TG``, ``TK``, ``TN``.

    ``potential`` switches the U term of Tlin; ``alpha`` (0 or 1) switches
    the nonlocal term of TN.
    """

    name: str
    potential: bool = True
    alpha: int = 1

    def __post_init__(self):
        if self.name not in ("Tlin", "TG", "TK", "TN"):
            raise ValueError(f"unknown operator {self.name!r}")

    def __call__(self, P: DiffPoly) -> DiffPoly:
        return apply_operator(self, P)


TLIN = SymbolicOperator("Tlin")
TG = SymbolicOperator("TG")
TK = SymbolicOperator("TK")
TN = SymbolicOperator("TN")
OPERATORS = {"Tlin": TLIN, "T": TLIN, "TG": TG, "TK": TK, "TN": TN}


def apply_operator(op: SymbolicOperator, P: DiffPoly) -> DiffPoly:
    psi_x = DiffPoly.var(PSI, 1)
    if op.name == "Tlin":
        out = -differentiate(P, 2)
        return out + U * P if op.potential else out
    if op.name == "TG":
        return differentiate(P, 2) + psi_x * dinv(psi_x * P)
    if op.name == "TK":
        return (differentiate(P, 2) + Fraction(2, 3) * psi * P
                + Fraction(1, 3) * psi_x * dinv(P))
    inner = differentiate(P)
    if op.alpha:
        inner = inner + op.alpha * psi * dinv(psi * conjugate(P) + cpsi * P)
    return i_unit * inner


def generate_hierarchy(op: SymbolicOperator, seed: DiffPoly, depth: int) -> list[DiffPoly]:
    """Flows op(seed), op^2(seed), ..., op^depth(seed).

    Levels that failed to localise are recognisable by ``is_local`` being False.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    flows = []
    P = seed
    for _ in range(depth):
        P = apply_operator(op, P)
        flows.append(P)
    return flows


@dataclass
class IdentityCase:
    name: str
    tn_squared: DiffPoly
    tlin_free: DiffPoly
    tlin_with_potential: DiffPoly

    @property
    def holds(self) -> bool:
        return self.tn_squared == self.tlin_free

    @property
    def holds_with_potential(self) -> bool:
        return self.tn_squared == self.tlin_with_potential


@dataclass
class IdentityReport:
    cases: list

    @property
    def ok(self) -> bool:
        """Identity holds on the whole basis at U = 0 and fails with U kept."""
        return all(c.holds for c in self.cases) and not any(
            c.holds_with_potential for c in self.cases)

    def lines(self) -> list[str]:
        out = []
        for c in self.cases:
            out.append(f"{c.name}: TN^2 = {render(c.tn_squared)}; "
                       f"U=0 {'equal' if c.holds else 'DIFFERENT'}; "
                       f"U kept {'equal' if c.holds_with_potential else 'different'}")
        return out


def check_T_equals_TN_squared() -> IdentityReport:
    """Compare TN^2 (alpha = 0) with Tlin at U = 0 and with U retained."""
    tn0 = SymbolicOperator("TN", alpha=0)
    free = SymbolicOperator("Tlin", potential=False)
    basis = {
        "psi": psi,
        "psi_x": DiffPoly.var(PSI, 1),
        "i*psi": i_unit * psi,
        "psi^2*conj(psi)": psi * psi * cpsi,
    }
    cases = [IdentityCase(name, tn0(tn0(P)), free(P), TLIN(P)) for name, P in basis.items()]
    return IdentityReport(cases)


# -- plain-text rendering -------------------------------------------------------

def _factor_name(f) -> str:
    if isinstance(f, Nonlocal):
        return f"D^-1[{render(f.arg)}]"
    base = "psi" if f.var == CPSI else f.var
    name = base + ("_" + "x" * f.order if f.order else "")
    return f"conj({name})" if f.var == CPSI else name


def _mono_text(mono: tuple) -> str:
    parts = []
    k = 0
    while k < len(mono):
        mult = mono.count(mono[k])
        name = _factor_name(mono[k])
        parts.append(name if mult == 1 else f"{name}^{mult}")
        k += mult
    return "*".join(parts)


def _fraction_text(r: Fraction) -> str:
    return str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"


def _coeff_text(c: Coeff) -> tuple[bool, str | None]:
    """(negative, magnitude text); text is None for a unit real coefficient."""
    if not c.im:
        mag = abs(c.re)
        return c.re < 0, None if mag == 1 else _fraction_text(mag)
    if not c.re:
        mag = abs(c.im)
        return c.im < 0, "i" if mag == 1 else f"{_fraction_text(mag)}*i"
    sign = "+" if c.im > 0 else "-"
    im = "i" if abs(c.im) == 1 else f"{_fraction_text(abs(c.im))}*i"
    return False, f"({_fraction_text(c.re)} {sign} {im})"


def _display_key(item):
    mono, _ = item
    top = max((f.order for f in mono if isinstance(f, Local)), default=0)
    return (-top, len(mono), _mono_key(mono))


def render(P: DiffPoly) -> str:
    """Deterministic text, e.g. ``-(psi_xxx + 3*psi*conj(psi)*psi_x)``."""
    if not P:
        return "0"
    items = sorted(P.terms, key=_display_key)
    units = [(ONE, ""), (-ONE, "-"), (I, "i"), (-I, "-i")]
    for unit, prefix in units:
        scaled = [(m, c / unit) for m, c in items]
        if all(not c.im for _, c in scaled) and scaled[0][1].re > 0:
            break
    else:
        # mixed phases: one signed coefficient per term, still parseable
        chunks = []
        for n, (mono, c) in enumerate(items):
            neg, coeff = _coeff_text(c)
            text = _mono_text(mono)
            text = coeff if not text else text if coeff is None else f"{coeff}*{text}"
            if n == 0:
                chunks.append(("-" if neg else "") + text)
            else:
                chunks.append(("- " if neg else "+ ") + text)
        return " ".join(chunks)
    chunks = []
    for n, (mono, c) in enumerate(scaled):
        r = c.re
        mag = abs(r)
        text = _mono_text(mono)
        if not text:
            text = _fraction_text(mag)
        elif mag != 1:
            text = f"{_fraction_text(mag)}*{text}"
        if n == 0:
            chunks.append(text)
        else:
            chunks.append(("- " if r < 0 else "+ ") + text)
    body = " ".join(chunks)
    if prefix == "":
        return body
    if len(scaled) == 1:
        return f"{prefix}{body}" if prefix == "-" else f"{prefix}*{body}"
    return f"{prefix}({body})" if prefix == "-" else f"{prefix}*({body})"


# -- seed parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>(?:psi|ψ̄|ψ|U)(?:_x+)?)"
                    r"|(?P<conj>conj|cpsi)|(?P<i>i)|(?P<op>[-+*/^()]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse {text[pos:]!r} in {text!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.text = text

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ValueError(f"expected {value or 'token'} in {self.text!r}")
        self.pos += 1
        return tok

    def expr(self) -> DiffPoly:
        sign = 1
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        out = self.term() * sign
        while self.peek()[1] in ("+", "-"):
            s = -1 if self.take()[1] == "-" else 1
            out = out + self.term() * s
        return out

    def starts_atom(self) -> bool:
        kind, val = self.peek()
        return kind in ("num", "var", "conj", "i") or val == "("

    def term(self) -> DiffPoly:
        out = self.power()
        while True:
            kind, val = self.peek()
            if val == "*":
                self.take()
                out = out * self.power()
            elif val == "/":
                self.take()
                den = self.power()
                if len(den.terms) != 1 or den.terms[0][0]:
                    raise ValueError("division only by constants")
                out = out * DiffPoly.constant(ONE / den.terms[0][1])
            elif self.starts_atom():
                out = out * self.power()
            else:
                return out

    def power(self) -> DiffPoly:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise ValueError("exponent must be an integer")
            base = base ** int(val)
        return base

    def atom(self) -> DiffPoly:
        kind, val = self.take()
        if kind == "num":
            return DiffPoly.constant(int(val))
        if kind == "i":
            return i_unit
        if kind == "var":
            name, _, xs = val.partition("_")
            order = len(xs)
            if name in ("ψ̄",):
                return DiffPoly.var(CPSI, order)
            return DiffPoly.var(POT if name == "U" else PSI, order)
        if kind == "conj":
            if val == "cpsi":
                return cpsi
            self.take("(")
            inner = self.expr()
            self.take(")")
            return conjugate(inner)
        if val == "(":
            inner = self.expr()
            self.take(")")
            return inner
        raise ValueError(f"unexpected {val!r} in {self.text!r}")


def parse(text: str) -> DiffPoly:
    """Parse seeds such as ``-i*psi``, ``-iψ``, ``psi_x``, ``psi^2*conj(psi)``."""
    parser = _Parser(text)
    out = parser.expr()
    if parser.pos != len(parser.tokens):
        raise ValueError(f"trailing input in {text!r}")
    return out
