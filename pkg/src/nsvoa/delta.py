"""Formal delta distributions with even and odd arguments, and the identity
suite relating their two- and three-term rearrangements.

A delta series ``delta(N / D)`` is the two-sided sum of ``(N/D)**n`` over all
integers ``n``, where ``N`` is a signed sum of at most two even variables plus
an optional nilpotent pair of odd variables, and ``D`` is a signed even
variable.  Binomials in two-summand numerators are always expanded in positive
powers of the second summand; the nilpotent summand is expanded through the
exact first-order shift rule, which terminates because odd variables square
to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .grassmann import GrassmannElement
from .series import (
    NEG_INF,
    POS_INF,
    ComparisonReport,
    Region,
    SuperSeries,
)

ONE = GrassmannElement.one(0)
ZERO = GrassmannElement.zero(0)


class BadSpec(Exception):
    pass


class UnknownIdentity(Exception):
    pass


@dataclass(frozen=True)
class DeltaSpec:
    """Shape of a delta argument: ``(sum of numerator terms) / (c * var)``.

    numerator: one or two (coefficient, variable) pairs; the expansion is in
    positive powers of the second pair's variable.
    nilpotent: optional (coefficient, odd_var, odd_var) numerator summand.
    deriv: order of differentiation of the delta series itself.
    """

    numerator: tuple
    denominator: tuple
    nilpotent: tuple | None = None
    deriv: int = 0

    def __post_init__(self):
        if not 1 <= len(self.numerator) <= 2:
            raise BadSpec("numerator needs one or two even summands")
        vars_ = [v for _, v in self.numerator] + [self.denominator[1]]
        if len(set(vars_)) != len(vars_):
            raise BadSpec("numerator and denominator variables must be distinct")
        if any(Fraction(c) == 0 for c, _ in self.numerator) or Fraction(self.denominator[0]) == 0:
            raise BadSpec("zero coefficient in delta spec")
        if self.deriv < 0:
            raise BadSpec("derivative order must be nonnegative")
        if self.nilpotent is not None and self.nilpotent[1] == self.nilpotent[2]:
            raise BadSpec("nilpotent summand needs two distinct odd variables")


def _falling(n: int, q: int) -> Fraction:
    """n * (n-1) * ... * (n-q+1), as an exact rational."""
    out = Fraction(1)
    for i in range(q):
        out *= n - i
    return out


def _delta_terms(spec: DeltaSpec, window: dict) -> SuperSeries:
    """The series sum over n of  falling(n, q) * N**(n-q) * (c0*d)**(q-n)."""
    q = spec.deriv
    c0, dvar = spec.denominator
    c0 = Fraction(c0)
    dlo, dhi = window[dvar]
    terms = {}
    if len(spec.numerator) == 1:
        c1, v1 = spec.numerator[0]
        c1 = Fraction(c1)
        evars = (dvar, v1)
        lo1, hi1 = window[v1]
        # exponent of dvar is q - n, exponent of v1 is n - q
        for n in range(q - int(dhi), q - int(dlo) + 1):
            w = _falling(n, q)
            if not w:
                continue
            e1 = n - q
            if not lo1 <= e1 <= hi1:
                continue
            coeff = w * c1 ** (n - q) * c0 ** (q - n)
            terms[((q - n, e1), ())] = GrassmannElement.scalar(coeff)
        support = Region({dvar: (NEG_INF, POS_INF), v1: (NEG_INF, POS_INF)}, {}, 0, 0)
    else:
        (c1, v1), (c2, v2) = spec.numerator
        c1, c2 = Fraction(c1), Fraction(c2)
        evars = (dvar, v1, v2)
        lo1, hi1 = window[v1]
        lo2, hi2 = window[v2]
        for n in range(q - int(dhi), q - int(dlo) + 1):
            w = _falling(n, q)
            if not w:
                continue
            # N**(n-q) = sum_m binom(n-q, m) (c1 v1)**(n-q-m) (c2 v2)**m
            p = n - q
            binom = Fraction(1)
            m = 0
            while True:
                if m:
                    binom = binom * Fraction(p - m + 1, m)
                if p >= 0 and m > p:
                    break
                if m > int(hi2):
                    break
                e1 = p - m
                if lo1 <= e1 <= hi1 and lo2 <= m <= hi2 and binom:
                    coeff = w * binom * c1 ** e1 * c2 ** m * c0 ** (-p)
                    key = ((q - n, e1, m), ())
                    terms[key] = GrassmannElement.scalar(coeff)
                m += 1
        support = Region(
            {dvar: (NEG_INF, POS_INF), v1: (NEG_INF, POS_INF), v2: (0, POS_INF)}, {}, 0, 0
        )
    series = SuperSeries(evars, (), terms, ZERO, support)
    # everything outside the requested box is uncomputed
    unknowns = []
    for v in evars:
        lo, hi = window[v]
        for cut in ((NEG_INF, lo - 1), (hi + 1, POS_INF)):
            if cut[0] > cut[1]:
                continue
            box = {u: support.interval(u, False) for u in evars}
            box[v] = cut
            region = Region(box, {}, 0, 0)
            if not region.is_empty():
                unknowns.append((region,))
    return SuperSeries(evars, (), terms, ZERO, support, unknowns)


def build_delta_one(var: str, window: int) -> SuperSeries:
    """The one-variable distribution sum of var**n over all integers n."""
    terms = {((n,), ()): ONE for n in range(-window, window + 1)}
    support = Region({var: (NEG_INF, POS_INF)}, {}, NEG_INF, POS_INF)
    unknowns = [
        (Region({var: (NEG_INF, -window - 1)}, {}, NEG_INF, POS_INF),),
        (Region({var: (window + 1, POS_INF)}, {}, NEG_INF, POS_INF),),
    ]
    return SuperSeries((var,), (), terms, ZERO, support, unknowns)


def build_delta(spec: DeltaSpec, window) -> SuperSeries:
    """Truncated expansion of the delta distribution described by ``spec``.

    ``window`` is either an integer N (symmetric box [-N, N] in every even
    variable of the spec) or a mapping from variable name to (low, high).
    """
    evars = [v for _, v in spec.numerator] + [spec.denominator[1]]
    if isinstance(window, int):
        if window < 1:
            raise BadSpec("window must be positive")
        window = {v: (-window, window) for v in evars}
    base = _delta_terms(spec, window)
    if spec.nilpotent is None:
        return base
    cphi, pa, pb = spec.nilpotent
    # N + c*pa*pb with the pair nilpotent: shift the series one order
    bumped = DeltaSpec(spec.numerator, spec.denominator, None, spec.deriv + 1)
    deriv = _delta_terms(bumped, window)
    c0, dvar = spec.denominator
    eps = SuperSeries.monomial(
        GrassmannElement.scalar(Fraction(cphi) / Fraction(c0)), ZERO, odd=[pa, pb]
    )
    dinv = SuperSeries.monomial(ONE, ZERO, even={dvar: -1})
    return base + eps * dinv * deriv


# -- identity suite -------------------------------------------------------------


def _poly(terms, L=2) -> SuperSeries:
    """Finite series from {(even map, odd list): grassmann-or-rational}."""
    out = None
    for (even, odd), coeff in terms.items():
        if not isinstance(coeff, GrassmannElement):
            coeff = GrassmannElement.scalar(coeff, L)
        mono = SuperSeries.monomial(coeff.embed(L), ZERO, even=dict(even), odd=list(odd))
        out = mono if out is None else out + mono
    return out


def default_x_operand(L=2, with_phi=False) -> SuperSeries:
    """Structured witness for the multiplication-principle checks."""
    e12 = GrassmannElement.monomial((1, 2), L)
    x = _poly(
        {
            ((("x1", 1),), ()): Fraction(2),
            ((("x2", 1),), ()): Fraction(-2),
            ((("x1", 1), ("x2", 1)), ()): e12,
            ((("x1", 2), ("x2", 1)), ()): Fraction(1, 3),
            ((), ()): Fraction(5, 3),
            ((("x2", 2),), ()): Fraction(1),
        },
        L,
    )
    if with_phi:
        e1 = GrassmannElement.generator(1, L)
        e2 = GrassmannElement.generator(2, L)
        x = x + _poly(
            {
                ((("x1", 1),), ("p1",)): e1,
                ((("x2", 2),), ("p2",)): e2.scale(Fraction(1, 2)),
                ((("x1", 1), ("x2", 1)), ("p1", "p2")): Fraction(7, 2),
            },
            L,
        )
    return x


def default_subst_operand(L=2) -> SuperSeries:
    """Laurent witness with finitely many negative powers of x2."""
    e1 = GrassmannElement.generator(1, L)
    e2 = GrassmannElement.generator(2, L)
    e12 = GrassmannElement.monomial((1, 2), L)
    return _poly(
        {
            ((("x1", -2),), ()): GrassmannElement.one(L) + e12,
            ((("x1", 3), ("x2", -1)), ()): Fraction(1),
            ((("x1", -1),), ("p1",)): e1,
            ((("x2", 2),), ("p2",)): e2,
            ((("x1", -1), ("x2", -1)), ("p1", "p2")): Fraction(1, 2),
            ((("x2", 1),), ()): Fraction(-3),
        },
        L,
    )


def _mono(even=None, odd=None, coeff=1) -> SuperSeries:
    c = coeff if isinstance(coeff, GrassmannElement) else GrassmannElement.scalar(coeff)
    return SuperSeries.monomial(c, ZERO, even=even or {}, odd=odd or [])


def _two_term_sides(N, phi):
    nil_l = (1, "p1", "p2") if phi else None
    nil_r = (-1, "p1", "p2") if phi else None
    lhs = _mono({"x1": -1}) * build_delta(
        DeltaSpec(((1, "x2"), (1, "x0")), (1, "x1"), nil_l), N
    )
    rhs = _mono({"x2": -1}) * build_delta(
        DeltaSpec(((1, "x1"), (-1, "x0")), (1, "x2"), nil_r), N
    )
    return lhs, rhs


def _three_term_sides(N, phi):
    nil_a = (-1, "p1", "p2") if phi else None
    nil_b = (1, "p1", "p2") if phi else None
    nil_c = (-1, "p1", "p2") if phi else None
    t1 = _mono({"x0": -1}) * build_delta(
        DeltaSpec(((1, "x1"), (-1, "x2")), (1, "x0"), nil_a), N
    )
    t2 = _mono({"x0": -1}) * build_delta(
        DeltaSpec(((1, "x2"), (-1, "x1")), (-1, "x0"), nil_b), N
    )
    rhs = _mono({"x2": -1}) * build_delta(
        DeltaSpec(((1, "x1"), (-1, "x0")), (1, "x2"), nil_c), N
    )
    return t1 - t2, rhs


def _deriv_two_term_sides(N):
    lhs = _mono({"x1": -2}) * build_delta(DeltaSpec(((1, "x2"), (1, "x0")), (1, "x1"), None, 1), N)
    rhs = -(_mono({"x2": -2}) * build_delta(DeltaSpec(((1, "x1"), (-1, "x0")), (1, "x2"), None, 1), N))
    return lhs, rhs


def _deriv_three_term_sides(N):
    t1 = _mono({"x0": -2}) * build_delta(DeltaSpec(((1, "x1"), (-1, "x2")), (1, "x0"), None, 1), N)
    t2 = _mono({"x0": -2}) * build_delta(DeltaSpec(((1, "x2"), (-1, "x1")), (-1, "x0"), None, 1), N)
    rhs = _mono({"x2": -2}) * build_delta(DeltaSpec(((1, "x1"), (-1, "x0")), (1, "x2"), None, 1), N)
    return t1 - t2, rhs


def _mult_principle_sides(N, phi, L=2, operand=None):
    x = operand if operand is not None else default_x_operand(L, with_phi=phi)
    d = build_delta(DeltaSpec(((1, "x1"),), (1, "x2")), N)
    lhs = x * d
    rhs = x.subst_even_rename("x1", "x2") * d
    return lhs, rhs


def _substitution_sides(N, L=2, operand=None):
    x = operand if operand is not None else default_subst_operand(L)
    d = build_delta(DeltaSpec(((1, "x2"), (1, "x0")), (1, "x1"), (1, "p1", "p2")), N)
    lhs = d * x
    sub = x.subst_even_sum("x1", "x2", "x0", (-N, N))
    eps = SuperSeries.monomial(ONE, ZERO, odd=["p1", "p2"])
    # x1 -> x2 + x0 + p1 p2: the nilpotent part rides on the x2 slot
    sub = sub + eps * x.derive("x1", "even").subst_even_sum("x1", "x2", "x0", (-N, N))
    rhs = d * sub
    return lhs, rhs


IDENTITY_BUILDERS = {
    "mult-principle": lambda N: _mult_principle_sides(N, phi=False),
    "mult-principle-phi": lambda N: _mult_principle_sides(N, phi=True),
    "two-term": lambda N: _two_term_sides(N, phi=False),
    "three-term": lambda N: _three_term_sides(N, phi=False),
    "deriv-two-term": _deriv_two_term_sides,
    "deriv-three-term": _deriv_three_term_sides,
    "two-term-phi": lambda N: _two_term_sides(N, phi=True),
    "three-term-phi": lambda N: _three_term_sides(N, phi=True),
    "substitution": lambda N: _substitution_sides(N),
}

IDENTITY_IDS = tuple(IDENTITY_BUILDERS)


def check_delta_identity(name: str, window: int, fault_inject: bool = False) -> ComparisonReport:
    """Build both sides of a named identity and compare coefficientwise."""
    if name not in IDENTITY_BUILDERS:
        raise UnknownIdentity(name)
    lhs, rhs = IDENTITY_BUILDERS[name](window)
    if fault_inject:
        lhs = lhs + _mono({"x0": 3} if "x0" in lhs.even_vars else {"x1": 3})
    return lhs.compare(rhs)


def superderivation(series: SuperSeries, xvar: str, phivar: str) -> SuperSeries:
    return series.superderive(xvar, phivar)


def check_superconformal(xtilde: SuperSeries, phitilde: SuperSeries, xvar: str, phivar: str) -> ComparisonReport:
    """Check D(xtilde) == phitilde * D(phitilde) for D = d/dphi + phi d/dx."""
    lhs = xtilde.superderive(xvar, phivar)
    rhs = phitilde * phitilde.superderive(xvar, phivar)
    return lhs.compare(rhs)


def superconformal_shift_pair(L=0):
    """The shifted coordinates (x1 - x2 - p1 p2, p1 - p2) in variables (x1, p1)."""
    xt = (
        _mono({"x1": 1})
        + _mono({"x2": 1}, coeff=-1)
        + SuperSeries.monomial(GrassmannElement.scalar(-1), ZERO, odd=["p1", "p2"])
    )
    pt = SuperSeries.monomial(ONE, ZERO, odd=["p1"]) + SuperSeries.monomial(
        GrassmannElement.scalar(-1), ZERO, odd=["p2"]
    )
    return xt, pt
