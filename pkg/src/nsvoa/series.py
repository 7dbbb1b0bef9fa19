"""Windowed formal Laurent series in even and nilpotent odd variables.

A :class:`SuperSeries` stores finitely many terms of a possibly infinite
formal series, together with bookkeeping that says exactly which coefficients
of the underlying infinite object the stored data determines:

* a *support region* over-approximating where the true series can be nonzero
  (per-variable intervals plus a band on the doubled exponent mass
  ``2*sum(even exponents) + sum(odd exponents)``, which is conserved by
  multiplication and pins down delta-like distributions), and
* a list of *unknown chains*: Minkowski sums of regions covering every
  exponent whose true coefficient the stored data does not determine.

A coefficient is exact iff it avoids every unknown chain.  Products combine
chains with factor supports, so contamination propagates soundly through
arbitrary arithmetic.  Coefficients live in any space implementing the small
protocol used here: ``+``, unary ``-``, ``*``, ``is_zero()``,
``parity_parts()`` and ``str``.  Grassmann scalars, module vectors and the
identity-checking code all go through the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .grassmann import GrassmannElement, Parity

NEG_INF = float("-inf")
POS_INF = float("inf")


class SeriesError(Exception):
    pass


class UnknownVariable(SeriesError):
    pass


class WindowMiss(SeriesError):
    """A required coefficient lies outside the exactly-known window."""


class IllFormedShift(SeriesError):
    """Shift operand is not even and nilpotent, or lacks a direction."""


UNKNOWN = object()  # sentinel returned by coefficient queries outside exact windows


def _iv_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _iv_meet(a, b):
    return (max(a[0], b[0]), min(a[1], b[1]))


def _iv_join(a, b):
    return (min(a[0], b[0]), max(a[1], b[1]))


def _iv_empty(a):
    return a[0] > a[1]


@dataclass(frozen=True)
class Window:
    """Per-variable view of support and exact-knowledge intervals."""

    support_low: float
    support_high: float
    exact_low: float
    exact_high: float

    @property
    def empty(self) -> bool:
        return self.exact_low > self.exact_high


class Region:
    """A set of exponent vectors: a box per variable plus a mass band.

    Variables absent from ``evens``/``odds`` are pinned to exponent 0.
    ``mass`` intervals bound ``2*sum(evens) + sum(odds)`` over the region.
    """

    __slots__ = ("evens", "odds", "mass_low", "mass_high")

    def __init__(self, evens=None, odds=None, mass_low=NEG_INF, mass_high=POS_INF):
        self.evens = dict(evens or {})
        self.odds = dict(odds or {})
        self.mass_low = mass_low
        self.mass_high = mass_high

    def interval(self, var: str, odd: bool):
        store = self.odds if odd else self.evens
        return store.get(var, (0, 0))

    def is_empty(self) -> bool:
        if any(_iv_empty(iv) for iv in self.evens.values()):
            return True
        if any(_iv_empty(iv) for iv in self.odds.values()):
            return True
        return self.mass_low > self.mass_high

    def shifted(self, var: str, odd: bool, delta: int) -> "Region":
        r = Region(self.evens, self.odds, self.mass_low, self.mass_high)
        lo, hi = r.interval(var, odd)
        (r.odds if odd else r.evens)[var] = (lo + delta, hi + delta)
        w = 1 if odd else 2
        r.mass_low += w * delta
        r.mass_high += w * delta
        return r

    def __repr__(self):
        return f"Region(evens={self.evens}, odds={self.odds}, mass=[{self.mass_low},{self.mass_high}])"


EMPTY_REGION = Region({}, {}, 0, -1)


def region_sum(a: Region, b: Region) -> Region:
    if a.is_empty() or b.is_empty():
        return EMPTY_REGION
    evens = {}
    for v in set(a.evens) | set(b.evens):
        evens[v] = _iv_add(a.interval(v, False), b.interval(v, False))
    odds = {}
    for v in set(a.odds) | set(b.odds):
        odds[v] = _iv_add(a.interval(v, True), b.interval(v, True))
    return Region(evens, odds, a.mass_low + b.mass_low, a.mass_high + b.mass_high)


def region_hull(a: Region, b: Region) -> Region:
    if a.is_empty():
        return b
    if b.is_empty():
        return a
    evens = {}
    for v in set(a.evens) | set(b.evens):
        evens[v] = _iv_join(a.interval(v, False), b.interval(v, False))
    odds = {}
    for v in set(a.odds) | set(b.odds):
        odds[v] = _iv_join(a.interval(v, True), b.interval(v, True))
    return Region(evens, odds, min(a.mass_low, b.mass_low), max(a.mass_high, b.mass_high))


def _mass_of(evars, eexp, ovars, oexp) -> int:
    return 2 * sum(eexp) + sum(oexp)


def _box_mass_range(box_evens, box_odds):
    lo = 0
    hi = 0
    for (l, h) in box_evens:
        lo = NEG_INF if l == NEG_INF else lo + 2 * l
        hi = POS_INF if h == POS_INF else hi + 2 * h
    for (l, h) in box_odds:
        lo = NEG_INF if l == NEG_INF else lo + l
        hi = POS_INF if h == POS_INF else hi + h
    return lo, hi


def _chain_covers(chain, evars, eexp, ovars, oexp) -> bool:
    """Can the Minkowski sum of the chain's regions reach this exponent?

    Exact for chains of length 1 and 2; conservative (may report coverage
    that joint feasibility would exclude) for longer chains.
    """
    mass = _mass_of(evars, eexp, ovars, oexp)
    if len(chain) == 1:
        r = chain[0]
        for v, e in zip(evars, eexp):
            lo, hi = r.interval(v, False)
            if not lo <= e <= hi:
                return False
        for v, o in zip(ovars, oexp):
            lo, hi = r.interval(v, True)
            if not lo <= o <= hi:
                return False
        return r.mass_low <= mass <= r.mass_high
    if len(chain) == 2:
        a, b = chain
        box_e = []
        for v, e in zip(evars, eexp):
            alo, ahi = a.interval(v, False)
            blo, bhi = b.interval(v, False)
            iv = (max(alo, e - bhi), min(ahi, e - blo))
            if _iv_empty(iv):
                return False
            box_e.append(iv)
        box_o = []
        for v, o in zip(ovars, oexp):
            alo, ahi = a.interval(v, True)
            blo, bhi = b.interval(v, True)
            iv = (max(alo, o - bhi), min(ahi, o - blo))
            if _iv_empty(iv):
                return False
            box_o.append(iv)
        # the part of the exponent drawn from region a must satisfy all
        # three mass constraints simultaneously
        lo, hi = _box_mass_range(box_e, box_o)
        lo = max(lo, a.mass_low, mass - b.mass_high)
        hi = min(hi, a.mass_high, mass - b.mass_low)
        return lo <= hi
    # conservative: per-variable interval sums and total mass band
    for v, e in zip(evars, eexp):
        lo = sum(r.interval(v, False)[0] for r in chain)
        hi = sum(r.interval(v, False)[1] for r in chain)
        if not lo <= e <= hi:
            return False
    for v, o in zip(ovars, oexp):
        lo = sum(r.interval(v, True)[0] for r in chain)
        hi = sum(r.interval(v, True)[1] for r in chain)
        if not lo <= o <= hi:
            return False
    lo = sum(r.mass_low for r in chain)
    hi = sum(r.mass_high for r in chain)
    return lo <= mass <= hi


@dataclass
class Witness:
    exponent: dict
    lhs: str
    rhs: str

    def as_json(self):
        return {"exponent": self.exponent, "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class ComparisonReport:
    status: str  # "pass" | "fail" | "inconclusive"
    checked: int = 0
    skipped: int = 0
    witnesses: list = field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def combine(cls, reports: Iterable["ComparisonReport"], note: str = "") -> "ComparisonReport":
        reports = list(reports)
        checked = sum(r.checked for r in reports)
        skipped = sum(r.skipped for r in reports)
        witnesses = [w for r in reports for w in r.witnesses]
        if any(r.status == "fail" for r in reports):
            status = "fail"
        elif checked == 0 or all(r.status == "inconclusive" for r in reports):
            status = "inconclusive"
        else:
            status = "pass"
        return cls(status, checked, skipped, witnesses[:16], note)


class SuperSeries:
    """Finitely stored slice of a formal series with exactness bookkeeping."""

    __slots__ = ("even_vars", "odd_vars", "terms", "support", "unknowns", "zero")

    def __init__(self, even_vars, odd_vars, terms, zero, support=None, unknowns=()):
        self.even_vars = tuple(even_vars)
        self.odd_vars = tuple(odd_vars)
        self.zero = zero
        canon = {}
        for (eexp, oexp), coeff in terms.items():
            eexp = tuple(eexp)
            oexp = tuple(oexp)
            if len(eexp) != len(self.even_vars) or len(oexp) != len(self.odd_vars):
                raise SeriesError("exponent arity mismatch")
            if any(o not in (0, 1) for o in oexp):
                raise SeriesError("odd exponents must be 0 or 1")
            if coeff.is_zero():
                continue
            if (eexp, oexp) in canon:
                acc = canon[(eexp, oexp)] + coeff
                if acc.is_zero():
                    del canon[(eexp, oexp)]
                else:
                    canon[(eexp, oexp)] = acc
            else:
                canon[(eexp, oexp)] = coeff
        self.terms = canon
        if support is None:
            support = self._hull_region()
        self.support = support
        self.unknowns = tuple(tuple(ch) for ch in unknowns)

    # -- construction helpers ------------------------------------------------

    def _hull_region(self) -> Region:
        if not self.terms:
            return Region(
                {v: (0, -1) for v in self.even_vars},
                {v: (0, -1) for v in self.odd_vars},
                0,
                -1,
            )
        evens = {v: (POS_INF, NEG_INF) for v in self.even_vars}
        odds = {v: (POS_INF, NEG_INF) for v in self.odd_vars}
        mlo, mhi = POS_INF, NEG_INF
        for (eexp, oexp) in self.terms:
            for v, e in zip(self.even_vars, eexp):
                lo, hi = evens[v]
                evens[v] = (min(lo, e), max(hi, e))
            for v, o in zip(self.odd_vars, oexp):
                lo, hi = odds[v]
                odds[v] = (min(lo, o), max(hi, o))
            m = _mass_of(self.even_vars, eexp, self.odd_vars, oexp)
            mlo, mhi = min(mlo, m), max(mhi, m)
        return Region(evens, odds, mlo, mhi)

    @classmethod
    def constant(cls, coeff, zero, even_vars=(), odd_vars=()):
        e = tuple(0 for _ in even_vars)
        o = tuple(0 for _ in odd_vars)
        return cls(even_vars, odd_vars, {(e, o): coeff}, zero)

    @classmethod
    def zero_series(cls, zero, even_vars=(), odd_vars=()):
        return cls(even_vars, odd_vars, {}, zero)

    @classmethod
    def monomial(cls, coeff, zero, even=None, odd=None):
        """Single term; ``even`` maps var -> exponent, ``odd`` is a var list."""
        even = dict(even or {})
        odd = list(odd or [])
        evars = tuple(even)
        ovars = tuple(odd)
        e = tuple(even[v] for v in evars)
        o = tuple(1 for _ in ovars)
        return cls(evars, ovars, {(e, o): coeff}, zero)

    # -- context alignment -----------------------------------------------------

    def in_context(self, even_vars, odd_vars) -> "SuperSeries":
        even_vars = tuple(even_vars)
        odd_vars = tuple(odd_vars)
        if even_vars == self.even_vars and odd_vars == self.odd_vars:
            return self
        if not set(self.even_vars) <= set(even_vars) or not set(self.odd_vars) <= set(odd_vars):
            raise UnknownVariable("context extension cannot drop variables")
        epos = [self.even_vars.index(v) if v in self.even_vars else None for v in even_vars]
        opos = [self.odd_vars.index(v) if v in self.odd_vars else None for v in odd_vars]
        terms = {}
        for (eexp, oexp), coeff in self.terms.items():
            ne = tuple(0 if p is None else eexp[p] for p in epos)
            no = tuple(0 if p is None else oexp[p] for p in opos)
            terms[(ne, no)] = coeff
        return SuperSeries(even_vars, odd_vars, terms, self.zero, self.support, self.unknowns)

    def _align(self, other: "SuperSeries"):
        evars = tuple(dict.fromkeys(self.even_vars + other.even_vars))
        ovars = tuple(dict.fromkeys(self.odd_vars + other.odd_vars))
        return self.in_context(evars, ovars), other.in_context(evars, ovars)

    # -- exactness ---------------------------------------------------------------

    def is_exact_at(self, eexp, oexp) -> bool:
        return not any(
            _chain_covers(ch, self.even_vars, eexp, self.odd_vars, oexp) for ch in self.unknowns
        )

    def in_support(self, eexp, oexp) -> bool:
        return _chain_covers((self.support,), self.even_vars, eexp, self.odd_vars, oexp)

    def coefficient(self, even=None, odd=None):
        """Exact coefficient, or the UNKNOWN sentinel outside exact knowledge.

        ``even`` maps variable name to exponent (missing names mean 0);
        ``odd`` is an iterable of odd variable names present in the monomial.
        """
        even = dict(even or {})
        odd = set(odd or ())
        for v in even:
            if v not in self.even_vars and even[v] != 0:
                return self.zero
        for v in odd:
            if v not in self.odd_vars:
                return self.zero
        eexp = tuple(even.get(v, 0) for v in self.even_vars)
        oexp = tuple(1 if v in odd else 0 for v in self.odd_vars)
        if not self.is_exact_at(eexp, oexp):
            return UNKNOWN
        return self.terms.get((eexp, oexp), self.zero)

    def window(self, var: str) -> Window:
        """Per-variable support/exact interval summary.

        The exact interval is the longest interval of exponents of ``var``
        none of whose slices can meet an unknown chain.  Per-coefficient
        queries through :meth:`coefficient` are finer than this summary.
        """
        if var not in self.even_vars:
            raise UnknownVariable(var)
        slo, shi = self.support.interval(var, False)
        if slo > shi:
            return Window(slo, shi, 0, -1)
        cuts = []
        for ch in self.unknowns:
            projections = {
                v: (
                    sum(r.interval(v, False)[0] for r in ch),
                    sum(r.interval(v, False)[1] for r in ch),
                )
                for v in self.even_vars
            }
            if any(_iv_empty(iv) for iv in projections.values()):
                continue  # chain reaches nothing
            # a chain is charged to the variables where it cuts properly;
            # cross-variable unknowns do not empty this axis' summary
            proper = [
                v
                for v in self.even_vars
                if projections[v][0] > self.support.interval(v, False)[0]
                or projections[v][1] < self.support.interval(v, False)[1]
            ]
            if (var in proper) or not proper:
                cuts.append(projections[var])
        if not cuts:
            return Window(slo, shi, slo, shi)
        cuts.sort()
        # free intervals of [slo, shi] after removing every cut
        free = []
        cursor = slo
        exhausted = False
        for plo, phi in cuts:
            if phi < cursor:
                continue
            if plo > cursor:
                free.append((cursor, min(shi, plo - 1)))
            if phi == POS_INF:
                exhausted = True
                break
            cursor = max(cursor, phi + 1)
            if cursor > shi:
                exhausted = True
                break
        if not exhausted and cursor <= shi:
            free.append((cursor, shi))
        free = [iv for iv in free if iv[0] <= iv[1] and iv[0] < POS_INF and iv[1] > NEG_INF]
        if not free:
            return Window(slo, shi, 0, -1)

        def length(iv):
            if iv[0] == NEG_INF or iv[1] == POS_INF:
                return POS_INF
            return iv[1] - iv[0]

        lo, hi = max(free, key=length)
        return Window(slo, shi, lo, hi)

    def has_empty_window(self) -> bool:
        return any(self.window(v).empty for v in self.even_vars)

    # -- arithmetic ----------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, SuperSeries):
            return NotImplemented
        a, b = self._align(other)
        terms = dict(a.terms)
        for key, coeff in b.terms.items():
            if key in terms:
                acc = terms[key] + coeff
                if acc.is_zero():
                    del terms[key]
                else:
                    terms[key] = acc
            else:
                terms[key] = coeff
        support = region_hull(a.support, b.support)
        zero = a.zero if (a.terms or not b.terms) else b.zero
        return SuperSeries(a.even_vars, a.odd_vars, terms, zero, support, a.unknowns + b.unknowns)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SuperSeries(
            self.even_vars,
            self.odd_vars,
            {k: -c for k, c in self.terms.items()},
            self.zero,
            self.support,
            self.unknowns,
        )

    def __mul__(self, other):
        if not isinstance(other, SuperSeries):
            return NotImplemented
        a, b = self._align(other)
        n_odd = len(a.odd_vars)
        terms = {}
        for (ea, oa), ca in a.terms.items():
            wa = sum(oa)
            for (eb, ob), cb in b.terms.items():
                # odd monomial product: zero on collision, sign from reordering
                if wa and sum(ob):
                    if any(x and y for x, y in zip(oa, ob)):
                        continue
                    # each left-factor variable hops over the right-factor
                    # variables that precede it in canonical order
                    swaps = 0
                    seen_b = 0
                    for i in range(n_odd):
                        if oa[i]:
                            swaps += seen_b
                        if ob[i]:
                            seen_b += 1
                    osign = -1 if swaps & 1 else 1
                    om = tuple(x + y for x, y in zip(oa, ob))
                elif wa:
                    om = oa
                    osign = 1
                else:
                    om = ob
                    osign = 1
                ekey = tuple(x + y for x, y in zip(ea, eb))
                # Koszul: the left factor's odd monomial passes the right coefficient
                for pb, cbp in (cb.parity_parts() if wa & 1 else ((Parity.EVEN, cb),)):
                    sign = -osign if (wa & 1 and pb == Parity.ODD) else osign
                    prod = ca * cbp
                    if sign < 0:
                        prod = -prod
                    key = (ekey, om)
                    if key in terms:
                        acc = terms[key] + prod
                        if acc.is_zero():
                            del terms[key]
                        else:
                            terms[key] = acc
                    elif not prod.is_zero():
                        terms[key] = prod
        support = region_sum(a.support, b.support)
        unknowns = [ch + (b.support,) for ch in a.unknowns]
        unknowns += [(a.support,) + ch for ch in b.unknowns]
        zero = a.zero * b.zero
        return SuperSeries(a.even_vars, a.odd_vars, terms, zero, support, unknowns)

    def scale(self, coeff) -> "SuperSeries":
        """Left-multiply every term by an even scalar coefficient."""
        terms = {k: coeff * c for k, c in self.terms.items()}
        return SuperSeries(self.even_vars, self.odd_vars, terms, self.zero, self.support, self.unknowns)

    # -- calculus ---------------------------------------------------------------------

    def derive(self, var: str, kind: str) -> "SuperSeries":
        if kind == "even":
            if var not in self.even_vars:
                raise UnknownVariable(var)
            i = self.even_vars.index(var)
            terms = {}
            for (eexp, oexp), coeff in self.terms.items():
                n = eexp[i]
                if n == 0:
                    continue
                ne = eexp[:i] + (n - 1,) + eexp[i + 1:]
                terms[(ne, oexp)] = coeff.scale_rat(Fraction(n))
            support = self.support.shifted(var, False, -1)
            unknowns = [(ch[0].shifted(var, False, -1),) + ch[1:] for ch in self.unknowns]
            return SuperSeries(self.even_vars, self.odd_vars, terms, self.zero, support, unknowns)
        if kind == "odd":
            if var not in self.odd_vars:
                raise UnknownVariable(var)
            i = self.odd_vars.index(var)
            terms = {}
            for (eexp, oexp), coeff in self.terms.items():
                if not oexp[i]:
                    continue
                # left derivative: bubble the variable to the front, then strip
                preceding = sum(oexp[:i])
                no = oexp[:i] + (0,) + oexp[i + 1:]
                sign = 1
                if preceding & 1:
                    sign = -sign
                for pc, part in coeff.parity_parts():
                    s = -sign if pc == Parity.ODD else sign
                    val = part if s > 0 else -part
                    key = (eexp, no)
                    if key in terms:
                        acc = terms[key] + val
                        if acc.is_zero():
                            del terms[key]
                        else:
                            terms[key] = acc
                    else:
                        terms[key] = val
            support = self.support.shifted(var, True, -1)
            unknowns = [(ch[0].shifted(var, True, -1),) + ch[1:] for ch in self.unknowns]
            return SuperSeries(self.even_vars, self.odd_vars, terms, self.zero, support, unknowns)
        raise SeriesError(f"unknown derivative kind {kind!r}")

    def superderive(self, xvar: str, phivar: str) -> "SuperSeries":
        """Apply d/dphi + phi*d/dx for the given even/odd variable pair."""
        one = GrassmannElement.one(0)
        ctx = self
        if phivar not in ctx.odd_vars:
            ctx = ctx.in_context(ctx.even_vars, ctx.odd_vars + (phivar,))
        if xvar not in ctx.even_vars:
            ctx = ctx.in_context(ctx.even_vars + (xvar,), ctx.odd_vars)
        phi = SuperSeries.monomial(one, self.zero_scalar(), odd=[phivar])
        return ctx.derive(phivar, "odd") + phi * ctx.derive(xvar, "even")

    def zero_scalar(self):
        """Zero of the scalar (Grassmann) space used for formal prefactors."""
        return GrassmannElement.zero(0)

    def residue(self, var: str) -> "SuperSeries":
        """Coefficient of var**-1, with the variable removed from context."""
        if var not in self.even_vars:
            raise UnknownVariable(var)
        i = self.even_vars.index(var)
        evars = self.even_vars[:i] + self.even_vars[i + 1:]
        terms = {}
        for (eexp, oexp), coeff in self.terms.items():
            if eexp[i] != -1:
                continue
            terms[(eexp[:i] + eexp[i + 1:], oexp)] = coeff
        support = self._drop_var_region(self.support, var, i)
        unknowns = []
        touched = False
        for ch in self.unknowns:
            lo = sum(r.interval(var, False)[0] for r in ch)
            hi = sum(r.interval(var, False)[1] for r in ch)
            if not lo <= -1 <= hi:
                continue
            touched = True
            unknowns.append(tuple(self._drop_var_region(r, var, i, chain=ch) for r in ch))
        result = SuperSeries(evars, self.odd_vars, terms, self.zero, support, unknowns)
        slo, shi = self.support.interval(var, False)
        if touched and slo <= -1 <= shi:
            any_exact = any(result.is_exact_at(e, o) for (e, o) in result.terms)
            if not any_exact:
                raise WindowMiss(f"exponent -1 of {var} is not exactly known")
        return result

    def _drop_var_region(self, r: Region, var: str, i: int, chain=None) -> Region:
        evens = {v: iv for v, iv in r.evens.items() if v != var}
        lo, hi = r.interval(var, False)
        if chain is not None:
            # this region's share of exponent -1, given the other factors
            olo = sum(q.interval(var, False)[0] for q in chain if q is not r)
            ohi = sum(q.interval(var, False)[1] for q in chain if q is not r)
            lo = max(lo, -1 - ohi)
            hi = min(hi, -1 - olo)
        return Region(evens, r.odds, r.mass_low - 2 * hi, r.mass_high - 2 * lo)

    # -- substitutions -----------------------------------------------------------------

    def subst_even_rename(self, var: str, target: str) -> "SuperSeries":
        """Substitute one even variable by another (exponents merge)."""
        if var not in self.even_vars:
            raise UnknownVariable(var)
        i = self.even_vars.index(var)
        ctx = self if target in self.even_vars else self.in_context(self.even_vars + (target,), self.odd_vars)
        i = ctx.even_vars.index(var)
        j = ctx.even_vars.index(target)
        evars = ctx.even_vars[:i] + ctx.even_vars[i + 1:]
        terms = {}
        for (eexp, oexp), coeff in ctx.terms.items():
            merged = list(eexp)
            merged[j] += merged[i]
            ne = tuple(merged[:i] + merged[i + 1:])
            key = (ne, oexp)
            if key in terms:
                acc = terms[key] + coeff
                if acc.is_zero():
                    del terms[key]
                else:
                    terms[key] = acc
            else:
                terms[key] = coeff
        def xform(r: Region) -> Region:
            evens = {v: iv for v, iv in r.evens.items() if v != var}
            lo, hi = r.interval(var, False)
            tlo, thi = r.interval(target, False)
            evens[target] = (tlo + lo, thi + hi)
            return Region(evens, r.odds, r.mass_low, r.mass_high)
        support = xform(ctx.support)
        unknowns = [tuple(xform(r) for r in ch) for ch in ctx.unknowns]
        return SuperSeries(evars, ctx.odd_vars, terms, ctx.zero, support, unknowns)

    def subst_even_sum(self, var: str, first: str, second: str, window_second) -> "SuperSeries":
        """Substitute ``var -> first + second``, expanded in positive powers of
        ``second`` (binomially, so negative exponents of ``var`` are allowed).

        ``window_second`` = (low, high): powers of ``second`` are produced up
        to ``high``; everything above is recorded as unknown.
        """
        if var not in self.even_vars:
            raise UnknownVariable(var)
        lo2, hi2 = window_second
        if hi2 == POS_INF:
            raise SeriesError("substitution needs a finite expansion window")
        ctx = self
        for v in (first, second):
            if v not in ctx.even_vars:
                ctx = ctx.in_context(ctx.even_vars + (v,), ctx.odd_vars)
        i = ctx.even_vars.index(var)
        jf = ctx.even_vars.index(first)
        js = ctx.even_vars.index(second)
        evars = ctx.even_vars[:i] + ctx.even_vars[i + 1:]
        terms = {}
        for (eexp, oexp), coeff in ctx.terms.items():
            n = eexp[i]
            mmax = int(hi2) - eexp[js]
            if n >= 0:
                mmax = min(mmax, n)
            binom = Fraction(1)
            for m in range(0, mmax + 1):
                if m:
                    binom = binom * Fraction(n - m + 1, m)
                if binom == 0:
                    break
                merged = list(eexp)
                merged[jf] += n - m
                merged[js] += m
                ne = tuple(merged[:i] + merged[i + 1:])
                val = coeff.scale_rat(binom)
                key = (ne, oexp)
                if key in terms:
                    acc = terms[key] + val
                    if acc.is_zero():
                        del terms[key]
                    else:
                        terms[key] = acc
                elif not val.is_zero():
                    terms[key] = val
        def xform(r: Region, widen_second_up: bool) -> Region:
            evens = {v: iv for v, iv in r.evens.items() if v != var}
            lo, hi = r.interval(var, False)
            flo, fhi = r.interval(first, False)
            slo, shi = r.interval(second, False)
            # first absorbs n-m (unbounded below when n may be negative)
            nlo = NEG_INF if lo < 0 or lo == NEG_INF else 0
            evens[first] = (flo + min(nlo, lo), POS_INF if hi == POS_INF else fhi + max(hi, 0))
            evens[second] = (slo, POS_INF if widen_second_up else shi + max(0, int(hi2)))
            return Region(evens, r.odds, r.mass_low, r.mass_high)
        support = xform(ctx.support, widen_second_up=True)
        unknowns = [tuple(xform(r, False) for r in ch) for ch in ctx.unknowns]
        # powers of `second` above the window are not computed
        cut = Region(dict(support.evens), dict(support.odds), support.mass_low, support.mass_high)
        cut.evens[second] = (int(hi2) + 1, POS_INF)
        unknowns.append((cut,))
        return SuperSeries(evars, ctx.odd_vars, terms, ctx.zero, support, unknowns)

    def shift_subst(self, var: str, eps: "SuperSeries") -> "SuperSeries":
        """Substitute ``var -> var + eps`` for nilpotent even ``eps``.

        Exact for eps*eps = 0: the result is ``s + eps * ds/dvar``.
        """
        if var not in self.even_vars:
            raise UnknownVariable(var)
        if (eps * eps).terms:
            raise IllFormedShift("shift must square to zero")
        for (eexp, oexp), coeff in eps.terms.items():
            for pc, _ in coeff.parity_parts():
                if (pc + sum(oexp)) & 1:
                    raise IllFormedShift("shift must be even")
        return self + eps * self.derive(var, "even")

    def subst_odd(self, var: str, replacement) -> "SuperSeries":
        """Substitute an odd variable by a signed combination of odd variables.

        ``replacement``: iterable of (sign, odd_var_name).
        """
        if var not in self.odd_vars:
            raise UnknownVariable(var)
        repl = list(replacement)
        ctx = self
        for _, v in repl:
            if v not in ctx.odd_vars:
                ctx = ctx.in_context(ctx.even_vars, ctx.odd_vars + (v,))
        i = ctx.odd_vars.index(var)
        out = None
        kept = {}
        for (eexp, oexp), coeff in ctx.terms.items():
            if not oexp[i]:
                kept[(eexp, oexp)] = coeff
        base = SuperSeries(ctx.even_vars, ctx.odd_vars, kept, ctx.zero, ctx.support, ctx.unknowns)
        out = base
        for sign, v in repl:
            j = ctx.odd_vars.index(v)
            terms = {}
            for (eexp, oexp), coeff in ctx.terms.items():
                if not oexp[i]:
                    continue
                if oexp[j] and j != i:
                    continue  # repeated odd variable kills the term
                # move slot i to slot j, counting crossings of intermediate odd slots
                no = list(oexp)
                no[i] = 0
                lo, hi = min(i, j), max(i, j)
                crossings = sum(no[lo + 1:hi])
                no[j] = 1
                s = sign * (-1 if crossings & 1 else 1)
                val = coeff if s > 0 else -coeff
                key = (eexp, tuple(no))
                if key in terms:
                    acc = terms[key] + val
                    if acc.is_zero():
                        del terms[key]
                    else:
                        terms[key] = acc
                else:
                    terms[key] = val
            def xform(r: Region) -> Region:
                odds = dict(r.odds)
                _, hi_ = r.interval(var, True)
                odds[var] = (0, 0)
                jlo, jhi = r.interval(v, True)
                odds[v] = (0, min(1, jhi + hi_))
                return Region(r.evens, odds, r.mass_low, r.mass_high)
            piece = SuperSeries(
                ctx.even_vars,
                ctx.odd_vars,
                terms,
                ctx.zero,
                xform(ctx.support),
                [tuple(xform(r) for r in ch) for ch in ctx.unknowns],
            )
            out = out + piece
        # the substituted variable no longer occurs; keep context tidy
        return out.drop_odd_var(var)

    def drop_odd_var(self, var: str) -> "SuperSeries":
        if var not in self.odd_vars:
            return self
        i = self.odd_vars.index(var)
        if any(oexp[i] for (_, oexp) in self.terms):
            raise SeriesError(f"odd variable {var} still occurs")
        ovars = self.odd_vars[:i] + self.odd_vars[i + 1:]
        terms = {(e, o[:i] + o[i + 1:]): c for (e, o), c in self.terms.items()}
        def xform(r: Region) -> Region:
            odds = {v: iv for v, iv in r.odds.items() if v != var}
            return Region(r.evens, odds, r.mass_low, r.mass_high)
        return SuperSeries(
            self.even_vars,
            ovars,
            terms,
            self.zero,
            xform(self.support),
            [tuple(xform(r) for r in ch) for ch in self.unknowns],
        )

    # -- comparison ---------------------------------------------------------------------

    def compare(self, other: "SuperSeries", max_witnesses: int = 8) -> ComparisonReport:
        """Coefficientwise comparison on the jointly exact exponent set."""
        a, b = self._align(other)
        keys = set(a.terms) | set(b.terms)
        checked = 0
        skipped = 0
        witnesses = []
        for key in sorted(keys):
            eexp, oexp = key
            if not a.is_exact_at(eexp, oexp) or not b.is_exact_at(eexp, oexp):
                skipped += 1
                continue
            va = a.terms.get(key, a.zero)
            vb = b.terms.get(key, b.zero)
            checked += 1
            if not (va - vb).is_zero():
                if len(witnesses) < max_witnesses:
                    exponent = {v: e for v, e in zip(a.even_vars, eexp) if e}
                    exponent.update({v: o for v, o in zip(a.odd_vars, oexp) if o})
                    witnesses.append(Witness(exponent, str(va), str(vb)))
        if witnesses:
            return ComparisonReport("fail", checked, skipped, witnesses)
        if checked == 0:
            if not keys and not a.unknowns and not b.unknowns:
                # both sides are exactly the zero series
                return ComparisonReport("pass", 0, 0, [])
            return ComparisonReport("inconclusive", 0, skipped, [], "no jointly exact coefficients")
        return ComparisonReport("pass", checked, skipped, [])

    # -- rendering -----------------------------------------------------------------------

    def render(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for (eexp, oexp) in sorted(self.terms):
            coeff = self.terms[(eexp, oexp)]
            mono = []
            for v, e in zip(self.even_vars, eexp):
                if e:
                    mono.append(f"{v}^{e}" if e != 1 else v)
            for v, o in zip(self.odd_vars, oexp):
                if o:
                    mono.append(v)
            body = "*".join(mono) if mono else "1"
            bits.append(f"({coeff})*{body}")
        return " + ".join(bits)

    def __repr__(self):
        n = len(self.terms)
        return f"SuperSeries({'/'.join(self.even_vars)};{'/'.join(self.odd_vars)}, {n} terms)"
