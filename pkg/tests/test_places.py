from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from pisot_lab.errors import UnsupportedField
from pisot_lab.nfield import NumberField
from pisot_lab.places import (
    abs_at_place, dedekind_primes, dK, factor_integer, padic_valuation_degree_one, phi_prime,
    product_alpha_residual, product_formula_check, vp_int,
)


def test_factor_and_vp():
    assert factor_integer(360) == {2: 3, 3: 2, 5: 1}
    assert vp_int(48, 2) == 4
    assert vp_int(-9, 3) == 2


def test_places_unimodular(rauzy, fib):
    assert rauzy.places.finite == []
    assert [p.kind for p in rauzy.places.arch] == ["complex"]
    assert [p.kind for p in fib.places.arch] == ["real"]


def test_places_nonunimodular(nonuni):
    ps = nonuni.places
    assert len(ps.finite) == 1
    pl = ps.finite[0]
    assert (pl.prime.p, pl.norm_q, pl.nu, pl.prime.e, pl.prime.f) == (2, 2, 1, 1, 1)


def test_dedekind_failure():
    with pytest.raises(UnsupportedField, match="unsupported field at prime 2"):
        dedekind_primes(NumberField((-5, 0, 1)), 2)


def test_valuations_known(nonuni):
    ps = nonuni.places
    pl = ps.finite[0]
    K = ps.field
    a = K.alpha
    vals = [ps.valuation(x, pl) for x in (a, a ** 3, K([2]), K([6]) / a, a + 1)]
    assert vals == [1, 3, 1, 0, 0]


coef = st.integers(-40, 40)


@settings(max_examples=80, deadline=None)
@given(coef, coef, st.integers(1, 12))
def test_valuation_matches_padic(nonuni, c0, c1, den):
    ps = nonuni.places
    pl = ps.finite[0]
    x = ps.field([Fraction(c0, den), Fraction(c1, den)])
    assume(not x.is_zero())
    assert ps.valuation(x, pl) == padic_valuation_degree_one(x, pl.prime)


@settings(max_examples=60, deadline=None)
@given(coef, coef, st.integers(1, 6))
def test_product_formula(nonuni, c0, c1, den):
    x = nonuni.field([Fraction(c0, den), Fraction(c1, den)])
    assume(not x.is_zero())
    assert product_formula_check(x, nonuni.places) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=3, max_size=3))
def test_product_formula_rauzy(rauzy, c):
    x = rauzy.field(c)
    assume(not x.is_zero())
    assert product_formula_check(x, rauzy.places) < 1e-9


def test_haar_identity(labs):
    for lab in labs.values():
        assert product_alpha_residual(lab.places) <= 1e-10


def test_abs_alpha_at_places(rauzy, nonuni):
    ps = rauzy.places
    pl = ps.arch[0]
    # complex place uses the squared modulus; alpha * |alpha_2|^2 = 1
    assert abs(abs_at_place(rauzy.field.alpha, pl, ps) * rauzy.field.perron.center - 1) < 1e-12
    fin = nonuni.places.finite[0]
    assert abs_at_place(nonuni.field.alpha, fin, nonuni.places) == 0.5


def test_dK_zero_and_symmetry(nonuni):
    ps = nonuni.places
    K = ps.field
    x, y = K([1, 1]), K([3, -1])
    a, b = phi_prime(x, ps), phi_prime(y, ps)
    z = dK(a, a, ps)
    assert z.value - z.radius <= 0 <= z.value + z.radius
    assert abs(dK(a, b, ps).value - dK(b, a, ps).value) < 1e-12
