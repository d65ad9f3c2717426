import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from pisot_lab import analysis as an
from pisot_lab.errors import ArtifactError
from pisot_lab.fractal import path_vector
from pisot_lab.markov import cylinder_measure, cylinder_measure_num, sample_path
from pisot_lab.nfield import embed
from pisot_lab.tiling import LatticeVec


def _M(lab):
    return an.coefficient_bound(lab.s, lab.eigen, [w for w, _ in lab.Z0])


def _cyl(lab):
    return an.special_cylinder(lab.aut, lab.eigen, lab.places, lab.s, _M(lab), lab.N, lab.u0)


def test_B_rauzy(rauzy):
    assert an.v_basis_matrix(rauzy.eigen) == [[1, 0, 0], [-1, 1, 0], [-1, -1, 1]]


def test_coefficient_bound_prefix_part(rauzy):
    # prefixes {∅, 1}: f(p) - f(q) = ±e1 and tB e1 = (1, 0, 0)
    assert an.coefficient_bound(rauzy.s, rauzy.eigen, []) == 1
    assert an.coefficient_bound_naive(rauzy.s, rauzy.eigen, []) == 1


def test_coefficient_bound_dominates_naive(labs):
    for lab in labs.values():
        Z = [w for w, _ in lab.Z0]
        assert an.coefficient_bound(lab.s, lab.eigen, Z) >= an.coefficient_bound_naive(lab.s, lab.eigen, Z)


@pytest.mark.parametrize("name", ["rauzy", "fib", "nonuni"])
def test_special_cylinder_minimal(labs, name):
    lab = labs[name]
    M = _M(lab)
    cyl = _cyl(lab)
    assert cyl.certified and cyl.L >= lab.N + 1
    assert lab.aut.A[cyl.I][cyl.I] == 1
    assert all(m > 0 for m in cyl.margins)
    if cyl.L > lab.N + 1:
        Mv = an.prefix_moduli(lab.s, lab.eigen, lab.places)
        assert not all(x < 1 for x in an.cylinder_lhs(cyl.L - 1, M, lab.eigen, lab.places, Mv))


def test_special_cylinder_slope(rauzy):
    e, ps = rauzy.eigen, rauzy.places
    L1 = an.special_cylinder(rauzy.aut, e, ps, rauzy.s, 10**6, rauzy.N, 1).L
    L2 = an.special_cylinder(rauzy.aut, e, ps, rauzy.s, 10**12, rauzy.N, 1).L
    r = ps.arch[0].root.modulus
    predicted = math.log(10**6) / (e.n - 1) / math.log(1 / r)
    assert abs((L2 - L1) - predicted) <= 2


def test_radii(labs):
    lab = labs["rauzy"]
    M = _M(lab)
    r0, r1 = an.neighborhood_radii(0, M, lab.eigen, lab.places), an.neighborhood_radii(1, M, lab.eigen, lab.places)
    assert r0.arch[0] > 0
    assert r1.arch[0] == pytest.approx(r0.arch[0] * lab.places.arch[0].root.modulus, rel=1e-12)
    nu = labs["nonuni"]
    assert an.neighborhood_radii(1, _M(nu), nu.eigen, nu.places).finite == (0.5,)


def test_polynomial_part_examples(rauzy):
    aut, e = rauzy.aut, rauzy.eigen
    zero = LatticeVec((0, 0, 0))
    path = [0, 0, 1, 2]
    assert an.polynomial_part(aut, e, path, path, zero, 3).F.is_zero()
    w = LatticeVec((1, 2, -1))
    assert an.polynomial_part(aut, e, path, [1, 0], w, 0).F == -w.value(e)
    # p0 = "1" against q0 = empty gives <e1, v> = v1 = 1
    pp = an.polynomial_part(aut, e, [1, 0], [0, 0], zero, 1)
    assert pp.coeffs == (1,)


def test_polynomial_part_is_psi_difference(rauzy):
    # F(alpha) evaluated at a contracting place equals the truncated Psi difference minus gamma
    aut, e = rauzy.aut, rauzy.eigen
    x = sample_path(rauzy.chain, 9, 1)
    y = sample_path(rauzy.chain, 9, 2)
    w = LatticeVec((1, -1, 0))
    pp = an.polynomial_part(aut, e, list(x), list(y), w, 7)
    d = [a - b for a, b in zip(path_vector(aut, e.M, list(x[:7])), path_vector(aut, e.M, list(y[:7])))]
    assert pp.F == e.pair(d) - w.value(e)
    assert len(pp.coeffs) - 1 <= 7 + e.n - 2


def test_garsia_examples(rauzy):
    e, ps = rauzy.eigen, rauzy.places
    prod, bound, ok = an.garsia_check([1], e, ps)
    assert prod == pytest.approx(1.0) and ok
    prod, bound, ok = an.garsia_check([0, 1], e, ps, M=1)
    alpha = rauzy.field.perron.center
    assert prod == pytest.approx(1 / alpha, rel=1e-12)
    assert bound == pytest.approx((1 - 1 / alpha) / alpha, rel=1e-12) and ok


def test_garsia_rejects_zero(rauzy):
    with pytest.raises(ArtifactError):
        an.garsia_check([-1, -1, -1, 1], rauzy.eigen, rauzy.places)


polys = st.lists(st.integers(-5, 5), min_size=1, max_size=11)


@settings(max_examples=150, deadline=None)
@given(polys)
def test_garsia_property_trib(rauzy, c):
    assume(any(c))
    F = rauzy.field(c)
    assume(not F.is_zero())
    assert an.garsia_check(c, rauzy.eigen, rauzy.places)[2]


@settings(max_examples=150, deadline=None)
@given(polys)
def test_garsia_property_nonuni(nonuni, c):
    assume(any(c))
    assume(not nonuni.field(c).is_zero())
    assert an.garsia_check(c, nonuni.eigen, nonuni.places)[2]


def test_garsia_fuzz_deterministic(fib):
    a = an.garsia_fuzz(fib.eigen, fib.places, 200, 9)
    b = an.garsia_fuzz(fib.eigen, fib.places, 200, 9)
    assert a == b and a["violations"] == 0


def test_either_equal_paths(rauzy):
    cyl, M = _cyl(rauzy), _M(rauzy)
    rng = np.random.Generator(np.random.PCG64(1))
    p = an.sample_visiting_path(rauzy.chain, cyl, 3, 20, rng)
    v = an.either_check(rauzy.aut, rauzy.eigen, rauzy.places, rauzy.embedder, rauzy.bounds,
                        p, p, LatticeVec((0, 0, 0)), 3, cyl, M)
    assert v.verdict == "poly-vanishes" and v.case == "I"


def test_either_F_one_escapes(rauzy):
    cyl, M = _cyl(rauzy), _M(rauzy)
    rng = np.random.Generator(np.random.PCG64(2))
    p1 = an.sample_visiting_path(rauzy.chain, cyl, 0, 30, rng)
    p2 = an.sample_visiting_path(rauzy.chain, cyl, 0, 30, rng)
    w = LatticeVec((-1, 0, 0))   # F = -<w, v> = 1
    v = an.either_check(rauzy.aut, rauzy.eigen, rauzy.places, rauzy.embedder, rauzy.bounds,
                        p1, p2, w, 0, cyl, M)
    assert v.F == (1,) and v.verdict == "escapes-neighborhood"


def test_either_requires_covisit(rauzy):
    cyl, M = _cyl(rauzy), _M(rauzy)
    with pytest.raises(ArtifactError):
        an.either_check(rauzy.aut, rauzy.eigen, rauzy.places, rauzy.embedder, rauzy.bounds,
                        [2] * 40, [0] * 40, LatticeVec((0, 0, 0)), 0, cyl, M)


@pytest.mark.parametrize("name", ["rauzy", "nonuni"])
def test_either_corpus_small(labs, name):
    lab = labs[name]
    r = an.either_corpus(lab.chain, lab.places, lab.embedder, lab.bounds, _cyl(lab), _M(lab), lab.Z0, 120, 3)
    assert r["verdicts"]["VIOLATION"] == 0
    assert set(r["cases"]) <= {"I"}


def test_visiting_path_admissible(rauzy):
    cyl = _cyl(rauzy)
    rng = np.random.Generator(np.random.PCG64(5))
    for d in (0, 1, 7):
        p = an.sample_visiting_path(rauzy.chain, cyl, d, 10, rng)
        assert all(rauzy.aut.A[a][b] for a, b in zip(p, p[1:]))
        assert p[d:d + cyl.L + 1] == [cyl.I] * (cyl.L + 1)


def test_tau2_constructed(fib):
    cyl = an.short_cylinder(fib.aut, fib.N, fib.u0)
    I = cyl.I
    run = [I] * (cyl.L + 1)
    other = [2, 1] * 20   # (2:∅) -> (1:1) never reaches I runs
    assert an.tau2(run + other, run + other, cyl, 5) == 0
    assert an.tau2(run + other, other + run, cyl, 40 - cyl.L - 1) is None
    with pytest.raises(ArtifactError):
        an.tau2(run, run, cyl, 10)


def test_tau2_distribution(rauzy):
    cyl = an.short_cylinder(rauzy.aut, rauzy.N, rauzy.u0)
    d = an.tau2_distribution(rauzy.chain, cyl, 400)
    assert abs(d["total"] - 1) < 1e-12
    mC = cylinder_measure_num(rauzy.chain, [cyl.I] * (cyl.L + 1))
    assert d["pmf"][0] == pytest.approx(mC ** 2, rel=1e-12)


def test_tau2_exact_field(fib):
    cyl = an.short_cylinder(fib.aut, fib.N, fib.u0)
    ex = an.tau2_distribution_exact(fib.chain, cyl, 6)
    K = fib.field
    assert sum(ex, K.zero()) == K.one()
    mC = cylinder_measure(fib.chain, [cyl.I] * (cyl.L + 1))
    assert ex[0] == mC * mC
    fl = an.tau2_distribution(fib.chain, cyl, 6)
    for a, b in zip(ex, fl["pmf"] + [fl["tail"]]):
        assert float(embed(a, K.perron).value) == pytest.approx(b, abs=1e-14)


def test_tau2_empirical_shape(fib):
    cyl = an.short_cylinder(fib.aut, fib.N, fib.u0)
    emp = an.tau2_empirical(fib.chain, cyl, 2000, 200, 4)
    assert emp["found"] + emp["not_found"] == 2000
    assert sum(emp["counts"]) == emp["found"]
    assert emp == an.tau2_empirical(fib.chain, cyl, 2000, 200, 4)


def test_total_variation_basic():
    assert an.total_variation([0.5, 0.5], 0.0, [50, 50], 100) == 0
    assert an.total_variation([1.0, 0.0], 0.0, [0, 100], 100) == 1


def test_entry_series_constructed(fib):
    cyl = an.short_cylinder(fib.aut, fib.N, fib.u0)
    I = cyl.I
    gap = [2, 1] * 4
    path = gap + [I] * (cyl.L + 1) + gap + [I] * (cyl.L + 2) + gap
    ser = an.entry_series(path, cyl, fib.N, 3)
    first = len(gap)
    second = 2 * len(gap) + cyl.L + 1
    assert ser.times == [first, second, second + 1]
    with pytest.raises(ArtifactError):
        an.entry_series(path, cyl, fib.N, 10)


@pytest.mark.parametrize("name", ["rauzy", "fib"])
def test_b_recursion_matches_dp(labs, name):
    lab = labs[name]
    cyl = an.short_cylinder(lab.aut, lab.N, lab.u0)
    path = sample_path(lab.chain, 50_000, 8)
    ser = an.entry_series(path, cyl, lab.N, 40)
    rep = an.b_counts_and_s(lab.chain, ser, cyl, direct_upto=20)
    assert rep.b[0] == 1 and rep.b_direct_agree and rep.monotone
    assert rep.probability_crosscheck < 1e-9
    assert all(b >= 0 for b in rep.b)


def test_entry_gap_kac(fib):
    cyl = an.short_cylinder(fib.aut, fib.N, fib.u0)
    path = sample_path(fib.chain, 300_000, 12)
    starts = an.cylinder_starts(path, cyl)
    mC = cylinder_measure_num(fib.chain, [cyl.I] * (cyl.L + 1))
    gaps = np.diff(np.nonzero(starts)[0])
    assert abs(gaps.mean() * mC - 1) < 0.1


def test_coincidence_equal_paths(rauzy):
    v = an.coincidence_from_vanishing(rauzy.aut, rauzy.eigen, [0, 2, 1, 0], [0, 2, 1, 0], LatticeVec((0, 0, 0)), 3)
    assert v.case == "I" and v.a == v.b and v.w_zero and v.states_equal and not v.violation
