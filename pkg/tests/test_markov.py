import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pisot_lab.errors import ArtifactError
from pisot_lab.markov import (
    all_paths, build_automaton, check_lifted_eigen, cylinder_measure, cylinder_measure_num,
    int_mat_pow, lift_numeric, make_rng, rational_rank, sample_path, sample_paths,
    spectral_entry, verify_primitive_A,
)
from pisot_lab.subst import Substitution, iterate_word

RAUZY_A = ((1, 0, 1, 0, 1), (1, 0, 1, 0, 1), (0, 1, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 0, 1, 0))


def test_rauzy_automaton(rauzy):
    aut = rauzy.aut
    assert [s.label() for s in aut.states] == ["(1:∅)", "(1:1)", "(2:∅)", "(2:1)", "(3:∅)"]
    assert aut.A == RAUZY_A


def test_rank_is_n(labs):
    for lab in labs.values():
        assert rational_rank(lab.aut.A) == lab.n


def test_primitive_A(labs):
    for lab in labs.values():
        assert verify_primitive_A(lab.aut.A, lab.N)


def test_lifted_eigenvectors(labs):
    for lab in labs.values():
        assert check_lifted_eigen(lab.aut, lab.eigen)


def test_lifted_dot_rauzy(rauzy):
    u, v = lift_numeric(rauzy.aut, rauzy.eigen, 0)
    assert abs(sum(a * b for a, b in zip(u, v)) - 2.974171) < 1e-6


@pytest.mark.parametrize("name", ["rauzy", "fib"])
def test_asymptotic_formula(labs, name):
    lab = labs[name]
    D = lab.aut.D
    for k in (1, 2, 5, 13, 25):
        for I in range(D):
            for J in range(D):
                exact, approx = spectral_entry(lab.aut, lab.eigen, k, I, J)
                assert abs(exact - approx) < 0.5


def test_parry_exact(labs):
    for lab in labs.values():
        assert lab.chain.check_exact()


def test_parry_rauzy_values(rauzy):
    p = rauzy.chain.p_num
    assert abs(p[0] - 0.336228) < 1e-6
    assert abs(p[0] / rauzy.field.perron.center - 0.1828035) < 1e-6
    # m(<(1:∅)(1:∅)>) = p_I / alpha exactly
    ch = rauzy.chain
    assert cylinder_measure(ch, [0, 0]) == ch.p[0] * rauzy.field.alpha.inv()


@pytest.mark.parametrize("k", [1, 2, 3, 6])
def test_cylinder_sums_exact(rauzy, k):
    K = rauzy.field
    total = K.zero()
    for path in all_paths(rauzy.aut, k):
        total = total + cylinder_measure(rauzy.chain, path)
    assert total == K.one()


def test_inadmissible_cylinder(rauzy):
    with pytest.raises(ArtifactError):
        cylinder_measure(rauzy.chain, [2, 2])


def test_sampler_frequencies(rauzy):
    x = sample_path(rauzy.chain, 200_000, 11)
    freq = np.bincount(x, minlength=rauzy.aut.D) / len(x)
    assert np.max(np.abs(freq - rauzy.chain.p_num)) < 0.01
    assert all(rauzy.aut.A[a][b] for a, b in zip(x[:2000], x[1:2000]))


def test_sampler_deterministic(fib):
    a = sample_paths(fib.chain, 50, 30, make_rng(3))
    b = sample_paths(fib.chain, 50, 30, make_rng(3))
    assert (a == b).all()


def test_two_step_cylinder_frequency(fib):
    x = sample_path(fib.chain, 100_000, 2)
    pairs = {}
    for a, b in zip(x[:-1], x[1:]):
        pairs[(a, b)] = pairs.get((a, b), 0) + 1
    for (a, b), c in pairs.items():
        assert abs(c / (len(x) - 1) - cylinder_measure_num(fib.chain, [a, b])) < 0.01


subs = st.integers(2, 3).flatmap(
    lambda n: st.lists(st.lists(st.integers(1, n), min_size=1, max_size=4), min_size=n, max_size=n)
    .map(lambda imgs: Substitution(n, tuple(tuple(w) for w in imgs))))


@settings(max_examples=60, deadline=None)
@given(subs)
def test_automaton_shape(s):
    aut = build_automaton(s)
    assert aut.D == sum(len(w) for w in s.images)
    for I in aut.states:
        assert I.prefix + (I.core,) + I.suffix == s(I.source)
        for J in aut.states:
            assert aut.A[I.id][J.id] == int(J.core == I.source)


@settings(max_examples=30, deadline=None)
@given(subs, st.integers(1, 6))
def test_path_count_is_image_length(s, k):
    # k-state paths whose last state has source b <-> letters of sigma^k(b)
    aut = build_automaton(s)
    P = int_mat_pow(aut.A, k - 1)
    for b in range(1, s.n + 1):
        count = sum(P[I.id][J.id] for I in aut.states for J in aut.states if J.source == b)
        assert count == len(iterate_word(s, (b,), k))
