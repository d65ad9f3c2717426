import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pisot_lab.errors import ArtifactError
from pisot_lab.nfield import embed
from pisot_lab.tiling import (
    LatticeVec, _inv_matrix, brute_force_patch, canonical, delone_radii, in_gamma, preimage_patch,
    quasi_periodic_search, tiling_statistics, translation_patch,
)


def _keys(patch):
    return {(it.w.base, it.letter) for it in patch.items}


@pytest.mark.parametrize("name,radius,box", [("rauzy", 3.0, 8), ("fib", 4.0, 12)])
def test_patch_equals_brute_force(labs, name, radius, box):
    lab = labs[name]
    patch = translation_patch(lab.gamma, 0, radius)
    ref = brute_force_patch(lab.eigen, lab.places, lab.embedder, [0j] * len(lab.places.arch), radius, box)
    assert _keys(patch) == ref


def test_rauzy_patch_size(rauzy):
    assert len(translation_patch(rauzy.gamma, 0, 3.0)) == 20


def test_gamma_examples(rauzy):
    e2 = LatticeVec((0, 1, 0))
    assert in_gamma(e2, 1, rauzy.eigen)
    assert not in_gamma(e2, 2, rauzy.eigen)
    assert in_gamma(LatticeVec((0, 0, 0)), 3, rauzy.eigen)
    assert not in_gamma(LatticeVec((-1, 0, 0)), 1, rauzy.eigen)


def test_Z0_sizes(rauzy, nonuni):
    assert len(rauzy.Z0) == 134
    assert nonuni.eigen.c == 2


def test_scaled_pairings_integral(labs):
    for lab in labs.values():
        for w, _ in lab.Z0:
            assert w.value(lab.eigen).denominator() == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=3, max_size=3), st.integers(1, 3))
def test_gamma_predicate_matches_float(rauzy, base, a):
    w = LatticeVec(tuple(base))
    x = complex(embed(w.value(rauzy.eigen), rauzy.field.perron).value).real
    va = complex(embed(rauzy.eigen.v[a - 1], rauzy.field.perron).value).real
    if min(abs(x), abs(x - va)) > 1e-9:
        assert in_gamma(w, a, rauzy.eigen) == (0 <= x < va)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-8, 8), min_size=2, max_size=2), st.integers(0, 4))
def test_canonical_preserves_value(nonuni, base, level):
    M = nonuni.eigen.M
    w = LatticeVec(tuple(base), level)
    c = canonical(w, M, _inv_matrix(M))
    assert c.level <= level
    assert c.value(nonuni.eigen) == w.value(nonuni.eigen)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3))
def test_preimage_items_in_gamma(rauzy, k, a):
    patch, prefs = preimage_patch(rauzy.s, rauzy.eigen, rauzy.places, a, k)
    assert len(patch) == len(prefs) > 0
    for it in patch.items:
        assert in_gamma(it.w, it.letter, rauzy.eigen)


def test_preimage_items_in_gamma_nonuni(nonuni):
    for a in (1, 2):
        patch, _ = preimage_patch(nonuni.s, nonuni.eigen, nonuni.places, a, 3)
        assert all(in_gamma(it.w, it.letter, nonuni.eigen) for it in patch.items)


def test_quasi_periodic_witness(rauzy):
    needle = [(LatticeVec((0, 0, 0)), 1), (LatticeVec((0, 0, 0)), 2)]
    wit = quasi_periodic_search(rauzy.s, rauzy.eigen, rauzy.places, needle, 4)
    assert wit is not None and wit.k == 1
    assert all(p == () for p in wit.prefixes.values())


def test_delone(rauzy):
    patch = translation_patch(rauzy.gamma, 0, 4.0)
    sub = type(patch)(patch.by_letter(1), patch.region)
    r1, r2 = delone_radii(sub, ["complex"])
    assert 0 < r2 < r1 < 4.0


def test_tiling_statistics_fibonacci(fib):
    st_ = tiling_statistics(fib.builder, fib.embedder, fib.gamma, 200, 12, seed=1)
    assert st_["fraction_one"] >= 0.95
    assert st_["non_one"] == st_["flagged_unstable"] + st_["stable_non_one"]


def test_covering_refuses_finite_places(nonuni):
    with pytest.raises(ArtifactError, match="unimodular"):
        tiling_statistics(nonuni.builder, nonuni.embedder, nonuni.gamma, 10, 4, seed=0)
