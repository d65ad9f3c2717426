import pytest
from hypothesis import given, settings, strategies as st

from pisot_lab.errors import CapExceeded, ParseError
from pisot_lab.subst import (
    abelianize, fixed_point_window, incidence_matrix, is_primitive, iterate_word, mat_pow,
    mat_vec, parse_substitution, prefix_suffix_reps, prefixes, strong_coincidence,
    word_to_str, Substitution,
)

from conftest import FIB, NONUNI, RAUZY


def test_parse_rauzy():
    s = parse_substitution(RAUZY)
    assert s.n == 3
    assert s.images == ((1, 2), (1, 3), (1,))
    assert str(parse_substitution(str(s))) == str(s)


def test_parse_comma_letters():
    s = parse_substitution("1->1,2;2->1,3;3->1")
    assert s.images == ((1, 2), (1, 3), (1,))


@pytest.mark.parametrize("bad,msg", [
    ("", "syntax"),
    ("1->12;2->", "empty image for letter 2"),
    ("1->12;1->1", "duplicate"),
    ("1->13", "missing letter rule"),
    ("1=>12", "syntax"),
])
def test_parse_errors(bad, msg):
    with pytest.raises(ParseError, match=msg):
        parse_substitution(bad)


def test_incidence_columns_are_abelianized_images():
    s = parse_substitution(RAUZY)
    M = incidence_matrix(s)
    assert M == ((1, 1, 1), (1, 0, 0), (0, 1, 0))
    for j in range(3):
        assert tuple(M[i][j] for i in range(3)) == abelianize(s(j + 1), 3)


def test_primitivity():
    assert is_primitive(parse_substitution(RAUZY)) == (True, 3)
    assert is_primitive(parse_substitution(FIB)) == (True, 2)
    assert is_primitive(parse_substitution("1->1;2->2")) == (False, None)


def test_iterate_cap():
    s = parse_substitution(RAUZY)
    with pytest.raises(CapExceeded):
        iterate_word(s, (1,), 60, cap=1000)


def test_fixed_point_window_rauzy():
    fp = fixed_point_window(parse_substitution(RAUZY), 6)
    assert fp.q == 1
    assert fp.right[:6] == (1, 2, 1, 3, 1, 2)
    # two-sided seed exists only for sigma^3 since last letters cycle 1->2->3->1
    assert fp.q_two_sided == 3


def test_prefixes_rauzy():
    assert prefixes(parse_substitution(RAUZY)) == [(), (1,)]


def _brute_coincidence(s, k):
    reps = prefix_suffix_reps(s, k)
    by_letter = {}
    for r in reps:
        by_letter.setdefault(r.source, set()).add((abelianize(r.prefix, s.n), r.core))
    return by_letter


@pytest.mark.parametrize("text", [RAUZY, FIB, NONUNI])
def test_strong_coincidence_against_reps(text):
    s = parse_substitution(text)
    res = strong_coincidence(s, 6)
    for (a, b), wit in res.items():
        assert wit is not None
        keys = _brute_coincidence(s, wit.k)
        assert (wit.prefix_vector, wit.letter) in keys[a] & keys[b]
        for k in range(1, wit.k):
            assert not (_brute_coincidence(s, k)[a] & _brute_coincidence(s, k)[b])


def test_strong_coincidence_kmax_zero():
    res = strong_coincidence(parse_substitution(FIB), 0)
    assert all(v is None for v in res.values())


subs = st.integers(2, 3).flatmap(
    lambda n: st.lists(st.lists(st.integers(1, n), min_size=1, max_size=4), min_size=n, max_size=n)
    .map(lambda imgs: Substitution(n, tuple(tuple(w) for w in imgs))))


@settings(max_examples=60, deadline=None)
@given(subs, st.integers(0, 4))
def test_abelianization_commutes_with_iteration(s, k):
    M = incidence_matrix(s)
    for b in range(1, s.n + 1):
        w = iterate_word(s, (b,), k)
        e = tuple(int(i == b - 1) for i in range(s.n))
        assert abelianize(w, s.n) == tuple(mat_vec(mat_pow(M, k), e))


@settings(max_examples=60, deadline=None)
@given(subs)
def test_parse_roundtrip(s):
    assert parse_substitution(str(s)) == s


@settings(max_examples=40, deadline=None)
@given(subs, st.integers(1, 3))
def test_reps_reassemble_images(s, k):
    for r in prefix_suffix_reps(s, k):
        assert r.prefix + (r.core,) + r.suffix == iterate_word(s, (r.source,), k)


def test_word_to_str():
    assert word_to_str((1, 2, 1)) == "121"
