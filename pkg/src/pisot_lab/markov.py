"""Prefix-suffix automaton, transition matrix A and the Parry measure."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import ArtifactError
from .nfield import EigenData, FieldElem, NumberField, embed, poly_trim
from .subst import Substitution, Word, prefixes

GENERATOR = "numpy.random.PCG64"


@dataclass(frozen=True)
class PathState:
    """(b : p) meaning sigma(b) = p a s with core letter a = sigma(b)[|p|]."""

    id: int
    source: int
    prefix: Word
    core: int
    suffix: Word

    def label(self) -> str:
        p = "".join(map(str, self.prefix)) or "∅"
        return f"({self.source}:{p})"


@dataclass(frozen=True)
class Automaton:
    states: tuple[PathState, ...]
    A: tuple[tuple[int, ...], ...]
    n: int

    @property
    def D(self) -> int:
        return len(self.states)

    def index(self, source: int, prefix: Sequence[int]) -> int:
        for st in self.states:
            if st.source == source and st.prefix == tuple(prefix):
                return st.id
        raise KeyError((source, tuple(prefix)))

    def to_json(self) -> str:
        return json.dumps({
            "states": [{"id": s.id, "b": s.source, "p": list(s.prefix), "a": s.core} for s in self.states],
            "edges": [[i, j] for i in range(self.D) for j in range(self.D) if self.A[i][j]],
        }, sort_keys=True)


def build_automaton(s: Substitution) -> Automaton:
    """States ordered by source letter then prefix length; A[I][J] = 1 iff core(J) = source(I)."""
    states = []
    for b in range(1, s.n + 1):
        img = s(b)
        for k in range(len(img)):
            states.append(PathState(len(states), b, img[:k], img[k], img[k + 1:]))
    A = tuple(tuple(int(J.core == I.source) for J in states) for I in states)
    return Automaton(tuple(states), A, s.n)


def int_mat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return [[sum(A[i][k] * B[k][j] for k in range(m) if A[i][k]) for j in range(p)] for i in range(n)]


def int_mat_pow(A, k: int):
    n = len(A)
    R = [[int(i == j) for j in range(n)] for i in range(n)]
    B = [list(r) for r in A]
    while k:
        if k & 1:
            R = int_mat_mul(R, B)
        B = int_mat_mul(B, B)
        k >>= 1
    return R


def verify_primitive_A(A, N: int) -> bool:
    P = int_mat_pow(A, N + 1)
    return all(x > 0 for row in P for x in row)


def rational_rank(A) -> int:
    m = [[Fraction(x) for x in r] for r in A]
    rank = 0
    rows, cols = len(m), len(m[0])
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(rows):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def lift_vectors(aut: Automaton, e: EigenData) -> tuple[tuple[FieldElem, ...], tuple[FieldElem, ...]]:
    """[u]_J = u_b and [v]_J = v_a for J = (b : p) with core a."""
    u = tuple(e.u[st.source - 1] for st in aut.states)
    v = tuple(e.v[st.core - 1] for st in aut.states)
    return u, v


def lift_numeric(aut: Automaton, e: EigenData, root_index: int):
    """Embedded lifted eigenvectors for the eigenvalue at ``root_index`` (conjugate places)."""
    r = e.field.roots[root_index]
    u = [embed(x, r).value for x in e.u]
    v = [embed(x, r).value for x in e.v]
    return ([complex(u[st.source - 1]) for st in aut.states],
            [complex(v[st.core - 1]) for st in aut.states])


def check_lifted_eigen(aut: Automaton, e: EigenData) -> bool:
    """A [u] = alpha [u] and tA [v] = alpha [v] exactly in Q(alpha)."""
    u, v = lift_vectors(aut, e)
    a = e.field.alpha
    D = aut.D
    for I in range(D):
        lhs = sum((u[J] for J in range(D) if aut.A[I][J]), e.field.zero())
        if lhs != a * u[I]:
            return False
        lhs = sum((v[J] for J in range(D) if aut.A[J][I]), e.field.zero())
        if lhs != a * v[I]:
            return False
    return True


def _all_eigen_pairs(aut: Automaton, e: EigenData, prec: int = 160):
    """(alpha_i, [u_i], [v_i]) for every eigenvalue of M at high precision, conjugates included."""
    out = []
    with mpmath.workprec(prec):
        for r in e.field.roots:
            zs = [r.mp_center] if r.kind == "real" else [r.mp_center, mpmath.conj(r.mp_center)]
            for z in zs:
                def ev(x: FieldElem):
                    acc = mpmath.mpf(0)
                    for c in reversed(x.coeffs):
                        acc = acc * z + mpmath.mpf(c.numerator) / c.denominator
                    return acc
                uu = [ev(x) for x in e.u]
                vv = [ev(x) for x in e.v]
                lu = [uu[st.source - 1] for st in aut.states]
                lv = [vv[st.core - 1] for st in aut.states]
                out.append((z, lu, lv))
    return out


def spectral_entry(aut: Automaton, e: EigenData, k: int, I: int, J: int,
                   _cache: dict | None = None) -> tuple[int, complex]:
    """(exact a^(k)_IJ, sum_i [u_i]_I [v_i]_J alpha_i^k / <[u_i],[v_i]>), valid for k >= 1."""
    if k > 60:
        raise ArtifactError("spectral_entry supports k <= 60")
    exact = int_mat_pow(aut.A, k)[I][J]
    if k == 0:
        return exact, complex(exact)
    pairs = _all_eigen_pairs(aut, e)
    with mpmath.workprec(160):
        total = mpmath.mpc(0)
        for z, lu, lv in pairs:
            dot = mpmath.fsum(a * b for a, b in zip(lu, lv))
            total += lu[I] * lv[J] * z ** k / dot
    return exact, complex(total)


def spectral_matrix(aut: Automaton, e: EigenData, k: int):
    pairs = _all_eigen_pairs(aut, e)
    D = aut.D
    with mpmath.workprec(160):
        out = [[mpmath.mpc(0)] * D for _ in range(D)]
        for z, lu, lv in pairs:
            dot = mpmath.fsum(a * b for a, b in zip(lu, lv))
            zk = z ** k / dot
            for I in range(D):
                for J in range(D):
                    out[I][J] += lu[I] * lv[J] * zk
    return [[complex(x) for x in row] for row in out]


@dataclass
class ParryChain:
    aut: Automaton
    eigen: EigenData
    u: tuple[FieldElem, ...]
    v: tuple[FieldElem, ...]
    p: tuple[FieldElem, ...]
    P: tuple[tuple[FieldElem, ...], ...]
    p_num: np.ndarray
    P_num: np.ndarray

    @property
    def D(self) -> int:
        return self.aut.D

    def check_exact(self) -> bool:
        fld = self.eigen.field
        D = self.D
        for I in range(D):
            if sum(self.P[I], fld.zero()) != fld.one():
                return False
        for J in range(D):
            if sum((self.p[I] * self.P[I][J] for I in range(D)), fld.zero()) != self.p[J]:
                return False
        return sum(self.p, fld.zero()) == fld.one()


def parry_chain(aut: Automaton, e: EigenData) -> ParryChain:
    u, v = lift_vectors(aut, e)
    fld = e.field
    a = fld.alpha
    dot = sum((x * y for x, y in zip(u, v)), fld.zero())
    dinv = dot.inv()
    p = tuple(x * y * dinv for x, y in zip(u, v))
    ainv = a.inv()
    uinv = [x.inv() for x in u]
    zero = fld.zero()
    P = tuple(tuple((u[J] * uinv[I] * ainv) if aut.A[I][J] else zero for J in range(aut.D))
                    for I in range(aut.D))
    root = fld.perron
    p_num = np.array([float(embed(x, root).value) for x in p])
    P_num = np.array([[float(embed(P[I][J], root).value) if aut.A[I][J] else 0.0 for J in range(aut.D)]
                      for I in range(aut.D)])
    P_num /= P_num.sum(axis=1, keepdims=True)
    p_num /= p_num.sum()
    return ParryChain(aut, e, u, v, p, P, p_num, P_num)


def is_admissible(aut: Automaton, path: Sequence[int]) -> bool:
    return all(aut.A[x][y] for x, y in zip(path, path[1:]))


def cylinder_measure(chain: ParryChain, path: Sequence[int]) -> FieldElem:
    if not path or not is_admissible(chain.aut, path):
        raise ArtifactError("inadmissible path")
    m = chain.p[path[0]]
    for x, y in zip(path, path[1:]):
        m = m * chain.P[x][y]
    return m


def cylinder_measure_num(chain: ParryChain, path: Sequence[int]) -> float:
    return float(embed(cylinder_measure(chain, path), chain.eigen.field.perron).value)


def all_paths(aut: Automaton, length: int):
    paths = [[i] for i in range(aut.D)]
    for _ in range(length - 1):
        paths = [p + [j] for p in paths for j in range(aut.D) if aut.A[p[-1]][j]]
    return paths


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_path(chain: ParryChain, length: int, seed: int | np.random.Generator) -> np.ndarray:
    """Stationary Markov sample; inverse-CDF on uniforms from PCG64."""
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    cum = np.cumsum(chain.P_num, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(length)
    out = np.empty(length, dtype=np.int64)
    out[0] = min(int(np.searchsorted(np.cumsum(chain.p_num), u[0], side="right")), chain.D - 1)
    for t in range(1, length):
        out[t] = np.searchsorted(cum[out[t - 1]], u[t], side="right")
    return out


def sample_paths(chain: ParryChain, count: int, length: int, rng: np.random.Generator,
                 start: np.ndarray | None = None) -> np.ndarray:
    """``count`` independent paths in parallel (shape count x length)."""
    cum = np.cumsum(chain.P_num, axis=1)
    cum[:, -1] = 1.0
    out = np.empty((count, length), dtype=np.int64)
    if start is None:
        c0 = np.cumsum(chain.p_num)
        c0[-1] = 1.0
        out[:, 0] = np.searchsorted(c0, rng.random(count), side="right")
    else:
        out[:, 0] = start
    for t in range(1, length):
        u = rng.random(count)
        rows = cum[out[:, t - 1]]
        out[:, t] = (u[:, None] >= rows).sum(axis=1)
    return out
