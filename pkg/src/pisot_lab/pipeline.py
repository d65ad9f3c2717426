"""One-stop construction of every object attached to a substitution."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .errors import HypothesisFailure
from .fractal import CloudBuilder, Embedder
from .markov import build_automaton, parry_chain
from .nfield import NumberField, char_poly, eigen_data, is_irreducible_over_Q, pisot_check, scale_v
from .places import enumerate_places
from .subst import Substitution, incidence_matrix, is_primitive, parse_substitution
from .tiling import GammaEnumerator, candidate_Z0, default_levels


def _det(M) -> int:
    n = len(M)
    A = [[Fraction(x) for x in r] for r in M]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return int(det)


@dataclass
class Lab:
    s: Substitution
    M: tuple
    poly: tuple
    N: int
    det: int

    @classmethod
    def from_text(cls, text: str) -> "Lab":
        return cls.from_substitution(parse_substitution(text))

    @classmethod
    def from_substitution(cls, s: Substitution) -> "Lab":
        ok, N = is_primitive(s)
        if not ok:
            raise HypothesisFailure("not primitive")
        M = incidence_matrix(s)
        poly = char_poly(M)
        if not is_irreducible_over_Q(poly) or not pisot_check(poly)[0]:
            raise HypothesisFailure("not irreducible Pisot")
        return cls(s, M, poly, N, _det(M))

    @cached_property
    def field(self) -> NumberField:
        return NumberField(self.poly)

    @cached_property
    def _raw(self):
        e0 = eigen_data(self.M, self.field)
        ps0 = enumerate_places(e0, self.det)
        b0 = CloudBuilder(self.s, self.aut, e0, ps0)
        emb0 = Embedder(e0, ps0)
        en0 = GammaEnumerator(e0, ps0, emb0)
        Z0 = candidate_Z0(en0, b0, i_max=default_levels(ps0))
        return e0, ps0, b0, emb0, en0, Z0

    @cached_property
    def Z0(self):
        return self._raw[5]

    @cached_property
    def eigen(self):
        """Eigen data with v scaled so that v and <w, v> (w in Z0) are integral."""
        e0 = self._raw[0]
        return scale_v(e0, [(w.base, w.level) for w, _ in self.Z0])

    @cached_property
    def _scaled(self):
        e = self.eigen
        if e.c == 1:
            return self._raw[1:5]
        ps = enumerate_places(e, self.det)
        b = CloudBuilder(self.s, self.aut, e, ps)
        emb = Embedder(e, ps)
        return ps, b, emb, GammaEnumerator(e, ps, emb)

    @property
    def places(self):
        return self._scaled[0]

    @property
    def builder(self) -> CloudBuilder:
        return self._scaled[1]

    @property
    def embedder(self) -> Embedder:
        return self._scaled[2]

    @property
    def gamma(self) -> GammaEnumerator:
        return self._scaled[3]

    @property
    def bounds(self):
        return self.builder.bounds

    @cached_property
    def aut(self):
        return build_automaton(self.s)

    @cached_property
    def chain(self):
        return parry_chain(self.aut, self.eigen)

    @property
    def n(self) -> int:
        return self.s.n

    @cached_property
    def u0(self) -> int:
        """Least letter whose image starts with itself."""
        for a in range(1, self.n + 1):
            if self.s(a)[0] == a:
                return a
        raise HypothesisFailure("no letter a with sigma(a) starting with a")
