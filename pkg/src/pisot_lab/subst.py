"""Substitutions on the alphabet 1..n: parsing, iteration, incidence data."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CapExceeded, ParseError

WORD_CAP = 10**7

Word = tuple  # tuple of ints in 1..n


@dataclass(frozen=True)
class Substitution:
    n: int
    images: tuple  # images[a-1] is the image word of letter a

    def __post_init__(self):
        if self.n < 2:
            raise ParseError("alphabet must have at least 2 letters")
        if len(self.images) != self.n:
            raise ParseError("one image per letter required")
        for a, img in enumerate(self.images, 1):
            if not img:
                raise ParseError(f"empty image for letter {a}")
            for x in img:
                if not 1 <= x <= self.n:
                    raise ParseError(f"letter {x} out of range 1..{self.n}")

    def __call__(self, a: int) -> Word:
        return self.images[a - 1]

    def __str__(self):
        sep = "," if self.n >= 10 else ""
        return ";".join(f"{a}->{sep.join(map(str, img))}" for a, img in enumerate(self.images, 1))

    def power(self, q: int) -> "Substitution":
        """The substitution sigma^q."""
        return Substitution(self.n, tuple(iterate_word(self, (a,), q) for a in range(1, self.n + 1)))


_RULE = re.compile(r"^(\d+)->([\d,]*)$")


def parse_substitution(text: str) -> Substitution:
    """Parse ``"1->12;2->13;3->1"``; letters are comma-separated once n >= 10."""
    body = re.sub(r"\s+", "", text)
    if not body:
        raise ParseError("syntax error: empty substitution")
    rules: dict[int, Word] = {}
    raw = [r for r in body.split(";") if r]
    parsed = []
    for r in raw:
        m = _RULE.match(r)
        if not m:
            raise ParseError(f"syntax error in rule {r!r}")
        parsed.append((int(m.group(1)), m.group(2)))
    for lhs, rhs in parsed:
        if lhs in rules:
            raise ParseError(f"syntax error: duplicate rule for letter {lhs}")
        if rhs == "":
            raise ParseError(f"empty image for letter {lhs}")
        rules[lhs] = rhs  # decoded below once n is known
    biggest = max(rules)
    comma = any("," in rhs for rhs in rules.values())
    decoded: dict[int, Word] = {}
    for lhs, rhs in rules.items():
        if comma or biggest >= 10:
            parts = rhs.split(",")
            if any(p == "" for p in parts):
                raise ParseError(f"syntax error in image of {lhs}")
            decoded[lhs] = tuple(int(p) for p in parts)
        else:
            decoded[lhs] = tuple(int(ch) for ch in rhs)
    n = max([biggest] + [x for w in decoded.values() for x in w])
    for lhs, w in decoded.items():
        if lhs < 1:
            raise ParseError(f"letter {lhs} out of range")
        for x in w:
            if x < 1:
                raise ParseError(f"letter {x} out of range")
    missing = [a for a in range(1, n + 1) if a not in decoded]
    if missing:
        raise ParseError(f"missing letter rule for {missing[0]}")
    return Substitution(n, tuple(decoded[a] for a in range(1, n + 1)))


def word_from_str(s: str) -> Word:
    return tuple(int(ch) for ch in s)


def word_to_str(w: Sequence[int]) -> str:
    if any(x >= 10 for x in w):
        return ",".join(map(str, w))
    return "".join(map(str, w))


def abelianize(w: Iterable[int], n: int) -> tuple[int, ...]:
    v = [0] * n
    for x in w:
        if not 1 <= x <= n:
            raise ParseError(f"letter {x} out of range 1..{n}")
        v[x - 1] += 1
    return tuple(v)


def incidence_matrix(s: Substitution) -> tuple[tuple[int, ...], ...]:
    cols = [abelianize(s(j), s.n) for j in range(1, s.n + 1)]
    return tuple(tuple(cols[j][i] for j in range(s.n)) for i in range(s.n))


def mat_mul(A, B):
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0])))
                 for i in range(len(A)))


def mat_vec(A, x):
    return tuple(sum(a * b for a, b in zip(row, x)) for row in A)


def mat_pow(A, k: int):
    n = len(A)
    R = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    while k:
        if k & 1:
            R = mat_mul(R, A)
        A = mat_mul(A, A)
        k >>= 1
    return R


def image_length(s: Substitution, w: Sequence[int], k: int) -> int:
    x = abelianize(w, s.n)
    for _ in range(k):
        x = mat_vec(incidence_matrix(s), x)
    return sum(x)


def iterate_word(s: Substitution, w: Sequence[int], k: int, cap: int = WORD_CAP) -> Word:
    """sigma^k(w); the expected length is checked against ``cap`` first."""
    w = tuple(w)
    if k == 0:
        return w
    if image_length(s, w, k) > cap:
        raise CapExceeded(f"sigma^{k} exceeds word length cap {cap}")
    for _ in range(k):
        out: list[int] = []
        for x in w:
            out.extend(s.images[x - 1])
        w = tuple(out)
    return w


def is_primitive(s: Substitution, N_max: int = 64) -> tuple[bool, int | None]:
    M = incidence_matrix(s)
    P = M
    for N in range(1, N_max + 1):
        if all(x > 0 for row in P for x in row):
            return True, N
        P = tuple(tuple(min(1, x) for x in row) for row in mat_mul(P, M))
    return False, None


@dataclass(frozen=True)
class PSRep:
    source: int
    prefix: Word
    core: int
    suffix: Word
    power: int


def prefix_suffix_reps(s: Substitution, k: int, target: int | None = None,
                       cap: int = WORD_CAP) -> list[PSRep]:
    """All (b, p, a, s) with sigma^k(b) = p a s; restricted to core ``target`` if given."""
    out = []
    for b in range(1, s.n + 1):
        img = iterate_word(s, (b,), k, cap)
        for i, a in enumerate(img):
            if target is None or a == target:
                out.append(PSRep(b, img[:i], a, img[i + 1:], k))
    return out


def prefixes(s: Substitution) -> list[Word]:
    """Pref: all proper prefixes of the letter images, ordered by length then value."""
    found = {img[:i] for img in s.images for i in range(len(img))}
    return sorted(found, key=lambda w: (len(w), w))


def _legal_pairs(s: Substitution, depth: int = 6) -> set[tuple[int, int]]:
    pairs: set[tuple[int, int]] = set()
    for a in range(1, s.n + 1):
        w = (a,)
        for _ in range(depth):
            if len(w) > 20000:
                break
            w = iterate_word(s, w, 1)
        pairs |= set(zip(w, w[1:]))
    return pairs


@dataclass(frozen=True)
class FixedPointWindow:
    left_seed: int
    right_seed: int
    q: int            # power making sigma^q(u0) start with u0
    q_two_sided: int  # power for which (u_-1, u_0) is a two-sided seed
    window: Word      # u_{-radius} .. u_{radius-1}

    @property
    def left(self) -> Word:
        return self.window[: len(self.window) // 2]

    @property
    def right(self) -> Word:
        return self.window[len(self.window) // 2:]


def fixed_point_window(s: Substitution, radius: int, q_cap: int | None = None) -> FixedPointWindow:
    """Two-sided fixed point around the origin.

    ``q`` is the least power with sigma^q(u0) starting with u0 (a one-sided
    fixed point); ``q_two_sided`` the least power where additionally a legal
    pair u_-1 u_0 has sigma^q(u_-1) ending with u_-1.  The window is cut from
    the two-sided fixed point of sigma^q_two_sided.
    """
    n = s.n
    q_cap = q_cap or max(n * n, 2 * n)
    firsts = {a: a for a in range(1, n + 1)}
    lasts = {a: a for a in range(1, n + 1)}
    q = None
    legal = _legal_pairs(s)
    best = None
    for k in range(1, q_cap + 1):
        firsts = {a: s(firsts[a])[0] for a in firsts}
        lasts = {a: s(lasts[a])[-1] for a in lasts}
        rights = [a for a in range(1, n + 1) if firsts[a] == a]
        lefts = [b for b in range(1, n + 1) if lasts[b] == b]
        if q is None and rights:
            q = k
        cands = [(b, a) for b in lefts for a in rights if (b, a) in legal]
        if cands:
            best = (k, min(cands))
            break
    if q is None or best is None:
        raise CapExceeded(f"no fixed-point seed found below power {q_cap}")
    qq, (b, a) = best
    sq = s if qq == 1 else s.power(qq)
    right: Word = (a,)
    left: Word = (b,)
    while len(right) < radius or len(left) < radius:
        right = iterate_word(sq, right, 1)
        left = iterate_word(sq, left, 1)
    window = left[len(left) - radius:] + right[:radius] if radius > 0 else ()
    return FixedPointWindow(b, a, q, qq, window)


@dataclass(frozen=True)
class CoincidenceWitness:
    k: int
    letter: int
    prefix_vector: tuple[int, ...]


def strong_coincidence(s: Substitution, k_max: int = 10,
                       cap: int = WORD_CAP) -> dict[tuple[int, int], CoincidenceWitness | None]:
    """Smallest k <= k_max where sigma^k(a), sigma^k(b) share (f(prefix), core letter)."""
    n = s.n
    result: dict[tuple[int, int], CoincidenceWitness | None] = {
        (a, b): None for a in range(1, n + 1) for b in range(a, n + 1)}
    words = {a: (a,) for a in range(1, n + 1)}
    for k in range(1, k_max + 1):
        if all(v is not None for v in result.values()):
            break
        words = {a: iterate_word(s, w, 1, cap) for a, w in words.items()}
        keys: dict[int, dict[tuple, tuple]] = {}
        for a, w in words.items():
            acc = [0] * n
            seen: dict[tuple, tuple] = {}
            for x in w:
                key = (tuple(acc), x)
                seen.setdefault(key, key)
                acc[x - 1] += 1
            keys[a] = seen
        for (a, b), got in result.items():
            if got is not None:
                continue
            common = keys[a].keys() & keys[b].keys()
            if common:
                pv, letter = min(common, key=lambda t: (sum(t[0]), t[0], t[1]))
                result[(a, b)] = CoincidenceWitness(k, letter, pv)
    return result


def lcm_list(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out = math.lcm(out, x)
    return out
