"""Exact arithmetic in Q(alpha) and certified root isolation.

Polynomials are tuples of integer (or Fraction) coefficients in *ascending*
order: ``(c0, c1, ..., cn)`` stands for ``c0 + c1 x + ... + cn x^n``.
Field elements are coefficient vectors in the power basis ``1, a, ..., a^(n-1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import mpmath

from .errors import ArtifactError

MAX_IRREDUCIBLE_DEGREE = 12
PRECISION_LADDER = (64, 128, 256, 512)


# ---------------------------------------------------------------------------
# Dense polynomial helpers (ascending coefficients)
# ---------------------------------------------------------------------------

def poly_trim(p: Sequence) -> tuple:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


def poly_degree(p: Sequence) -> int:
    p = poly_trim(p)
    if len(p) == 1 and p[0] == 0:
        return -1
    return len(p) - 1


def poly_mul(a: Sequence, b: Sequence) -> tuple:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return poly_trim(out)


def poly_add(a: Sequence, b: Sequence) -> tuple:
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def poly_sub(a: Sequence, b: Sequence) -> tuple:
    return poly_add(a, [-x for x in b])


def poly_divmod(a: Sequence, b: Sequence) -> tuple[tuple, tuple]:
    """Division with remainder over Q (Fraction arithmetic)."""
    b = poly_trim(b)
    db = poly_degree(b)
    if db < 0:
        raise ZeroDivisionError("polynomial division by zero")
    r = [Fraction(x) for x in poly_trim(a)]
    q = [Fraction(0)] * max(1, len(r) - db)
    lead = Fraction(b[-1])
    while poly_degree(r) >= db and poly_degree(r) >= 0:
        k = poly_degree(r) - db
        c = r[poly_degree(r)] / lead
        q[k] = c
        for i, y in enumerate(b):
            r[i + k] -= c * y
        r = list(poly_trim(r))
    return poly_trim(q), poly_trim(r)


def poly_eval(p: Sequence, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_derivative(p: Sequence) -> tuple:
    if len(p) <= 1:
        return (0,)
    return poly_trim([i * p[i] for i in range(1, len(p))])


def poly_str(p: Sequence, var: str = "x") -> str:
    terms = []
    for i in range(len(p) - 1, -1, -1):
        c = p[i]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if i == 0:
            body = f"{mag}"
        else:
            coef = "" if mag == 1 else f"{mag}*"
            body = coef + (var if i == 1 else f"{var}^{i}")
        terms.append((sign, body))
    if not terms:
        return "0"
    s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        s += f" {sign} {body}"
    return s


def char_poly(M: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Characteristic polynomial det(xI - M), exact, via Faddeev-LeVerrier."""
    n = len(M)
    A = [[Fraction(x) for x in row] for row in M]
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    Mk = [[Fraction(0)] * n for _ in range(n)]  # M_0 = 0
    c_prev = Fraction(1)
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        prod = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        for i in range(n):
            prod[i][i] += c_prev
        Mk = prod
        AM = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        c = -sum(AM[i][i] for i in range(n)) / k
        coeffs[n - k] = c
        c_prev = c
    out = []
    for c in coeffs:
        if c.denominator != 1:
            raise ArtifactError("internal: non-integral characteristic polynomial")
        out.append(int(c))
    return tuple(out)


# ---------------------------------------------------------------------------
# Arithmetic over F_p (used by the irreducibility sieve and by places)
# ---------------------------------------------------------------------------

def gf_trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def gf_reduce(a, p):
    return gf_trim([x % p for x in a])


def gf_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return gf_trim(out)


def gf_divmod(a, b, p):
    a = gf_reduce(a, p)
    b = gf_reduce(b, p)
    if not b:
        raise ZeroDivisionError
    inv = pow(b[-1], -1, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    r = list(a)
    while len(r) >= len(b):
        c = (r[-1] * inv) % p
        k = len(r) - len(b)
        q[k] = c
        for i, y in enumerate(b):
            r[i + k] = (r[i + k] - c * y) % p
        r = gf_trim(r)
    return gf_trim(q), r


def gf_sub(a, b, p):
    n = max(len(a), len(b))
    return gf_trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)])


def gf_monic(a, p):
    a = gf_reduce(a, p)
    if not a:
        return a
    inv = pow(a[-1], -1, p)
    return [(x * inv) % p for x in a]


def gf_gcd(a, b, p):
    a, b = gf_reduce(a, p), gf_reduce(b, p)
    while b:
        _, r = gf_divmod(a, b, p)
        a, b = b, r
    return gf_monic(a, p)


def gf_powmod(base, e, mod, p):
    result = [1]
    base = gf_divmod(base, mod, p)[1]
    while e:
        if e & 1:
            result = gf_divmod(gf_mul(result, base, p), mod, p)[1]
        base = gf_divmod(gf_mul(base, base, p), mod, p)[1]
        e >>= 1
    return result


def gf_distinct_degree(f, p) -> list[int]:
    """Degrees of the irreducible factors of a squarefree monic f over F_p."""
    f = gf_monic(f, p)
    degrees = []
    h = [0, 1]
    d = 0
    rest = f
    while len(rest) - 1 >= 2 * (d + 1):
        d += 1
        h = gf_powmod(h, p, rest, p)
        g = gf_gcd(rest, gf_sub(h, [0, 1], p), p)
        if len(g) > 1:
            degrees.extend([d] * ((len(g) - 1) // d))
            rest, _ = gf_divmod(rest, g, p)
            h = gf_divmod(h, rest, p)[1] if len(rest) > 1 else h
    if len(rest) > 1:
        degrees.append(len(rest) - 1)
    return degrees


def gf_factor(f, p, max_candidates: int = 200_000) -> list[tuple[list[int], int]]:
    """Factor f over F_p into monic irreducibles with multiplicities.

    Trial division by monic polynomials of increasing degree; adequate for the
    small primes and degrees that occur here.
    """
    f = gf_monic(f, p)
    factors: list[tuple[list[int], int]] = []
    if len(f) <= 1:
        return factors
    d = 1
    seen = 0
    while len(f) - 1 >= 2 * d:
        for idx in range(p ** d):
            seen += 1
            if seen > max_candidates:
                raise ArtifactError(f"factorization mod {p} exceeds trial cap")
            g = []
            t = idx
            for _ in range(d):
                g.append(t % p)
                t //= p
            g.append(1)
            mult = 0
            while True:
                q, r = gf_divmod(f, g, p)
                if r:
                    break
                f = q
                mult += 1
            if mult:
                factors.append((g, mult))
            if len(f) - 1 < 2 * d:
                break
        d += 1
    if len(f) > 1:
        # what remains is irreducible (or a power of a factor already found)
        for i, (g, m) in enumerate(factors):
            if g == f:
                factors[i] = (g, m + 1)
                break
        else:
            factors.append((f, 1))
    factors.sort(key=lambda gm: (len(gm[0]), gm[0]))
    return factors


# ---------------------------------------------------------------------------
# Irreducibility over Q
# ---------------------------------------------------------------------------

def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            out.extend({d, n // d})
    return sorted(out)


def _small_primes(count: int, start: int = 2) -> Iterable[int]:
    found = 0
    k = start
    while found < count:
        if k > 1 and all(k % q for q in range(2, math.isqrt(k) + 1)):
            found += 1
            yield k
        k += 1


def _subset_sums(degrees: list[int]) -> set[int]:
    sums = {0}
    for d in degrees:
        sums |= {s + d for s in sums}
    return sums


def discriminant(p: Sequence[int]) -> int:
    n = poly_degree(p)
    res = resultant(p, poly_derivative(p))
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    val = Fraction(sign * res, p[-1])
    return int(val)


def is_irreducible_over_Q(p: Sequence[int]) -> bool:
    """Decide irreducibility of an integer polynomial over Q.

    Content removal, rational-root test, then a degree sieve over the
    distinct-degree factorizations modulo several good primes.  Should the
    sieve leave a candidate factor degree open, the decision is delegated
    to ``sympy`` (never observed for substitution matrices at desk scale).
    """
    p = poly_trim([int(c) for c in p])
    n = poly_degree(p)
    if n < 1:
        raise ArtifactError("irreducibility test needs degree >= 1")
    if n > MAX_IRREDUCIBLE_DEGREE:
        raise ArtifactError(f"degree {n} above supported bound {MAX_IRREDUCIBLE_DEGREE}")
    g = reduce(math.gcd, p)
    p = tuple(c // g for c in p)
    if n == 1:
        return True
    if p[0] == 0:
        return False
    for num in _divisors(p[0]):
        for den in _divisors(p[-1]):
            for s in (1, -1):
                if poly_eval(p, Fraction(s * num, den)) == 0:
                    return False
    if n <= 3:
        return True
    disc = discriminant(p)
    if disc == 0:
        return False  # repeated factor
    possible = set(range(1, n))
    tried = 0
    for q in _small_primes(60):
        if p[-1] % q == 0 or disc % q == 0:
            continue
        degs = gf_distinct_degree([c % q for c in p], q)
        possible &= _subset_sums(degs)
        tried += 1
        if not possible:
            return True
        if tried >= 25:
            break
    import sympy  # fallback for sieve-resistant polynomials

    x = sympy.Symbol("x")
    return bool(sympy.Poly(sum(c * x**i for i, c in enumerate(p)), x).is_irreducible)


def sturm_real_root_count(p: Sequence[int]) -> int:
    """Number of distinct real roots, exactly, from a Sturm sequence."""
    seq = [tuple(Fraction(c) for c in poly_trim(p))]
    seq.append(tuple(Fraction(c) for c in poly_derivative(p)))
    while poly_degree(seq[-1]) > 0:
        _, r = poly_divmod(seq[-2], seq[-1])
        if poly_degree(r) < 0:
            break
        seq.append(tuple(-c for c in r))

    def changes(signs):
        s = [x for x in signs if x != 0]
        return sum(1 for a, b in zip(s, s[1:]) if (a > 0) != (b > 0))

    at_neg = [(-1) ** poly_degree(q) * q[-1] for q in seq]
    at_pos = [q[-1] for q in seq]
    return changes(at_neg) - changes(at_pos)


# ---------------------------------------------------------------------------
# Certified roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CertifiedRoot:
    """A root of an integer polynomial inside a disk that isolates it.

    For ``kind == "complex"`` the center has positive imaginary part and the
    disk stands for the conjugate pair.
    """

    kind: str
    center: complex | float
    radius: float
    mp_center: object = field(repr=False, compare=False, default=None)

    @property
    def modulus(self) -> float:
        return abs(self.center)

    def as_complex(self) -> complex:
        return complex(self.center)


def _inclusion_radii(coeffs_desc, zs):
    n = len(zs)
    lead = coeffs_desc[0]
    radii = []
    for i, z in enumerate(zs):
        val = mpmath.polyval(coeffs_desc, z)
        den = lead
        for j, w in enumerate(zs):
            if j != i:
                den *= z - w
        radii.append(n * abs(val / den))
    return radii


def isolate_roots(p: Sequence[int], rel_tol: float = 1e-12) -> list[CertifiedRoot]:
    """Isolate all roots of a squarefree integer polynomial.

    Approximations come from simultaneous (Durand-Kerner) iteration; each is
    wrapped in the inclusion disk ``n |p(z_i) / (lc prod_{j!=i}(z_i - z_j))|``.
    Pairwise-disjoint disks contain exactly one root each.  Precision is
    escalated along 64/128/256/512 bits until the disks are disjoint and
    small.  Real roots are reported first (descending), then complex pairs
    by decreasing modulus.
    """
    p = poly_trim([int(c) for c in p])
    n = poly_degree(p)
    coeffs_desc = list(reversed(p))
    n_real = sturm_real_root_count(p)
    for bits in PRECISION_LADDER:
        with mpmath.workprec(bits):
            try:
                raw = mpmath.polyroots(coeffs_desc, maxsteps=200, extraprec=bits)
            except mpmath.libmp.NoConvergence:
                continue
            raw = sorted(raw, key=lambda z: (abs(mpmath.im(z)), -mpmath.re(z)))
            reals = [mpmath.mpf(mpmath.re(z)) for z in raw[:n_real]]
            cplx = raw[n_real:]
            uppers = [mpmath.mpc(mpmath.re(z), abs(mpmath.im(z))) for z in cplx[0::2]]
            if len(cplx) % 2:
                continue
            zs = reals + [w for u in uppers for w in (u, mpmath.conj(u))]
            radii = _inclusion_radii(coeffs_desc, zs)
            ok = True
            for i in range(n):
                for j in range(i + 1, n):
                    if abs(zs[i] - zs[j]) <= radii[i] + radii[j]:
                        ok = False
            for i in range(n_real, n):
                if abs(mpmath.im(zs[i])) <= radii[i]:
                    ok = False
            if not ok:
                continue
            if any(radii[i] > rel_tol * max(abs(zs[i]), mpmath.mpf(1e-300)) for i in range(n)):
                continue
            out = [CertifiedRoot("real", float(z), float(r) * (1 + 1e-9) + 1e-300, mp_center=z)
                   for z, r in zip(reals, radii[:n_real])]
            out.sort(key=lambda c: -c.center)
            cp = []
            for k, u in enumerate(uppers):
                r = max(radii[n_real + 2 * k], radii[n_real + 2 * k + 1])
                cp.append(CertifiedRoot("complex", complex(u), float(r) * (1 + 1e-9) + 1e-300, mp_center=u))
            cp.sort(key=lambda c: -c.modulus)
            return out + cp
    raise ArtifactError("root isolation failed up to 512 bits")


def pisot_check(p: Sequence[int]) -> tuple[bool, list[CertifiedRoot]]:
    """Certified Pisot test: one real root > 1, all other conjugates inside the unit disk."""
    roots = isolate_roots(p)
    outside = [r for r in roots if r.kind == "real" and r.center - r.radius > 1]
    inside = [r for r in roots if r.modulus + r.radius < 1]
    ok = len(outside) == 1 and len(inside) == len(roots) - 1
    return ok, roots


# ---------------------------------------------------------------------------
# Resultant
# ---------------------------------------------------------------------------

def _det_fraction(m: list[list[Fraction]]) -> Fraction:
    """Determinant by Gaussian elimination over Q."""
    m = [list(row) for row in m]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] / m[c][c]
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return det


def resultant(f: Sequence, g: Sequence) -> Fraction:
    """Res(f, g) from the Sylvester matrix."""
    f = poly_trim(f)
    g = poly_trim(g)
    m, n = poly_degree(f), poly_degree(g)
    if m < 0 or n < 0:
        return Fraction(0)
    if n == 0:
        return Fraction(g[0]) ** m
    if m == 0:
        return Fraction(f[0]) ** n
    size = m + n
    rows = []
    fd = list(reversed(f))
    gd = list(reversed(g))
    for i in range(n):
        rows.append([Fraction(0)] * i + [Fraction(c) for c in fd] + [Fraction(0)] * (size - m - 1 - i))
    for i in range(m):
        rows.append([Fraction(0)] * i + [Fraction(c) for c in gd] + [Fraction(0)] * (size - n - 1 - i))
    return _det_fraction(rows)


# ---------------------------------------------------------------------------
# Number fields
# ---------------------------------------------------------------------------

class NumberField:
    """Q(alpha) for a monic irreducible integer polynomial.

    ``roots`` lists certified roots; index 0 is the Perron (dominant real)
    root whenever the polynomial is Pisot.
    """

    def __init__(self, minpoly: Sequence[int], roots: list[CertifiedRoot] | None = None):
        mp = poly_trim([int(c) for c in minpoly])
        if mp[-1] != 1:
            raise ArtifactError("minimal polynomial must be monic")
        self.minpoly = mp
        self.n = len(mp) - 1
        self.roots = roots if roots is not None else isolate_roots(mp)
        self._norm_cache: dict[tuple, Fraction] = {}

    def __repr__(self):
        return f"NumberField({poly_str(self.minpoly)})"

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.minpoly == other.minpoly

    def __hash__(self):
        return hash(self.minpoly)

    @property
    def perron(self) -> CertifiedRoot:
        return self.roots[0]

    @property
    def conjugates(self) -> list[CertifiedRoot]:
        """Roots other than the Perron root (one per complex pair)."""
        return self.roots[1:]

    def __call__(self, coeffs) -> "FieldElem":
        if isinstance(coeffs, FieldElem):
            return coeffs
        if isinstance(coeffs, (int, Fraction)):
            return FieldElem.from_rational(self, coeffs)
        return FieldElem(self, self._reduce([Fraction(c) for c in coeffs]))

    @property
    def alpha(self) -> "FieldElem":
        return self([0, 1]) if self.n > 1 else self([-self.minpoly[0]])

    def zero(self) -> "FieldElem":
        return FieldElem.from_rational(self, 0)

    def one(self) -> "FieldElem":
        return FieldElem.from_rational(self, 1)

    def _reduce(self, c: list) -> tuple:
        n = self.n
        c = list(c)
        for k in range(len(c) - 1, n - 1, -1):
            t = c[k]
            if t:
                for i in range(n):
                    c[k - n + i] -= t * self.minpoly[i]
            c[k] = 0
        c = c[:n] + [Fraction(0)] * (n - len(c))
        return tuple(Fraction(x) for x in c)


class FieldElem:
    """Element of Q(alpha) as exact rational power-basis coefficients."""

    __slots__ = ("field", "coeffs", "_hash")

    def __init__(self, fld: NumberField, coeffs: tuple):
        self.field = fld
        self.coeffs = coeffs
        self._hash = None

    @classmethod
    def from_rational(cls, fld: NumberField, q) -> "FieldElem":
        return cls(fld, (Fraction(q),) + (Fraction(0),) * (fld.n - 1))

    def _coerce(self, other) -> "FieldElem":
        if isinstance(other, FieldElem):
            if other.field.minpoly != self.field.minpoly:
                raise ArtifactError("field mismatch")
            return other
        if isinstance(other, (int, Fraction)):
            return FieldElem.from_rational(self.field, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.field, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(self.field, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.field, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElem(self.field, tuple(a * other for a in self.coeffs))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = self.field.n
        prod = [Fraction(0)] * (2 * n - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    if b:
                        prod[i + j] += a * b
        return FieldElem(self.field, self.field._reduce(prod))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        result = self.field.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inv(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(alpha)")
        # extended Euclid on (minpoly, self)
        r0, r1 = tuple(Fraction(c) for c in self.field.minpoly), poly_trim(self.coeffs)
        t0, t1 = (Fraction(0),), (Fraction(1),)
        while poly_degree(r1) > 0:
            q, r = poly_divmod(r0, r1)
            r0, r1 = r1, r
            t0, t1 = t1, poly_sub(t0, poly_mul(q, t1))
        c = r1[0]
        return FieldElem(self.field, self.field._reduce([x / c for x in t1]))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return FieldElem(self.field, tuple(a / other for a in self.coeffs))
        o = self._coerce(other)
        return self * o.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = FieldElem.from_rational(self.field, other)
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.field.minpoly == other.field.minpoly and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.field.minpoly, self.coeffs))
        return self._hash

    def __repr__(self):
        return f"FieldElem({self})"

    def __str__(self):
        return poly_str(self.coeffs, "a")

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def denominator(self) -> int:
        return reduce(math.lcm, (c.denominator for c in self.coeffs), 1)

    def norm(self) -> Fraction:
        """Exact field norm N_{K/Q}(self), as Res(minpoly, representative)."""
        key = self.coeffs
        cache = self.field._norm_cache
        if key not in cache:
            rep = poly_trim(self.coeffs)
            if poly_degree(rep) < 0:
                cache[key] = Fraction(0)
            else:
                cache[key] = resultant(self.field.minpoly, rep)
        return cache[key]

    def embed(self, root: CertifiedRoot, prec: int = 128):
        return embed(self, root, prec)

    def sign(self, prec: int = 128) -> int:
        """Exact sign at the Perron embedding (the real order used by Gamma)."""
        return exact_sign(self, prec)


@dataclass(frozen=True)
class Ball:
    """A value (real or complex) with a rigorous error radius."""

    value: complex | float
    radius: float

    def __abs__(self):
        return abs(self.value)

    def upper(self) -> float:
        return abs(self.value) + self.radius

    def lower(self) -> float:
        return max(0.0, abs(self.value) - self.radius)


def embed(a: FieldElem, root: CertifiedRoot, prec: int = 128) -> Ball:
    """Evaluate ``a`` at a certified root with propagated error.

    The bound combines the disk radius (``sum |c_k| ((|z|+r)^k - |z|^k)``)
    with a working-precision rounding term.
    """
    if a.is_rational():
        return Ball(float(a.coeffs[0]) if root.kind == "real" else complex(a.coeffs[0]), 0.0)
    with mpmath.workprec(prec):
        z = root.mp_center if root.mp_center is not None else mpmath.mpmathify(root.center)
        val = mpmath.mpf(0)
        for c in reversed(a.coeffs):
            val = val * z + mpmath.mpf(c.numerator) / c.denominator
        az = abs(z)
        r = mpmath.mpf(root.radius)
        spread = mpmath.mpf(0)
        scale = mpmath.mpf(0)
        for k, c in enumerate(a.coeffs):
            ck = abs(mpmath.mpf(c.numerator) / c.denominator)
            spread += ck * ((az + r) ** k - az ** k)
            scale += ck * (az + r) ** k
        rounding = scale * mpmath.mpf(2) ** (-prec + 8) * (a.field.n + 1)
        rad = float(spread + rounding) * (1 + 1e-12)
        value = float(val) if root.kind == "real" else complex(val)
    return Ball(value, rad)


def exact_sign(a: FieldElem, prec: int = 128) -> int:
    """Sign of the real Perron embedding of ``a``, decided exactly.

    Intervals first; if the ball straddles zero the element is either zero
    (checked exactly) or the precision is raised until it separates.
    """
    if a.is_zero():
        return 0
    root = a.field.perron
    fld = a.field
    bits = prec
    while bits <= 4096:
        if bits > prec and root.mp_center is not None:
            refined = _refine_real_root(fld.minpoly, root, bits)
        else:
            refined = root
        b = embed(a, refined, bits)
        if abs(b.value) > b.radius:
            return 1 if b.value > 0 else -1
        bits *= 2
    raise ArtifactError("sign determination failed")


def _refine_real_root(minpoly, root: CertifiedRoot, bits: int) -> CertifiedRoot:
    with mpmath.workprec(bits + 20):
        z = mpmath.mpf(root.mp_center)
        coeffs_desc = list(reversed(minpoly))
        dcoeffs = list(reversed(poly_derivative(minpoly)))
        for _ in range(bits // 8 + 10):
            z = z - mpmath.polyval(coeffs_desc, z) / mpmath.polyval(dcoeffs, z)
        d = mpmath.polyval(dcoeffs, z)
        rad = abs(mpmath.polyval(coeffs_desc, z) / d) * 2 + mpmath.mpf(2) ** (-bits)
    return CertifiedRoot("real", float(z), float(rad), mp_center=z)


# ---------------------------------------------------------------------------
# Exact linear algebra over Q(alpha) and eigen data
# ---------------------------------------------------------------------------

def nullspace(rows: list[list[FieldElem]]) -> list[list[FieldElem]]:
    """Basis of the right kernel of a matrix over Q(alpha), by exact elimination."""
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if not m[i][c].is_zero()), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = m[r][c].inv()
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and not m[i][c].is_zero():
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    fld = rows[0][0].field
    basis = []
    for fc in free:
        vec = [fld.zero() for _ in range(ncols)]
        vec[fc] = fld.one()
        for i, pc in enumerate(pivots):
            vec[pc] = -m[i][fc]
        basis.append(vec)
    return basis


@dataclass
class EigenData:
    """Perron eigen data of an integer matrix in exact arithmetic.

    ``u`` solves ``M u = alpha u`` and ``v`` solves ``M^T v = alpha v``; both
    start with coordinate 1 before the integer rescaling ``v <- c v``.
    """

    field: NumberField
    M: tuple[tuple[int, ...], ...]
    u: tuple[FieldElem, ...]
    v: tuple[FieldElem, ...]
    c: int = 1

    @property
    def alpha(self) -> CertifiedRoot:
        return self.field.perron

    @property
    def n(self) -> int:
        return self.field.n

    def pair(self, w: Sequence[int]) -> FieldElem:
        """<w, v> for an integer (or rational) vector w."""
        acc = self.field.zero()
        for wi, vi in zip(w, self.v):
            if wi:
                acc = acc + vi * wi
        return acc

    def v_matrix(self) -> list[list[Fraction]]:
        """Rows of B with v = B (1, a, ..., a^(n-1))."""
        return [list(vi.coeffs) for vi in self.v]


def eigen_data(M: Sequence[Sequence[int]], fld: NumberField) -> EigenData:
    n = len(M)
    a = fld.alpha

    def solve(mat):
        rows = [[fld(mat[i][j]) - (a if i == j else 0) for j in range(n)] for i in range(n)]
        ker = nullspace(rows)
        if len(ker) != 1:
            raise ArtifactError("internal: degenerate eigenvector elimination")
        vec = ker[0]
        if vec[0].is_zero():
            raise ArtifactError("internal: first eigenvector coordinate vanishes")
        inv = vec[0].inv()
        return tuple(x * inv for x in vec)

    u = solve(M)
    Mt = [[M[j][i] for j in range(n)] for i in range(n)]
    v = solve(Mt)
    return EigenData(fld, tuple(tuple(int(x) for x in r) for r in M), u, v, 1)


def scale_v(e: EigenData, Z0: Iterable[tuple[Sequence[int], int]]) -> EigenData:
    """Rescale v by the least integer c making v and every <w, v> (w in Z0) integral.

    ``Z0`` yields ``(base, level)`` pairs standing for ``w = M^-level base``;
    ``<w, v> = alpha^-level <base, v>``.
    """
    ainv = e.field.alpha.inv()
    dens = [vi.denominator() for vi in e.v]
    for base, level in Z0:
        val = e.pair(base) * (ainv ** level)
        dens.append(val.denominator())
    c = reduce(math.lcm, dens, 1)
    if c == 1:
        return EigenData(e.field, e.M, e.u, e.v, e.c)
    return EigenData(e.field, e.M, e.u, tuple(vi * c for vi in e.v), e.c * c)
