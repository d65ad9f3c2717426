"""Archimedean and finite places of Q(alpha), valuations, and the metric on K_sigma."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import UnsupportedField
from .nfield import (Ball, CertifiedRoot, EigenData, FieldElem, NumberField, embed,
                     gf_factor, gf_gcd, gf_reduce)

INF = math.inf


def factor_integer(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def vp_int(x: int, p: int) -> int:
    if x == 0:
        return 10**9
    k = 0
    x = abs(x)
    while x % p == 0:
        x //= p
        k += 1
    return k


# ---------------------------------------------------------------------------
# HNF lattices inside Z[alpha] (rows are power-basis coordinate vectors)
# ---------------------------------------------------------------------------

def hnf(rows: list[list[int]], n: int) -> list[list[int]]:
    """Upper-triangular row Hermite normal form of a full-rank integer lattice."""
    A = [list(r) for r in rows if any(r)]
    out = []
    col = 0
    while col < n and A:
        nz = [r for r in A if r[col] != 0]
        rest = [r for r in A if r[col] == 0]
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            new = [piv]
            for r in nz[1:]:
                q = r[col] // piv[col]
                r2 = [a - q * b for a, b in zip(r, piv)]
                if r2[col] != 0:
                    new.append(r2)
                elif any(r2):
                    rest.append(r2)
            nz = new
        if nz:
            piv = nz[0]
            if piv[col] < 0:
                piv = [-a for a in piv]
            out.append(piv)
        A = rest
        col += 1
    # reduce entries above pivots
    for i in range(len(out)):
        c = next(j for j, a in enumerate(out[i]) if a)
        for k in range(i):
            q = out[k][c] // out[i][c]
            if q:
                out[k] = [a - q * b for a, b in zip(out[k], out[i])]
    return out


def lattice_contains(H: list[list[int]], x: Sequence[int]) -> bool:
    x = list(x)
    for row in H:
        c = next(j for j, a in enumerate(row) if a)
        if x[c] % row[c]:
            return False
        q = x[c] // row[c]
        x = [a - q * b for a, b in zip(x, row)]
    return not any(x)


def _mul_int_elems(fld: NumberField, a: Sequence[int], b: Sequence[int]) -> list[int]:
    prod = fld(list(a)) * fld(list(b))
    return [int(c) for c in prod.coeffs]


def ideal_product(fld: NumberField, H1, H2) -> list[list[int]]:
    n = fld.n
    gens = [_mul_int_elems(fld, r, s) for r in H1 for s in H2]
    return hnf(gens, n)


# ---------------------------------------------------------------------------
# Places
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeIdeal:
    p: int
    e: int
    f: int
    gen: tuple[int, ...]  # monic lift of the factor of the minimal polynomial mod p (ascending)

    @property
    def q(self) -> int:
        return self.p ** self.f


@dataclass(frozen=True)
class Place:
    kind: str  # "real" | "complex" | "finite"
    index: int
    root: CertifiedRoot | None = None
    prime: PrimeIdeal | None = None
    nu: int = 0

    @property
    def norm_q(self) -> int:
        return self.prime.q if self.prime else 0

    def label(self) -> str:
        if self.kind == "finite":
            return f"p{self.prime.p}:{self.index}"
        return f"{self.kind}:{self.index}"


def dedekind_primes(fld: NumberField, p: int) -> list[PrimeIdeal]:
    """Prime ideals above p from the factorization of the minimal polynomial mod p.

    Raises UnsupportedField when the Dedekind criterion shows p | [O_K : Z[alpha]].
    """
    mp = list(fld.minpoly)
    facs = gf_factor(mp, p)
    prod_int = [1]
    for g, e in facs:
        for _ in range(e):
            prod_int = _int_mul(prod_int, g)
    diff = [(mp[i] if i < len(mp) else 0) - (prod_int[i] if i < len(prod_int) else 0)
            for i in range(max(len(mp), len(prod_int)))]
    F = gf_reduce([d // p for d in diff], p)
    for g, e in facs:
        if e >= 2 and F and len(gf_gcd(F, g, p)) > 1:
            raise UnsupportedField(f"unsupported field at prime {p}")
    return [PrimeIdeal(p, e, len(g) - 1, tuple(g)) for g, e in facs]


def _int_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


class ValuationEngine:
    """v_P on Z[alpha] via membership in HNF powers of P = (p, g(alpha))."""

    def __init__(self, fld: NumberField, prime: PrimeIdeal):
        self.fld = fld
        self.prime = prime
        n = fld.n
        p = prime.p
        gens = []
        gel = fld([Fraction(c) for c in prime.gen])
        a = fld.alpha
        for i in range(n):
            gens.append([p if j == i else 0 for j in range(n)])
            t = gel * (a ** i)
            gens.append([int(c) for c in t.coeffs])
        self.powers = [None, hnf(gens, n)]

    def power(self, k: int):
        while len(self.powers) <= k:
            self.powers.append(ideal_product(self.fld, self.powers[-1], self.powers[1]))
        return self.powers[k]

    def valuation(self, x: FieldElem) -> int:
        if x.is_zero():
            return 10**9
        d = x.denominator()
        y = [int(c * d) for c in x.coeffs]
        nrm = abs(x.field(y).norm())
        kmax = vp_int(int(nrm), self.prime.p) // self.prime.f
        v = 0
        for k in range(1, kmax + 1):
            if lattice_contains(self.power(k), y):
                v = k
            else:
                break
        return v - self.prime.e * vp_int(d, self.prime.p)


def hensel_root(minpoly: Sequence[int], r0: int, p: int, prec: int) -> int:
    """Lift a simple root r0 mod p of minpoly to Z/p^prec."""
    from .nfield import poly_derivative, poly_eval
    r = r0 % p
    mod = p
    dp = poly_derivative(minpoly)
    while mod < p ** prec:
        mod = min(mod * mod, p ** prec)
        fr = poly_eval(minpoly, r) % mod
        inv = pow(poly_eval(dp, r) % mod, -1, mod)
        r = (r - fr * inv) % mod
    return r


def padic_valuation_degree_one(x: FieldElem, prime: PrimeIdeal, prec: int = 64) -> int:
    """Cross-check route for e = f = 1: evaluate at the p-adic root alpha -> rho."""
    assert prime.e == 1 and prime.f == 1
    p = prime.p
    r0 = (-prime.gen[0]) % p
    rho = hensel_root(x.field.minpoly, r0, p, prec)
    d = x.denominator()
    y = [int(c * d) for c in x.coeffs]
    mod = p ** prec
    val = sum(c * pow(rho, i, mod) for i, c in enumerate(y)) % mod
    return min(vp_int(val, p) if val else prec, prec) - vp_int(d, p)


@dataclass
class PlaceSystem:
    field: NumberField
    eigen: EigenData
    expanding: Place
    arch: list[Place]          # contracting archimedean places
    finite: list[Place]        # finite places with nu >= 1
    engines: dict = field(default_factory=dict, repr=False)

    @property
    def contracting(self) -> list[Place]:
        return self.arch + self.finite

    def engine(self, prime: PrimeIdeal) -> ValuationEngine:
        key = (prime.p, prime.gen)
        if key not in self.engines:
            self.engines[key] = ValuationEngine(self.field, prime)
        return self.engines[key]

    def valuation(self, x: FieldElem, pl: Place) -> int:
        return self.engine(pl.prime).valuation(x)

    def abs_alpha(self, pl: Place) -> float:
        """|alpha|_v normalized as in the product formula (squared at complex places)."""
        if pl.kind == "finite":
            return pl.norm_q ** (-pl.nu)
        m = pl.root.modulus
        return m * m if pl.kind == "complex" else m

    def modulus(self, pl: Place) -> float:
        """Plain contraction factor used by the metric (|alpha_v| or q^-nu)."""
        if pl.kind == "finite":
            return pl.norm_q ** (-pl.nu)
        return pl.root.modulus

    def haar_residual(self) -> float:
        prod = 1.0
        for pl in self.contracting:
            prod *= self.abs_alpha(pl)
        return abs(prod - 1.0 / self.field.perron.center)

    def describe(self) -> list[dict]:
        out = []
        for pl in [self.expanding] + self.contracting:
            d = {"kind": pl.kind, "label": pl.label()}
            if pl.root is not None:
                z = pl.root.center
                d["root"] = [float(complex(z).real), float(complex(z).imag)]
                d["modulus"] = pl.root.modulus
            if pl.prime is not None:
                d.update(p=pl.prime.p, e=pl.prime.e, f=pl.prime.f, q=pl.norm_q, nu=pl.nu,
                         generator=list(pl.prime.gen))
            out.append(d)
        return out


def enumerate_places(e: EigenData, detM: int) -> PlaceSystem:
    fld = e.field
    roots = fld.roots
    expanding = Place(roots[0].kind, 0, root=roots[0])
    arch = [Place(r.kind, i, root=r) for i, r in enumerate(roots[1:], 1)]
    finite = []
    engines = {}
    for p in sorted(factor_integer(detM)):
        for idx, pr in enumerate(dedekind_primes(fld, p)):
            eng = ValuationEngine(fld, pr)
            nu = eng.valuation(fld.alpha)
            engines[(pr.p, pr.gen)] = eng
            if nu >= 1:
                finite.append(Place("finite", idx, prime=pr, nu=nu))
    return PlaceSystem(fld, e, expanding, arch, finite, engines)


def all_primes_above(ps: PlaceSystem, p: int) -> list[PrimeIdeal]:
    return dedekind_primes(ps.field, p)


# ---------------------------------------------------------------------------
# Representation-space points and the metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RepPoint:
    arch: tuple[Ball, ...]
    fin: tuple[tuple[FieldElem, float], ...]  # (partial sum, precision level m; INF = exact)


def phi_prime(x: FieldElem, ps: PlaceSystem, level: float = INF) -> RepPoint:
    arch = tuple(embed(x, pl.root) for pl in ps.arch)
    fin = tuple((x, level) for _ in ps.finite)
    return RepPoint(arch, fin)


def dK(x: RepPoint, y: RepPoint, ps: PlaceSystem) -> Ball:
    """max over contracting places; returned as a Ball enclosing the true distance."""
    if len(x.arch) != len(y.arch) or len(x.fin) != len(y.fin):
        raise ValueError("place mismatch")
    lo = 0.0
    hi = 0.0
    for a, b in zip(x.arch, y.arch):
        d = abs(a.value - b.value)
        r = a.radius + b.radius
        lo = max(lo, d - r)
        hi = max(hi, d + r)
    for pl, (xa, ma), (ya, mb) in zip(ps.finite, x.fin, y.fin):
        q = pl.norm_q
        diff = xa - ya
        cap = pl.nu * min(ma, mb)
        v = ps.valuation(diff, pl) if not diff.is_zero() else INF
        if v < cap:
            val = float(q) ** (-v)
            lo = max(lo, val)
            hi = max(hi, val)
        else:
            hi = max(hi, 0.0 if cap == INF else float(q) ** (-cap))
    lo = max(lo, 0.0)
    return Ball((lo + hi) / 2, (hi - lo) / 2)


def abs_at_place(x: FieldElem, pl: Place, ps: PlaceSystem) -> float:
    """Normalized |x|_v (squared modulus at complex places)."""
    if pl.kind == "finite":
        return float(pl.norm_q) ** (-ps.valuation(x, pl))
    b = embed(x, pl.root)
    m = abs(b.value)
    return m * m if pl.kind == "complex" else m


def product_formula_check(x: FieldElem, ps: PlaceSystem) -> float:
    """|prod_v |x|_v - 1| over all archimedean places and all finite places where x is not a unit."""
    if x.is_zero():
        raise ZeroDivisionError("product formula needs x != 0")
    fld = x.field
    logsum = 0.0
    for r in fld.roots:
        m = abs(embed(x, r).value)
        logsum += (2 if r.kind == "complex" else 1) * math.log(m)
    nrm = x.norm()
    d = x.denominator()
    primes = set(factor_integer(nrm.numerator)) | set(factor_integer(nrm.denominator)) | set(factor_integer(d))
    for p in sorted(primes):
        for pr in dedekind_primes(fld, p):
            v = ps.engine(pr).valuation(x)
            logsum -= v * math.log(pr.q)
    return abs(math.exp(logsum) - 1.0)


def product_alpha_residual(ps: PlaceSystem) -> float:
    """| prod_{v in M} |alpha|_v - 1/alpha |, the Haar scaling identity."""
    return ps.haar_residual()
