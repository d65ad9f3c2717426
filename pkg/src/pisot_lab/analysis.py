"""Special cylinder, Garsia bound, the either/or dichotomy, tau_2 and entry-series counts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import ArtifactError, CapExceeded
from .fractal import DiameterBounds, Embedder, path_vector
from .markov import Automaton, ParryChain, make_rng
from .nfield import EigenData, FieldElem, embed
from .places import PlaceSystem
from .subst import Substitution, abelianize, prefixes
from .tiling import LatticeVec

TAU2_STATE_CAP = 4_000_000


# ---------------------------------------------------------------------------
# Coefficient bound and the special cylinder
# ---------------------------------------------------------------------------

def v_basis_matrix(e: EigenData) -> list[list[int]]:
    """Integer B with v = B (1, alpha, ..., alpha^(n-1))."""
    B = e.v_matrix()
    if any(x.denominator != 1 for row in B for x in row):
        raise ArtifactError("v is not integral; apply scale_v first")
    return [[int(x) for x in row] for row in B]


def _tB(B, x):
    n = len(B)
    return [sum(B[i][j] * x[i] for i in range(n)) for j in range(n)]


def coefficient_bound(s: Substitution, e: EigenData, Z0: Sequence[LatticeVec]) -> int:
    """Bound on the coefficients of every polynomial part F.

    F = sum_k alpha^k <f(p_k) - f(q_k), v> - <w, v>; the coefficient of alpha^t
    collects the j-th power-basis coordinate of the (t-j)-th difference for
    every j, so the prefix contribution is sum_j max |(tB (f(p) - f(q)))_j|.
    """
    B = v_basis_matrix(e)
    n = s.n
    vecs = sorted({abelianize(w, n) for w in prefixes(s)})
    per_coord = [0] * n
    for x in vecs:
        for y in vecs:
            c = _tB(B, [a - b for a, b in zip(x, y)])
            per_coord = [max(m, abs(t)) for m, t in zip(per_coord, c)]
    wpart = 0
    for w in Z0:
        val = w.value(e)
        if val.denominator() != 1:
            raise ArtifactError("<w, v> not integral; apply scale_v first")
        wpart = max(wpart, max(abs(int(c)) for c in val.coeffs))
    return sum(per_coord) + wpart


def coefficient_bound_naive(s: Substitution, e: EigenData, Z0: Sequence[LatticeVec]) -> int:
    """max ||tB (f(p) - f(q))||_inf + max ||<w, v>||_inf (ignores overlapping shifts)."""
    B = v_basis_matrix(e)
    n = s.n
    vecs = sorted({abelianize(w, n) for w in prefixes(s)})
    pre = max(max(abs(t) for t in _tB(B, [a - b for a, b in zip(x, y)])) for x in vecs for y in vecs)
    wpart = max((max(abs(int(c)) for c in w.value(e).coeffs) for w in Z0), default=0)
    return pre + wpart


def prefix_moduli(s: Substitution, e: EigenData, ps: PlaceSystem) -> list[float]:
    """M_v = max_p |<f(p), v(alpha_v)>| per contracting archimedean place (rounded up)."""
    vecs = {abelianize(w, s.n) for w in prefixes(s)}
    out = []
    for pl in ps.arch:
        best = 0.0
        for x in vecs:
            b = embed(e.pair(x), pl.root)
            best = max(best, abs(b.value) + b.radius)
        out.append(best)
    return out


@dataclass(frozen=True)
class SpecialCylinder:
    I: int          # state id of (u0 : empty)
    u0: int
    L: int
    certified: bool  # True when L satisfies both inequalities with strict margin
    margins: tuple[float, ...] = ()

    @property
    def length(self) -> int:
        return self.L + 1


def special_state(aut: Automaton, u0: int) -> int:
    I = aut.index(u0, ())
    if not aut.A[I][I]:
        raise ArtifactError("(u0:empty) must transition to itself")
    return I


def cylinder_lhs(L: int, M: int, e: EigenData, ps: PlaceSystem, Mv: Sequence[float]) -> list[float]:
    """Upper bounds of the left sides of both inequalities at this L."""
    n = e.n
    alpha = mpmath.mpf(e.field.perron.center) - mpmath.mpf(e.field.perron.radius)
    out = []
    with mpmath.workprec(120):
        c = (mpmath.mpf(M) / (1 - 1 / alpha)) ** (mpmath.mpf(1) / (n - 1))
        for pl, mv in zip(ps.arch, Mv):
            r = mpmath.mpf(pl.root.modulus) + mpmath.mpf(pl.root.radius) + mpmath.mpf(1e-15)
            val = 2 * r ** (L - n + 3) * mpmath.mpf(mv) / (1 - r) * c + r
            out.append(float(val) * (1 + 1e-12))
        for pl in ps.finite:
            q = mpmath.mpf(pl.norm_q)
            val = 2 * q ** (-pl.nu * (L - n + 3)) + q ** (-pl.nu)
            out.append(float(val))
    return out


def special_cylinder(aut: Automaton, e: EigenData, ps: PlaceSystem, s: Substitution,
                     M: int, N: int, u0: int, L_cap: int = 10_000) -> SpecialCylinder:
    """Smallest L >= N+1 satisfying both displayed inequalities (upper bounds < 1)."""
    I = special_state(aut, u0)
    Mv = prefix_moduli(s, e, ps)
    for pl in ps.arch:
        if pl.root.modulus >= 1:
            raise ArtifactError("contracting place with |alpha_v| >= 1")
    for L in range(N + 1, L_cap):
        lhs = cylinder_lhs(L, M, e, ps, Mv)
        if all(x < 1 for x in lhs):
            return SpecialCylinder(I, u0, L, True, tuple(1 - x for x in lhs))
    raise ArtifactError("no admissible L below cap")


def short_cylinder(aut: Automaton, N: int, u0: int) -> SpecialCylinder:
    """L = N + 1, the least length the definition allows (no section-9 inequality)."""
    return SpecialCylinder(special_state(aut, u0), u0, N + 1, False)


# ---------------------------------------------------------------------------
# d-neighborhood radii
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeighborhoodRadii:
    d: int
    arch: tuple[float, ...]
    finite: tuple[float, ...]


def neighborhood_radii(d: int, M: int, e: EigenData, ps: PlaceSystem) -> NeighborhoodRadii:
    """R_v = |alpha_v|^(d+n-2) ((1 - 1/alpha)/M)^(1/(n-1)); finite q^-(d+n-2) nu."""
    n = e.n
    alpha = e.field.perron.center
    c = ((1 - 1 / alpha) / M) ** (1.0 / (n - 1))
    arch = tuple(pl.root.modulus ** (d + n - 2) * c for pl in ps.arch)
    fin = tuple(float(pl.norm_q) ** (-(d + n - 2) * pl.nu) for pl in ps.finite)
    return NeighborhoodRadii(d, arch, fin)


# ---------------------------------------------------------------------------
# Polynomial parts and Garsia
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyPart:
    F: FieldElem
    coeffs: tuple[int, ...]   # ascending, degree <= d + n - 2
    d: int
    w: LatticeVec


def polynomial_part(aut: Automaton, e: EigenData, path1: Sequence[int], path2: Sequence[int],
                    w: LatticeVec, d: int) -> PolyPart:
    if len(path1) < d or len(path2) < d:
        raise ArtifactError("paths shorter than d")
    n = e.n
    B = v_basis_matrix(e)
    wval = w.value(e)
    if wval.denominator() != 1:
        raise ArtifactError("<w, v> not integral after scaling")
    coeffs = [0] * (max(d, 1) + n - 1)
    for k in range(d):
        fp = abelianize(aut.states[path1[k]].prefix, n)
        fq = abelianize(aut.states[path2[k]].prefix, n)
        c = _tB(B, [a - b for a, b in zip(fp, fq)])
        for j, t in enumerate(c):
            coeffs[k + j] += t
    for j, t in enumerate(wval.coeffs):
        coeffs[j] -= int(t)
    F = e.field(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return PolyPart(F, tuple(coeffs), d, w)


def garsia_product(F: FieldElem, ps: PlaceSystem, prec: int = 120) -> mpmath.mpf:
    """prod over contracting places of |F|_v (squared modulus at complex places)."""
    with mpmath.workprec(prec):
        prod = mpmath.mpf(1)
        for pl in ps.arch:
            z = pl.root.mp_center
            val = mpmath.mpf(0)
            for c in reversed(F.coeffs):
                val = val * z + mpmath.mpf(c.numerator) / c.denominator
            m = abs(val)
            prod *= m * m if pl.kind == "complex" else m
        for pl in ps.finite:
            prod *= mpmath.mpf(pl.norm_q) ** (-ps.valuation(F, pl))
    return prod


def garsia_bound(e: EigenData, deg: int, M: int) -> float:
    alpha = e.field.perron.center
    return (1 - 1 / alpha) / (alpha ** deg * M)


def garsia_check(part: PolyPart | Sequence[int], e: EigenData, ps: PlaceSystem,
                 M: int | None = None, prec: int = 120) -> tuple[float, float, bool]:
    """(product, bound, product >= bound (1 - 1e-9)); needs F(alpha) != 0."""
    coeffs = part.coeffs if isinstance(part, PolyPart) else tuple(int(c) for c in part)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    F = e.field(list(coeffs))
    if F.is_zero():
        raise ArtifactError("Garsia bound needs F(alpha) != 0")
    deg = len(coeffs) - 1
    Mb = M if M is not None else max(abs(c) for c in coeffs)
    prod = garsia_product(F, ps, prec)
    bound = garsia_bound(e, deg, Mb)
    return float(prod), bound, bool(prod >= bound * (1 - 1e-9))


def garsia_fuzz(e: EigenData, ps: PlaceSystem, trials: int, seed: int,
                max_deg: int = 10, max_coef: int = 5, prec: int = 120) -> dict:
    rng = make_rng(seed)
    violations = 0
    worst = math.inf
    done = 0
    while done < trials:
        deg = int(rng.integers(0, max_deg + 1))
        c = rng.integers(-max_coef, max_coef + 1, deg + 1)
        if c[-1] == 0:
            c[-1] = int(rng.choice([-1, 1])) * int(rng.integers(1, max_coef + 1))
        if e.field(list(int(t) for t in c)).is_zero():
            continue
        prod, bound, ok = garsia_check(c, e, ps, prec=prec)
        worst = min(worst, prod / bound)
        violations += int(not ok)
        done += 1
    return {"trials": trials, "violations": violations, "min_ratio": worst, "seed": seed}


# ---------------------------------------------------------------------------
# Either-or dichotomy
# ---------------------------------------------------------------------------

def _reverse_kernel(chain: ParryChain) -> np.ndarray:
    p, P = chain.p_num, chain.P_num
    R = (P * p[:, None]).T / p[:, None]
    return R / R.sum(axis=1, keepdims=True)


def sample_visiting_path(chain: ParryChain, cyl: SpecialCylinder, d: int, tail: int,
                         rng: np.random.Generator) -> list[int]:
    """A path from the stationary measure conditioned on T^d(path) in C."""
    R = np.cumsum(_reverse_kernel(chain), axis=1)
    R[:, -1] = 1.0
    F = np.cumsum(chain.P_num, axis=1)
    F[:, -1] = 1.0
    head = [cyl.I]
    for _ in range(d):
        head.append(int(np.searchsorted(R[head[-1]], rng.random(), side="right")))
    path = head[::-1] + [cyl.I] * cyl.L
    for _ in range(tail):
        path.append(int(np.searchsorted(F[path[-1]], rng.random(), side="right")))
    return path


def covisits(path1, path2, cyl: SpecialCylinder, d: int) -> bool:
    return all(path1[k] == cyl.I and path2[k] == cyl.I for k in range(d, d + cyl.L + 1))


@dataclass
class EitherVerdict:
    verdict: str  # poly-vanishes | escapes-neighborhood | VIOLATION | indeterminate
    d: int
    w: LatticeVec
    F: tuple[int, ...]
    margins: tuple[float, ...] = ()
    case: str | None = None


def _psi_distance(aut, e, ps, emb: Embedder, bounds: DiameterBounds, path1, path2, w: LatticeVec):
    """Per contracting place: (lo, hi) for |Psi(path1) - Psi(path2) - gamma|_v (plain modulus)."""
    x1 = path_vector(aut, e.M, path1)
    x2 = path_vector(aut, e.M, path2)
    L1, L2 = len(path1), len(path2)
    wval = w.value(e)
    out = []
    for j, pl in enumerate(ps.arch):
        z1 = embed(e.pair(x1), pl.root)
        z2 = embed(e.pair(x2), pl.root)
        g = embed(wval, pl.root)
        diff = abs(complex(z1.value) - complex(z2.value) - complex(g.value))
        r = pl.root.modulus + pl.root.radius
        tail = bounds.M_v[j] * (r ** L1 + r ** L2) / (1 - r)
        slack = z1.radius + z2.radius + g.radius + tail
        out.append((max(0.0, diff - slack), diff + slack))
    diff_exact = e.pair([a - b for a, b in zip(x1, x2)]) - wval
    for pl in ps.finite:
        cap = pl.nu * min(L1, L2)
        q = float(pl.norm_q)
        if diff_exact.is_zero():
            out.append((0.0, q ** (-cap)))
            continue
        v = ps.valuation(diff_exact, pl)
        if v < cap:
            out.append((q ** (-v), q ** (-v)))
        else:
            out.append((0.0, q ** (-cap)))
    return out


def either_check(aut: Automaton, e: EigenData, ps: PlaceSystem, emb: Embedder, bounds: DiameterBounds,
                 path1, path2, w: LatticeVec, d: int, cyl: SpecialCylinder, M: int) -> EitherVerdict:
    if not covisits(path1, path2, cyl, d):
        raise ArtifactError("paths do not visit C x C at d")
    part = polynomial_part(aut, e, path1, path2, w, d)
    if max(abs(c) for c in part.coeffs) > M:
        raise ArtifactError("polynomial-part coefficient exceeds the certified bound")
    if part.F.is_zero():
        case = coincidence_from_vanishing(aut, e, path1, path2, w, d).case
        return EitherVerdict("poly-vanishes", d, w, part.coeffs, (), case)
    radii = neighborhood_radii(d + 1, M, e, ps)
    dist = _psi_distance(aut, e, ps, emb, bounds, path1, path2, w)
    R = list(radii.arch) + list(radii.finite)
    margins = tuple(lo - r for (lo, _), r in zip(dist, R))
    if any(lo >= r for (lo, _), r in zip(dist, R)):
        return EitherVerdict("escapes-neighborhood", d, w, part.coeffs, margins)
    if all(hi < r for (_, hi), r in zip(dist, R)):
        return EitherVerdict("VIOLATION", d, w, part.coeffs, margins)
    return EitherVerdict("indeterminate", d, w, part.coeffs, margins)


def either_corpus(chain: ParryChain, ps: PlaceSystem, emb: Embedder, bounds: DiameterBounds,
                  cyl: SpecialCylinder, M: int, Z0: Sequence[tuple[LatticeVec, int]], pairs: int,
                  seed: int, d_max: int = 12, tail: int = 40, shared_fraction: float = 0.1) -> dict:
    """Co-visiting pairs; w is the Z0 element of the right letter closest to Psi(w1) - Psi(w2)."""
    rng = make_rng(seed)
    aut, e = chain.aut, chain.eigen
    counts = {"poly-vanishes": 0, "escapes-neighborhood": 0, "VIOLATION": 0, "indeterminate": 0}
    cases: dict[str, int] = {}
    gam = {}
    for w, a in Z0:
        gam.setdefault(a, []).append((w, np.array([complex(embed(w.value(e), pl.root).value) for pl in ps.arch])))
    for _ in range(pairs):
        d = int(rng.integers(0, d_max + 1))
        p1 = sample_visiting_path(chain, cyl, d, tail, rng)
        if rng.random() < shared_fraction:
            p2 = p1[: d + cyl.L + 1] + sample_visiting_path(chain, cyl, 0, tail, rng)[cyl.L + 1:]
        else:
            p2 = sample_visiting_path(chain, cyl, d, tail, rng)
        b0 = aut.states[p2[0]].core
        x1 = path_vector(aut, e.M, p1)
        x2 = path_vector(aut, e.M, p2)
        target = emb.arch(np.array([x1]))[0] - emb.arch(np.array([x2]))[0]
        w = min(gam[b0], key=lambda t: (float(np.max(np.abs(t[1] - target))), t[0].level, t[0].base))[0]
        v = either_check(aut, e, ps, emb, bounds, p1, p2, w, d, cyl, M)
        counts[v.verdict] += 1
        if v.case:
            cases[v.case] = cases.get(v.case, 0) + 1
    return {"pairs": pairs, "seed": seed, "verdicts": counts, "cases": cases,
            "indeterminate_rate": counts["indeterminate"] / pairs}


# ---------------------------------------------------------------------------
# Vanishing polynomial part: cases I / II / III
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseVerdict:
    case: str       # "I" | "II" | "III" | "no-integral-w"
    a: int
    b: int
    w_zero: bool
    states_equal: bool
    violation: bool


def coincidence_from_vanishing(aut: Automaton, e: EigenData, path1, path2, w: LatticeVec,
                               d: int) -> CaseVerdict:
    """Classify an F = 0 instance by comparing the two expanded prefixes of sigma^d(u0)."""
    n = e.n
    M = e.M
    a = aut.states[path1[0]].core
    b = aut.states[path2[0]].core
    x1 = path_vector(aut, M, path1[:d])
    x2 = path_vector(aut, M, path2[:d])
    if w.level != 0:
        # (houteishiki) forces w into Z^n
        return CaseVerdict("no-integral-w", a, b, False, False, True)
    if tuple(x - y for x, y in zip(x1, x2)) != w.base:
        raise ArtifactError("F = 0 but the abelianized prefixes do not differ by w")
    len1, len2 = sum(x1), sum(x2)
    if len1 == len2:
        same = all(path1[i] == path2[i] for i in range(d))
        ok = same and a == b and not any(w.base)
        return CaseVerdict("I", a, b, not any(w.base), same, not ok)
    case = "II" if len1 < len2 else "III"
    return CaseVerdict(case, a, b, not any(w.base), False, True)


# ---------------------------------------------------------------------------
# tau_2
# ---------------------------------------------------------------------------

def tau2(path1: Sequence[int], path2: Sequence[int], cyl: SpecialCylinder, horizon: int) -> int | None:
    """Smallest k <= horizon with both paths equal to I on k..k+L."""
    need = horizon + cyl.L + 1
    if len(path1) < need or len(path2) < need:
        raise ArtifactError("paths too short for the horizon")
    r1 = r2 = 0
    for t in range(need):
        r1 = r1 + 1 if path1[t] == cyl.I else 0
        r2 = r2 + 1 if path2[t] == cyl.I else 0
        if r1 > cyl.L and r2 > cyl.L:
            return t - cyl.L
    return None


def _run_chain(chain: ParryChain, cyl: SpecialCylinder):
    """Single-path chain on (state, I-run length capped at L+1)."""
    D, L, I = chain.D, cyl.L, cyl.I
    labels = [(s, 0) for s in range(D) if s != I] + [(I, r) for r in range(1, L + 2)]
    idx = {lab: i for i, lab in enumerate(labels)}
    S = len(labels)
    T = np.zeros((S, S))
    for (s, r), i in idx.items():
        for t in range(D):
            pr = chain.P_num[s, t]
            if pr == 0:
                continue
            nr = min(r + 1, L + 1) if t == I else 0
            T[i, idx[(t, nr)]] += pr
    init = np.zeros(S)
    for s in range(D):
        init[idx[(s, 1 if s == I else 0)]] += chain.p_num[s]
    hit = np.array([1.0 if lab == (I, L + 1) else 0.0 for lab in labels])
    return T, init, hit, labels


def tau2_distribution(chain: ParryChain, cyl: SpecialCylinder, k_max: int) -> dict:
    """P(tau2 = k) for k <= k_max and the tail, by DP on the product of run chains."""
    T, init, hit, _ = _run_chain(chain, cyl)
    S = len(init)
    if S * S > TAU2_STATE_CAP:
        raise CapExceeded("product state space above cap")
    L = cyl.L
    alive = np.outer(init, init)
    H = np.outer(hit, hit).astype(bool)
    pmf = []
    # times 0..L-1 cannot complete a run of L+1
    for t in range(k_max + L + 1):
        if t >= L:
            m = float(alive[H].sum())
            pmf.append(m)
            alive = np.where(H, 0.0, alive)
        alive = T.T @ alive @ T
    tail = float(alive.sum())
    return {"pmf": pmf, "tail": tail, "total": math.fsum(pmf) + tail}


def tau2_distribution_exact(chain: ParryChain, cyl: SpecialCylinder, k_max: int) -> list[FieldElem]:
    """Exact version in Q(alpha) (small k_max): entries then tail, summing to 1."""
    fld = chain.eigen.field
    D, L, I = chain.D, cyl.L, cyl.I
    labels = [(s, 0) for s in range(D) if s != I] + [(I, r) for r in range(1, L + 2)]
    idx = {lab: i for i, lab in enumerate(labels)}
    zero = fld.zero()
    state: dict[tuple[int, int], FieldElem] = {}
    for s1 in range(D):
        for s2 in range(D):
            key = (idx[(s1, int(s1 == I))], idx[(s2, int(s2 == I))])
            state[key] = state.get(key, zero) + chain.p[s1] * chain.p[s2]
    out = []
    full = idx[(I, L + 1)]
    for t in range(k_max + L + 1):
        if t >= L:
            out.append(state.pop((full, full), zero))
        nxt: dict[tuple[int, int], FieldElem] = {}
        for (i1, i2), m in state.items():
            (s1, r1), (s2, r2) = labels[i1], labels[i2]
            for t1 in range(D):
                if not chain.aut.A[s1][t1]:
                    continue
                n1 = idx[(t1, min(r1 + 1, L + 1) if t1 == I else 0)]
                for t2 in range(D):
                    if not chain.aut.A[s2][t2]:
                        continue
                    n2 = idx[(t2, min(r2 + 1, L + 1) if t2 == I else 0)]
                    key = (n1, n2)
                    nxt[key] = nxt.get(key, zero) + m * chain.P[s1][t1] * chain.P[s2][t2]
        state = nxt
    out.append(sum(state.values(), zero))
    return out


def tau2_empirical(chain: ParryChain, cyl: SpecialCylinder, pairs: int, horizon: int, seed: int) -> dict:
    """Simulate ``pairs`` independent stationary pairs in parallel."""
    rng = make_rng(seed)
    cumP = np.cumsum(chain.P_num, axis=1)
    cumP[:, -1] = 1.0
    c0 = np.cumsum(chain.p_num)
    c0[-1] = 1.0
    L, I = cyl.L, cyl.I
    s = np.searchsorted(c0, rng.random((2, pairs)), side="right")
    run = (s == I).astype(np.int64)
    result = np.full(pairs, -1, dtype=np.int64)
    active = np.arange(pairs)
    for t in range(horizon + L + 1):
        done = (run[0, active] > L) & (run[1, active] > L)
        result[active[done]] = t - L
        active = active[~done]
        if len(active) == 0 or t == horizon + L:
            break
        u = rng.random((2, len(active)))
        cur = s[:, active]
        nxt = np.empty_like(cur)
        for k in range(2):
            nxt[k] = (u[k][:, None] >= cumP[cur[k]]).sum(axis=1)
        s[:, active] = nxt
        run[:, active] = np.where(nxt == I, run[:, active] + 1, 0)
    found = result >= 0
    hist = np.bincount(result[found], minlength=horizon + 1)[: horizon + 1]
    return {"pairs": pairs, "seed": seed, "horizon": horizon, "found": int(found.sum()),
            "not_found": int((~found).sum()), "counts": hist.tolist()}


def total_variation(pmf: Sequence[float], tail: float, counts: Sequence[int], pairs: int) -> float:
    k = len(pmf)
    emp = np.zeros(k)
    emp[: min(k, len(counts))] = np.asarray(counts[:k], dtype=float) / pairs
    emp_tail = 1.0 - emp.sum()
    return 0.5 * (float(np.abs(emp - np.asarray(pmf)).sum()) + abs(emp_tail - tail))


def expected_tv_noise(pmf: Sequence[float], pairs: int) -> float:
    """Approximate E[TV] between an exact pmf and its n-sample empirical estimate."""
    p = np.asarray(pmf)
    return float(0.5 * np.sum(np.sqrt(2 * p * (1 - p) / (math.pi * pairs))))


# ---------------------------------------------------------------------------
# Entry series, b(N_k) and s_j
# ---------------------------------------------------------------------------

@dataclass
class EntrySeries:
    N0: int
    times: list[int]   # N_1 < N_2 < ...


def cylinder_starts(path: Sequence[int], cyl: SpecialCylinder) -> np.ndarray:
    """Boolean array: True at i when path[i..i+L] are all I."""
    x = np.asarray(path) == cyl.I
    n = len(x) - cyl.L
    if n <= 0:
        return np.zeros(0, dtype=bool)
    ok = np.ones(n, dtype=bool)
    for k in range(cyl.L + 1):
        ok &= x[k:k + n]
    return ok


def entry_series(path: Sequence[int], cyl: SpecialCylinder, N: int, count: int) -> EntrySeries:
    """N0: first index with no visit to C on N0-(N+1)..N0; then the next ``count`` visits."""
    starts = cylinder_starts(path, cyl)
    N0 = None
    for i in range(N + 1, len(starts)):
        if not starts[i - (N + 1): i + 1].any():
            N0 = i
            break
    if N0 is None:
        raise ArtifactError("no admissible N0 in the path")
    times = [int(i) for i in np.nonzero(starts[N0 + 1:])[0] + N0 + 1][:count]
    if len(times) < count:
        raise ArtifactError(f"only {len(times)} entries after N0 within the path")
    return EntrySeries(N0, times)


def aII_sequence(aut: Automaton, I: int, kmax: int) -> list[int]:
    """a^(k)_II for k = 0..kmax, exact."""
    D = aut.D
    col = [int(j == I) for j in range(D)]
    out = [1]
    for _ in range(kmax):
        col = [sum(col[j] for j in range(D) if aut.A[i][j]) for i in range(D)]
        out.append(col[I])
    return out


def b_recursion(series: EntrySeries, cyl: SpecialCylinder, aII: Sequence[int]) -> list[int]:
    N = [series.N0] + series.times
    L = cyl.L
    b = [1]
    for k in range(1, len(N)):
        val = aII[N[k] - N[0]]
        for i in range(k):
            gap = N[k] - N[i]
            val -= b[i] if gap <= L else aII[gap - L] * b[i]
        b.append(val)
    return b


def b_direct(aut: Automaton, series: EntrySeries, cyl: SpecialCylinder) -> list[int]:
    """Count paths from I at N0 whose first visit to C along the series is at N_k."""
    N = [series.N0] + series.times
    L, I, D = cyl.L, cyl.I, aut.D
    succ = [[j for j in range(D) if aut.A[i][j]] for i in range(D)]
    checks = {n + L: k for k, n in enumerate(N)}
    state: dict[tuple[int, int], int] = {(I, 1): 1}
    out = [0] * len(N)
    t = N[0]
    end = N[-1] + L
    while True:
        if t in checks:
            k = checks[t]
            hit = state.pop((I, L + 1), 0)
            out[k] = hit
        if t == end:
            break
        nxt: dict[tuple[int, int], int] = {}
        for (s, r), c in state.items():
            for j in succ[s]:
                key = (j, min(r + 1, L + 1) if j == I else 0)
                nxt[key] = nxt.get(key, 0) + c
        state = nxt
        t += 1
    return out


def s_series(series: EntrySeries, b: Sequence[int], cyl: SpecialCylinder, alpha_mp) -> list[float]:
    """s_j / m(<z_0 .. z_N0>) = sum_{k<=j} b(N_k) alpha^-(N_k - N0 + L)."""
    N = [series.N0] + series.times
    out = []
    with mpmath.workprec(200):
        acc = mpmath.mpf(0)
        for k, bk in enumerate(b):
            acc += mpmath.mpf(bk) / alpha_mp ** (N[k] - N[0] + cyl.L)
            out.append(float(acc))
    return out


def s_series_probability(chain: ParryChain, series: EntrySeries, cyl: SpecialCylinder) -> list[float]:
    """Float DP of the conditional first-entry probabilities given z_N0 = I (cross-check)."""
    N = [series.N0] + series.times
    L, I = cyl.L, cyl.I
    T, _, _, labels = _run_chain(chain, cyl)
    idx = {lab: i for i, lab in enumerate(labels)}
    vec = np.zeros(len(labels))
    vec[idx[(I, 1)]] = 1.0
    full = idx[(I, L + 1)]
    checks = {n + L: k for k, n in enumerate(N)}
    out = [0.0] * len(N)
    t = N[0]
    while True:
        if t in checks:
            out[checks[t]] = float(vec[full])
            vec[full] = 0.0
        if t == N[-1] + L:
            break
        vec = vec @ T
        t += 1
    return list(np.cumsum(out))


@dataclass
class SReport:
    b: list[int]
    b_direct_agree: bool
    s: list[float]
    monotone: bool
    final_ratio_error: float
    probability_crosscheck: float
    series: EntrySeries = field(repr=False, default=None)


def b_counts_and_s(chain: ParryChain, series: EntrySeries, cyl: SpecialCylinder,
                   direct_upto: int | None = 12) -> SReport:
    aut = chain.aut
    N = [series.N0] + series.times
    aII = aII_sequence(aut, cyl.I, N[-1] - N[0] + 1)
    b = b_recursion(series, cyl, aII)
    cut = len(N) if direct_upto is None else min(len(N), direct_upto + 1)
    short = EntrySeries(series.N0, series.times[: cut - 1])
    bd = b_direct(aut, short, cyl)
    agree = bd == b[:cut]
    if not agree:
        raise ArtifactError("b(N_k): recursion and direct count disagree")
    alpha = chain.eigen.field.perron.mp_center
    s = s_series(series, b, cyl, alpha)
    mono = all(y >= x for x, y in zip(s, s[1:]))
    prob = s_series_probability(chain, series, cyl)
    cross = float(max(abs(a - c) for a, c in zip(s, prob)))
    return SReport(b, agree, s, mono, abs(s[-1] - 1.0), cross, series)
