"""Translation set Gamma, patches, covering degree and the empirical tiling check."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ArtifactError, CapExceeded
from .fractal import CloudBuilder, Embedder, ProjectionSpec, project
from .markov import make_rng
from .nfield import EigenData, FieldElem, embed, exact_sign
from .places import PlaceSystem, vp_int
from .subst import Substitution, abelianize, iterate_word

ITEM_CAP = 200_000
CANDIDATE_CAP = 5_000_000


# ---------------------------------------------------------------------------
# Lattice vectors w = M^-level base
# ---------------------------------------------------------------------------

def _inv_matrix(M) -> list[list[Fraction]]:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


@dataclass(frozen=True)
class LatticeVec:
    base: tuple[int, ...]
    level: int = 0

    def value(self, e: EigenData) -> FieldElem:
        val = e.pair(self.base)
        if self.level:
            val = val * (e.field.alpha.inv() ** self.level)
        return val

    def minus_letter(self, a: int, M) -> "LatticeVec":
        """w - e_a at the same level: base - M^level e_a."""
        n = len(self.base)
        col = [int(i == a - 1) for i in range(n)]
        for _ in range(self.level):
            col = [sum(M[i][j] * col[j] for j in range(n)) for i in range(n)]
        return LatticeVec(tuple(b - c for b, c in zip(self.base, col)), self.level)

    def rational(self, Minv) -> tuple[Fraction, ...]:
        x = [Fraction(b) for b in self.base]
        n = len(x)
        for _ in range(self.level):
            x = [sum(Minv[i][j] * x[j] for j in range(n)) for i in range(n)]
        return tuple(x)


def canonical(w: LatticeVec, M, Minv) -> LatticeVec:
    """Lowest level representing the same vector of Z = U M^-i Z^n."""
    base, level = list(w.base), w.level
    n = len(base)
    while level > 0:
        y = [sum(Minv[i][j] * base[j] for j in range(n)) for i in range(n)]
        if any(t.denominator != 1 for t in y):
            break
        base = [int(t) for t in y]
        level -= 1
    return LatticeVec(tuple(base), level)


@dataclass(frozen=True)
class PatchItem:
    w: LatticeVec
    letter: int
    gamma: tuple[complex, ...]   # embedded <w, v> at each contracting archimedean place


@dataclass
class Patch:
    items: list[PatchItem]
    region: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.items)

    def by_letter(self, a: int) -> list[PatchItem]:
        return [it for it in self.items if it.letter == a]

    def to_json_obj(self) -> list[dict]:
        out = []
        for it in self.items:
            g = []
            for z in it.gamma:
                g += [round(z.real, 12), round(z.imag, 12)]
            out.append({"base": list(it.w.base), "level": it.w.level, "letter": it.letter, "gamma": g})
        return out


def in_gamma(w: LatticeVec, a: int, e: EigenData) -> bool:
    """Exact predicate <w, v> >= 0 and <w - e_a, v> < 0 (Perron embedding order)."""
    if exact_sign(w.value(e)) < 0:
        return False
    return exact_sign(w.minus_letter(a, e.M).value(e)) < 0


# ---------------------------------------------------------------------------
# Cut-and-project enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Ball of radius ``radius`` around ``center`` at every contracting archimedean place,
    and |.|_v <= fin_radius at every finite place."""

    center: tuple[complex, ...]
    radius: float
    fin_radius: float = 1.0


class GammaEnumerator:
    def __init__(self, e: EigenData, ps: PlaceSystem, emb: Embedder):
        self.e, self.ps, self.emb = e, ps, emb
        self.M = e.M
        self.Minv = _inv_matrix(e.M)
        n = e.n
        perron = e.field.perron
        self.v1 = np.array([float(embed(vi, perron).value) for vi in e.v])
        self.alpha = perron.center
        # real coordinate matrix V: rows = expanding, then re/im of contracting places
        rows = [self.v1]
        self.place_rows = []
        for j, pl in enumerate(ps.arch):
            col = emb.v_arch[:, j]
            if pl.kind == "complex":
                self.place_rows.append((len(rows), len(rows) + 1))
                rows += [col.real, col.imag]
            else:
                self.place_rows.append((len(rows), None))
                rows.append(col.real)
        self.V = np.array(rows)
        if self.V.shape != (n, n):
            raise ArtifactError("internal: coordinate matrix not square")
        self.Vinv = np.linalg.inv(self.V)

    def enumerate(self, region: Region, letters: Sequence[int] | None = None,
                  i_max: int = 0) -> Patch:
        e = self.e
        n = e.n
        letters = list(letters) if letters else list(range(1, n + 1))
        seen: set[tuple] = set()
        items: list[PatchItem] = []
        vmax = float(max(self.v1[a - 1] for a in letters))
        for level in range(i_max + 1):
            lo = [0.0]
            hi = [vmax * self.alpha ** level]
            for j, pl in enumerate(self.ps.arch):
                scale = pl.root.modulus ** level
                c = region.center[j] * pl.root.center ** level
                r = region.radius * scale
                r0, r1 = self.place_rows[j]
                cz = complex(c)
                lo.append(cz.real - r)
                hi.append(cz.real + r)
                if r1 is not None:
                    lo.append(cz.imag - r)
                    hi.append(cz.imag + r)
            lo_a, hi_a = np.array(lo), np.array(hi)
            # integer box for base from the inverse map
            P, N = np.clip(self.Vinv, 0, None), np.clip(self.Vinv, None, 0)
            bmin = np.floor(P @ lo_a + N @ hi_a - 1e-9).astype(np.int64)
            bmax = np.ceil(P @ hi_a + N @ lo_a + 1e-9).astype(np.int64)
            jstar = int(np.argmax(np.abs(self.v1)))
            others = [k for k in range(n) if k != jstar]
            total = 1
            for k in others:
                total *= int(bmax[k] - bmin[k] + 1)
            if total > CANDIDATE_CAP:
                raise CapExceeded(f"enumeration box too large ({total} candidates)")
            grids = np.meshgrid(*[np.arange(bmin[k], bmax[k] + 1) for k in others], indexing="ij")
            rest = np.column_stack([g.ravel() for g in grids]) if others else np.zeros((1, 0), dtype=np.int64)
            partial = rest @ self.v1[others] if others else np.zeros(1)
            vj = self.v1[jstar]
            # 0 <= partial + vj * t < hi[0]
            t_a = (lo_a[0] - partial) / vj
            t_b = (hi_a[0] - partial) / vj
            tmin = np.floor(np.minimum(t_a, t_b) - 1e-9).astype(np.int64)
            tmax = np.ceil(np.maximum(t_a, t_b) + 1e-9).astype(np.int64)
            counts = np.maximum(tmax - tmin + 1, 0)
            if int(counts.sum()) > CANDIDATE_CAP:
                raise CapExceeded(f"enumeration too large ({int(counts.sum())} candidates)")
            if not counts.any():
                continue
            idx = np.repeat(np.arange(len(rest)), counts)
            offs = np.arange(len(idx)) - np.repeat(np.cumsum(counts) - counts, counts)
            C = np.zeros((len(idx), n), dtype=np.int64)
            C[:, others] = rest[idx]
            C[:, jstar] = tmin[idx] + offs
            C = C[self._padic_prefilter(C, level, region)]
            y = C.astype(float) @ self.V.T
            keep = (y[:, 0] >= -1e-9) & (y[:, 0] < hi_a[0] + 1e-9)
            Z = self.emb.arch(C)
            for j, pl in enumerate(self.ps.arch):
                scaled = Z[:, j] / (pl.root.center ** level)
                keep &= np.abs(scaled - region.center[j]) <= region.radius + 1e-9
            C = C[keep]
            C = C[self._padic_prefilter(C, level, region)]
            if len(C) > ITEM_CAP:
                raise CapExceeded(f"patch exceeds item cap {ITEM_CAP}")
            for base in C:
                w = canonical(LatticeVec(tuple(int(b) for b in base), level), self.M, self.Minv)
                if w.level != level:
                    continue  # produced at a lower level already
                val = w.value(e)
                if not self._finite_ok(val, region):
                    continue
                for a in letters:
                    key = (w.base, w.level, a)
                    if key in seen:
                        continue
                    if in_gamma(w, a, e):
                        seen.add(key)
                        gam = tuple(complex(embed(val, pl.root).value) for pl in self.ps.arch)
                        items.append(PatchItem(w, a, gam))
        items.sort(key=lambda it: (it.letter, it.w.level, it.w.base))
        return Patch(items, {"center": [[c.real, c.imag] for c in map(complex, region.center)],
                             "radius": region.radius, "i_max": i_max})

    def _padic_prefilter(self, C: np.ndarray, level: int, region: Region) -> np.ndarray:
        """Congruence test v_P(<base, v>) >= nu*level - log_q(fin_radius) at degree-one primes."""
        keep = np.ones(len(C), dtype=bool)
        if level == 0 or not len(C):
            return keep
        for pl, data in zip(self.ps.finite, self.emb.padic):
            if data is None:
                continue
            p, prec, vals, den = data
            need = math.ceil(pl.nu * level - math.log(region.fin_radius) / math.log(pl.norm_q) - 1e-12)
            k = need + vp_int(den, p)
            if k <= 0:
                continue
            if k > prec or p ** k > 2**31:
                continue  # exact check below still applies
            mod = p ** k
            small = np.array([v % mod for v in vals], dtype=np.int64)
            acc = np.zeros(len(C), dtype=np.int64)
            for j in range(C.shape[1]):
                acc = (acc + (C[:, j] % mod) * small[j]) % mod
            keep &= acc == 0
        return keep

    def _finite_ok(self, val: FieldElem, region: Region) -> bool:
        for pl in self.ps.finite:
            if val.is_zero():
                continue
            v = self.ps.valuation(val, pl)
            if float(pl.norm_q) ** (-v) > region.fin_radius * (1 + 1e-12):
                return False
        return True


def default_levels(ps: PlaceSystem) -> int:
    return 0 if not ps.finite else 6


def translation_patch(en: GammaEnumerator, center, radius: float, letters=None,
                      i_max: int | None = None, fin_radius: float = 1.0) -> Patch:
    if i_max is None:
        i_max = default_levels(en.ps)
    if not hasattr(center, "__len__"):
        center = tuple(complex(center) for _ in en.ps.arch)
    return en.enumerate(Region(tuple(complex(c) for c in center), radius, fin_radius), letters, i_max)


def brute_force_patch(e: EigenData, ps: PlaceSystem, emb: Embedder, center, radius: float,
                      box: int, letters=None) -> set[tuple]:
    """Oracle for level 0: scan every base with |base|_inf <= box."""
    n = e.n
    letters = letters or list(range(1, n + 1))
    out = set()
    rng = range(-box, box + 1)
    pts = np.array(list(itertools.product(rng, repeat=n)), dtype=np.int64)
    Z = emb.arch(pts)
    close = np.all(np.abs(Z - np.array(center)) <= radius + 1e-9, axis=1) if Z.shape[1] else np.ones(len(pts), bool)
    for base in pts[close]:
        w = LatticeVec(tuple(int(b) for b in base), 0)
        for a in letters:
            if in_gamma(w, a, e):
                out.add((w.base, a))
    return out


# ---------------------------------------------------------------------------
# Z0 and scaling
# ---------------------------------------------------------------------------

def bounding_radius(builder: CloudBuilder) -> float:
    """R with R_sigma inside the ball of radius R at every archimedean place (0 lies in R_sigma)."""
    return max(builder.bounds.arch) if builder.bounds.arch else 1.0


def candidate_Z0(en: GammaEnumerator, builder: CloudBuilder, i_max: int | None = None) -> list[tuple[LatticeVec, int]]:
    """All (w, a) in Gamma with gamma in the ball of radius 2R (finite places: |.|_v <= 2)."""
    R = bounding_radius(builder)
    patch = translation_patch(en, 0, 2 * R, i_max=i_max, fin_radius=2.0)
    return [(it.w, it.letter) for it in patch.items]


# ---------------------------------------------------------------------------
# Covering degree
# ---------------------------------------------------------------------------

def _planar(z: np.ndarray, kinds: Sequence[str]) -> np.ndarray:
    cols = []
    for j, k in enumerate(kinds):
        cols.append(z[:, j].real)
        if k == "complex":
            cols.append(z[:, j].imag)
    return np.column_stack(cols)


class CoverageEngine:
    """Counts tiles cloud_m(a) + gamma within delta_m of a query point."""

    def __init__(self, builder: CloudBuilder, emb: Embedder, patch: Patch, m: int):
        ps = builder.ps
        if ps.finite:
            raise ArtifactError("covering statistics are implemented for unimodular substitutions")
        self.kinds = [pl.kind for pl in ps.arch]
        if len(self.kinds) > 1 and "complex" in self.kinds:
            raise ArtifactError("covering statistics need one complex place or only real places")
        self.pnorm = 2 if self.kinds == ["complex"] else np.inf
        self.m = m
        self.delta = builder.bounds.delta_max(m)
        self.trees = {}
        self.reach = {}
        for a in range(1, builder.s.n + 1):
            c = builder.cloud(a, m)
            pts = _planar(emb.arch(c.X), self.kinds)
            self.trees[a] = cKDTree(pts)
            self.reach[a] = float(np.max(np.linalg.norm(pts, ord=self.pnorm, axis=1))) if len(pts) else 0.0
        self.patch = patch
        self.gam = _planar(np.array([it.gamma for it in patch.items], dtype=complex).reshape(len(patch.items), -1),
                           self.kinds) if len(patch.items) else np.zeros((0, len(self.kinds)))
        self.letters = np.array([it.letter for it in patch.items])
        self.gtree = cKDTree(self.gam) if len(self.gam) else None

    def distances(self, X: np.ndarray) -> list[tuple[int, float]]:
        """(item index, distance from X to cloud + gamma) for items that could be within delta."""
        if self.gtree is None:
            return []
        reach = max(self.reach.values()) + self.delta
        idx = self.gtree.query_ball_point(X, reach, p=self.pnorm)
        out = []
        for i in sorted(idx):
            a = int(self.letters[i])
            d = self.trees[a].query(X - self.gam[i], p=self.pnorm)[0]
            out.append((i, float(d)))
        return out

    def count(self, X: np.ndarray) -> tuple[int, list[tuple[int, float]]]:
        ds = self.distances(X)
        return sum(1 for _, d in ds if d <= self.delta), ds


def covering_degree(engine: CoverageEngine, X) -> dict:
    X = np.asarray(X, dtype=float)
    c, ds = engine.count(X)
    near = sorted(ds, key=lambda t: t[1])[:6]
    return {"count": c, "delta": engine.delta,
            "nearest": [{"item": i, "distance": d} for i, d in near]}


def sample_interior(builder: CloudBuilder, emb: Embedder, m: int, samples: int,
                    rng: np.random.Generator, resolution: int = 400) -> np.ndarray:
    """Uniform points from the pixels occupied by the depth-m picture of R_sigma."""
    clouds = builder.union(m)
    kinds = [pl.kind for pl in builder.ps.arch]
    pts = np.vstack([_planar(emb.arch(c.X), kinds) for c in clouds])
    if pts.shape[1] == 1:
        lo, hi = pts.min(), pts.max()
        cell = (hi - lo) / resolution
        occ = np.unique(np.floor((pts[:, 0] - lo) / cell).astype(np.int64))
        pick = occ[rng.integers(0, len(occ), samples)]
        return (lo + (pick + rng.random(samples)) * cell).reshape(-1, 1)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    cell = float(max(hi - lo)) / resolution
    ij = np.floor((pts[:, :2] - lo[:2]) / cell).astype(np.int64)
    occ = np.unique(ij, axis=0)
    pick = occ[rng.integers(0, len(occ), samples)]
    xy = lo[:2] + (pick + rng.random((samples, 2))) * cell
    if pts.shape[1] > 2:
        raise ArtifactError("interior sampling supports at most two real dimensions")
    return xy


def tiling_statistics(builder: CloudBuilder, emb: Embedder, en: GammaEnumerator, samples: int,
                      m: int, seed: int, stability: Sequence[int] = (2, 4)) -> dict:
    """Covering-count histogram at depth m; non-1 samples re-checked at m+2, m+4."""
    if builder.ps.finite:
        raise ArtifactError("covering statistics are implemented for unimodular substitutions")
    rng = make_rng(seed)
    X = sample_interior(builder, emb, m, samples, rng)
    R = bounding_radius(builder)
    delta0 = builder.bounds.delta_max(m)
    kinds = [pl.kind for pl in builder.ps.arch]
    if kinds == ["complex"]:
        center = complex(float(X[:, 0].mean()), float(X[:, 1].mean()))
        spread = float(np.max(np.abs(X[:, 0] + 1j * X[:, 1] - center)))
    else:
        center = float(X[:, 0].mean())
        spread = float(np.max(np.abs(X[:, 0] - center)))
    radius = spread + R + delta0 + 1e-6
    patch = translation_patch(en, center, radius)
    engines = {m: CoverageEngine(builder, emb, patch, m)}
    for dm in stability:
        engines[m + dm] = CoverageEngine(builder, emb, patch, m + dm)
    hist: dict[int, int] = {}
    unstable = 0
    stable_non1 = 0
    records = []
    for x in X:
        c, _ = engines[m].count(x)
        hist[c] = hist.get(c, 0) + 1
        if c != 1:
            later = [engines[m + dm].count(x)[0] for dm in stability]
            changes = any(k != c for k in later)
            unstable += int(changes)
            stable_non1 += int(not changes)
            records.append({"point": [round(float(t), 12) for t in x], "counts": [c] + later,
                            "unstable": changes})
    return {"depth": m, "samples": samples, "seed": seed, "delta": delta0,
            "histogram": {str(k): hist[k] for k in sorted(hist)},
            "fraction_one": hist.get(1, 0) / samples,
            "non_one": samples - hist.get(1, 0),
            "flagged_unstable": unstable, "stable_non_one": stable_non1,
            "patch_items": len(patch), "patch_radius": radius,
            "exceptions": records[:50]}


# ---------------------------------------------------------------------------
# Delone radii
# ---------------------------------------------------------------------------

def delone_radii(patch: Patch, kinds: Sequence[str], probe: int = 40,
                 interior: float = 0.5) -> tuple[float, float]:
    """(r1 covering-radius estimate, r2 packing radius) from a patch of one Gamma_a."""
    if len(patch.items) < 2:
        raise ArtifactError("Delone radii need at least two items")
    pts = _planar(np.array([it.gamma for it in patch.items], dtype=complex).reshape(len(patch.items), -1), kinds)
    pnorm = 2 if list(kinds) == ["complex"] else np.inf
    tree = cKDTree(pts)
    dd, _ = tree.query(pts, k=2, p=pnorm)
    r2 = float(dd[:, 1].min()) / 2
    center = np.array([patch.region["center"][0][0], patch.region["center"][0][1]][: pts.shape[1]])
    if pts.shape[1] == 1:
        center = np.array([patch.region["center"][0][0]])
    rad = patch.region["radius"] * interior
    axes = [np.linspace(c - rad, c + rad, probe) for c in center]
    grid = np.column_stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")])
    inside = np.linalg.norm(grid - center, ord=pnorm, axis=1) <= rad
    r1 = float(tree.query(grid[inside], p=pnorm)[0].max())
    return r1, r2


# ---------------------------------------------------------------------------
# Preimage patches and quasi-periodicity
# ---------------------------------------------------------------------------

def preimage_patch(s: Substitution, e: EigenData, ps: PlaceSystem, a: int, k: int) -> tuple[Patch, list]:
    """Items (M^-k f(p), b) over sigma^k(b) = p a s', plus the prefixes that produced them."""
    M = e.M
    Minv = _inv_matrix(M)
    items, prefs = [], []
    for b in range(1, s.n + 1):
        img = iterate_word(s, (b,), k)
        counts = [0] * s.n
        for i, x in enumerate(img):
            if x == a:
                fp = tuple(counts)
                w = canonical(LatticeVec(fp, k), M, Minv)
                val = w.value(e)
                gam = tuple(complex(embed(val, pl.root).value) for pl in ps.arch)
                items.append(PatchItem(w, b, gam))
                prefs.append(img[:i])
            counts[x - 1] += 1
    return Patch(items, {"preimage_of": a, "k": k}), prefs


@dataclass(frozen=True)
class QuasiWitness:
    k: int
    target: int
    translation: LatticeVec
    prefixes: dict  # needle letter -> prefix word


def _vec_add(u: LatticeVec, v: LatticeVec, M, Minv) -> LatticeVec:
    lvl = max(u.level, v.level)
    n = len(u.base)

    def lift(w):
        b = list(w.base)
        for _ in range(lvl - w.level):
            b = [sum(M[i][j] * b[j] for j in range(n)) for i in range(n)]
        return b
    return canonical(LatticeVec(tuple(x + y for x, y in zip(lift(u), lift(v))), lvl), M, Minv)


def _vec_neg(u: LatticeVec) -> LatticeVec:
    return LatticeVec(tuple(-x for x in u.base), u.level)


def quasi_periodic_search(s: Substitution, e: EigenData, ps: PlaceSystem,
                          needle: Sequence[tuple[LatticeVec, int]], k_max: int) -> QuasiWitness | None:
    """Smallest k <= k_max and a letter a whose preimage patch contains needle + t."""
    M = e.M
    Minv = _inv_matrix(M)
    needle = [(canonical(w, M, Minv), a) for w, a in needle]
    w0, a0 = needle[0]
    for k in range(1, k_max + 1):
        for target in range(1, s.n + 1):
            patch, prefs = preimage_patch(s, e, ps, target, k)
            index = {(it.w, it.letter): i for i, it in enumerate(patch.items)}
            for i, it in enumerate(patch.items):
                if it.letter != a0:
                    continue
                t = _vec_add(it.w, _vec_neg(w0), M, Minv)
                found = {a0: prefs[i]}
                ok = True
                for w, a in needle[1:]:
                    j = index.get((_vec_add(w, t, M, Minv), a))
                    if j is None:
                        ok = False
                        break
                    found[a] = prefs[j]
                if ok:
                    return QuasiWitness(k, target, t, found)
    return None
