"""Rauzy fractal subtiles as depth-m point clouds, set equation, renders.

A path (a_1:p_0), (a_2:p_1), ... contributes the digit series
sum_i <f(p_i), v> alpha^i.  Truncated at depth m this equals <x, v> with
x = sum_k M^k f(p_k) = f(sigma^{m-1}(p_{m-1}) ... p_0), an integer vector;
since w -> <w, v> is injective on Z^n, clouds are multisets keyed by x.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ArtifactError, CapExceeded
from .markov import Automaton, ParryChain, make_rng, sample_paths
from .nfield import EigenData, FieldElem, embed
from .places import Place, PlaceSystem, RepPoint, dK, hensel_root, phi_prime
from .subst import Substitution, abelianize, iterate_word

DEPTH_CAP = 20
POINT_CAP = 4_000_000


# ---------------------------------------------------------------------------
# Embedding helpers
# ---------------------------------------------------------------------------

@dataclass
class Embedder:
    """Numeric images of integer vectors x under x -> <x, v> at each contracting place."""

    eigen: EigenData
    places: PlaceSystem
    v_arch: np.ndarray = field(init=False)      # (n, P) complex
    v_rad: np.ndarray = field(init=False)       # (n, P) error radii
    padic: list = field(init=False)

    def __post_init__(self):
        cols, rads = [], []
        for pl in self.places.arch:
            balls = [embed(vi, pl.root) for vi in self.eigen.v]
            cols.append([complex(b.value) for b in balls])
            rads.append([b.radius for b in balls])
        n = self.eigen.n
        self.v_arch = np.array(cols, dtype=complex).T.reshape(n, len(cols))
        self.v_rad = np.array(rads, dtype=float).T.reshape(n, len(cols))
        self.padic = []
        for pl in self.places.finite:
            pr = pl.prime
            if pr.e == 1 and pr.f == 1:
                prec = 48
                rho = hensel_root(self.eigen.field.minpoly, (-pr.gen[0]) % pr.p, pr.p, prec)
                mod = pr.p ** prec
                vals = []
                den = 1
                for vi in self.eigen.v:
                    den = math.lcm(den, vi.denominator())
                for vi in self.eigen.v:
                    y = [int(c * den) for c in vi.coeffs]
                    vals.append(sum(c * pow(rho, i, mod) for i, c in enumerate(y)) % mod)
                self.padic.append((pr.p, prec, vals, den))
            else:
                self.padic.append(None)

    @property
    def n_arch(self) -> int:
        return self.v_arch.shape[1]

    def arch(self, X: np.ndarray) -> np.ndarray:
        """(k, P) complex coordinates; exact up to float rounding (see radius)."""
        return X.astype(float) @ self.v_arch

    def radius(self, X: np.ndarray) -> np.ndarray:
        absX = np.abs(X.astype(float))
        lin = absX @ (np.abs(self.v_arch) + self.v_rad)
        return absX @ self.v_rad + lin * 4e-16

    def monna(self, X: np.ndarray, which: int = 0, digits: int = 24) -> np.ndarray:
        """Map the p-adic coordinate to [0, 1) by reversing digits (1D picture of Z_p)."""
        data = self.padic[which]
        if data is None:
            raise ArtifactError("p-adic picture needs a degree-one prime")
        p, prec, vals, den = data
        mod = p ** prec
        out = np.empty(len(X))
        for r, x in enumerate(X):
            z = sum(int(a) * b for a, b in zip(x, vals)) % mod
            acc = 0.0
            scale = 1.0 / p
            for _ in range(digits):
                acc += (z % p) * scale
                z //= p
                scale /= p
            out[r] = acc
        return out

    def exact(self, x: Sequence[int]) -> FieldElem:
        return self.eigen.pair([int(t) for t in x])


# ---------------------------------------------------------------------------
# Psi on finite paths
# ---------------------------------------------------------------------------

def path_vector(aut: Automaton, M, path: Sequence[int]) -> tuple[int, ...]:
    """x = sum_k M^k f(p_k) for the prefixes along ``path`` (index 0 first)."""
    n = aut.n
    x = [0] * n
    for sid in reversed(list(path)):
        fp = abelianize(aut.states[sid].prefix, n)
        x = [sum(M[i][j] * x[j] for j in range(n)) + fp[i] for i in range(n)]
    return tuple(x)


def psi_partial(aut: Automaton, e: EigenData, ps: PlaceSystem, path: Sequence[int]) -> tuple[FieldElem, RepPoint]:
    """Exact partial sum sum_{i<m} <f(p_i), v> alpha^i and its embedded point (level m)."""
    x = path_vector(aut, e.M, path)
    val = e.pair(x)
    return val, phi_prime(val, ps, level=len(path))


# ---------------------------------------------------------------------------
# Diameter bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiameterBounds:
    arch: tuple[float, ...]   # M_v / (1 - |alpha_v|) per contracting archimedean place
    finite: tuple[float, ...]
    M_v: tuple[float, ...]
    moduli: tuple[float, ...]
    fin_rates: tuple[float, ...]

    def delta(self, m: int) -> tuple[float, ...]:
        return tuple(d * r ** m for d, r in zip(self.arch, self.moduli)) + \
            tuple(d * r ** m for d, r in zip(self.finite, self.fin_rates))

    def delta_max(self, m: int) -> float:
        return max(self.delta(m)) if self.delta(m) else 0.0


def diameter_bounds(s: Substitution, e: EigenData, ps: PlaceSystem) -> DiameterBounds:
    """Certified (upward-rounded) per-place diameters of every subtile."""
    vecs = {abelianize(img[:k], s.n) for img in s.images for k in range(len(img))}
    arch, Mv, mods = [], [], []
    for pl in ps.arch:
        best = 0.0
        for x in vecs:
            for y in vecs:
                b = embed(e.pair([a - c for a, c in zip(x, y)]), pl.root)
                best = max(best, abs(b.value) + b.radius)
        r = pl.root.modulus + pl.root.radius
        Mv.append(best)
        mods.append(r)
        arch.append(best / (1.0 - r) * (1 + 1e-12))
    fin = [1.0 for _ in ps.finite]
    rates = [float(pl.norm_q) ** (-pl.nu) for pl in ps.finite]
    return DiameterBounds(tuple(arch), tuple(fin), tuple(Mv), tuple(mods), tuple(rates))


# ---------------------------------------------------------------------------
# Point clouds
# ---------------------------------------------------------------------------

@dataclass
class PointCloud:
    letter: int
    depth: int
    X: np.ndarray          # (k, n) distinct integer vectors
    counts: np.ndarray     # multiplicities
    delta: tuple[float, ...]

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    def as_counter(self) -> dict[tuple, int]:
        return {tuple(int(t) for t in x): int(c) for x, c in zip(self.X, self.counts)}


def _merge(X: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse duplicate rows, summing multiplicities; rows come out in key order."""
    if len(X) == 0:
        return X, counts
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) < 2**62:
        k = np.zeros(len(X), dtype=np.int64)
        for i in range(X.shape[1] - 1, -1, -1):
            k = k * span[i] + (X[:, i] - lo[i])
        U, first, inv = np.unique(k, return_index=True, return_inverse=True)
        Xu = X[first]
    else:
        Xu, inv = np.unique(X, axis=0, return_inverse=True)
    c = np.zeros(len(Xu), dtype=np.int64)
    np.add.at(c, inv.reshape(-1), counts)
    return Xu, c


class CloudBuilder:
    """Memoized recursion cloud_m(a) = U_{(b:p) -> a} M cloud_{m-1}(b) + f(p)."""

    def __init__(self, s: Substitution, aut: Automaton, e: EigenData, ps: PlaceSystem,
                 depth_cap: int = DEPTH_CAP):
        self.s, self.aut, self.e, self.ps = s, aut, e, ps
        self.M = np.array(e.M, dtype=np.int64)
        self.depth_cap = depth_cap
        self.bounds = diameter_bounds(s, e, ps)
        self._cache: dict[tuple[int, int], PointCloud] = {}
        self.edges = [(st.source, st.core, np.array(abelianize(st.prefix, s.n), dtype=np.int64))
                      for st in aut.states]

    def path_count(self, a: int, m: int) -> int:
        """Admissible paths of length m ending at letter a (sum over states with core a)."""
        from .markov import int_mat_pow
        if m == 0:
            return 1
        P = int_mat_pow(self.aut.A, m - 1)
        rows = [J.id for J in self.aut.states if J.core == a]
        return sum(P[J][I] for J in rows for I in range(self.aut.D))

    def cloud(self, a: int, m: int) -> PointCloud:
        if m > self.depth_cap:
            raise CapExceeded(f"depth {m} above cap {self.depth_cap}")
        key = (a, m)
        if key in self._cache:
            return self._cache[key]
        n = self.s.n
        if m == 0:
            pc = PointCloud(a, 0, np.zeros((1, n), dtype=np.int64), np.ones(1, dtype=np.int64),
                            self.bounds.delta(0))
        else:
            if self.path_count(a, m) > POINT_CAP * 50:
                raise CapExceeded(f"cloud at depth {m} exceeds point cap")
            parts, cnts = [], []
            for b, core, fp in self.edges:
                if core != a:
                    continue
                prev = self.cloud(b, m - 1)
                parts.append(prev.X @ self.M.T + fp)
                cnts.append(prev.counts)
            X, c = _merge(np.vstack(parts), np.concatenate(cnts))
            if len(X) > POINT_CAP:
                raise CapExceeded(f"cloud at depth {m} exceeds point cap")
            pc = PointCloud(a, m, X, c, self.bounds.delta(m))
        self._cache[key] = pc
        return pc

    def union(self, m: int) -> list[PointCloud]:
        return [self.cloud(a, m) for a in range(1, self.s.n + 1)]


def _keys(X: np.ndarray, base: int) -> np.ndarray:
    """Injective int64 keys for nonnegative integer rows below ``base``."""
    k = np.zeros(len(X), dtype=np.int64)
    for i in range(X.shape[1] - 1, -1, -1):
        k = k * base + X[:, i]
    return k


def _key_multiset(X: np.ndarray, counts: np.ndarray, base: int) -> tuple[np.ndarray, np.ndarray]:
    k = _keys(X, base)
    U, inv = np.unique(k, return_inverse=True)
    c = np.zeros(len(U), dtype=np.int64)
    np.add.at(c, inv.reshape(-1), counts)
    return U, c


def enumerate_clouds(s: Substitution, m: int) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Oracle: per letter a, the multiset {f(p) : sigma^m(b) = p a s'} by direct word expansion.

    Returned as (distinct prefix vectors, multiplicities).
    """
    n = s.n
    acc: dict[int, list] = {a: [] for a in range(1, n + 1)}
    for b in range(1, n + 1):
        w = np.array(iterate_word(s, (b,), m), dtype=np.int64)
        onehot = np.zeros((len(w), n), dtype=np.int64)
        onehot[np.arange(len(w)), w - 1] = 1
        pref = np.cumsum(onehot, axis=0) - onehot
        for a in range(1, n + 1):
            acc[a].append(pref[w == a])
    out = {}
    for a, parts in acc.items():
        X = np.vstack(parts)
        out[a] = _merge(X, np.ones(len(X), dtype=np.int64))
    return out


def enumerate_cloud(s: Substitution, a: int, m: int) -> dict[tuple, int]:
    X, c = enumerate_clouds(s, m)[a]
    return {tuple(int(t) for t in x): int(k) for x, k in zip(X, c)}


def set_equation_check(builder: CloudBuilder, a: int, m: int,
                       oracle: dict | None = None) -> bool:
    """cloud_m(a) from direct expansion equals U_b (alpha cloud_{m-1}(b) + <f(p), v>)."""
    if m < 1:
        raise ValueError("set equation needs m >= 1")
    oracle = oracle if oracle is not None else enumerate_clouds(builder.s, m)
    LX, Lc = oracle[a]
    parts, cnts = [], []
    for b, core, fp in builder.edges:
        if core != a:
            continue
        prev = builder.cloud(b, m - 1)
        parts.append(prev.X @ builder.M.T + fp)
        cnts.append(prev.counts)
    RX = np.vstack(parts)
    Rc = np.concatenate(cnts)
    if Lc.sum() != Rc.sum() or (RX < 0).any():
        return False
    base = int(max(LX.max(initial=0), RX.max(initial=0))) + 1
    lk, lc = _key_multiset(LX, Lc, base)
    rk, rc = _key_multiset(RX, Rc, base)
    return bool(np.array_equal(lk, rk) and np.array_equal(lc, rc))


def set_equation_check_fieldelems(builder: CloudBuilder, a: int, m: int) -> bool:
    """Same identity with keys <x, v> in Q(alpha) (slow; small depths)."""
    e = builder.e
    alpha = e.field.alpha
    lhs: dict[FieldElem, int] = {}
    for x, c in enumerate_cloud(builder.s, a, m).items():
        k = e.pair(x)
        lhs[k] = lhs.get(k, 0) + c
    rhs: dict[FieldElem, int] = {}
    for b, core, fp in builder.edges:
        if core != a:
            continue
        shift = e.pair([int(t) for t in fp])
        for x, c in builder.cloud(b, m - 1).as_counter().items():
            k = alpha * e.pair(x) + shift
            rhs[k] = rhs.get(k, 0) + c
    return lhs == rhs


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------

def _coords(emb: Embedder, X: np.ndarray) -> tuple[np.ndarray, float]:
    Z = emb.arch(X)
    if Z.shape[1] == 1 and np.any(np.abs(Z.imag) > 0):
        pts = np.column_stack([Z[:, 0].real, Z[:, 0].imag])
    else:
        pts = Z.real
    rad = float(emb.radius(X).max()) if len(X) else 0.0
    return pts, rad


def hausdorff_estimate(emb: Embedder, c1: PointCloud, c2: PointCloud,
                       shift1: complex | np.ndarray | None = None,
                       shift2: complex | np.ndarray | None = None) -> tuple[float, float]:
    """Interval [lo, hi] for the archimedean Hausdorff distance of two clouds.

    A single complex place uses the plane modulus; several real places use
    the max-metric; any other mix returns the Euclidean value widened to the
    max-metric range.
    """
    p1, r1 = _coords(emb, c1.X)
    p2, r2 = _coords(emb, c2.X)
    if shift1 is not None:
        p1 = p1 + np.asarray(shift1)
    if shift2 is not None:
        p2 = p2 + np.asarray(shift2)
    mixed = emb.n_arch > 1 and p1.shape[1] != emb.n_arch
    pnorm = 2 if (emb.n_arch == 1 or mixed) else np.inf
    t1, t2 = cKDTree(p1), cKDTree(p2)
    d12 = t2.query(p1, p=pnorm)[0].max()
    d21 = t1.query(p2, p=pnorm)[0].max()
    h = float(max(d12, d21))
    slack = r1 + r2
    lo = max(0.0, h - slack)
    if mixed:
        lo /= math.sqrt(emb.n_arch)
    return lo, h + slack


# ---------------------------------------------------------------------------
# Continuity modulus
# ---------------------------------------------------------------------------

def continuity_modulus_check(chain: ParryChain, emb: Embedder, ps: PlaceSystem,
                             bounds: DiameterBounds, k: int, trials: int, seed: int,
                             extra: int = 12) -> tuple[bool, float]:
    """Paths agreeing on their first k states stay within M_v |a_v|^k / (1 - |a_v|).

    Returns (no violation, worst ratio distance/bound over all places).
    """
    rng = make_rng(seed)
    aut = chain.aut
    e = chain.eigen
    length = k + extra
    base = sample_paths(chain, trials, length, rng)
    worst = 0.0
    ok = True
    cum = np.cumsum(chain.P_num, axis=1)
    cum[:, -1] = 1.0
    for t in range(trials):
        p1 = list(base[t])
        p2 = p1[:k]
        while len(p2) < length:
            u = rng.random()
            p2.append(int(np.searchsorted(cum[p2[-1]], u, side="right")))
        x1 = np.array([path_vector(aut, e.M, p1)])
        x2 = np.array([path_vector(aut, e.M, p2)])
        z1, z2 = emb.arch(x1)[0], emb.arch(x2)[0]
        rad = float(emb.radius(x1)[0].max() + emb.radius(x2)[0].max())
        for i in range(emb.n_arch):
            bound = bounds.M_v[i] * bounds.moduli[i] ** k / (1 - bounds.moduli[i])
            d = abs(z1[i] - z2[i]) - rad
            worst = max(worst, d / bound)
            if d > bound:
                ok = False
        for j, pl in enumerate(ps.finite):
            diff = e.pair([int(a - b) for a, b in zip(x1[0], x2[0])])
            if diff.is_zero():
                continue
            v = ps.valuation(diff, pl)
            dist = float(pl.norm_q) ** (-v)
            bound = float(pl.norm_q) ** (-pl.nu * k)
            worst = max(worst, dist / bound)
            if dist > bound:
                ok = False
    return ok, worst


# ---------------------------------------------------------------------------
# Projection and rendering
# ---------------------------------------------------------------------------

PALETTE = [(31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40), (148, 103, 189),
           (140, 86, 75), (227, 119, 194), (127, 127, 127), (188, 189, 34), (23, 190, 207)]


@dataclass(frozen=True)
class ProjectionSpec:
    """Which two real coordinates to draw, raster size and optional bounding box."""

    mode: str = "auto"   # auto | complex | reals | real-letter | real-padic
    place: int = 0
    place2: int = 1
    resolution: int = 512
    box: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.resolution < 16:
            raise ValueError("resolution must be >= 16")
        if self.box is not None and (self.box[0] >= self.box[2] or self.box[1] >= self.box[3]):
            raise ValueError("empty bounding box")


def planar_points(emb: Embedder, clouds: Sequence[PointCloud], spec: ProjectionSpec):
    """(xy array, letter array) for the chosen projection."""
    xs, letters = [], []
    mode = spec.mode
    if mode == "auto":
        pls = emb.places.arch
        if pls and pls[spec.place].kind == "complex":
            mode = "complex"
        elif len(pls) >= 2:
            mode = "reals"
        elif emb.places.finite:
            mode = "real-padic"
        else:
            mode = "real-letter"
    n_letters = len(clouds)
    for c in clouds:
        if c.size == 0:
            continue
        Z = emb.arch(c.X)
        if mode == "complex":
            xy = np.column_stack([Z[:, spec.place].real, Z[:, spec.place].imag])
        elif mode == "reals":
            xy = np.column_stack([Z[:, spec.place].real, Z[:, spec.place2].real])
        elif mode == "real-padic":
            xy = np.column_stack([Z[:, spec.place].real, emb.monna(c.X)])
        elif mode == "real-letter":
            band = (n_letters - c.letter) / max(1, n_letters)
            xy = np.column_stack([Z[:, spec.place].real, np.full(len(c.X), band)])
        else:
            raise ValueError(f"unknown projection mode {mode}")
        xs.append(xy)
        letters.append(np.full(len(c.X), c.letter))
    if not xs:
        raise ArtifactError("empty cloud")
    return np.vstack(xs), np.concatenate(letters), mode


def _box(xy: np.ndarray, spec: ProjectionSpec):
    if spec.box is not None:
        return spec.box
    x0, y0 = xy.min(axis=0)
    x1, y1 = xy.max(axis=0)
    w = max(x1 - x0, 1e-9)
    h = max(y1 - y0, 1e-9)
    pad = 0.03
    return (x0 - pad * w, y0 - pad * h, x1 + pad * w, y1 + pad * h)


def project(emb: Embedder, clouds: Sequence[PointCloud], spec: ProjectionSpec):
    """Raster occupancy grid (letter index per pixel, 0 = empty) plus the point list."""
    xy, letters, mode = planar_points(emb, clouds, spec)
    x0, y0, x1, y1 = _box(xy, spec)
    res = spec.resolution
    aspect = (y1 - y0) / (x1 - x0)
    W = res
    H = max(16, int(round(res * aspect))) if mode in ("complex", "reals") else res // 2
    grid = np.zeros((H, W), dtype=np.int16)
    ix = np.clip(((xy[:, 0] - x0) / (x1 - x0) * W).astype(int), 0, W - 1)
    iy = np.clip(((y1 - xy[:, 1]) / (y1 - y0) * H).astype(int), 0, H - 1)
    order = np.lexsort((letters, iy, ix))
    grid[iy[order], ix[order]] = letters[order]
    return grid, xy, letters, (x0, y0, x1, y1)


def boundary_fraction(grid: np.ndarray) -> float:
    """Occupied pixels with a 4-neighbour of a different label, over occupied pixels."""
    occ = grid > 0
    if not occ.any():
        return 0.0
    g = np.pad(grid, 1)
    c = g[1:-1, 1:-1]
    diff = np.zeros_like(occ)
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        diff |= g[1 + dy:g.shape[0] - 1 + dy, 1 + dx:g.shape[1] - 1 + dx] != c
    return float((diff & occ).sum() / occ.sum())


def to_ppm(grid: np.ndarray) -> bytes:
    H, W = grid.shape
    img = np.full((H, W, 3), 255, dtype=np.uint8)
    for k in range(1, int(grid.max()) + 1):
        img[grid == k] = PALETTE[(k - 1) % len(PALETTE)]
    return f"P6\n{W} {H}\n255\n".encode() + img.tobytes()


def to_svg(xy: np.ndarray, letters: np.ndarray, box, size: int = 512, max_points: int = 60000) -> str:
    x0, y0, x1, y1 = box
    scale = size / max(x1 - x0, y1 - y0)
    W = int(round((x1 - x0) * scale))
    H = max(1, int(round((y1 - y0) * scale)))
    step = max(1, len(xy) // max_points)
    r = max(0.4, 0.6 * size / math.sqrt(max(1, len(xy) / step)) / 4)
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
              f'viewBox="0 0 {W} {H}">\n<rect width="100%" height="100%" fill="white"/>\n')
    for k in sorted(set(int(t) for t in letters)):
        col = "#%02x%02x%02x" % PALETTE[(k - 1) % len(PALETTE)]
        out.write(f'<g fill="{col}">\n')
        sel = np.nonzero(letters == k)[0][::step]
        for i in sel:
            cx = (xy[i, 0] - x0) * scale
            cy = (y1 - xy[i, 1]) * scale
            out.write(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}"/>\n')
        out.write("</g>\n")
    out.write("</svg>\n")
    return out.getvalue()


def to_csv(emb: Embedder, clouds: Sequence[PointCloud]) -> str:
    """letter, depth, multiplicity, exact power-basis coefficients, embedded coordinates."""
    n = emb.eigen.n
    P = emb.n_arch
    head = ["letter", "depth", "mult"] + [f"c{i}" for i in range(n)]
    for j in range(P):
        head += [f"re{j}", f"im{j}"]
    lines = [",".join(head)]
    B = [list(vi.coeffs) for vi in emb.eigen.v]
    for c in clouds:
        Z = emb.arch(c.X)
        for x, k, z in zip(c.X, c.counts, Z):
            coeffs = [sum((Fraction(int(x[i])) * B[i][j] for i in range(n)), Fraction(0)) for j in range(n)]
            row = [str(c.letter), str(c.depth), str(int(k))] + [str(q) for q in coeffs]
            for zz in z:
                row += [repr(round(float(zz.real), 12)), repr(round(float(zz.imag), 12))]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def hull_length(emb: Embedder, clouds: Sequence[PointCloud], place: int = 0) -> float:
    vals = np.concatenate([emb.arch(c.X)[:, place].real for c in clouds])
    return float(vals.max() - vals.min())
