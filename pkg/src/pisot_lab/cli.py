"""pisot-lab command line: analyze, render, tile, coincide, simulate."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .errors import ArtifactError, CapExceeded, ParseError
from .markov import GENERATOR, int_mat_pow, rational_rank, spectral_matrix, verify_primitive_A
from .nfield import embed, poly_str
from .pipeline import Lab
from .places import product_alpha_residual, product_formula_check
from .subst import fixed_point_window, strong_coincidence, word_to_str

SCHEMA = "pisot-lab/1"


@dataclass
class JobConfig:
    sub: str = ""
    depth: int | None = None
    levels: int | None = None
    samples: int | None = None
    seed: int = 0
    precision_bits: int = 120
    out: str = "."
    format: str = "json"
    k_max: int = 10
    resolution: int = 512
    garsia_trials: int = 10_000
    pairs: int = 1_000
    horizon: int = 3_000
    entries: int = 400

    def positive(self):
        for name in ("depth", "levels", "samples", "k_max", "resolution", "garsia_trials",
                     "pairs", "horizon", "entries", "precision_bits"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ParseError(f"--{name.replace('_', '-')} must be non-negative")


DEFAULTS = {
    "analyze": {},
    "render": {"depth": 10, "format": "svg"},
    "tile": {"depth": 14, "samples": 1000},
    "coincide": {},
    "simulate": {"samples": 100_000},
}


def _read_sub(text: str) -> str:
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                return fh.read().strip()
        except OSError as exc:
            raise ParseError(f"cannot read substitution file: {exc}") from None
    return text


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def _num(x: float, digits: int = 12) -> float:
    return float(round(float(x), digits))


def _header(cmd: str, cfg: JobConfig, seeds: dict | None = None) -> dict:
    return {"schema": SCHEMA, "version": __version__, "command": cmd, "config": asdict(cfg),
            "seeds": seeds or {}, "generator": GENERATOR if seeds else None}


def _write(cfg: JobConfig, name: str, data: bytes | str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
        fh.write(data)
    return path


# ---------------------------------------------------------------------------

def cmd_analyze(cfg: JobConfig) -> dict:
    lab = Lab.from_text(cfg.sub)
    e, ps, aut, chain = lab.eigen, lab.places, lab.aut, lab.chain
    roots = [{"kind": r.kind, "center": [_num(complex(r.center).real), _num(complex(r.center).imag)],
              "radius": float(r.radius), "modulus": _num(r.modulus)} for r in lab.field.roots]
    spectral = 0.0
    for k in range(1, 26):
        exact = int_mat_pow(aut.A, k)
        approx = spectral_matrix(aut, e, k)
        spectral = max(spectral, max(abs(exact[i][j] - approx[i][j]) for i in range(aut.D) for j in range(aut.D)))
    perron = lab.field.perron
    fp = fixed_point_window(lab.s, 8)
    rep = _header("analyze", cfg)
    rep.update({
        "substitution": str(lab.s),
        "n": lab.n,
        "incidence_matrix": [list(r) for r in lab.M],
        "char_poly": {"coefficients_ascending": list(lab.poly), "text": poly_str(lab.poly)},
        "irreducible": True,
        "pisot": True,
        "roots": roots,
        "determinant": lab.det,
        "places": ps.describe(),
        "eigen": {"u": [str(x) for x in e.u], "v": [str(x) for x in e.v], "scale_c": e.c},
        "automaton": {
            "D": aut.D,
            "states": [s.label() for s in aut.states],
            "A": [list(r) for r in aut.A],
            "rank": rational_rank(aut.A),
        },
        "primitivity_N": lab.N,
        "A_power_positive": verify_primitive_A(aut.A, lab.N),
        "parry": {
            "p": [str(x) for x in chain.p],
            "p_numeric": [_num(x) for x in chain.p_num],
            "P": [[str(x) for x in row] for row in chain.P],
            "exact_identities": chain.check_exact(),
        },
        "spectral_check": {"k_max": 25, "max_abs_error": float(f"{spectral:.3e}"), "ok": spectral < 0.5},
        "fixed_point": {"u0": fp.right_seed, "u_minus1": fp.left_seed, "q": fp.q,
                        "q_two_sided": fp.q_two_sided, "window": word_to_str(fp.window)},
        "product_formula": {
            "alpha_residual": float(f"{product_alpha_residual(ps):.3e}"),
            "alpha_plus_one_residual": float(f"{product_formula_check(lab.field.alpha + 1, ps):.3e}"),
        },
        "perron": _num(perron.center),
    })
    return rep


def cmd_render(cfg: JobConfig) -> dict:
    from .fractal import ProjectionSpec, boundary_fraction, project, to_csv, to_ppm, to_svg
    lab = Lab.from_text(cfg.sub)
    depth = cfg.depth
    if depth > lab.builder.depth_cap:
        raise CapExceeded(f"depth {depth} above cap {lab.builder.depth_cap}")
    clouds = lab.builder.union(depth)
    spec = ProjectionSpec(resolution=max(16, cfg.resolution))
    grid, xy, letters, box = project(lab.embedder, clouds, spec)
    written = []
    if cfg.format == "svg":
        written.append(_write(cfg, "render.svg", to_svg(xy, letters, box, size=spec.resolution)))
    elif cfg.format == "ppm":
        written.append(_write(cfg, "render.ppm", to_ppm(grid)))
    written.append(_write(cfg, "points.csv", to_csv(lab.embedder, clouds)))
    rep = _header("render", cfg)
    rep.update({
        "substitution": str(lab.s),
        "depth": depth,
        "points": {str(c.letter): len(c.X) for c in clouds},
        "multiplicity": {str(c.letter): c.size for c in clouds},
        "box": [_num(x) for x in box],
        "grid": list(grid.shape),
        "boundary_fraction": _num(boundary_fraction(grid)),
        "delta": _num(lab.bounds.delta_max(depth)),
        "files": [os.path.basename(p) for p in written],
    })
    return rep


def cmd_tile(cfg: JobConfig) -> dict:
    from .tiling import bounding_radius, delone_radii, tiling_statistics, translation_patch
    lab = Lab.from_text(cfg.sub)
    rep = _header("tile", cfg, {"samples": cfg.seed})
    kinds = [pl.kind for pl in lab.places.arch]
    R = bounding_radius(lab.builder)
    patch = translation_patch(lab.gamma, 0, 2 * R, i_max=cfg.levels)
    _write(cfg, "patch.json", _dump({"schema": SCHEMA, "items": patch.to_json_obj(), "radius": 2 * R}))
    delone = {}
    for a in range(1, lab.n + 1):
        sub = type(patch)(patch.by_letter(a), patch.region)
        try:
            r1, r2 = delone_radii(sub, kinds)
            delone[str(a)] = {"r1": _num(r1), "r2": _num(r2)}
        except (ArtifactError, ValueError) as exc:
            delone[str(a)] = {"unavailable": str(exc)}
    rep.update({"substitution": str(lab.s), "patch_items": len(patch), "patch_radius": _num(2 * R),
                "delone": delone})
    try:
        stats = tiling_statistics(lab.builder, lab.embedder, lab.gamma, cfg.samples, cfg.depth, cfg.seed)
        stats["delta"] = _num(stats["delta"])
        stats["patch_radius"] = _num(stats["patch_radius"])
        rep["covering"] = stats
        if stats["samples"] < 50:
            rep["warning"] = "few samples; histogram is not informative"
    except CapExceeded:
        raise
    except ArtifactError as exc:
        rep["covering"] = {"unsupported": str(exc)}
    return rep


def cmd_coincide(cfg: JobConfig) -> dict:
    lab = Lab.from_text(cfg.sub)
    res = strong_coincidence(lab.s, cfg.k_max)
    pairs = {}
    unresolved = []
    for (a, b), wit in sorted(res.items()):
        key = f"{a},{b}"
        if wit is None:
            pairs[key] = None
            unresolved.append(key)
        else:
            pairs[key] = {"k": wit.k, "letter": wit.letter, "prefix_vector": list(wit.prefix_vector)}
    rep = _header("coincide", cfg)
    rep.update({"substitution": str(lab.s), "k_max": cfg.k_max, "pairs": pairs,
                "strong_coincidence": not unresolved, "unresolved": unresolved})
    if unresolved:
        rep["notice"] = f"unresolved at k_max={cfg.k_max}"
    return rep


def cmd_simulate(cfg: JobConfig) -> dict:
    from . import analysis as an
    from .markov import sample_path
    lab = Lab.from_text(cfg.sub)
    e, ps, aut, chain = lab.eigen, lab.places, lab.aut, lab.chain
    seeds = {"garsia": cfg.seed, "either": cfg.seed + 1, "tau2": cfg.seed + 2, "entries": cfg.seed + 3}
    rep = _header("simulate", cfg, seeds)
    Z = [w for w, _ in lab.Z0]
    M = an.coefficient_bound(lab.s, e, Z)
    cyl = an.special_cylinder(aut, e, ps, lab.s, M, lab.N, lab.u0)
    short = an.short_cylinder(aut, lab.N, lab.u0)
    radii = an.neighborhood_radii(0, M, e, ps)
    rep.update({
        "substitution": str(lab.s), "M": M, "L": cyl.L, "L_short": short.L,
        "L_margins": [_num(x) for x in cyl.margins],
        "radii_d0": {"arch": [_num(x) for x in radii.arch], "finite": [_num(x) for x in radii.finite]},
    })
    g = an.garsia_fuzz(e, ps, cfg.garsia_trials, seeds["garsia"], prec=cfg.precision_bits)
    g["min_ratio"] = _num(g["min_ratio"]) if g["trials"] else None
    rep["garsia"] = g
    rep["either"] = an.either_corpus(chain, ps, lab.embedder, lab.bounds, cyl, M, lab.Z0, cfg.pairs, seeds["either"])
    rep["either"]["indeterminate_rate"] = _num(rep["either"]["indeterminate_rate"])
    dist = an.tau2_distribution(chain, short, cfg.horizon)
    emp = an.tau2_empirical(chain, short, cfg.samples, cfg.horizon, seeds["tau2"])
    tv = an.total_variation(dist["pmf"], dist["tail"], emp["counts"], max(1, cfg.samples))
    rep["tau2"] = {
        "L": short.L, "horizon": cfg.horizon, "pairs": cfg.samples,
        "exact_pmf_head": [_num(x, 15) for x in dist["pmf"][:50]],
        "exact_tail": _num(dist["tail"], 15),
        "exact_sum_minus_one": float(f"{dist['total'] - 1:.3e}"),
        "empirical_counts_head": emp["counts"][:50],
        "not_found": emp["not_found"],
        "tv": _num(tv),
        "expected_tv_noise": _num(an.expected_tv_noise(dist["pmf"], max(1, cfg.samples))),
    }
    path = sample_path(chain, max(200_000, 50 * cfg.entries), seeds["entries"])
    try:
        ser = an.entry_series(path, short, lab.N, cfg.entries)
        sr = an.b_counts_and_s(chain, ser, short)
        rep["s_series"] = {
            "L": short.L, "N0": ser.N0, "times_head": ser.times[:20], "b_head": [str(b) for b in sr.b[:13]],
            "recursion_matches_dp": sr.b_direct_agree, "monotone": sr.monotone,
            "values_tail": [_num(x) for x in sr.s[-5:]], "ratio_error": _num(sr.final_ratio_error),
        }
    except ArtifactError as exc:
        rep["s_series"] = {"unavailable": str(exc)}
    return rep


COMMANDS = {"analyze": cmd_analyze, "render": cmd_render, "tile": cmd_tile,
            "coincide": cmd_coincide, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pisot-lab", description="Rauzy fractals and prefix-suffix automata of Pisot substitutions.")
    ap.add_argument("--version", action="version", version=f"pisot-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--sub", help='substitution, e.g. "1->12;2->13;3->1", or @file')
        p.add_argument("--config", help="JSON file with default values for any option")
        p.add_argument("--depth", type=int)
        p.add_argument("--levels", type=int, help="level cap i_max for translation vectors")
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--precision-bits", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=["json", "csv", "svg", "ppm"])
        p.add_argument("--k-max", type=int)
        p.add_argument("--resolution", type=int)
        p.add_argument("--garsia-trials", type=int)
        p.add_argument("--pairs", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--entries", type=int)
    return ap


def make_config(args: argparse.Namespace) -> JobConfig:
    vals = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad config file: {exc}") from None
        known = {f.name for f in fields(JobConfig)}
        bad = sorted(set(loaded) - known)
        if bad:
            raise ParseError(f"unknown config keys: {', '.join(bad)}")
        vals.update(loaded)
    for f in fields(JobConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            vals[f.name] = v
    cfg = JobConfig(**vals)
    if not cfg.sub:
        raise ParseError("missing --sub")
    cfg.sub = _read_sub(cfg.sub)
    cfg.positive()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        report = COMMANDS[args.command](cfg)
        path = _write(cfg, f"{args.command}.json", _dump(report))
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
