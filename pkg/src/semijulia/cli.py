"""sjl: command-line front end.

Exit codes: 0 success, 1 hard error, 2 inconclusive classification, 64 usage.
"""
from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import io_render
from .errors import SemiJuliaError
from .fields import GridSpec, rasterize
from .polycore import GeneratorPair, Polynomial, Word, format_polynomial, parse_complex, parse_polynomial

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64

# Sampling commands need an explicit seed; verdict commands default to seed 0 (echoed).
STOCHASTIC = {"julia", "dim", "sample"}
VERDICT_SEED_DEFAULT = {"classify", "scan", "construct"}

# Built-in defaults; a config file overrides these and flags override both.
DEFAULTS = {
    "preset": None, "h1": None, "h2": None, "p": 0.5, "seed": None,
    "grid": 512, "depth": 12, "iters": 200, "tol": 1e-4, "n": 20000,
    "sweeps": 5000, "workers": None, "out": ".", "gamma": 1.0, "invert": False,
    # subcommand specifics
    "kind": "semigroup", "preperiod": "", "period": "", "order": 1, "base": "1+0i",
    "n_max": 8, "d": 3, "c": "0+0i", "b": "0+0i", "re_range": "0.5,1.5", "im_range": "-0.5,0.5",
    "res": 16, "bisect_tol": 1e-3, "csv": False,
}
INT_KEYS = {"grid", "depth", "iters", "n", "sweeps", "workers", "order", "n_max", "d", "res"}
FLOAT_KEYS = {"p", "tol", "gamma", "bisect_tol"}
BOOL_KEYS = {"invert", "csv"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _angle(text: str) -> float:
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"([+-]?[0-9.eE+-]*)\*?(pi|π)(?:/([0-9.eE+]+))?", t)
    if m:
        k = m.group(1)
        k = 1.0 if k in ("", "+") else -1.0 if k == "-" else float(k)
        return k * math.pi / (float(m.group(3)) if m.group(3) else 1.0)
    return float(t)


def preset_pair(name: str) -> GeneratorPair:
    """Named pairs: annulus, cantor3, monomialQ(θ) with θ a number or k*pi/m (default pi/5)."""
    name = name.strip()
    if name == "annulus":
        return GeneratorPair(Polynomial.monomial(1, 2), Polynomial.monomial(0.5, 2))
    if name == "cantor3":
        return GeneratorPair(Polynomial.monomial(1, 3), Polynomial.monomial(2, 3))
    m = re.fullmatch(r"monomialQ(?:\((.*)\))?", name)
    if m:
        theta = _angle(m.group(1)) if m.group(1) else math.pi / 5
        return GeneratorPair(Polynomial.monomial(1, 3), Polynomial.monomial(cmath.exp(1j * theta), 3))
    raise UsageError(f"unknown preset {name!r} (annulus, cantor3, monomialQ(theta))")


def load_config(path) -> dict:
    """JSON object, or ``key = value`` lines with '#' comments."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: bad JSON: {exc}") from exc
    else:
        raw = {}
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
    cfg = {}
    for k, v in raw.items():
        key = k.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}: unknown config key {k!r}")
        cfg[key] = _coerce(key, v)
    return cfg


def _coerce(key, v):
    if v is None:
        return None
    try:
        if key in INT_KEYS:
            return int(v)
        if key in FLOAT_KEYS:
            return float(v)
        if key in BOOL_KEYS:
            return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")
        if key == "seed":
            return int(v)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config key {key}: bad value {v!r}") from exc
    return v


def _common(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("pair and budgets")
    g.add_argument("--preset", help="annulus | cantor3 | monomialQ(theta)")
    g.add_argument("--h1", help='coefficients "c0 c1 ... cd", lowest degree first')
    g.add_argument("--h2", help="second generator, same form")
    g.add_argument("--p", type=float, help="probability of h1, in (0,1) (default 0.5)")
    g.add_argument("--seed", type=int, help="RNG seed (required for julia, dim, sample; default 0 elsewhere)")
    g.add_argument("--grid", type=int, help="grid nodes per side (default 512)")
    g.add_argument("--depth", type=int, help="postcritical / core depth (default 12)")
    g.add_argument("--iters", type=int, help="escape iteration budget (default 200)")
    g.add_argument("--tol", type=float, help="convergence tolerance (default 1e-4)")
    g.add_argument("--n", type=int, help="number of sample points (default 20000)")
    g.add_argument("--sweeps", type=int, help="max fixed-point sweeps (default 5000)")
    g.add_argument("--workers", type=int, help="worker count (default SJL_THREADS or CPU count)")
    g.add_argument("--config", help="config file, key=value lines or JSON")
    g.add_argument("-o", "--out", help="output directory (default .)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sjl", description="Polynomial semigroup dynamics: Julia sets, loci, T, Takagi, dimension.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    ap.subcommands = sub.choices

    sp = sub.add_parser("julia", help="sample a Julia set -> julia.csv, julia.pgm")
    _common(sp)
    sp.add_argument("--kind", choices=["semigroup", "h1", "h2", "fiber"], help="which set (default semigroup)")
    sp.add_argument("--preperiod", help="fiber preperiod word, e.g. 2")
    sp.add_argument("--period", help="fiber period word, e.g. 1")

    sp = sub.add_parser("classify", help="locus membership report -> report.json")
    _common(sp)

    sp = sub.add_parser("tfun", help="escape probability T -> T.pgm, T.json")
    _common(sp)
    sp.add_argument("--gamma", type=float, help="PGM gamma in [0.1, 10] (default 1)")
    sp.add_argument("--invert", action="store_true", default=None, help="invert grayscale")
    sp.add_argument("--csv", action="store_true", default=None, help="also write T.csv")

    sp = sub.add_parser("takagi", help="p-derivative of T -> psi<n>.pgm (16-bit) + sidecar")
    _common(sp)
    sp.add_argument("--order", type=int, help="derivative order n (default 1)")

    sp = sub.add_parser("dim", help="Bowen and box dimension -> dimension.json")
    _common(sp)
    sp.add_argument("--base", help="base point for preimage sums (default 1+0i)")
    sp.add_argument("--n-max", dest="n_max", type=int, help="word depth (default 8)")

    sp = sub.add_parser("scan", help="parameter locus scan of h2 = a z^d + c -> locus.csv, locus.ppm")
    _common(sp)
    sp.add_argument("--d", type=int, help="degree of h2 (default 3)")
    sp.add_argument("--c", help="constant term of h2 (default 0)")
    sp.add_argument("--re-range", dest="re_range", help="lo,hi for Re a (default 0.5,1.5)")
    sp.add_argument("--im-range", dest="im_range", help="lo,hi for Im a (default -0.5,0.5)")
    sp.add_argument("--res", type=int, help="cells per side (default 16)")

    sp = sub.add_parser("construct", help="boundary partner g for h1 -> partner.json")
    _common(sp)
    sp.add_argument("--d", type=int, help="degree of g (default 3)")
    sp.add_argument("--b", help="center of g, must lie in int K(h1) (default 0)")
    sp.add_argument("--bisect-tol", dest="bisect_tol", type=float, help="t bisection tolerance (default 1e-3)")

    sp = sub.add_parser("sample", help="samples of the maximal entropy measure -> sample.csv")
    _common(sp)
    return ap


def effective_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(load_config(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["workers"] is None:
        env = os.environ.get("SJL_THREADS")
        try:
            cfg["workers"] = int(env) if env else (os.cpu_count() or 1)
        except ValueError:
            raise UsageError(f"SJL_THREADS must be an integer, got {env!r}")
    cfg["command"] = args.command
    if cfg["seed"] is None and args.command in VERDICT_SEED_DEFAULT:
        cfg["seed"] = 0
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    for k in ("grid", "depth", "iters", "n", "sweeps", "workers", "order", "n_max", "res"):
        if cfg[k] is None or cfg[k] <= 0:
            raise UsageError(f"--{k.replace('_', '-')} must be positive")
    if cfg["res"] < 2:
        raise UsageError("--res must be at least 2")
    if not 0.0 < cfg["p"] < 1.0:
        raise UsageError("--p must lie in (0, 1)")
    if not cfg["tol"] > 0:
        raise UsageError("--tol must be positive")
    if not 0.1 <= cfg["gamma"] <= 10:
        raise UsageError("--gamma must lie in [0.1, 10]")
    if cfg["command"] in STOCHASTIC and cfg["seed"] is None:
        raise UsageError(f"{cfg['command']}: --seed is required")
    if cfg["seed"] is not None and int(cfg["seed"]) < 0:
        raise UsageError("--seed must be non-negative")
    need_pair = cfg["command"] not in ("construct", "scan")
    if need_pair and not cfg["preset"] and not (cfg["h1"] and cfg["h2"]):
        raise UsageError("give --preset or both --h1 and --h2")
    if cfg["command"] == "construct" and not cfg["h1"]:
        raise UsageError("construct: --h1 is required")


def _pair(cfg: dict) -> GeneratorPair:
    if cfg["preset"]:
        if cfg["h1"] or cfg["h2"]:
            raise UsageError("--preset and --h1/--h2 are exclusive")
        return preset_pair(cfg["preset"])
    try:
        return GeneratorPair(parse_polynomial(cfg["h1"]), parse_polynomial(cfg["h2"]))
    except ValueError as exc:
        raise UsageError(f"bad polynomial: {exc}") from exc


def _word(text: str) -> Word:
    syms = [int(c) for c in re.sub(r"[\s,]", "", text or "")]
    try:
        return Word(tuple(syms))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in str(text).split(","))
    except ValueError:
        raise UsageError(f"range must be lo,hi: {text!r}")
    if not hi > lo:
        raise UsageError(f"empty range {text!r}")
    return lo, hi


def _set_threads(n: int) -> None:
    try:
        import numba
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


# ---------------------------------------------------------------- subcommands

def cmd_julia(cfg, out):
    from .juliasets import boundary_cloud, fiber_julia_cloud, semigroup_julia_cloud
    from .potential import escape_radius, escape_radius_poly
    pair = _pair(cfg)
    kind = cfg["kind"]
    if kind == "semigroup":
        cloud = semigroup_julia_cloud(pair, cfg["n"], cfg["seed"])
        R = escape_radius(pair)
    elif kind in ("h1", "h2"):
        h = pair[int(kind[1])]
        cloud = boundary_cloud(h, cfg["n"], cfg["seed"])
        R = escape_radius_poly(h)
    else:
        cloud = fiber_julia_cloud(pair, _word(cfg["preperiod"]), _word(cfg["period"]), cfg["n"], cfg["seed"])
        R = escape_radius(pair)
    grid = GridSpec.square(R, cfg["grid"])
    io_render.write_cloud_csv(cloud, out / "julia.csv")
    mask = rasterize(cloud, grid)
    io_render.write_mask_pgm(mask, out / "julia.pgm")
    return EXIT_OK, f"julia: {len(cloud)} points, {mask.count} pixels -> {out}"


def cmd_classify(cfg, out):
    from .loci import Budgets, classify
    pair = _pair(cfg)
    bud = Budgets(depth=cfg["depth"], max_iter=cfg["iters"], grid=cfg["grid"], n_points=cfg["n"],
                  seed=cfg["seed"])
    rep = classify(pair, bud)
    d = rep.to_dict()
    code = rep.code
    body = {"h1": format_polynomial(pair.h1), "h2": format_polynomial(pair.h2),
            "B": d["in_B"], "connected": d["is_connected"], "H": d["in_H"], "I": d["in_I"],
            "Q": d["in_Q"], "OSC": d["osc_holds"], "locus": _code_name(code), "code": code}
    body.update(d)
    io_render.write_report_json(body, out / "report.json")
    summary = " ".join(f"{k}:{body[k]}" for k in ("B", "connected", "H", "I", "Q", "OSC"))
    from .loci import LOCUS_CODE
    status = EXIT_INCONCLUSIVE if code == LOCUS_CODE["inconclusive"] else EXIT_OK
    return status, f"classify: {summary} locus={body['locus']}"


def _code_name(code: int) -> str:
    from .loci import LOCUS_CODE
    return {v: k for k, v in LOCUS_CODE.items()}[code]


def cmd_tfun(cfg, out):
    from .potential import escape_radius
    from .randdyn import compute_T
    pair = _pair(cfg)
    grid = GridSpec.square(escape_radius(pair), cfg["grid"])
    T = compute_T(pair, cfg["p"], grid, max_sweeps=cfg["sweeps"], tol=cfg["tol"],
                  depth=cfg["depth"], max_iter=cfg["iters"])
    spec = io_render.RenderSpec("grayscale", cfg["gamma"], bool(cfg["invert"]))
    io_render.write_field_pgm(T, out / "T.pgm", spec)
    if cfg["csv"]:
        io_render.write_field_csv(T, out / "T.csv")
    io_render.write_json({"grid": {"center": T.grid.center, "half_width": T.grid.half_width,
                                   "half_height": T.grid.half_height, "nx": T.grid.nx, "ny": T.grid.ny},
                          "escape_radius": T.escape_radius, "converged": T.converged, "meta": T.meta},
                         out / "T.json")
    status = EXIT_OK if T.converged else EXIT_ERROR
    return status, f"tfun: {T.meta['sweeps']} sweeps, converged={T.converged} -> {out / 'T.pgm'}"


def cmd_takagi(cfg, out):
    from .potential import escape_radius
    from .randdyn import takagi_derivative
    pair = _pair(cfg)
    grid = GridSpec.square(escape_radius(pair), cfg["grid"])
    psi = takagi_derivative(pair, cfg["p"], cfg["order"], grid, series_len=cfg["sweeps"], tol=cfg["tol"])
    name = f"psi{cfg['order']}.pgm"
    side = io_render.write_takagi_pgm16(psi, out / name)
    return EXIT_OK, f"takagi: order {cfg['order']}, range [{side['min']:.4g}, {side['max']:.4g}] -> {out / name}"


def cmd_dim(cfg, out):
    from .dimension import pair_dimension_report
    from .juliasets import semigroup_julia_cloud
    pair = _pair(cfg)
    try:
        base = parse_complex(cfg["base"])
    except ValueError as exc:
        raise UsageError(f"bad --base: {exc}") from exc
    cloud = semigroup_julia_cloud(pair, cfg["n"], cfg["seed"])
    rep = pair_dimension_report(pair, base, cloud, cfg["n_max"])
    io_render.write_json(rep, out / "dimension.json")
    box = "n/a" if rep.box_dim is None else f"{rep.box_dim:.4f}"
    return EXIT_OK, f"dim: delta={rep.delta_estimate:.5f} lower_bound={rep.lower_bound:.5f} box={box}"


def cmd_scan(cfg, out):
    from .loci import Budgets, FamilySpec, scan
    if cfg["preset"]:
        h1 = preset_pair(cfg["preset"]).h1
    elif cfg["h1"]:
        h1 = parse_polynomial(cfg["h1"])
    else:
        raise UsageError("scan: give --preset or --h1")
    fam = FamilySpec(h1, cfg["d"], parse_complex(cfg["c"]), _range(cfg["re_range"]), _range(cfg["im_range"]))
    bud = Budgets(depth=cfg["depth"], max_iter=cfg["iters"], grid=min(cfg["grid"], 256),
                  n_points=min(cfg["n"], 4000), seed=cfg["seed"], n_boundary_samples=1000)
    lm = scan(fam, cfg["res"], bud, workers=cfg["workers"])
    io_render.write_locus_csv(lm.params, lm.codes, out / "locus.csv")
    io_render.write_codes_ppm(lm.codes, out / "locus.ppm")
    counts = np.bincount(lm.codes.ravel(), minlength=6)
    io_render.write_json({"codes": {n: int(counts[i]) for i, (n, _) in enumerate(io_render.LEGEND6)},
                          "warnings": lm.warnings}, out / "locus.json")
    return EXIT_OK, "scan: " + " ".join(f"{n}={int(counts[i])}" for i, (n, _) in enumerate(io_render.LEGEND6))


def cmd_construct(cfg, out):
    from .loci import construct_partner
    try:
        h1 = parse_polynomial(cfg["h1"])
        b = parse_complex(cfg["b"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = construct_partner(h1, cfg["d"], b, cfg["bisect_tol"], seed=cfg["seed"], max_iter=cfg["iters"])
    io_render.write_json({"h1": format_polynomial(h1), "g": format_polynomial(res.g), "t1": res.t1,
                          "t0": res.t0, "theta": res.theta, "s": res.s, "z0": res.z0,
                          "bracket": list(res.bracket), "failing_link": res.failing_link,
                          "trace": [list(t) for t in res.trace]}, out / "partner.json")
    return EXIT_OK, f"construct: t1={res.t1:.6g} g={format_polynomial(res.g)}"


def cmd_sample(cfg, out):
    from .randdyn import sample_lambda
    pair = _pair(cfg)
    cloud = sample_lambda(pair, cfg["p"], cfg["n"], cfg["seed"])
    io_render.write_cloud_csv(cloud, out / "sample.csv")
    return EXIT_OK, f"sample: {len(cloud)} points -> {out / 'sample.csv'}"


COMMANDS = {"julia": cmd_julia, "classify": cmd_classify, "tfun": cmd_tfun, "takagi": cmd_takagi,
            "dim": cmd_dim, "scan": cmd_scan, "construct": cmd_construct, "sample": cmd_sample}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        if extra:
            sp = parser.subcommands[args.command]
            sp.error(f"unrecognized arguments: {' '.join(extra)}")
        cfg = effective_config(args)
        out = io_render.ensure_dir(cfg["out"])
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sjl: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _set_threads(cfg["workers"])
    t0 = time.perf_counter()
    try:
        io_render.write_json(cfg, out / "run_config.json")
        status, summary = COMMANDS[cfg["command"]](cfg, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (SemiJuliaError, OSError, ValueError, MemoryError) as exc:
        print(f"sjl {cfg['command']}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{summary} ({time.perf_counter() - t0:.1f}s)")
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
