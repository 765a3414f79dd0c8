"""Julia sets: filled-set masks, backward chaos games, fiber Julia sets.

Chaos games run many independent streams side by side.  Stream ``s`` draws
from ``SeedSequence([seed, s])`` so results depend only on ``(seed, streams)``.
Points are concatenated stream by stream.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import binary_erosion

from . import _kernels
from .fields import GridSpec, PixelMask, PointCloud, ScalarField, neighborhood_oscillation
from .polycore import (GeneratorPair, Polynomial, Word, compose, preimages_many,
                       repelling_periodic_point, word_map, MAX_COMPOSE_DEGREE)
from .potential import DEFAULT_MAX_ITER, escape_radius as pair_escape_radius, escape_radius_poly

BURN_IN = 100
DEFAULT_STREAMS = 512
EXCEPTIONAL_NOTE = "seed point assumed non-exceptional (repelling periodic point)"


def filled_julia_mask(p: Polynomial, grid: GridSpec, max_iter: int = DEFAULT_MAX_ITER,
                      R: float | None = None) -> PixelMask:
    R = escape_radius_poly(p) if R is None else R
    steps = _kernels.escape_steps(p.array, grid.points().ravel(), float(R), int(max_iter))
    return PixelMask(grid, (steps < 0).reshape(grid.shape))


def _stream_rngs(seed: int, streams: int) -> list[np.random.Generator]:
    return [np.random.default_rng(np.random.SeedSequence([int(seed), s])) for s in range(streams)]


def _chaos_game(maps: list[Polynomial], weights: np.ndarray, start: complex, n_points: int,
                seed: int, radius: float, burn_in: int = BURN_IN,
                streams: int | None = None) -> np.ndarray:
    """Backward chaos game: each step picks map k with probability
    ``weights[k]``, then a uniformly random preimage under it."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    S = min(n_points, streams or DEFAULT_STREAMS)
    per = -(-n_points // S)
    total = burn_in + per
    rngs = _stream_rngs(seed, S)
    # pre-draw per stream: map choice and branch choice (as uniforms)
    draws = np.stack([r.random((2, total)) for r in rngs], axis=1)  # (2, S, steps)
    cum = np.cumsum(np.asarray(weights, dtype=np.float64))
    cum /= cum[-1]
    z = np.full(S, complex(start))
    out = np.empty((per, S), dtype=np.complex128)
    for step in range(total):
        choice = np.minimum(np.searchsorted(cum, draws[0, :, step], side="right"), len(maps) - 1)
        new = np.empty_like(z)
        for k, m in enumerate(maps):
            sel = choice == k
            if not sel.any():
                continue
            roots = preimages_many(m, z[sel])
            br = np.minimum((draws[1, sel, step] * m.degree).astype(np.int64), m.degree - 1)
            new[sel] = roots[np.arange(roots.shape[0]), br]
        z = new
        if step >= burn_in:
            out[step - burn_in] = z
    pts = out.T.ravel()[:n_points]
    keep = np.isfinite(pts) & (np.abs(pts) <= radius)
    return pts[keep]


def boundary_cloud(p: Polynomial, n_points: int, seed: int, streams: int | None = None,
                   burn_in: int = BURN_IN) -> PointCloud:
    """Samples of J(p) by uniform backward iteration from a repelling periodic point."""
    start = repelling_periodic_point(p)
    pts = _chaos_game([p], np.array([1.0]), start, n_points, seed, escape_radius_poly(p),
                      burn_in, streams)
    return PointCloud(pts, label=f"J({p})", notes=[EXCEPTIONAL_NOTE])


def semigroup_julia_cloud(pair: GeneratorPair, n_points: int, seed: int,
                          branch_law: str = "uniform", p: float = 0.5,
                          streams: int | None = None, burn_in: int = BURN_IN) -> PointCloud:
    """Samples of J(G) by backward chaos game over both generators.

    ``branch_law="uniform"`` picks each of the d1+d2 preimages with equal
    probability; ``"map-weighted"`` picks h1 with probability p then a
    uniform branch, which samples the maximal relative entropy measure.
    """
    d1, d2 = pair.degrees
    if branch_law == "uniform":
        w = np.array([d1, d2], dtype=np.float64)
    elif branch_law in ("map-weighted", "weighted"):
        if not 0.0 < p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        w = np.array([p, 1.0 - p])
    else:
        raise ValueError(f"unknown branch law {branch_law!r}")
    start = repelling_periodic_point(pair.h1)
    pts = _chaos_game([pair.h1, pair.h2], w, start, n_points, seed,
                      pair_escape_radius(pair) * (1 + 1e-9), burn_in, streams)
    return PointCloud(pts, label=f"J(G) {branch_law}", notes=[EXCEPTIONAL_NOTE])


def pull_back(points: np.ndarray, maps: list[Polynomial], rng: np.random.Generator) -> np.ndarray:
    """One uniformly random preimage of each point under maps[-1]∘…∘maps[0]."""
    z = np.asarray(points, dtype=np.complex128)
    for m in reversed(maps):
        roots = preimages_many(m, z)
        br = rng.integers(0, m.degree, size=z.size)
        z = roots[np.arange(z.size), br]
    return z


def all_preimages(points: np.ndarray, p: Polynomial) -> np.ndarray:
    """Every preimage (with multiplicity) of every point, flattened."""
    return preimages_many(p, np.asarray(points, dtype=np.complex128)).ravel()


def fiber_julia_cloud(pair: GeneratorPair, preperiod: Word, period: Word, n_points: int,
                      seed: int, max_degree: int = MAX_COMPOSE_DEGREE,
                      streams: int | None = None) -> PointCloud:
    """Samples of J_γ for γ = preperiod · period^∞."""
    if period.length == 0:
        raise ValueError("period must be nonempty")
    Q = word_map(pair, period, max_degree)
    if preperiod.length:
        word_map(pair, preperiod, max_degree)  # degree cap check only
    base = boundary_cloud(Q, n_points, seed, streams)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2 ** 31]))
    pts = pull_back(base.points, [pair[s] for s in preperiod.symbols], rng)
    label = f"J_gamma pre={''.join(map(str, preperiod.symbols))} per={''.join(map(str, period.symbols))}"
    return PointCloud(pts, label=label, notes=[EXCEPTIONAL_NOTE])


def tvar_julia_mask(T_field: ScalarField, threshold: float) -> PixelMask:
    """Pixels where T oscillates by more than ``threshold`` over a 3x3 block."""
    return PixelMask(T_field.grid, neighborhood_oscillation(T_field.values) > threshold)


def khat_core_mask(pair: GeneratorPair, grid: GridSpec, depth: int = 12,
                   max_iter: int = DEFAULT_MAX_ITER, R: float | None = None) -> PixelMask:
    """Nodes certified inside K̂(G): a conservative forward-invariant core.

    Start from the budgeted K(h1) ∩ K(h2) mask, then ``depth`` times keep
    only nodes whose images under both generators land in the one-pixel
    erosion of the current set.  Survivors have their whole depth-k word tree
    inside the mask, with a pixel of slack at each level.
    """
    R = pair_escape_radius(pair) if R is None else R
    pts = grid.points().ravel()
    inside = np.abs(pts) < R
    for h in pair.maps:
        inside &= _kernels.escape_steps(h.array, pts, float(R), int(max_iter)) < 0
    images = _kernels.pair_images(pair.h1.array, pair.h2.array, pts)
    lookups = []
    for w in images:
        with np.errstate(invalid="ignore", over="ignore"):
            i, j, ok = grid.nearest_index(np.where(np.isfinite(w), w, 0))
        lookups.append((j * grid.nx + i, ok & np.isfinite(w)))
    S = inside.reshape(grid.shape)
    st = np.ones((3, 3), dtype=bool)
    for _ in range(depth):
        E = binary_erosion(S, structure=st).ravel()
        new = S.ravel().copy()
        for flat, ok in lookups:
            new &= ok & E[flat]
        new = new.reshape(grid.shape)
        if np.array_equal(new, S):
            break
        S = new
    return PixelMask(grid, S)
