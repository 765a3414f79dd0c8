"""Random dynamics of (h1, h2) with weights (p, 1-p).

Grid fields carry the boundary conventions of the escape probability T:
value 1 beyond the escape radius (and off the grid), value 0 on the
certified core of K̂(G), bilinear interpolation in between.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DegenerateFit, OrbitEscaped, SeriesNotDecaying
from .fields import BilinearStencil, GridSpec, PointCloud, ScalarField
from .juliasets import khat_core_mask, semigroup_julia_cloud
from .polycore import GeneratorPair, attracting_fixed_points
from .potential import DEFAULT_MAX_ITER, escape_radius, filled_membership

DEFAULT_GRID = 512
CORE_DEPTH = 12


@dataclass(frozen=True)
class WeightParam:
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")

    @property
    def p1(self) -> float:
        return self.p

    @property
    def p2(self) -> float:
        return 1.0 - self.p


def _weight(w) -> WeightParam:
    return w if isinstance(w, WeightParam) else WeightParam(float(w))


@dataclass
class TransitionGrid:
    """Stencils for φ∘h1 and φ∘h2 at every node of a grid."""

    grid: GridSpec
    radius: float
    st1: BilinearStencil
    st2: BilinearStencil
    outside: np.ndarray     # flat, |z| > radius
    core: np.ndarray        # flat, certified core

    @classmethod
    def build(cls, pair: GeneratorPair, grid: GridSpec | None = None, radius: float | None = None,
              core: np.ndarray | None = None, depth: int = CORE_DEPTH,
              max_iter: int = DEFAULT_MAX_ITER) -> "TransitionGrid":
        R = escape_radius(pair) if radius is None else float(radius)
        grid = GridSpec.square(R, DEFAULT_GRID) if grid is None else grid
        pts = grid.points().ravel()
        a, b = _kernels.pair_images(pair.h1.array, pair.h2.array, pts)
        if core is None:
            core = khat_core_mask(pair, grid, depth, max_iter, R).bits
        return cls(grid, R, BilinearStencil.build(grid, a, R), BilinearStencil.build(grid, b, R),
                   np.abs(pts) > R, np.asarray(core, dtype=bool).ravel())

    def images(self, flat: np.ndarray, outside_value: float) -> tuple[np.ndarray, np.ndarray]:
        return self.st1.apply(flat, outside_value), self.st2.apply(flat, outside_value)

    def apply(self, flat: np.ndarray, w: WeightParam, outside_value: float,
              core_value: float | None = 0.0) -> np.ndarray:
        a, b = self.images(flat, outside_value)
        out = w.p1 * a + w.p2 * b
        out[self.outside] = outside_value
        if core_value is not None:
            out[self.core] = core_value
        return out


def transition_apply(field: ScalarField, pair: GeneratorPair, w, op: TransitionGrid | None = None) -> ScalarField:
    """(Mφ)(z) = p·φ(h1 z) + (1-p)·φ(h2 z) on the field's grid."""
    w = _weight(w)
    if op is None:
        core = field.core if field.core is not None else np.zeros(field.grid.shape, dtype=bool)
        op = TransitionGrid.build(pair, field.grid, field.escape_radius, core=core)
    core_value = field.core_value if field.core is not None else None
    new = op.apply(field.values.ravel(), w, field.outside_value, core_value)
    return field.with_values(new.reshape(field.grid.shape))


def compute_T(pair: GeneratorPair, w, grid: GridSpec | None = None, max_sweeps: int = 5000,
              tol: float = 1e-4, depth: int = CORE_DEPTH, max_iter: int = DEFAULT_MAX_ITER,
              op: TransitionGrid | None = None) -> ScalarField:
    """Escape probability T as the fixed point of M with the T boundary values.

    Jacobi sweeps from 1/2 on free nodes until the sup change is below tol.
    A non-converged field is returned with ``converged=False``.
    """
    w = _weight(w)
    op = TransitionGrid.build(pair, grid, depth=depth, max_iter=max_iter) if op is None else op
    g = op.grid
    phi = np.full(g.nx * g.ny, 0.5)
    phi[op.outside] = 1.0
    phi[op.core] = 0.0
    change = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        new = op.apply(phi, w, 1.0, 0.0)
        change = float(np.max(np.abs(new - phi)))
        phi = new
        sweeps += 1
        if change < tol:
            break
    converged = change < tol
    if not converged:
        warnings.warn(f"compute_T stopped after {sweeps} sweeps, last change {change:.3g}")
    meta = {"sweeps": sweeps, "last_change": change, "tol": tol, "p": w.p,
            "core_nodes": int(op.core.sum()), "core_depth": depth, "max_iter": max_iter}
    return ScalarField(g, np.clip(phi, 0.0, 1.0).reshape(g.shape), 1.0, 0.0, op.radius,
                       op.core.reshape(g.shape), converged, meta)


def monte_carlo_T(pair: GeneratorPair, w, z: complex, n_samples: int, max_iter: int = DEFAULT_MAX_ITER,
                  R: float | None = None, seed: int = 0) -> tuple[float, float]:
    """Fraction of random orbits of z leaving the disk of radius R within max_iter steps.

    Orbits still bounded after max_iter count as non-escaping.  Returns the
    estimate and its binomial standard error.
    """
    w = _weight(w)
    R = escape_radius(pair) if R is None else float(R)
    rng = np.random.default_rng(seed)
    zs = np.full(int(n_samples), complex(z))
    escaped = np.zeros(zs.size, dtype=bool)
    active = np.abs(zs) <= R
    escaped[~active] = True
    idx = np.flatnonzero(active)
    for _ in range(max_iter):
        if idx.size == 0:
            break
        pick = rng.random(idx.size) < w.p1
        cur = zs[idx]
        nxt = np.where(pick, pair.h1(cur), pair.h2(cur))
        zs[idx] = nxt
        gone = ~(np.abs(nxt) <= R)
        escaped[idx[gone]] = True
        idx = idx[~gone]
    est = float(escaped.mean())
    se = math.sqrt(max(est * (1 - est), 0.0) / zs.size)
    return est, se


def takagi_derivative(pair: GeneratorPair, w, n: int = 1, grid: GridSpec | None = None,
                      series_len: int = 2000, tol: float = 1e-6, T_field: ScalarField | None = None,
                      op: TransitionGrid | None = None, return_all: bool = False):
    """ψ_n = ∂ⁿT/∂pⁿ by Neumann series of M applied to the source term.

    ψ_{k+1} = Σ_j M^j((k+1)(ψ_k∘h1 − ψ_k∘h2)) with ψ_0 = T.  The ψ_0 source
    uses T's boundary values; the series and ψ_k, k ≥ 1, vanish beyond the
    escape radius and on the core.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = _weight(w)
    if T_field is None:
        T_field = compute_T(pair, w, grid, tol=min(1e-8, tol), op=op)
    if op is None:
        op = TransitionGrid.build(pair, T_field.grid, T_field.escape_radius, core=T_field.core)
    if not T_field.converged:
        warnings.warn("takagi_derivative called on a non-converged T field")
    pinned = op.outside | op.core
    psi = T_field.values.ravel()
    outside = 1.0
    fields = []
    for k in range(n):
        a, b = op.images(psi, outside)
        term = (k + 1) * (a - b)
        term[pinned] = 0.0
        total = term.copy()
        norms = [float(np.abs(term).max())]
        done = norms[0] == 0.0
        j = 0
        while not done and j < series_len:
            term = op.apply(term, w, 0.0, 0.0)
            total += term
            norms.append(float(np.abs(term).max()))
            j += 1
            done = norms[-1] < tol / 10
        ratio = _decay_ratio(norms)
        if not done:
            if ratio > 0.95:
                raise SeriesNotDecaying(f"psi_{k + 1}: term ratio {ratio:.4f} after {j} terms")
            warnings.warn(f"psi_{k + 1}: series truncated at {j} terms")
        tail = norms[-1] * ratio / (1 - ratio) if ratio < 1 else float("inf")
        psi = total
        outside = 0.0
        fields.append(ScalarField(T_field.grid, total.reshape(T_field.grid.shape), 0.0, 0.0,
                                  T_field.escape_radius, T_field.core, done,
                                  {"order": k + 1, "terms": j + 1, "decay_ratio": ratio,
                                   "tail_estimate": tail, "p": w.p}))
    return fields if return_all else fields[-1]


def _decay_ratio(norms: list[float], window: int = 10) -> float:
    x = [v for v in norms if v > 0]
    if len(x) < 2:
        return 0.0
    k = min(window, len(x) - 1)
    return float((x[-1] / x[-1 - k]) ** (1.0 / k))


@dataclass
class MinimalSetCloud:
    points: PointCloud
    contains_infinity_partner: bool = True
    start: complex = 0j
    notes: list[str] = dc_field(default_factory=list)

    @property
    def is_singleton(self) -> bool:
        pts = self.points.points
        return bool(np.ptp(pts.real) < 1e-9 and np.ptp(pts.imag) < 1e-9)


def _inner_attractor(pair: GeneratorPair, max_iter: int) -> tuple[complex, str]:
    R = escape_radius(pair)
    cands = []
    for h in pair.maps:
        cands += [(z, "attracting fixed point") for z in attracting_fixed_points(h)]
    cands += [(z, "critical value") for z in pair.all_critical_values()]
    for z, how in cands:
        if all(filled_membership(h, np.array([z]), max_iter, R)[0] for h in pair.maps):
            return complex(z), how
    raise OrbitEscaped("no attracting fixed point or critical value lies in both filled Julia sets")


def minimal_set(pair: GeneratorPair, n_points: int = 2000, n_burn: int = 200, seed: int = 0,
                p: float = 0.5, streams: int = 16, max_iter: int = DEFAULT_MAX_ITER) -> MinimalSetCloud:
    """Forward random orbits from an inner attractor; approximates the bounded minimal set."""
    z0, how = _inner_attractor(pair, max_iter)
    R = escape_radius(pair)
    rng = np.random.default_rng(seed)
    S = max(1, min(streams, n_points))
    per = -(-n_points // S)
    z = np.full(S, z0)
    out = []
    for step in range(n_burn + per):
        pick = rng.random(S) < p
        z = np.where(pick, pair.h1(z), pair.h2(z))
        if not np.all(np.abs(z) <= R):
            raise OrbitEscaped(f"forward orbit from {z0} left radius {R:.4g} at step {step}")
        if step >= n_burn:
            out.append(z.copy())
    pts = np.stack(out, axis=1).ravel()[:n_points]
    return MinimalSetCloud(PointCloud(pts, label="minimal set"), True, z0, [f"start: {how}"])


def stationary_measure_check(pair: GeneratorPair, w, test_fn: Callable, z_samples,
                             n_sweeps: int = 50, phi_inf: float | None = None,
                             T_field: ScalarField | None = None, grid: GridSpec | None = None,
                             nu_integral: float | None = None, seed: int = 0) -> dict:
    """Compare Mⁿφ with T·φ(∞) + (1−T)·∫φ dν at sample points.

    Mⁿφ is iterated on the grid with no core pinning (φ(∞) used beyond the
    escape radius).  ν is δ_L for a singleton minimal set, otherwise the
    empirical measure of a forward random orbit.
    """
    w = _weight(w)
    op = TransitionGrid.build(pair, grid if T_field is None else T_field.grid,
                              core=None if T_field is None else T_field.core)
    if T_field is None:
        T_field = compute_T(pair, w, op=op)
    phi_inf = float(test_fn(np.array([1e300]))[0]) if phi_inf is None else float(phi_inf)
    if nu_integral is None:
        L = minimal_set(pair, seed=seed, p=w.p)
        nu_integral = float(np.mean(test_fn(L.points.points)))
    vals = np.asarray(test_fn(op.grid.points().ravel()), dtype=np.float64)
    vals[op.outside] = phi_inf
    for _ in range(n_sweeps):
        vals = op.apply(vals, w, phi_inf, None)
    field = T_field.with_values(vals.reshape(op.grid.shape), outside_value=phi_inf, core=None)
    zs = np.asarray(z_samples, dtype=np.complex128).ravel()
    lhs = field.sample(zs)
    T = T_field.sample(zs)
    rhs = T * phi_inf + (1 - T) * nu_integral
    defect = np.abs(lhs - rhs)
    return {"max_defect": float(defect.max()) if defect.size else 0.0, "defects": defect.tolist(),
            "nu_integral": nu_integral, "phi_inf": phi_inf, "n_sweeps": n_sweeps}


def sample_lambda(pair: GeneratorPair, w, n_points: int, seed: int, streams: int | None = None) -> PointCloud:
    """Samples of the maximal relative entropy measure (map j w.p. p_j, uniform branch)."""
    w = _weight(w)
    return semigroup_julia_cloud(pair, n_points, seed, "map-weighted", w.p, streams)


def holder_bound_entropy(w, d1: int, d2: int) -> float:
    """-(p log p + (1-p) log(1-p)) / (p log d1 + (1-p) log d2)."""
    p = _weight(w).p
    return -(p * math.log(p) + (1 - p) * math.log(1 - p)) / (p * math.log(d1) + (1 - p) * math.log(d2))


def holder_bound_single(p_j: float, d_j: int) -> float:
    if not 0.0 < p_j < 1.0:
        raise ValueError("p_j must lie in (0, 1)")
    return -math.log(p_j) / math.log(d_j)


def _oscillations(field: ScalarField, z0: complex, radii: np.ndarray) -> np.ndarray:
    g = field.grid
    rmax = float(radii.max())
    fi, fj = g.fractional_index(z0)
    hw = int(math.ceil(rmax / min(g.dx, g.dy))) + 1
    i0, j0 = int(round(float(fi))), int(round(float(fj)))
    ii = np.arange(max(0, i0 - hw), min(g.nx, i0 + hw + 1))
    jj = np.arange(max(0, j0 - hw), min(g.ny, j0 + hw + 1))
    xs = g.xs()[ii][None, :] + 1j * g.ys()[jj][:, None]
    vals = field.values[np.ix_(jj, ii)]
    dist = np.abs(xs - z0)
    out = np.empty(radii.size)
    for k, r in enumerate(radii):
        sel = dist <= r
        v = vals[sel]
        out[k] = v.max() - v.min() if v.size else 0.0
    return out


def holder_estimate(field, z0: complex, radii) -> tuple[float, float]:
    """Slope of log(oscillation over the disk of radius r) against log r.

    ``field`` is a ScalarField (oscillation over grid nodes in the disk) or a
    callable, evaluated on 256 points spread over each disk.
    """
    radii = np.asarray(sorted(radii), dtype=np.float64)
    if radii.size < 4:
        raise ValueError("need at least 4 radii")
    if isinstance(field, ScalarField):
        osc = _oscillations(field, complex(z0), radii)
    else:
        rng = np.random.default_rng(0)
        u = np.sqrt(rng.random(256)) * np.exp(2j * np.pi * rng.random(256))
        osc = np.array([np.ptp(np.asarray(field(z0 + r * np.append(u, 0)), dtype=float)) for r in radii])
    if np.any(osc <= 1e-12):
        raise DegenerateFit(f"oscillation vanishes near {z0}")
    x, y = np.log(radii), np.log(osc)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 1.0
    return float(slope), r2


def chordal(x, y) -> np.ndarray:
    """Chordal (spherical) distance between finite points."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    return 2 * np.abs(x - y) / np.sqrt((1 + np.abs(x) ** 2) * (1 + np.abs(y) ** 2))


def alpha_seminorm(field, alpha: float, n_pairs: int = 2000, seed: int = 0, centers=None,
                   levels: int = 30, radius: float | None = None) -> float:
    """Sampled C^α seminorm max |φ(x) − φ(y)| / d(x, y)^α, d chordal.

    For a ScalarField the pairs are grid nodes at dyadic pixel offsets.  For
    a callable, pairs sit at separations 2^-k (k = 1..levels) around the
    given centers, or around random points of the disk of ``radius``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    if isinstance(field, ScalarField):
        g = field.grid
        vals = field.values
        best = 0.0
        pts = g.points()
        kmax = int(math.log2(max(2, min(g.nx, g.ny) // 4)))
        for k in range(kmax + 1):
            off = 2 ** k
            for axis in (0, 1):
                n_here = vals.shape[axis] - off
                if n_here <= 0:
                    continue
                a = rng.integers(0, vals.shape[0] - (off if axis == 0 else 0), n_pairs)
                b = rng.integers(0, vals.shape[1] - (off if axis == 1 else 0), n_pairs)
                a2, b2 = (a + off, b) if axis == 0 else (a, b + off)
                d = chordal(pts[a, b], pts[a2, b2])
                q = np.abs(vals[a, b] - vals[a2, b2]) / d ** alpha
                best = max(best, float(q.max()))
        return best
    if centers is None:
        r = 1.0 if radius is None else radius
        m = max(1, n_pairs // levels)
        centers = r * np.sqrt(rng.random(m)) * np.exp(2j * np.pi * rng.random(m))
    centers = np.asarray(centers, dtype=np.complex128).ravel()
    seps = 2.0 ** -np.arange(1, levels + 1)
    dirs = np.exp(2j * np.pi * rng.random((centers.size, seps.size)))
    x = np.repeat(centers[:, None], seps.size, axis=1)
    y = x + seps[None, :] * dirs
    fx = np.asarray(field(x.ravel()), dtype=np.float64)
    fy = np.asarray(field(y.ravel()), dtype=np.float64)
    q = np.abs(fx - fy) / chordal(x.ravel(), y.ravel()) ** alpha
    return float(q.max())


def iterate_exact(pair: GeneratorPair, w, phi: Callable, n: int, z, radius: float | None = None,
                  phi_inf: float = 1.0, zero_radius: float | None = None, max_leaves: int = 10 ** 7) -> np.ndarray:
    """Mⁿφ(z) by enumerating all 2ⁿ words, pruning escaped branches.

    Branches beyond ``radius`` contribute φ(∞); branches inside the disk of
    ``zero_radius`` (assumed forward invariant with φ = 0 there) contribute 0.
    """
    w = _weight(w)
    R = escape_radius(pair) if radius is None else float(radius)
    z = np.asarray(z, dtype=np.complex128).ravel()
    out = np.zeros(z.size)
    owner = np.arange(z.size)
    pts = z.copy()
    wts = np.ones(z.size)
    for _ in range(n):
        far = np.abs(pts) > R
        np.add.at(out, owner[far], wts[far] * phi_inf)
        keep = ~far
        if zero_radius is not None:
            keep &= np.abs(pts) >= zero_radius
        pts, wts, owner = pts[keep], wts[keep], owner[keep]
        if pts.size * 2 > max_leaves:
            raise MemoryError("word enumeration exceeds the leaf budget")
        pts = np.concatenate([pair.h1(pts), pair.h2(pts)])
        wts = np.concatenate([wts * w.p1, wts * w.p2])
        owner = np.concatenate([owner, owner])
    far = np.abs(pts) > R
    vals = np.where(far, phi_inf, np.asarray(phi(np.where(far, 0, pts)), dtype=np.float64))
    np.add.at(out, owner, wts * vals)
    return out


def refine_T(T_field: ScalarField, pair: GeneratorPair, w, z, levels: int = 8) -> np.ndarray:
    """Point values Mᵏ(T_grid)(z): the fixed-point equation applied exactly k times.

    Interpolation error of the grid field is carried only by the words whose
    orbits stay near J(G), so it shrinks geometrically in k for mean-stable
    pairs; this matters at the Hölder cusps of T.
    """
    return iterate_exact(pair, w, T_field.sample, levels, z, radius=T_field.escape_radius)
