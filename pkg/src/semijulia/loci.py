"""Locus classification of generator pairs.

Every verdict is tri-state with a numeric margin and a short evidence note.
All of them are truncated, sampled certificates: distances are compared with
pixel-scale tolerances of a grid covering the escape disk.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import label
from scipy.spatial import cKDTree

from .errors import BisectionFailed, InvalidBase, SemiJuliaError
from .fields import GridSpec, PixelMask, PointCloud, rasterize
from .juliasets import all_preimages, boundary_cloud, khat_core_mask, semigroup_julia_cloud
from .polycore import GeneratorPair, Polynomial, compose, fixed_points
from .potential import (DEFAULT_MAX_ITER, escape_radius, filled_membership, green_values,
                        robin_inequality)

YES, NO, INC = "yes", "no", "inconclusive"
GREEN_TOL = 1e-7
SAMPLED = "sampled evidence"


@dataclass
class Verdict:
    value: str
    margin: float = float("nan")
    evidence: str = ""

    def __bool__(self):
        raise TypeError("use .value; a verdict is tri-state")


@dataclass
class Budgets:
    depth: int = 12
    max_iter: int = DEFAULT_MAX_ITER
    grid: int = 512
    n_points: int = 20000
    seed: int = 0
    merge_tol: float | None = None
    n_boundary_samples: int = 2000
    skip_unbounded: bool = True      # B=no short-circuits the heavy checks


def _pixel(pair: GeneratorPair, n: int) -> float:
    return GridSpec.square(escape_radius(pair), n).pixel


def min_distance(a: np.ndarray, b: np.ndarray, cap: float | None = None) -> tuple[float, int, int]:
    """Closest pair between two point sets: (distance, index in a, index in b).

    With ``cap`` the distance is exact only when it is below the cap; larger
    separations are reported by a subsample estimate (an upper bound), which
    avoids expensive long-range queries between distant dense clouds.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.size == 0 or b.size == 0:
        return float("inf"), -1, -1
    tree = cKDTree(np.column_stack([b.real, b.imag]))
    qa = np.column_stack([a.real, a.imag])
    if cap is not None:
        d, j = tree.query(qa, distance_upper_bound=cap)
        i = int(np.argmin(d))
        if np.isfinite(d[i]):
            return float(d[i]), i, int(j[i])
        step = max(1, a.size // 500)
        d0, j0 = tree.query(qa[::step])
        k0 = int(np.argmin(d0))
        return float(d0[k0]), k0 * step, int(j0[k0])
    step = max(1, a.size // 2000)
    d0, j0 = tree.query(qa[::step])
    k0 = int(np.argmin(d0))
    d, j = tree.query(qa, distance_upper_bound=float(d0[k0]) * (1 + 1e-12) + 1e-300)
    i = int(np.argmin(d))
    if not np.isfinite(d[i]):
        return float(d0[k0]), k0 * step, int(j0[k0])
    return float(d[i]), i, int(j[i])


# ---------------------------------------------------------------- postcritical set

@dataclass
class PostcriticalNet:
    points: np.ndarray
    frontier: np.ndarray
    stabilized: bool
    escaped: bool
    levels: int
    max_modulus: float


def postcritical_net(pair: GeneratorPair, depth: int = 12, merge_tol: float | None = None,
                     radius: float | None = None, max_size: int = 50000) -> PostcriticalNet:
    """ε-net of the forward tree of CV*(h1) ∪ CV*(h2) under both generators."""
    R = escape_radius(pair) if radius is None else radius
    tol = 1e-4 * R if merge_tol is None else merge_tol
    seeds = np.array(pair.all_critical_values(), dtype=np.complex128)

    seen: dict = {}
    for k, z in zip(zip(np.rint(seeds.real / tol).astype(np.int64).tolist(),
                        np.rint(seeds.imag / tol).astype(np.int64).tolist()), seeds):
        seen.setdefault(k, z)
    frontier = np.array(list(seen.values()))
    if np.any(np.abs(frontier) > R):
        return PostcriticalNet(frontier, frontier, False, True, 0, float(np.abs(frontier).max()))
    level = 0
    while frontier.size and level < depth and len(seen) < max_size:
        with np.errstate(over="ignore", invalid="ignore"):
            img = np.concatenate([pair.h1(frontier), pair.h2(frontier)])
        level += 1
        if not np.all(np.abs(img) <= R):
            pts = np.array(list(seen.values()))
            return PostcriticalNet(pts, img, False, True, level, float("inf"))
        kr = np.rint(img.real / tol).astype(np.int64)
        ki = np.rint(img.imag / tol).astype(np.int64)
        new = {}
        for a, b, z in zip(kr.tolist(), ki.tolist(), img):
            if (a, b) not in seen and (a, b) not in new:
                new[(a, b)] = z
        seen.update(new)
        frontier = np.array(list(new.values()), dtype=np.complex128)
    pts = np.array(list(seen.values()))
    return PostcriticalNet(pts, frontier, frontier.size == 0, False, level, float(np.abs(pts).max()))


def trapping_mask(pair: GeneratorPair, n: int = 256, max_iter: int = DEFAULT_MAX_ITER,
                  rounds: int = 64) -> PixelMask:
    """Discrete forward-invariant subset of K̂(G) (pruned to stabilization)."""
    return khat_core_mask(pair, GridSpec.square(escape_radius(pair), n), rounds, max_iter)


def _in_mask(mask: PixelMask, z: np.ndarray) -> np.ndarray:
    i, j, ok = mask.grid.nearest_index(z)
    return ok & mask.bits[j, i]


def check_B(pair: GeneratorPair, depth: int = 12, max_iter: int = DEFAULT_MAX_ITER,
            bound_radius: float | None = None, merge_tol: float | None = None,
            net: PostcriticalNet | None = None) -> Verdict:
    """Bounded postcritical set: yes / no (a critical orbit escapes) / inconclusive."""
    R = escape_radius(pair)
    bound = R if bound_radius is None else bound_radius
    net = postcritical_net(pair, depth, merge_tol, R) if net is None else net
    if net.escaped:
        return Verdict(NO, bound - float(np.abs(net.frontier[np.isfinite(net.frontier)]).max(initial=np.inf)),
                       f"a postcritical point exceeds R={R:.4g} at level {net.levels}")
    margin = bound - net.max_modulus
    if net.max_modulus > bound:
        return Verdict(INC, margin, "postcritical net exceeds the bound radius but not R")
    if net.stabilized:
        return Verdict(YES, margin, f"ε-net closed after {net.levels} levels ({net.points.size} points)")
    trap = trapping_mask(pair, max_iter=max_iter)
    if trap.count and np.all(_in_mask(trap, net.frontier)):
        return Verdict(YES, margin, f"depth-{net.levels} frontier lies in a forward-invariant trapping mask")
    return Verdict(INC, margin, f"net not closed after {net.levels} levels; frontier {net.frontier.size}")


# ---------------------------------------------------------------- Julia-set based checks

@dataclass
class PairClouds:
    """Cached samples shared by the checks of one pair."""

    pair: GeneratorPair
    n_points: int
    seed: int
    _cache: dict = field(default_factory=dict)

    def semigroup(self) -> np.ndarray:
        if "G" not in self._cache:
            self._cache["G"] = semigroup_julia_cloud(self.pair, self.n_points, self.seed).points
        return self._cache["G"]

    def single(self, j: int) -> np.ndarray:
        key = f"J{j}"
        if key not in self._cache:
            self._cache[key] = boundary_cloud(self.pair[j], self.n_points, self.seed + j).points
        return self._cache[key]

    def julia_all(self) -> np.ndarray:
        """Union of the semigroup cloud and both single-map clouds (all lie in J(G))."""
        return np.concatenate([self.semigroup(), self.single(1), self.single(2)])


def _two_sided(dist: float, lo: float, hi: float, near: str, far: str, what: str) -> Verdict:
    if dist < lo:
        return Verdict(near, dist, f"{what} {dist:.4g} < {lo:.4g}")
    if dist > hi:
        return Verdict(far, dist, f"{what} {dist:.4g} > {hi:.4g}")
    return Verdict(INC, dist, f"{what} {dist:.4g} between {lo:.4g} and {hi:.4g}")


def preimage_separation(pair: GeneratorPair, cloud: np.ndarray, cap: float | None = None) -> float:
    """Min distance between h1^{-1}(cloud) and h2^{-1}(cloud)."""
    return min_distance(all_preimages(cloud, pair.h1), all_preimages(cloud, pair.h2), cap)[0]


def check_connected(pair: GeneratorPair, n_points: int = 20000, seed: int = 0,
                    sep_tol: float | None = None, grid: int = 512,
                    clouds: PairClouds | None = None) -> Verdict:
    """yes = J(G) connected (preimage clouds interleave), no = disconnected."""
    px = _pixel(pair, grid)
    hi = 4 * px if sep_tol is None else sep_tol
    clouds = PairClouds(pair, n_points, seed) if clouds is None else clouds
    d = preimage_separation(pair, clouds.julia_all(), cap=1.5 * hi)
    return _two_sided(d, min(2 * px, hi), hi, YES, NO, "preimage-cloud separation")


def check_I(pair: GeneratorPair, n_points: int = 20000, seed: int = 0, tol: float | None = None,
            grid: int = 512, clouds: PairClouds | None = None) -> Verdict:
    """yes if J(h1) and J(h2) meet (sampled)."""
    px = _pixel(pair, grid)
    tol = 2 * px if tol is None else tol
    clouds = PairClouds(pair, n_points, seed) if clouds is None else clouds
    d = min_distance(clouds.single(1), clouds.single(2), cap=8 * tol)[0]
    return _two_sided(d, tol, 2 * tol, YES, NO, "J(h1)-J(h2) distance")


def kernel_julia_estimate(pair: GeneratorPair, n_points: int = 20000, seed: int = 0,
                          tol: float | None = None, grid: int = 512) -> PointCloud:
    """Samples of J(h1) within tol of samples of J(h2)."""
    tol = 2 * _pixel(pair, grid) if tol is None else tol
    a = boundary_cloud(pair.h1, n_points, seed + 1).points
    b = boundary_cloud(pair.h2, n_points, seed + 2).points
    if a.size == 0 or b.size == 0:
        return PointCloud(np.empty(0, dtype=np.complex128), label="J_ker estimate")
    tree = cKDTree(np.column_stack([b.real, b.imag]))
    d, _ = tree.query(np.column_stack([a.real, a.imag]), distance_upper_bound=tol * (1 + 1e-9))
    return PointCloud(a[d <= tol], label="J_ker estimate", notes=[SAMPLED])


def long_critical_orbits(pair: GeneratorPair, steps: int = 2000) -> np.ndarray:
    """Orbits of each finite critical value under each single generator."""
    R = escape_radius(pair)
    out = []
    for h in pair.maps:
        z = np.array(pair.all_critical_values(), dtype=np.complex128)
        for _ in range(steps):
            with np.errstate(over="ignore", invalid="ignore"):
                z = h(z)
            z = z[np.abs(z) <= R]
            if z.size == 0:
                break
            out.append(z)
    return np.concatenate(out) if out else np.empty(0, dtype=np.complex128)


def parabolic_fixed_points(pair: GeneratorPair, max_denominator: int = 12, tol: float = 1e-8) -> np.ndarray:
    """Fixed points with multiplier a root of unity; these lie in J but chaos games rarely visit them."""
    out = []
    for h in pair.maps:
        for z in fixed_points(h):
            lam = h.deriv(z)
            if abs(abs(lam) - 1.0) > tol:
                continue
            frac = cmath.phase(lam) / (2 * math.pi) % 1.0
            if any(abs(frac * q - round(frac * q)) < tol * q for q in range(1, max_denominator + 1)):
                out.append(z)
    return np.array(out, dtype=np.complex128)


def check_H(pair: GeneratorPair, depth: int = 12, n_points: int = 20000, tol: float | None = None,
            grid: int = 512, seed: int = 0, clouds: PairClouds | None = None,
            net: PostcriticalNet | None = None, b_verdict: Verdict | None = None) -> Verdict:
    """Heuristic hyperbolicity: postcritical samples stay away from J(G)."""
    px = _pixel(pair, grid)
    tol = 3 * px if tol is None else tol
    clouds = PairClouds(pair, n_points, seed) if clouds is None else clouds
    net = postcritical_net(pair, depth) if net is None else net
    pts = np.concatenate([net.points, long_critical_orbits(pair)])
    R = escape_radius(pair)
    pts = pts[np.abs(pts) <= R]
    pts = np.unique(np.round(pts, 12))
    J = np.concatenate([clouds.julia_all(), parabolic_fixed_points(pair)])
    d = min_distance(pts, J, cap=4 * tol)[0]
    if d < px:
        return Verdict(NO, d, f"heuristic: postcritical point within {d:.3g} of J(G)")
    if d > tol and (b_verdict is None or b_verdict.value == YES or net.escaped):
        return Verdict(YES, d, f"heuristic: postcritical distance to J(G) {d:.4g} > {tol:.4g}")
    return Verdict(INC, d, f"heuristic: postcritical distance to J(G) {d:.4g}")


# ---------------------------------------------------------------- equal Julia sets

def _coeff_match(p: Polynomial, q: Polynomial, tol: float) -> float:
    a, b = p.array, q.array
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max() / scale)


def symmetry_data(h: Polynomial, tol: float = 1e-12) -> tuple[complex, int | None]:
    """Center ζ and rotational symmetry order d of J(h); None means all rotations."""
    a = h.array
    n = h.degree
    zeta = -a[n - 1] / (n * a[n])
    # coefficients of h(w + ζ) - ζ
    b = np.zeros(n + 1, dtype=np.complex128)
    pw = np.array([1.0 + 0j])
    lin = np.array([zeta, 1.0 + 0j])
    for k in range(n + 1):
        b[:pw.size] += a[k] * pw
        pw = np.polynomial.polynomial.polymul(pw, lin)
    b[0] -= zeta
    scale = float(np.abs(b).max())
    g = 0
    for k in range(n):
        if abs(b[k]) > tol * scale:
            g = math.gcd(g, n - k)
    return complex(zeta), (g if g else None)


def check_Q_algebraic(pair: GeneratorPair, tol: float = 1e-9) -> Verdict:
    """J(h1) = J(h2) via h1∘h2 = η∘h2∘h1 for a symmetry η of J(h1)."""
    h1, h2 = pair.h1, pair.h2
    n, m = h1.degree, h2.degree
    zeta, d = symmetry_data(h1)
    a = h1.leading * h2.leading ** n / (h2.leading * h1.leading ** m)
    if abs(abs(a) - 1) > tol:
        return Verdict(NO, abs(abs(a) - 1), f"forced rotation factor has modulus {abs(a):.6g} != 1")
    if d is not None and abs(a ** d - 1) > 1e-8:
        return Verdict(NO, abs(a ** d - 1), f"forced rotation is not a symmetry of order {d}")
    lhs = compose(h1, h2)
    rhs_inner = compose(h2, h1)
    c = rhs_inner.array * a
    c[0] += zeta * (1 - a)
    err = _coeff_match(lhs, Polynomial(tuple(c)), tol)
    if err <= tol:
        return Verdict(YES, err, f"h1∘h2 = η∘h2∘h1 with η(z) = a(z-ζ)+ζ, a = {a:.6g}")
    return Verdict(NO, err, f"commutation defect {err:.3g}")


def jordan_like(cloud: np.ndarray, n: int = 256, dilate: int = 1) -> tuple[bool, int]:
    """Complement of the rasterized cloud has exactly two components."""
    cloud = np.asarray(cloud)
    if cloud.size == 0:
        return False, 0
    c = 0.5 * (cloud.real.min() + cloud.real.max()) + 0.5j * (cloud.imag.min() + cloud.imag.max())
    half = 0.55 * max(np.ptp(cloud.real), np.ptp(cloud.imag), 1e-9)
    m = rasterize(cloud, GridSpec.square(half, n, c), dilate)
    _, k = label(~m.bits)
    return k == 2, int(k)


def check_Q(pair: GeneratorPair, clouds: PairClouds | None = None, alg: Verdict | None = None) -> Verdict:
    alg = check_Q_algebraic(pair) if alg is None else alg
    if alg.value != YES:
        return alg
    clouds = PairClouds(pair, 20000, 0) if clouds is None else clouds
    ok, k = jordan_like(clouds.single(1))
    if ok:
        return Verdict(YES, alg.margin, alg.evidence + "; Jordan-like shared boundary (heuristic)")
    return Verdict(NO, alg.margin, alg.evidence + f"; J equal but not Jordan-like ({k} complementary components)")


# ---------------------------------------------------------------- inclusion chain and OSC

@dataclass
class ChainResult:
    order: tuple[int, int] | None
    links: list          # (name, green_margin, strict_distance)
    holds: bool
    strict_margin: float
    notes: list = field(default_factory=list)


def _green_pre(q: Polynomial, f: Polynomial | None, max_iter: int) -> Callable:
    """Green's function of the complement of f^{-1}(K(q)) (f=None: K(q))."""
    if f is None:
        return lambda z: green_values(q, z, max_iter)[0]
    return lambda z: green_values(q, f(z), max_iter)[0] / f.degree


def inclusion_chain(ha: Polynomial, hb: Polynomial, Ja: np.ndarray, Jb: np.ndarray,
                    max_iter: int = DEFAULT_MAX_ITER, tol: float = GREEN_TOL) -> ChainResult:
    """K(ha) ⊂ ha⁻¹K(hb) ⊂ hb⁻¹K(ha) ⊂ K(hb), tested on boundary samples.

    Boundaries: ∂K(ha) = J(ha), ∂ha⁻¹K(hb) = ha⁻¹J(hb), ∂hb⁻¹K(ha) = hb⁻¹J(ha),
    ∂K(hb) = J(hb).  X ⊆ Y is read off from Y's Green function on ∂X;
    strictness is the distance between the two boundary samples.
    """
    bd = [Ja, all_preimages(Jb, ha), all_preimages(Ja, hb), Jb]
    greens = [_green_pre(ha, None, max_iter), _green_pre(hb, ha, max_iter),
              _green_pre(ha, hb, max_iter), _green_pre(hb, None, max_iter)]
    names = ["K(ha)", "ha^-1 K(hb)", "hb^-1 K(ha)", "K(hb)"]
    links = []
    holds = True
    strict = float("inf")
    for k in range(3):
        g = float(np.max(greens[k + 1](bd[k]), initial=0.0))
        dist = min_distance(bd[k], bd[k + 1])[0]
        links.append((f"{names[k]} ⊆ {names[k + 1]}", g, dist))
        holds &= g <= tol
        strict = min(strict, dist)
    # direct end-to-end test, for transitivity bookkeeping
    g_direct = float(np.max(greens[3](bd[0]), initial=0.0))
    links.append((f"{names[0]} ⊆ {names[3]} (direct)", g_direct, min_distance(bd[0], bd[3])[0]))
    notes = [SAMPLED]
    if holds and g_direct > tol:
        notes.append("chain links pass but the direct test fails: inconsistent sampling")
    return ChainResult(None, links, bool(holds), strict, notes)


def order_filled_sets(pair: GeneratorPair, J1: np.ndarray, J2: np.ndarray,
                      max_iter: int = DEFAULT_MAX_ITER, tol: float = GREEN_TOL):
    """(a, b) with K(h_a) ⊆ K(h_b) by sampled Green comparison, or None."""
    e12 = float(np.max(green_values(pair.h2, J1, max_iter)[0], initial=0.0))
    e21 = float(np.max(green_values(pair.h1, J2, max_iter)[0], initial=0.0))
    if e12 <= tol and (e12 <= e21 or e21 > tol):
        return (1, 2), e12, e21
    if e21 <= tol:
        return (2, 1), e12, e21
    return None, e12, e21


def check_osc(pair: GeneratorPair, grid: GridSpec | int = 512, n_boundary_samples: int = 2000,
              seed: int = 0, max_iter: int = DEFAULT_MAX_ITER, clouds: PairClouds | None = None,
              return_chain: bool = False):
    """Open set condition with U = int K(h_b) \\ K(h_a) for nested filled sets."""
    if isinstance(grid, int):
        grid = GridSpec.square(escape_radius(pair), grid)
    if clouds is None:
        J1 = boundary_cloud(pair.h1, n_boundary_samples, seed + 1).points
        J2 = boundary_cloud(pair.h2, n_boundary_samples, seed + 2).points
    else:
        J1, J2 = clouds.single(1)[:n_boundary_samples], clouds.single(2)[:n_boundary_samples]
    order, e12, e21 = order_filled_sets(pair, J1, J2, max_iter)
    if order is None:
        v = Verdict(NO, min(e12, e21), "filled Julia sets are not nested (sampled Green test)")
        return (v, None) if return_chain else v
    a, b = order
    ha, hb = pair[a], pair[b]
    Ja, Jb = (J1, J2) if a == 1 else (J2, J1)
    chain = inclusion_chain(ha, hb, Ja, Jb, max_iter)
    chain.order = order
    if not chain.holds:
        worst = max(l[1] for l in chain.links[:3])
        v = Verdict(NO, -worst, f"inclusion chain fails (max Green excess {worst:.3g}); {SAMPLED}")
        return (v, chain) if return_chain else v
    pts = grid.points().ravel()
    R = escape_radius(pair)
    in_b = filled_membership(hb, pts, max_iter, R)
    in_a = filled_membership(ha, pts, max_iter, R)
    U = in_b & ~in_a
    if not U.any():
        v = Verdict(NO, 0.0, "U = int K(h_b) \\ K(h_a) is empty on the grid (filled sets coincide)")
        return (v, chain) if return_chain else v
    pre = []
    for h in pair.maps:
        w = h(pts)
        pre.append(filled_membership(hb, w, max_iter, R) & ~filled_membership(ha, w, max_iter, R))
    overlap = int((pre[0] & pre[1]).sum())
    inside = int(((pre[0] | pre[1]) & ~U).sum())
    ev = (f"roles K(h{a}) ⊆ K(h{b}); chain holds (strict margin {chain.strict_margin:.3g}); "
          f"|U|={int(U.sum())} px, preimage overlap {overlap} px, escaping preimage px {inside}; {SAMPLED}")
    if overlap == 0:
        v = Verdict(YES, chain.strict_margin, ev)
    else:
        v = Verdict(NO, -overlap, ev)
    return (v, chain) if return_chain else v


# ---------------------------------------------------------------- boundary partners

@dataclass
class PartnerResult:
    g: Polynomial
    t1: float
    t0: float
    theta: float
    s: float
    z0: complex
    bracket: tuple[float, float]
    trace: list
    failing_link: str


def partner_map(t: float, theta: float, b: complex, d: int) -> Polynomial:
    """g_t(z) = t e^{iθ}(z − b)^d + b."""
    c = t * cmath.exp(1j * theta)
    coeffs = [c * math.comb(d, k) * (-b) ** (d - k) for k in range(d + 1)]
    coeffs[0] += b
    return Polynomial(tuple(coeffs))


def construct_partner(h1: Polynomial, d: int, b: complex, bisect_tol: float = 1e-3,
                      n_points: int = 4000, seed: int = 0, strict_tol: float | None = None,
                      max_iter: int = DEFAULT_MAX_ITER) -> PartnerResult:
    """Bisect t for the supremum of the strict chain K(h1) ⊂⊂ h1⁻¹K(g) ⊂⊂ g⁻¹K(h1) ⊂⊂ K(g)."""
    if (h1.degree, d) == (2, 2):
        raise InvalidBase("degrees (2, 2) are excluded")
    if d < 2:
        raise ValueError("d must be >= 2")
    b = complex(b)
    mono, center = h1.is_centered_monomial()
    if mono and abs(b - center) < 1e-9:
        raise InvalidBase(f"b equals the center {center} of the monomial form of h1")
    J1 = boundary_cloud(h1, n_points, seed).points
    if not filled_membership(h1, np.array([b]), max_iter)[0]:
        raise InvalidBase(f"b={b} is not in K(h1)")
    dist_b = float(np.abs(J1 - b).min())
    s_idx = int(np.argmax(np.abs(J1 - b)))
    z0 = complex(J1[s_idx])
    s = float(abs(z0 - b))
    if dist_b < 1e-3 * s:
        raise InvalidBase(f"b={b} lies on J(h1) (distance {dist_b:.3g})")
    strict_tol = s / 128 if strict_tol is None else strict_tol
    alphas = 2 * np.pi * np.arange(64) / 64
    gv = green_values(h1, b + s * np.exp(1j * alphas), max_iter)[0]
    alpha = float(alphas[int(np.argmax(gv))])
    theta = (alpha - d * cmath.phase(z0 - b)) % (2 * np.pi)
    t_hi = s ** (-(d - 1))
    trace = []

    def strict_chain(t):
        g = partner_map(t, theta, b, d)
        Jg = b + t ** (-1.0 / (d - 1)) * np.exp(2j * np.pi * (np.arange(n_points) + 0.5) / n_points)
        ch = inclusion_chain(h1, g, J1, Jg, max_iter)
        bad = [l[0] for l in ch.links[:3] if l[1] > GREEN_TOL or l[2] <= strict_tol]
        ok = not bad
        trace.append((t, ok, ch.strict_margin))
        return ok, (bad[0] if bad else "")

    t0 = (2 * s) ** (-(d - 1))
    for _ in range(8):
        if strict_chain(t0)[0]:
            break
        t0 /= 4
    else:
        raise BisectionFailed("strict chain never holds at small t")
    lo, hi = t0, t_hi
    ok_hi, why_hi = strict_chain(hi)
    if ok_hi:
        raise BisectionFailed(f"strict chain still holds at t = s^-(d-1) = {hi:.6g}")
    failing = why_hi
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        ok, why = strict_chain(mid)
        if ok:
            lo = mid
        else:
            hi, failing = mid, why
    return PartnerResult(partner_map(lo, theta, b, d), lo, t0, theta, s, z0, (lo, hi), trace, failing)


# ---------------------------------------------------------------- classification

LOCUS_CODE = {"notB": 0, "D": 1, "C": 2, "Q": 3, "BnotH": 4, "inconclusive": 5}


@dataclass
class ClassificationReport:
    in_B: Verdict
    is_connected: Verdict
    in_H: Verdict
    in_I: Verdict
    in_Q: Verdict
    osc_holds: Verdict
    robin_difference: float
    budgets: dict
    warnings: list = field(default_factory=list)

    FIELDS = ("in_B", "is_connected", "in_H", "in_I", "in_Q", "osc_holds")

    def to_dict(self) -> dict:
        out = {k: getattr(self, k).value for k in self.FIELDS}
        out["margins"] = {k: getattr(self, k).margin for k in self.FIELDS}
        out["evidence"] = {k: getattr(self, k).evidence for k in self.FIELDS}
        out["robin_difference"] = self.robin_difference
        out["budgets"] = dict(self.budgets)
        out["warnings"] = list(self.warnings)
        return out

    @property
    def code(self) -> int:
        if self.in_B.value == NO:
            return LOCUS_CODE["notB"]
        if self.in_B.value != YES:
            return LOCUS_CODE["inconclusive"]
        if self.in_H.value == NO:
            return LOCUS_CODE["BnotH"]
        if self.in_Q.value == YES:
            return LOCUS_CODE["Q"]
        if self.is_connected.value == NO:
            return LOCUS_CODE["D"]
        if self.is_connected.value == YES:
            return LOCUS_CODE["C"]
        return LOCUS_CODE["inconclusive"]

    @property
    def any_inconclusive(self) -> bool:
        return any(getattr(self, k).value == INC for k in self.FIELDS)


def report_violations(rep: ClassificationReport, degrees: tuple[int, int]) -> list[str]:
    """Combinations ruled out by theory."""
    v = []
    if rep.is_connected.value == NO and rep.in_Q.value == YES:
        v.append("invariant violated: disconnected and Q")
    if rep.is_connected.value == NO and rep.in_B.value == YES and rep.in_I.value == YES:
        v.append("invariant violated: disconnected, B and I")
    if rep.in_B.value == YES and rep.is_connected.value == NO and tuple(degrees) == (2, 2):
        v.append("invariant violated: B and disconnected with degrees (2,2)")
    return v


def _safe(fn, *a, **kw) -> Verdict:
    try:
        return fn(*a, **kw)
    except SemiJuliaError as exc:
        return Verdict(INC, float("nan"), f"{type(exc).__name__}: {exc}")


def classify(pair: GeneratorPair, budgets: Budgets | None = None) -> ClassificationReport:
    bud = Budgets() if budgets is None else budgets
    warnings = []
    if pair.degrees == (2, 2):
        warnings.append("degrees (2,2): excluded from the disconnected-boundary theory")
    net = postcritical_net(pair, bud.depth, bud.merge_tol)
    vB = check_B(pair, bud.depth, bud.max_iter, merge_tol=bud.merge_tol, net=net)
    if vB.value == NO and bud.skip_unbounded:
        skip = Verdict(INC, float("nan"), "skipped: postcritical set unbounded")
        vQ = _safe(check_Q_algebraic, pair)
        rep = ClassificationReport(vB, skip, skip, skip, vQ if vQ.value == NO else skip, skip,
                                   robin_inequality(pair), asdict(bud), warnings)
        rep.warnings += report_violations(rep, pair.degrees)
        return rep
    clouds = PairClouds(pair, bud.n_points, bud.seed)
    vC = _safe(check_connected, pair, bud.n_points, bud.seed, grid=bud.grid, clouds=clouds)
    vI = _safe(check_I, pair, bud.n_points, bud.seed, grid=bud.grid, clouds=clouds)
    vQ = _safe(check_Q, pair, clouds)
    vH = _safe(check_H, pair, bud.depth, bud.n_points, grid=bud.grid, clouds=clouds, net=net, b_verdict=vB)
    vO = _safe(check_osc, pair, bud.grid, bud.n_boundary_samples, bud.seed, bud.max_iter, clouds=clouds)
    rep = ClassificationReport(vB, vC, vH, vI, vQ, vO, robin_inequality(pair), asdict(bud), warnings)
    rep.warnings += report_violations(rep, pair.degrees)
    return rep


# ---------------------------------------------------------------- parameter scans

@dataclass
class FamilySpec:
    """h2(z) = a·z^d + c with h1 fixed; a ranges over a rectangle or a path."""

    h1: Polynomial
    d: int
    c: complex = 0j
    re_range: tuple[float, float] = (0.5, 1.5)
    im_range: tuple[float, float] = (-0.5, 0.5)
    path: Sequence[complex] | None = None

    def h2(self, a: complex) -> Polynomial:
        coeffs = [0j] * (self.d + 1)
        coeffs[0] = complex(self.c)
        coeffs[self.d] = complex(a)
        return Polynomial(tuple(coeffs))

    def parameters(self, resolution: int) -> np.ndarray:
        if self.path is not None:
            return np.asarray(self.path, dtype=np.complex128).reshape(1, -1)
        g = GridSpec(complex(0.5 * sum(self.re_range), 0.5 * sum(self.im_range)),
                     0.5 * (self.re_range[1] - self.re_range[0]),
                     0.5 * (self.im_range[1] - self.im_range[0]), resolution, resolution)
        return g.points()


@dataclass
class LocusMap:
    params: np.ndarray        # complex, shape (ny, nx)
    codes: np.ndarray         # int, same shape
    warnings: list


def _scan_cell(args):
    fam, a, bud = args
    try:
        rep = classify(GeneratorPair(fam.h1, fam.h2(a)), bud)
        return rep.code, rep.warnings
    except (SemiJuliaError, ValueError) as exc:
        return LOCUS_CODE["inconclusive"], [f"a={a}: {exc}"]


def scan(family: FamilySpec, resolution: int = 16, budgets: Budgets | None = None,
         workers: int = 1) -> LocusMap:
    """Classify every parameter cell; results are merged in cell order."""
    bud = Budgets(n_points=4000, grid=256, n_boundary_samples=1000) if budgets is None else budgets
    params = family.parameters(resolution)
    cells = [(family, complex(a), bud) for a in params.ravel()]
    if workers > 1:
        import multiprocessing
        from concurrent.futures import ProcessPoolExecutor
        # spawn: forking after OpenMP threads start is unsafe
        with ProcessPoolExecutor(workers, mp_context=multiprocessing.get_context("spawn")) as ex:
            results = list(ex.map(_scan_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        results = [_scan_cell(c) for c in cells]
    codes = np.array([r[0] for r in results], dtype=np.int64).reshape(params.shape)
    warns = sorted({w for r in results for w in r[1]})
    return LocusMap(params, codes, warns)
