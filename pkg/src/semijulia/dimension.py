"""Pressure sums, Bowen dimension estimates and box counting."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BracketInvalid, DegenerateFit, PreimageNearCritical
from .fields import PixelMask, PointCloud
from .polycore import GeneratorPair, preimages_many, spherical_norm

LEAF_BUDGET = 10 ** 7
NEAR_CRITICAL = 1e-12


def preimage_tree_lognorms(pair: GeneratorPair, z: complex, n: int,
                           leaf_budget: int = LEAF_BUDGET) -> list[np.ndarray]:
    """log ‖D(h_w)_y‖_s for every length-k word w and every y in h_w^{-1}(z), k = 1..n.

    Breadth-first over the preimage tree; each level is one vectorized root
    solve per generator.  Duplicated generators are enumerated once per level
    (word multiplicity 2^k removed).
    """
    maps = [pair.h1] if pair.duplicated else list(pair.maps)
    branching = sum(m.degree for m in maps)
    if branching ** n > leaf_budget:
        raise MemoryError(f"{branching}^{n} leaves exceed budget {leaf_budget}")
    pts = np.array([complex(z)])
    acc = np.zeros(1)
    levels = []
    for _ in range(n):
        new_pts, new_acc = [], []
        for m in maps:
            roots = preimages_many(m, pts)
            nrm = spherical_norm(m, roots)
            if np.any(nrm < NEAR_CRITICAL):
                raise PreimageNearCritical(f"preimage of norm {nrm.min():.3g} under {m}")
            new_pts.append(roots.ravel())
            new_acc.append((acc[:, None] + np.log(nrm)).ravel())
        pts = np.concatenate(new_pts)
        acc = np.concatenate(new_acc)
        levels.append(acc)
    return levels


def _log_sum(lognorms: np.ndarray, t: float) -> float:
    x = -t * lognorms
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def z_sum(pair: GeneratorPair, z: complex, t: float, n: int) -> float:
    """Level-n sum S_n(z,t) = Σ_w Σ_{y ∈ h_w^{-1}(z)} ‖D(h_w)_y‖_s^{-t}, multiplicities counted."""
    return math.exp(_log_sum(preimage_tree_lognorms(pair, z, n)[-1], t))


def dim_lower_bound(d1: int, d2: int) -> float:
    """log(d1+d2) / Σ (d_j/(d1+d2)) log d_j."""
    if d1 < 2 or d2 < 2:
        raise ValueError("degrees must be >= 2")
    s = d1 + d2
    return math.log(s) / (d1 / s * math.log(d1) + d2 / s * math.log(d2))


@dataclass
class DimensionReport:
    delta_estimate: float
    delta_plain: float
    word_depths_used: list
    bisection_trace: list
    lower_bound: float
    richardson_gap: float
    box_dim: float | None = None
    r_squared: float | None = None
    warnings: list = field(default_factory=list)
    budgets: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _bisect(f, lo: float, hi: float, tol: float, trace: list | None = None) -> float:
    flo, fhi = f(lo), f(hi)
    if trace is not None:
        trace += [(lo, flo), (hi, fhi)]
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketInvalid(f"proxy has the same sign at t={lo} ({flo:.4g}) and t={hi} ({fhi:.4g})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if trace is not None:
            trace.append((mid, fm))
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bowen_dimension(pair: GeneratorPair, z: complex, n_max: int = 8,
                    t_bracket: tuple[float, float] = (0.0, 2.05), tol: float = 1e-6) -> DimensionReport:
    """Zero of the finite-level pressure proxy.

    The plain proxy (1/n) log S_n(z,t) carries an O(1/n) offset from the
    base-point constant; the reported estimate is the zero of the
    differenced proxy log(S_n/S_{n-1}), which cancels it.  The plain zero
    is kept in ``delta_plain`` and their difference in ``richardson_gap``.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    notes = []
    if pair.duplicated:
        notes.append("duplicated generators: word multiplicity 2^n divided out")
    d1, d2 = pair.degrees
    if (d1, d2) == (2, 2):
        notes.append("degrees (2,2): the lower bound's degree hypotheses do not apply")
    levels = preimage_tree_lognorms(pair, z, n_max)
    top, prev = levels[-1], levels[-2]
    trace: list = []

    def plain(t):
        return _log_sum(top, t) / n_max

    def diff(t):
        return _log_sum(top, t) - _log_sum(prev, t)

    lo, hi = t_bracket
    delta = _bisect(diff, lo, hi, tol, trace)
    delta_plain = _bisect(plain, lo, hi, tol)
    lb = dim_lower_bound(d1, d2) if not pair.duplicated else float("nan")
    return DimensionReport(delta, delta_plain, [n_max - 1, n_max], trace, lb,
                           abs(delta - delta_plain), warnings=notes,
                           budgets={"n_max": n_max, "leaves": int(top.size), "tol": tol})


def box_dimension(data, scale_range: tuple[int, int] | None = None, min_scales: int = 5,
                  min_per_box: float = 8.0) -> tuple[float, float]:
    """Least-squares slope of log N(s) against log(1/s), boxes of side s = L·2^-k.

    ``data`` is a PointCloud, a complex array or a PixelMask (nodes of set
    bits).  Without ``scale_range`` the fit uses the finest ``min_scales``
    usable levels: boxes must hold at least ``min_per_box`` points on
    average (clouds) or be at least one pixel wide (masks).  Coarse levels
    are dropped because boundary terms bias them.
    """
    if isinstance(data, PixelMask):
        pts = data.points()
        finest = data.grid.pixel
    else:
        pts = data.points if isinstance(data, PointCloud) else np.asarray(data, dtype=np.complex128).ravel()
        finest = 0.0
    if pts.size < 2:
        raise DegenerateFit("need at least two points")
    x0, y0 = pts.real.min(), pts.imag.min()
    L = max(np.ptp(pts.real), np.ptp(pts.imag)) * (1 + 1e-9)
    if L <= 0:
        raise DegenerateFit("all points coincide")

    def count(k):
        s = L / 2 ** k
        ij = np.floor((pts.real - x0) / s).astype(np.int64) * (2 ** (k + 1)) + \
            np.floor((pts.imag - y0) / s).astype(np.int64)
        return np.unique(ij).size

    if scale_range is None:
        ks, ns = [], []
        k = 2
        while k < 40:
            if finest and L / 2 ** k < finest:
                break
            c = count(k)
            if not finest and pts.size / c < min_per_box:
                break
            ks.append(k)
            ns.append(c)
            k += 1
        ks, ns = ks[-min_scales:], ns[-min_scales:]
    else:
        ks = list(range(scale_range[0], scale_range[1] + 1))
        ns = [count(k) for k in ks]
    if len(ks) < min_scales:
        raise DegenerateFit(f"only {len(ks)} usable scales (need {min_scales})")
    x = np.array(ks) * math.log(2.0)
    y = np.log(np.array(ns, dtype=np.float64))
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 1.0
    return float(slope), r2


def pair_dimension_report(pair: GeneratorPair, z: complex, cloud: PointCloud | None = None,
                          n_max: int = 8, **kw) -> DimensionReport:
    rep = bowen_dimension(pair, z, n_max, **kw)
    if cloud is not None:
        try:
            rep.box_dim, rep.r_squared = box_dimension(cloud)
        except DegenerateFit as exc:
            rep.warnings.append(f"box dimension unavailable: {exc}")
    if not math.isnan(rep.lower_bound) and rep.lower_bound > rep.delta_estimate + 0.1:
        warnings.warn("lower bound exceeds the estimate by more than 0.1")
        rep.warnings.append("lower bound exceeds delta estimate by > 0.1")
    return rep
