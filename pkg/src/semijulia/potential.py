"""Green's functions with pole at infinity, Robin constants and escape radii."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .polycore import GeneratorPair, Polynomial

DEFAULT_MAX_ITER = 200
# Orbits are pushed past this modulus before the Robin correction is applied;
# the neglected term is O(1/|w|).
GREEN_PUSH_RADIUS = 1e12
EQUAL_TOL = 1e-10


@dataclass(frozen=True)
class GreenEvaluation:
    value: float
    iterations_used: int
    converged: bool


def robin_constant(p: Polynomial) -> float:
    """(1/(d-1)) log|leading coefficient|."""
    return float(np.log(abs(p.leading)) / (p.degree - 1))


def doubling_radius(p: Polynomial, factor: float = 2.0) -> float:
    """Smallest r such that |z| > r implies |p(z)| > factor·|z|.

    Uses |p(z)| >= |a_d| r^d - sum_{k<d} |a_k| r^k; the right side minus
    factor·r has a single positive root by Descartes' rule of signs.
    """
    a = np.abs(p.array)
    d = p.degree
    lower = a.copy()
    lower[:d] *= -1.0
    lower[1] -= factor

    def f(r):
        return np.polynomial.polynomial.polyval(r, lower)

    hi = max(1.0, (a[:d].sum() + factor) / a[d]) * 1.0001 + 1e-12
    while f(hi) <= 0:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi


def escape_radius_poly(p: Polynomial) -> float:
    return max(2.0, 1.05 * doubling_radius(p))


def escape_radius(pair: GeneratorPair) -> float:
    """Common outer barrier R: beyond it both generators at least double |z|."""
    return max(escape_radius_poly(pair.h1), escape_radius_poly(pair.h2))


def green_values(p: Polynomial, z, max_iter: int = DEFAULT_MAX_ITER,
                 escape_radius: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Green's function; returns (values, iterations used)."""
    R = escape_radius_poly(p) if escape_radius is None else float(escape_radius)
    z = np.asarray(z, dtype=np.complex128)
    vals, used = _kernels.green_values(p.array, z.ravel(), R, int(max_iter),
                                       robin_constant(p), max(GREEN_PUSH_RADIUS, 10 * R))
    return vals.reshape(z.shape), used.reshape(z.shape)


def green_value(p: Polynomial, z: complex, max_iter: int = DEFAULT_MAX_ITER,
                escape_radius: float | None = None) -> GreenEvaluation:
    """Green's function of the basin of infinity of p at z.

    A point whose orbit stays within the escape radius for ``max_iter`` steps
    is reported inside with value 0.
    """
    vals, used = green_values(p, np.array([z]), max_iter, escape_radius)
    return GreenEvaluation(float(vals[0]), int(used[0]), True)


def filled_membership(p: Polynomial, z, max_iter: int = DEFAULT_MAX_ITER,
                      escape_radius: float | None = None) -> np.ndarray:
    """Elementwise budgeted membership in the filled Julia set K(p)."""
    R = escape_radius_poly(p) if escape_radius is None else float(escape_radius)
    z = np.asarray(z, dtype=np.complex128)
    steps = _kernels.escape_steps(p.array, z.ravel(), R, int(max_iter))
    return (steps < 0).reshape(z.shape)


def in_filled_julia(p: Polynomial, z: complex, max_iter: int = DEFAULT_MAX_ITER,
                    escape_radius: float | None = None) -> bool:
    return bool(filled_membership(p, np.array([z]), max_iter, escape_radius)[0])


def robin_inequality(pair: GeneratorPair) -> float:
    """r1 - r2 for the Robin constants of the two generators."""
    return robin_constant(pair.h1) - robin_constant(pair.h2)


def robin_equal(pair: GeneratorPair, tol: float = EQUAL_TOL) -> bool:
    """Equal Robin constants: the pair is a candidate for equal Julia sets."""
    return abs(robin_inequality(pair)) < tol


@dataclass(frozen=True)
class InclusionEvidence:
    """Sampled (not proved) evidence that one filled set sits inside another."""

    holds: bool
    margin: float       # max Green value of the outer set over inner-boundary samples
    n_samples: int
    note: str = "sampled evidence"


def inclusion_from_samples(outer_green, inner_boundary: np.ndarray, tol: float = 1e-9) -> InclusionEvidence:
    """Test A ⊆ B from samples of ∂A and the Green function of B's complement.

    For full compact sets, A ⊆ B iff ∂A ⊆ B, and ∂A ⊆ B iff B's Green
    function vanishes on ∂A.  ``outer_green`` maps points to Green values.
    """
    pts = np.asarray(inner_boundary, dtype=np.complex128).ravel()
    g = np.asarray(outer_green(pts), dtype=np.float64)
    margin = float(g.max()) if g.size else 0.0
    return InclusionEvidence(margin <= tol, margin, int(pts.size))


def filled_inclusion(h_inner: Polynomial, h_outer: Polynomial, inner_boundary: np.ndarray,
                     max_iter: int = DEFAULT_MAX_ITER, tol: float = 1e-9) -> InclusionEvidence:
    """K(h_inner) ⊆ K(h_outer), sampled on J(h_inner)."""
    return inclusion_from_samples(lambda z: green_values(h_outer, z, max_iter)[0], inner_boundary, tol)
