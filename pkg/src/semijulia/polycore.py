"""Complex polynomial arithmetic: evaluation, composition, roots, critical values.

Coefficients are stored lowest degree first, so ``coeffs[k]`` multiplies ``z**k``.
Everything here is a pure function of immutable values.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CompositionTooLarge, NoRepellingFixedPoint, NonConvergence

SATURATION = 1e300
MAX_COMPOSE_DEGREE = 4096
ROOT_MAX_ITER = 200
ROOT_RESTARTS = 5
MERGE_REL_TOL = 1e-7
DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class Polynomial:
    """A complex polynomial of degree >= 2."""

    coeffs: tuple[complex, ...]
    degree: int = field(init=False, compare=False)
    leading: complex = field(init=False, compare=False)

    def __post_init__(self):
        cs = [complex(c) for c in self.coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if len(cs) < 3:
            raise ValueError(f"polynomial must have degree >= 2, got coefficients {self.coeffs!r}")
        if not all(np.isfinite(c.real) and np.isfinite(c.imag) for c in cs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "degree", len(cs) - 1)
        object.__setattr__(self, "leading", cs[-1])

    @classmethod
    def monomial(cls, c: complex, d: int) -> "Polynomial":
        """``c * z**d``."""
        return cls(tuple([0j] * d + [complex(c)]))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.complex128)

    def __call__(self, z):
        """Horner evaluation; works elementwise on numpy arrays."""
        out = np.zeros_like(np.asarray(z, dtype=np.complex128)) + self.coeffs[-1]
        with np.errstate(over="ignore", invalid="ignore"):
            for c in self.coeffs[-2::-1]:
                out = out * z + c
        return out if np.ndim(out) else complex(out)

    def deriv(self, z):
        """Value of p'(z), elementwise."""
        dc = derivative(self)
        out = np.zeros_like(np.asarray(z, dtype=np.complex128)) + dc[-1]
        with np.errstate(over="ignore", invalid="ignore"):
            for c in dc[-2::-1]:
                out = out * z + c
        return out if np.ndim(out) else complex(out)

    def is_centered_monomial(self, tol: float = 1e-12) -> tuple[bool, complex]:
        """Whether p(z) = c (z - b)^d + b for some b; returns (flag, b)."""
        d = self.degree
        b = -self.coeffs[d - 1] / (d * self.leading)
        shifted = compose_affine(self, b)
        scale = max(1.0, max(abs(c) for c in self.coeffs))
        ok = all(abs(c) <= tol * scale for c in shifted[1:d]) and abs(shifted[0] - b) <= tol * scale
        return ok, b

    def __str__(self) -> str:
        return format_polynomial(self)


def compose_affine(p: Polynomial, b: complex) -> np.ndarray:
    """Coefficients of p(z + b) as an array (lowest first)."""
    out = np.zeros(1, dtype=np.complex128)
    lin = np.array([b, 1.0], dtype=np.complex128)
    for c in p.coeffs[::-1]:
        out = np.polynomial.polynomial.polymul(out, lin)
        out[0] += c
    return out[: p.degree + 1]


def evaluate(p: Polynomial, z: complex) -> complex:
    """Evaluate p at z, saturating at magnitude 1e300 instead of overflowing."""
    return evaluate_flagged(p, z)[0]


def evaluate_flagged(p: Polynomial, z: complex) -> tuple[complex, bool]:
    """Evaluate p at z; the flag is True when the value saturated."""
    acc = complex(p.coeffs[-1])
    for c in p.coeffs[-2::-1]:
        acc = acc * z + c
        if not (abs(acc) <= SATURATION):
            arg = np.angle(acc) if np.isfinite(acc.real) and np.isfinite(acc.imag) else 0.0
            return complex(SATURATION * np.exp(1j * arg)), True
    return acc, False


def compose(p: Polynomial, q: Polynomial, max_degree: int = MAX_COMPOSE_DEGREE) -> Polynomial:
    """Return p∘q, i.e. z ↦ p(q(z))."""
    deg = p.degree * q.degree
    if deg > max_degree:
        raise CompositionTooLarge(f"degree {deg} exceeds cap {max_degree}")
    qa = q.array
    out = np.array([p.coeffs[-1]], dtype=np.complex128)
    for c in p.coeffs[-2::-1]:
        out = np.polynomial.polynomial.polymul(out, qa)
        out[0] += c
    return Polynomial(tuple(out))


def derivative(p: Polynomial) -> np.ndarray:
    """Formal derivative coefficients (lowest first); may have degree < 2."""
    return np.array([k * p.coeffs[k] for k in range(1, p.degree + 1)], dtype=np.complex128)


def root_bound(coeffs: np.ndarray) -> np.ndarray:
    """Cauchy bound 1 + max|a_k / a_n| for each row of a coefficient batch."""
    a = np.atleast_2d(coeffs)
    return 1.0 + np.max(np.abs(a[:, :-1] / a[:, -1:]), axis=1)


def _horner_pair(a: np.ndarray, z: np.ndarray):
    """p(z) and p'(z) for batched coefficients ``a`` (B, n+1) at points ``z`` (B, k)."""
    n = a.shape[1] - 1
    val = np.broadcast_to(a[:, n:n + 1], z.shape).astype(np.complex128)
    der = np.zeros_like(val)
    for k in range(n - 1, -1, -1):
        der = der * z + val
        val = val * z + a[:, k:k + 1]
    return val, der


def _aberth(a: np.ndarray, rng: np.random.Generator | None = None,
            max_iter: int = ROOT_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Aberth–Ehrlich simultaneous iteration on a batch of polynomials.

    Returns all roots (B, n) and a per-row convergence mask.
    """
    B, n1 = a.shape
    n = n1 - 1
    radius = root_bound(a)
    offset = 0.4 if rng is None else rng.uniform(0, 2 * np.pi)
    angles = offset + 2 * np.pi * np.arange(n) / n
    z = radius[:, None] * np.exp(1j * angles)[None, :]
    if n == 1:
        return (-a[:, :1] / a[:, 1:2]), np.ones(B, dtype=bool)
    active = np.arange(B)
    done = np.zeros(B, dtype=bool)
    eye = np.eye(n, dtype=bool)
    floor = 1e-6 * radius
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            za = z[active]
            aa = a[active]
            val, der = _horner_pair(aa, za)
            ratio = val / der
            diff = za[:, :, None] - za[:, None, :]
            diff[:, eye] = 1.0
            inv = 1.0 / diff
            inv[:, eye] = 0.0
            s = inv.sum(axis=2)
            corr = ratio / (1.0 - ratio * s)
            bad = ~np.isfinite(corr)
            if bad.any():
                # p' vanished or roots collided: nudge instead of stepping
                corr = np.where(bad, 1e-8 * (1 + np.abs(za)) * np.exp(1j * 2.1), corr)
            corr = np.where(val == 0, 0, corr)
            za = za - corr
            z[active] = za
            small = np.abs(corr) <= 4e-16 * np.maximum(np.abs(za), floor[active, None])
            row_done = small.all(axis=1)
            done[active[row_done]] = True
            active = active[~row_done]
            if active.size == 0:
                break
    return z, done


def _merge_close(z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Snap roots whose distance is below MERGE_REL_TOL × root bound to their cluster mean."""
    n = z.shape[1]
    tol = MERGE_REL_TOL * root_bound(a)
    d = np.abs(z[:, :, None] - z[:, None, :])
    close = (d < tol[:, None, None]) & ~np.eye(n, dtype=bool)[None]
    rows = np.nonzero(close.any(axis=(1, 2)))[0]
    for r in rows:
        labels = list(range(n))
        for i in range(n):
            for j in range(i + 1, n):
                if close[r, i, j]:
                    li, lj = labels[i], labels[j]
                    labels = [li if lab == lj else lab for lab in labels]
        lab = np.array(labels)
        for c in set(labels):
            members = lab == c
            if members.sum() > 1:
                z[r, members] = z[r, members].mean()
    return z


def roots_batch(a: np.ndarray, residual_scale: np.ndarray | None = None,
                rtol: float = 1e-9) -> np.ndarray:
    """All roots (with multiplicity) of each row of a lowest-first coefficient batch.

    A row is accepted when every root satisfies ``|p(root)| <= rtol * residual_scale``;
    rows that fail are retried with randomized initial circles before raising.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if residual_scale is None:
        residual_scale = np.maximum(1.0, np.abs(a[:, 0]))
    z, _ = _aberth(a)
    z = _merge_close(z, a)

    def failing(zz, aa, scale):
        val, _ = _horner_pair(aa, zz)
        with np.errstate(invalid="ignore"):
            return ~(np.abs(val).max(axis=1) <= rtol * scale)

    bad = np.nonzero(failing(z, a, residual_scale))[0]
    rng = np.random.default_rng(12345)
    for _ in range(ROOT_RESTARTS):
        if bad.size == 0:
            break
        zz, _ = _aberth(a[bad], rng=rng)
        zz = _merge_close(zz, a[bad])
        z[bad] = zz
        bad = bad[failing(zz, a[bad], residual_scale[bad])]
    if bad.size:
        raise NonConvergence(f"root finder failed on {bad.size} of {a.shape[0]} polynomials")
    return z


def preimages_many(p: Polynomial, w) -> np.ndarray:
    """All preimages of each target in ``w``: shape (len(w), deg p)."""
    w = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    a = np.tile(p.array, (w.size, 1))
    a[:, 0] -= w
    return roots_batch(a, residual_scale=np.maximum(1.0, np.abs(w)))


def preimages(p: Polynomial, w: complex) -> list[complex]:
    """Roots of p(z) - w with multiplicity, ``deg p`` of them."""
    return [complex(v) for v in preimages_many(p, [w])[0]]


def _dedup(values: Iterable[complex], tol: float = DEDUP_TOL) -> list[complex]:
    out: list[complex] = []
    for v in values:
        if all(abs(v - u) > tol * max(1.0, abs(u)) for u in out):
            out.append(complex(v))
    return out


def critical_points(p: Polynomial) -> list[complex]:
    dc = derivative(p)
    zs = roots_batch(dc[None, :], residual_scale=np.array([max(1.0, np.abs(dc).max())]))[0]
    return _dedup(zs)


def critical_values(p: Polynomial) -> list[complex]:
    """Finite critical values of p, deduplicated."""
    return _dedup(p(c) for c in critical_points(p))


def spherical_norm(p: Polynomial, z):
    """Norm of Dp_z in the spherical metric: |p'(z)| (1 + |z|²) / (1 + |p(z)|²)."""
    z = np.asarray(z, dtype=np.complex128)
    pz = p(z)
    dz = p.deriv(z)
    with np.errstate(over="ignore"):
        out = np.abs(dz) * (1.0 + np.abs(z) ** 2) / (1.0 + np.abs(pz) ** 2)
    return out if np.ndim(out) else float(out)


def fixed_points(p: Polynomial) -> list[complex]:
    a = p.array.copy()
    a[1] -= 1.0
    return [complex(v) for v in roots_batch(a[None, :], residual_scale=np.array([max(1.0, np.abs(a).max())]))[0]]


def repelling_fixed_point(p: Polynomial) -> complex:
    """The fixed point with the largest multiplier (ties broken by larger real part)."""
    cands = []
    for z in fixed_points(p):
        m = abs(p.deriv(z))
        if m > 1.0 + 1e-6:
            cands.append((-round(m, 9), -round(z.real, 9), -round(z.imag, 9), z))
    if not cands:
        raise NoRepellingFixedPoint(str(p))
    return sorted(cands)[0][3]


def repelling_periodic_point(p: Polynomial, max_period: int = 4) -> complex:
    """A repelling periodic point of least period ≤ max_period (it lies on J(p)).

    Falls back to periods k ≥ 2 when, as for parabolic maps, no fixed point
    repels.
    """
    try:
        return repelling_fixed_point(p)
    except NoRepellingFixedPoint:
        pass
    q = p
    for k in range(2, max_period + 1):
        q = compose(p, q)
        best = None
        for z in fixed_points(q):
            m = abs(q.deriv(z))
            if m > 1.0 + 1e-6 and (best is None or m > best[0]):
                best = (m, z)
        if best is not None:
            return best[1]
    raise NoRepellingFixedPoint(f"{p}: no repelling cycle of period <= {max_period}")


def attracting_fixed_points(p: Polynomial) -> list[complex]:
    return [z for z in fixed_points(p) if abs(p.deriv(z)) < 1.0 - 1e-9]


@dataclass(frozen=True)
class Word:
    """A finite word over {1, 2}; ``h_w`` applies symbols[0] first."""

    symbols: tuple[int, ...] = ()

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if any(s not in (1, 2) for s in syms):
            raise ValueError(f"word symbols must be 1 or 2: {syms}")
        object.__setattr__(self, "symbols", syms)

    @property
    def length(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


@dataclass(frozen=True)
class GeneratorPair:
    """Two generators (h1, h2) with cached degrees, leading coefficients and critical values."""

    h1: Polynomial
    h2: Polynomial
    degrees: tuple[int, int] = field(init=False, compare=False)
    leadings: tuple[complex, complex] = field(init=False, compare=False)
    critical_values: tuple[tuple[complex, ...], tuple[complex, ...]] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "degrees", (self.h1.degree, self.h2.degree))
        object.__setattr__(self, "leadings", (self.h1.leading, self.h2.leading))
        object.__setattr__(self, "critical_values",
                           (tuple(critical_values(self.h1)), tuple(critical_values(self.h2))))

    @property
    def maps(self) -> tuple[Polynomial, Polynomial]:
        return (self.h1, self.h2)

    def __getitem__(self, j: int) -> Polynomial:
        """Generator by 1-based index."""
        if j == 1:
            return self.h1
        if j == 2:
            return self.h2
        raise IndexError(j)

    @property
    def duplicated(self) -> bool:
        return self.h1 == self.h2

    def all_critical_values(self) -> list[complex]:
        return _dedup(list(self.critical_values[0]) + list(self.critical_values[1]))


def word_map(pair: GeneratorPair, word: Word | Sequence[int],
             max_degree: int = MAX_COMPOSE_DEGREE) -> Polynomial:
    """h_w = h_{w_n} ∘ ... ∘ h_{w_1} for a nonempty word."""
    syms = tuple(word)
    if not syms:
        raise ValueError("empty word has no polynomial (identity has degree 1)")
    out = pair[syms[0]]
    for s in syms[1:]:
        out = compose(pair[s], out, max_degree=max_degree)
    return out


def parse_complex(text: str) -> complex:
    """Parse literals such as ``-1+0i``, ``2.5``, ``-i`` or ``1e-3-2i``."""
    t = text.strip().replace("−", "-").replace(" ", "")
    if not t:
        raise ValueError("empty complex literal")
    t = t.replace("I", "i").replace("J", "j")
    if t.endswith(("i", "j")):
        body = t[:-1]
        if body in ("", "+", "-"):
            body += "1"
        elif body[-1] in "+-":
            body += "1"
        return complex(body.replace("i", "j") + "j")
    return complex(float(t))


def parse_polynomial(text: str) -> Polynomial:
    """Parse the ``"c0 c1 ... cd"`` text form (whitespace or comma separated)."""
    parts = [s for s in re.split(r"[\s,]+", text.strip()) if s]
    return Polynomial(tuple(parse_complex(s) for s in parts))


def format_complex(c: complex) -> str:
    return f"{c.real:.17g}{c.imag:+.17g}i"


def format_polynomial(p: Polynomial) -> str:
    return " ".join(format_complex(c) for c in p.coeffs)
