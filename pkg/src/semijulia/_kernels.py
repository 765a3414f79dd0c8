"""Compiled per-point orbit kernels (numba)."""
import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _horner(c, z):
    acc = c[c.size - 1]
    for k in range(c.size - 2, -1, -1):
        acc = acc * z + c[k]
    return acc


@njit(cache=True, parallel=True)
def escape_steps(c, z, radius, max_iter):
    """First n with |p^n(z)| > radius, or -1 if the orbit stays inside for max_iter steps."""
    out = np.empty(z.size, dtype=np.int64)
    r2 = radius * radius
    for k in prange(z.size):
        w = z[k]
        res = -1
        for n in range(max_iter + 1):
            if w.real * w.real + w.imag * w.imag > r2:
                res = n
                break
            if n < max_iter:
                w = _horner(c, w)
        out[k] = res
    return out


@njit(cache=True, parallel=True)
def green_values(c, z, radius, max_iter, robin, big):
    """Green's function with pole at infinity, Robin-corrected at a large radius.

    After the orbit first exceeds ``radius`` it is pushed on (the doubling
    guarantee bounds the extra steps) until |w| > big, and the value is
    d^{-m} (log|w_m| + robin).  Non-escaping points give 0.
    """
    d = c.size - 1
    n_pts = z.size
    vals = np.zeros(n_pts)
    used = np.zeros(n_pts, dtype=np.int64)
    r2 = radius * radius
    for k in prange(n_pts):
        w = z[k]
        escaped = False
        n = 0
        while n <= max_iter:
            if w.real * w.real + w.imag * w.imag > r2:
                escaped = True
                break
            if n == max_iter:
                break
            w = _horner(c, w)
            n += 1
        if not escaped:
            used[k] = n
            continue
        scale = 1.0
        for _ in range(n):
            scale /= d
        extra = 0
        while abs(w) < big and extra < 200:
            w = _horner(c, w)
            scale /= d
            extra += 1
        vals[k] = scale * (np.log(abs(w)) + robin)
        used[k] = n + extra
    return vals, used


@njit(cache=True, parallel=True)
def pair_images(c1, c2, z):
    """h1(z) and h2(z) for a flat array of points."""
    a = np.empty(z.size, dtype=np.complex128)
    b = np.empty(z.size, dtype=np.complex128)
    for k in prange(z.size):
        a[k] = _horner(c1, z[k])
        b[k] = _horner(c2, z[k])
    return a, b
