"""Discretizations shared by the Julia-set, random-dynamics and dimension code."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """A rectangular lattice of complex points.

    Node (i, j) sits at ``center - half_width + i*dx + 1j*(half_height - j*dy)``:
    x increases rightward with column i, y decreases downward with row j, and
    (0, 0) is the top-left corner.  Arrays indexed by the grid are ``[j, i]``.
    """

    center: complex
    half_width: float
    half_height: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        if self.half_width <= 0 or self.half_height <= 0:
            raise ValueError("grid extents must be positive")

    @classmethod
    def square(cls, radius: float, n: int, center: complex = 0j) -> "GridSpec":
        return cls(complex(center), float(radius), float(radius), int(n), int(n))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.nx - 1)

    @property
    def dy(self) -> float:
        return 2.0 * self.half_height / (self.ny - 1)

    @property
    def pixel(self) -> float:
        """Largest node spacing."""
        return max(self.dx, self.dy)

    @property
    def pixel_diameter(self) -> float:
        return float(np.hypot(self.dx, self.dy))

    def xs(self) -> np.ndarray:
        return self.center.real - self.half_width + self.dx * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.center.imag + self.half_height - self.dy * np.arange(self.ny)

    def points(self) -> np.ndarray:
        """Complex node coordinates, shape (ny, nx)."""
        return self.xs()[None, :] + 1j * self.ys()[:, None]

    def fractional_index(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Continuous (column, row) coordinates of points z."""
        z = np.asarray(z, dtype=np.complex128)
        fi = (z.real - (self.center.real - self.half_width)) / self.dx
        fj = ((self.center.imag + self.half_height) - z.imag) / self.dy
        return fi, fj

    def nearest_index(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nearest (column, row) and an in-grid flag."""
        fi, fj = self.fractional_index(z)
        i = np.rint(fi).astype(np.int64)
        j = np.rint(fj).astype(np.int64)
        inside = (i >= 0) & (i < self.nx) & (j >= 0) & (j < self.ny)
        return np.clip(i, 0, self.nx - 1), np.clip(j, 0, self.ny - 1), inside

    def refined(self, n: int) -> "GridSpec":
        return GridSpec(self.center, self.half_width, self.half_height, n, n)


@dataclass
class PixelMask:
    grid: GridSpec
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != self.grid.shape:
            raise ValueError(f"mask shape {self.bits.shape} != grid shape {self.grid.shape}")

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def points(self) -> np.ndarray:
        return self.grid.points()[self.bits]


@dataclass
class PointCloud:
    points: np.ndarray
    label: str = ""
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud contains non-finite points")

    def __len__(self) -> int:
        return int(self.points.size)


@dataclass
class BilinearStencil:
    """Precomputed bilinear interpolation of grid values at fixed query points.

    Queries outside the grid, or with modulus above ``radius``, take the
    caller-supplied outside value instead.
    """

    idx: np.ndarray       # (4, m) flat node indices
    weights: np.ndarray   # (4, m)
    outside: np.ndarray   # (m,) bool

    @classmethod
    def build(cls, grid: GridSpec, z: np.ndarray, radius: float | None = None) -> "BilinearStencil":
        z = np.asarray(z, dtype=np.complex128).ravel()
        with np.errstate(invalid="ignore", over="ignore"):
            fi, fj = grid.fractional_index(z)
            outside = ~np.isfinite(z) | (fi < 0) | (fi > grid.nx - 1) | (fj < 0) | (fj > grid.ny - 1)
            if radius is not None:
                outside |= ~(np.abs(z) <= radius)
        fi = np.where(outside, 0.0, fi)
        fj = np.where(outside, 0.0, fj)
        i0 = np.minimum(np.floor(fi).astype(np.int64), grid.nx - 2)
        j0 = np.minimum(np.floor(fj).astype(np.int64), grid.ny - 2)
        tx = fi - i0
        ty = fj - j0
        nx = grid.nx
        idx = np.stack([j0 * nx + i0, j0 * nx + i0 + 1, (j0 + 1) * nx + i0, (j0 + 1) * nx + i0 + 1])
        w = np.stack([(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty])
        return cls(idx, w, outside)

    def apply(self, flat_values: np.ndarray, outside_value: float) -> np.ndarray:
        v = (self.weights * flat_values[self.idx]).sum(axis=0)
        return np.where(self.outside, outside_value, v)


@dataclass
class ScalarField:
    """Real values on a grid plus the conventions used off the grid.

    ``outside_value`` is assumed beyond ``escape_radius`` (and off the grid);
    ``core`` marks nodes pinned to ``core_value``.
    """

    grid: GridSpec
    values: np.ndarray
    outside_value: float = 1.0
    core_value: float = 0.0
    escape_radius: float | None = None
    core: np.ndarray | None = None
    converged: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def sample(self, z) -> np.ndarray:
        """Bilinear interpolation at arbitrary points (outside convention applied)."""
        z = np.asarray(z, dtype=np.complex128)
        st = BilinearStencil.build(self.grid, z, self.escape_radius)
        return st.apply(self.values.ravel(), self.outside_value).reshape(z.shape)

    def with_values(self, values: np.ndarray, **kw) -> "ScalarField":
        args = dict(grid=self.grid, values=values, outside_value=self.outside_value,
                    core_value=self.core_value, escape_radius=self.escape_radius,
                    core=self.core, converged=self.converged, meta=dict(self.meta))
        args.update(kw)
        return ScalarField(**args)


def rasterize(points: np.ndarray | PointCloud, grid: GridSpec, dilate: int = 1) -> PixelMask:
    """Mark nodes nearest to each point, then dilate by ``dilate`` pixels (square)."""
    pts = points.points if isinstance(points, PointCloud) else np.asarray(points)
    bits = np.zeros(grid.shape, dtype=bool)
    if pts.size:
        i, j, inside = grid.nearest_index(pts)
        bits[j[inside], i[inside]] = True
    if dilate > 0:
        from scipy.ndimage import binary_dilation
        bits = binary_dilation(bits, structure=np.ones((3, 3), dtype=bool), iterations=dilate)
    return PixelMask(grid, bits)


def neighborhood_oscillation(values: np.ndarray) -> np.ndarray:
    """max - min over each 3x3 neighborhood (edges use the available neighbors)."""
    from scipy.ndimage import maximum_filter, minimum_filter
    return maximum_filter(values, size=3, mode="nearest") - minimum_filter(values, size=3, mode="nearest")
