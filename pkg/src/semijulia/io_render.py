"""Deterministic writers: PGM/PPM images, CSV point tables, JSON reports."""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import PixelMask, PointCloud, ScalarField

# Locus codes -> RGB.  Order matches loci.LOCUS_CODE.
LEGEND6 = (
    ("notB", (0, 0, 0)),            # postcritically unbounded
    ("D", (215, 48, 39)),           # bounded, disconnected Julia set
    ("C", (69, 117, 180)),          # bounded, connected, not Q
    ("Q", (255, 255, 191)),         # equal Julia sets (quasicircle heuristic)
    ("BnotH", (152, 78, 163)),      # bounded but heuristically not hyperbolic
    ("inconclusive", (150, 150, 150)),
)


@dataclass(frozen=True)
class RenderSpec:
    palette: str = "grayscale"
    gamma: float = 1.0
    invert: bool = False
    vmin: float = 0.0
    vmax: float = 1.0

    def __post_init__(self):
        if self.palette not in ("grayscale", "legend-6"):
            raise ValueError(f"unknown palette {self.palette!r}")
        if not 0.1 <= self.gamma <= 10.0:
            raise ValueError("gamma must lie in [0.1, 10]")
        if not self.vmax > self.vmin:
            raise ValueError("vmax must exceed vmin")


def _open(path, mode):
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, newline="") if "b" not in mode else open(path, mode)
    except OSError as exc:
        raise OSError(f"cannot open {path} for writing: {exc}") from exc


def to_gray8(values: np.ndarray, spec: RenderSpec = RenderSpec()) -> np.ndarray:
    """Clamp to [vmin, vmax], apply v**(1/gamma), optionally invert, round to 0..255."""
    v = (np.asarray(values, dtype=np.float64) - spec.vmin) / (spec.vmax - spec.vmin)
    v = np.clip(v, 0.0, 1.0) ** (1.0 / spec.gamma)
    if spec.invert:
        v = 1.0 - v
    return np.rint(v * 255.0).astype(np.uint8)


def write_pgm(pixels: np.ndarray, path) -> None:
    """Binary P5, maxval 255 (uint8) or 65535 (uint16, big-endian)."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    h, w = pixels.shape
    maxval = 65535 if pixels.dtype == np.uint16 else 255
    payload = pixels.astype(">u2").tobytes() if maxval == 65535 else pixels.astype(np.uint8).tobytes()
    with _open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        f.write(payload)


def write_ppm(rgb: np.ndarray, path) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PPM needs an (h, w, 3) array")
    h, w, _ = rgb.shape
    with _open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())


def read_pnm(path) -> np.ndarray:
    """Read back a P5/P6 file written by this module."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    pos += 1
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == "P5":
        dt = ">u2" if maxval > 255 else np.uint8
        return np.frombuffer(data[pos:], dtype=dt).reshape(h, w)
    if magic == "P6":
        return np.frombuffer(data[pos:], dtype=np.uint8).reshape(h, w, 3)
    raise ValueError(f"unsupported format {magic}")


def write_field_pgm(field: ScalarField, path, spec: RenderSpec = RenderSpec()) -> None:
    """8-bit grayscale; PGM rows follow the grid's rows, so (0, 0) is top-left."""
    if spec.palette != "grayscale":
        raise ValueError("fields render in grayscale")
    write_pgm(to_gray8(field.values, spec), path)


def write_mask_pgm(mask: PixelMask, path) -> None:
    write_pgm(np.where(mask.bits, 255, 0).astype(np.uint8), path)


def write_takagi_pgm16(field: ScalarField, path) -> dict:
    """Signed field as offset 16-bit PGM plus a JSON sidecar with the scaling.

    value = vmin + (pixel / 65535)·(vmax − vmin); the sidecar sits at
    ``<path>.json``.
    """
    v = field.values
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo if hi > lo else 1.0
    pix = np.rint((v - lo) / span * 65535.0).astype(np.uint16)
    write_pgm(pix, path)
    side = {"min": lo, "max": hi, "maxval": 65535, "mapping": "value = min + pixel/65535*(max-min)",
            "shape": [int(field.grid.ny), int(field.grid.nx)], "meta": _jsonable(field.meta)}
    write_json(side, str(path) + ".json")
    return side


def legend_rgb(codes: np.ndarray) -> np.ndarray:
    table = np.array([c for _, c in LEGEND6], dtype=np.uint8)
    codes = np.asarray(codes, dtype=np.int64)
    if codes.min(initial=0) < 0 or codes.max(initial=0) >= len(LEGEND6):
        raise ValueError("locus code out of range")
    return table[codes]


def write_codes_ppm(codes: np.ndarray, path, scale: int = 1) -> None:
    rgb = legend_rgb(codes)
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    write_ppm(rgb, path)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_cloud_csv(cloud, path) -> None:
    """Header ``re,im``; shortest round-trip float text, '.' decimal point."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.complex128).ravel()
    with _open(path, "w") as f:
        f.write("re,im\n")
        f.writelines(f"{_fmt(z.real)},{_fmt(z.imag)}\n" for z in pts)


def read_cloud_csv(path) -> np.ndarray:
    rows = Path(path).read_text(encoding="utf-8").splitlines()
    if not rows or rows[0] != "re,im":
        raise ValueError(f"{path}: missing re,im header")
    vals = [tuple(map(float, r.split(","))) for r in rows[1:] if r]
    return np.array([complex(a, b) for a, b in vals], dtype=np.complex128)


def write_field_csv(field: ScalarField, path) -> None:
    pts = field.grid.points().ravel()
    vals = field.values.ravel()
    with _open(path, "w") as f:
        f.write("re,im,value\n")
        f.writelines(f"{_fmt(z.real)},{_fmt(z.imag)},{_fmt(v)}\n" for z, v in zip(pts, vals))


def write_locus_csv(params: np.ndarray, codes: np.ndarray, path) -> None:
    with _open(path, "w") as f:
        f.write("re_a,im_a,code\n")
        f.writelines(f"{_fmt(a.real)},{_fmt(a.imag)},{int(c)}\n"
                     for a, c in zip(np.ravel(params), np.ravel(codes)))


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return _jsonable(obj.to_dict())
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(obj, path) -> None:
    """UTF-8 JSON, fixed indentation, keys in insertion order; non-finite floats as strings."""
    text = json.dumps(_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False)
    with _open(path, "w") as f:
        f.write(text + "\n")


def write_report_json(report, path) -> None:
    write_json(report, path)


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {p}: {exc}") from exc
    if not os.access(p, os.W_OK):
        raise OSError(f"output directory {p} is not writable")
    return p
