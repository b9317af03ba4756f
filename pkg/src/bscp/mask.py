"""Binary mask loading, outer-contour tracing, and PCA pose normalization.

Coordinates are (x, y) with x the column index and y the row index of the
underlying array, i.e. ``bits[y, x]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import MaskError

_EIGHT = np.ones((3, 3), dtype=bool)

# Moore neighborhood in clockwise screen order (y grows downward).
_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


@dataclass(frozen=True)
class BinaryMask:
    """Single-component foreground grid, padded so the shape clears the border."""

    bits: np.ndarray  # bool, shape (height, width)
    orig_width: int
    orig_height: int

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def area(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Contour:
    """Closed outer boundary, anticlockwise, uniformly resampled by arc length."""

    points: np.ndarray  # float64, shape (n, 2), (x, y)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> float:
        return self.perimeter / len(self.points)

    @property
    def perimeter(self) -> float:
        d = np.diff(np.vstack([self.points, self.points[:1]]), axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())


def _largest_component(bits: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(bits, structure=_EIGHT)
    if n == 0:
        raise MaskError("mask has empty foreground")
    if n == 1:
        return bits
    sizes = ndimage.sum_labels(bits, labels, index=np.arange(1, n + 1))
    return labels == (int(np.argmax(sizes)) + 1)


def _crop_pad(bits: np.ndarray) -> np.ndarray:
    ys, xs = np.nonzero(bits)
    tight = bits[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
    return np.pad(tight, 1)


def from_array(bits: np.ndarray, orig_width: int | None = None,
               orig_height: int | None = None) -> BinaryMask:
    """Build a mask from a boolean array: keep the largest 8-connected
    component, crop to it and pad one background pixel on every side."""
    bits = np.asarray(bits, dtype=bool)
    if bits.ndim != 2:
        raise MaskError(f"expected a 2-D array, got shape {bits.shape}")
    h, w = bits.shape
    clean = _crop_pad(_largest_component(bits))
    return BinaryMask(bits=clean,
                      orig_width=w if orig_width is None else orig_width,
                      orig_height=h if orig_height is None else orig_height)


def load_mask(path: str | Path) -> BinaryMask:
    """Load an 8-bit grayscale PNG or binary PGM (P5); values >= 128 are
    foreground."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            gray = np.asarray(img.convert("L"))
    except (OSError, ValueError) as exc:
        raise MaskError(f"cannot read mask file {path}: {exc}") from exc
    return from_array(gray >= 128)


def save_mask_png(path: str | Path, bits: np.ndarray) -> None:
    Image.fromarray(np.where(bits, 255, 0).astype(np.uint8), mode="L").save(path)


def boundary_pixels(mask: BinaryMask) -> np.ndarray:
    """All foreground pixels with at least one background 8-neighbor, (m, 2) (x, y)."""
    interior = ndimage.binary_erosion(mask.bits, structure=_EIGHT, border_value=0)
    ys, xs = np.nonzero(mask.bits & ~interior)
    return np.column_stack([xs, ys]).astype(np.int64)


def _moore_trace(bits: np.ndarray) -> np.ndarray:
    """Boundary walk of the outer contour; consecutive pixels are 8-neighbors.

    The walk is deterministic, so the first repeated (pixel, backtrack) state
    closes the cycle; the trace between its two occurrences is one full loop.
    """
    ys, xs = np.nonzero(bits)
    start = (int(xs[ys == ys.min()].min()), int(ys.min()))
    b0 = (start[0] - 1, start[1])  # west of the topmost-leftmost pixel: background
    h, w = bits.shape

    def fg(p):
        return 0 <= p[1] < h and 0 <= p[0] < w and bits[p[1], p[0]]

    trace = [start]
    seen = {(start, b0): 0}
    p, b = start, b0
    limit = 8 * len(xs) + 16
    for _ in range(limit):
        i = _MOORE_INDEX[(b[0] - p[0], b[1] - p[1])]
        nxt = None
        for j in range(1, 9):
            cand = (p[0] + _MOORE[(i + j) % 8][0], p[1] + _MOORE[(i + j) % 8][1])
            if fg(cand):
                back = (p[0] + _MOORE[(i + j - 1) % 8][0], p[1] + _MOORE[(i + j - 1) % 8][1])
                nxt = cand
                break
        if nxt is None:  # isolated pixel
            break
        p, b = nxt, back
        state = (p, b)
        if state in seen:
            trace = trace[seen[state]:]
            break
        seen[state] = len(trace)
        trace.append(p)
    else:
        raise MaskError("contour trace did not close")
    return np.asarray(trace, dtype=np.float64)


def _signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _resample_closed(points: np.ndarray, n: int) -> np.ndarray:
    closed = np.vstack([points, points[:1]])
    seg = np.hypot(np.diff(closed[:, 0]), np.diff(closed[:, 1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        raise MaskError("degenerate contour with zero perimeter")
    targets = np.arange(n) * (total / n)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg) - 1)
    denom = np.where(seg[idx] > 0, seg[idx], 1.0)
    t = (targets - cum[idx]) / denom
    return closed[idx] + t[:, None] * (closed[idx + 1] - closed[idx])


def trace_contour(mask: BinaryMask, n_points: int = 256, smooth_window: int = 5) -> Contour:
    """Trace the outer boundary (Moore walk), smooth the pixel staircase with a
    circular moving average, orient anticlockwise (signed area > 0) and
    resample to ``n_points`` equally spaced points.

    Smoothing is required for unbiased perimeter estimates: the raw 8-connected
    walk overestimates smooth boundaries by ~5%.
    """
    chain = _moore_trace(mask.bits)
    if len(chain) < 8:
        raise MaskError(f"degenerate component: only {len(chain)} boundary pixels")
    win = min(smooth_window, max(1, len(chain) // 8))
    if win % 2 == 0:
        win -= 1
    if win > 1:
        chain = np.column_stack([
            ndimage.uniform_filter1d(chain[:, 0], size=win, mode="wrap"),
            ndimage.uniform_filter1d(chain[:, 1], size=win, mode="wrap"),
        ])
    if _signed_area(chain) < 0:
        chain = chain[::-1]
    pts = _resample_closed(chain, n_points)
    return Contour(points=pts)


# --- PCA pose normalization -------------------------------------------------
#
# Moment sums are accumulated as exact integers so that mirrored masks yield
# exactly negated odd moments; this makes normalize_shape equivariant under
# horizontal mirroring bit for bit (needed for the flip-invariance guarantee).

def _int_moments(bits: np.ndarray):
    ys, xs = np.nonzero(bits)
    x = xs.astype(np.int64)
    y = ys.astype(np.int64)
    n = int(x.size)
    s = {
        "n": n,
        "x": int(x.sum()), "y": int(y.sum()),
        "xx": int((x * x).sum()), "yy": int((y * y).sum()), "xy": int((x * y).sum()),
        "xxx": int((x * x * x).sum()), "yyy": int((y * y * y).sum()),
    }
    return s


def _axis_angle_from_moments(m: dict) -> float:
    n = m["n"]
    nxx = n * m["xx"] - m["x"] * m["x"]
    nyy = n * m["yy"] - m["y"] * m["y"]
    nxy = n * m["xy"] - m["x"] * m["y"]
    spread = math.hypot(float(nxx - nyy), 2.0 * float(nxy))
    if spread <= 1e-9 * max(abs(float(nxx)), abs(float(nyy)), 1.0):
        return 0.0
    theta = 0.5 * math.atan2(2.0 * float(nxy), float(nxx - nyy))
    if theta >= math.pi / 2:
        theta -= math.pi
    return theta


def _third_central(n: int, s1: int, s2: int, s3: int) -> float:
    # n^2 * sum((v - mean)^3) as an exact integer, sign-faithful
    return float(n * n * s3 - 3 * n * s2 * s1 + 2 * s1 ** 3)


def pca_major_axis_angle(points: np.ndarray) -> float:
    """Angle in [-pi/2, pi/2) of the dominant eigenvector of the 2x2 covariance
    of a point set. Near-isotropic sets (eigenvalue gap below 1e-9 relative)
    return 0 by convention.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two (x, y) points")
    c = pts - pts.mean(axis=0)
    sxx = float(np.dot(c[:, 0], c[:, 0]))
    syy = float(np.dot(c[:, 1], c[:, 1]))
    sxy = float(np.dot(c[:, 0], c[:, 1]))
    spread = math.hypot(sxx - syy, 2.0 * sxy)
    if spread <= 1e-9 * max(abs(sxx), abs(syy), 1.0):
        return 0.0
    theta = 0.5 * math.atan2(2.0 * sxy, sxx - syy)
    if theta >= math.pi / 2:
        theta -= math.pi
    return theta


def _rotate_nn(bits: np.ndarray, theta: float) -> np.ndarray:
    """Rotate the foreground by ``theta`` about its centroid, nearest neighbor.

    Arithmetic is kept negation-symmetric in x so that mirrored inputs produce
    exactly mirrored outputs. Multiples of 90 degrees are snapped to exact grid
    operations.
    """
    k = round(theta / (math.pi / 2))
    if abs(theta - k * (math.pi / 2)) < 1e-12:
        return np.rot90(bits, k=-k % 4).copy() if k % 4 else bits.copy()

    h, w = bits.shape
    m = _int_moments(bits)
    n = m["n"]
    # centroid in symmetric coordinates centered at the grid midpoint
    cx = float(2 * m["x"] - n * (w - 1)) / float(2 * n)
    cy = float(2 * m["y"] - n * (h - 1)) / float(2 * n)

    ys, xs = np.nonzero(bits)
    fx = xs - (w - 1) / 2.0 - cx
    fy = ys - (h - 1) / 2.0 - cy
    ct, st = math.cos(theta), math.sin(theta)
    # forward-rotated foreground extents fix the output canvas
    rx = ct * fx - st * fy
    ry = st * fx + ct * fy
    out_w = int(math.ceil(max(rx.max(), -rx.min()))) * 2 + 3
    out_h = int(math.ceil(max(ry.max(), -ry.min()))) * 2 + 3

    ox = np.arange(out_w) - (out_w - 1) / 2.0
    oy = np.arange(out_h) - (out_h - 1) / 2.0
    gx, gy = np.meshgrid(ox, oy)
    # inverse map: output position -> source position
    sx = ct * gx + st * gy + cx + (w - 1) / 2.0
    sy = -st * gx + ct * gy + cy + (h - 1) / 2.0
    ix = np.round(sx).astype(np.int64)
    iy = np.round(sy).astype(np.int64)
    ok = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    out = np.zeros((out_h, out_w), dtype=bool)
    out[ok] = bits[iy[ok], ix[ok]]
    return out


def normalize_shape(mask: BinaryMask) -> BinaryMask:
    """Rotate the shape so its PCA major axis is horizontal, then fix the
    remaining pose ambiguities deterministically: rotate 180 degrees if the
    third central moment of x is negative, then flip vertically if the third
    central moment of y is negative. Ties (exactly zero moments) keep the
    current pose.
    """
    theta = _axis_angle_from_moments(_int_moments(mask.bits))
    bits = _rotate_nn(mask.bits, -theta)
    if not bits.any():
        raise MaskError("rotation produced an empty mask")
    bits = _largest_component(bits)

    m = _int_moments(bits)
    h, w = bits.shape
    sx = _third_central(m["n"], m["x"], m["xx"], m["xxx"])
    if sx < 0:
        bits = bits[::-1, ::-1]
        m = _int_moments(bits)
    sy = _third_central(m["n"], m["y"], m["yy"], m["yyy"])
    if sy < 0:
        bits = bits[::-1, :]
    return BinaryMask(bits=_crop_pad(bits),
                      orig_width=mask.orig_width, orig_height=mask.orig_height)


def foreground_bbox(mask: BinaryMask) -> tuple[float, float, float, float]:
    """Tight bounding box of the foreground as (x0, y0, width, height)."""
    ys, xs = np.nonzero(mask.bits)
    return (float(xs.min()), float(ys.min()),
            float(xs.max() - xs.min()), float(ys.max() - ys.min()))
