"""Locality-constrained encoding of part descriptors, mirror merging, and
spatial-pyramid max pooling into the final shape vector.

The pooled vector concatenates 21 blocks of codebook dimension: the whole
bounding box, then the 2x2 quadrants and the 4x4 sixteenths in row-major
order. It is l2-normalized as a whole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import CodebookError

SPM_LEVELS = (1, 2, 4)
SPM_REGIONS = sum(n * n for n in SPM_LEVELS)  # 21

RIDGE_FRACTION = 1e-9  # of the Gram trace; guards near-duplicate neighbors


@dataclass(frozen=True)
class ShapeCode:
    values: np.ndarray    # float64 (K,), sparse support
    position: np.ndarray  # float64 (2,), part median point


def _nearest(batch32: np.ndarray, entries32: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k nearest codebook rows per descriptor row; ties resolve to the lower
    index. Returns (indices (p, k), squared distances (p, k))."""
    bb = (entries32 * entries32).sum(axis=1)[None, :]
    ff = (batch32 * batch32).sum(axis=1)[:, None]
    d2 = ff + bb - 2.0 * (batch32 @ entries32.T)
    np.maximum(d2, 0.0, out=d2)
    part = np.argpartition(d2, k - 1, axis=1)[:, :k]
    rows = np.arange(len(batch32))[:, None]
    order = np.lexsort((part, d2[rows, part]), axis=1)
    idx = np.take_along_axis(part, order, axis=1)
    return idx, d2[rows, idx]


def _affine_coefficients(f: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """Solve min ||f - N^T c|| s.t. sum(c) = 1 through the Gram system of the
    centered neighbors, with a small trace-proportional ridge."""
    z = neighbors - f
    gram = z @ z.T
    k = len(neighbors)
    gram = gram + RIDGE_FRACTION * np.trace(gram) * np.eye(k)
    try:
        w = np.linalg.solve(gram, np.ones(k))
    except np.linalg.LinAlgError as exc:
        raise CodebookError("singular neighbor system: duplicate codebook entries") from exc
    total = w.sum()
    if not np.isfinite(total) or total == 0.0:
        raise CodebookError("degenerate neighbor system: duplicate codebook entries")
    return w / total


def llc_encode_batch(descriptors: np.ndarray, codebook: Codebook, k: int) -> np.ndarray:
    """Locality-constrained codes for a descriptor matrix, one dense row per
    descriptor: the k nearest codebook entries receive affine reconstruction
    coefficients summing to one, every other coordinate is zero."""
    if k > codebook.size:
        raise CodebookError(f"k={k} exceeds codebook size {codebook.size}")
    f32 = np.ascontiguousarray(descriptors, dtype=np.float32)
    if f32.ndim != 2:
        raise ValueError("descriptors must be a (p, d) matrix")
    entries32 = codebook.entries
    entries64 = codebook.entries.astype(np.float64)
    idx, d2 = _nearest(f32, entries32, k)
    codes = np.zeros((len(f32), codebook.size))
    f64 = np.asarray(descriptors, dtype=np.float64)
    for i in range(len(f32)):
        if d2[i, 0] == 0.0:
            codes[i, idx[i, 0]] = 1.0  # exact codeword hit: zero-error optimum
            continue
        codes[i, idx[i]] = _affine_coefficients(f64[i], entries64[idx[i]])
    return codes


def llc_encode(descriptor: np.ndarray, codebook: Codebook, k: int) -> np.ndarray:
    """Single-descriptor convenience wrapper around :func:`llc_encode_batch`."""
    return llc_encode_batch(np.asarray(descriptor)[None, :], codebook, k)[0]


def flip_merge(code_part: ShapeCode, code_mirror: ShapeCode) -> ShapeCode:
    """Element-wise sum of a part's code and its mirror's; the position is the
    unmirrored part's."""
    return ShapeCode(values=code_part.values + code_mirror.values,
                     position=code_part.position)


def _region_offsets():
    offsets = []
    base = 0
    for n in SPM_LEVELS:
        offsets.append(base)
        base += n * n
    return offsets


_LEVEL_OFFSETS = _region_offsets()


def region_index(position: np.ndarray, bbox: tuple[float, float, float, float],
                 level: int) -> int:
    """Row-major cell index of a position within one pyramid level. Points on an
    interior grid line belong to the right/bottom cell; the far bounding-box
    edge is clamped inward."""
    n = SPM_LEVELS[level]
    x0, y0, w, h = bbox
    u = (position[0] - x0) / w if w > 0 else 0.0
    v = (position[1] - y0) / h if h > 0 else 0.0
    col = min(max(int(np.floor(u * n)), 0), n - 1)
    row = min(max(int(np.floor(v * n)), 0), n - 1)
    return row * n + col


def spm_pool(codes: list[ShapeCode], bbox: tuple[float, float, float, float]) -> np.ndarray:
    """Element-wise max of codes per pyramid subregion, concatenated and
    l2-normalized. Empty subregions contribute zeros."""
    if not codes:
        raise CodebookError("cannot pool an empty code list")
    dim = len(codes[0].values)
    pooled = np.zeros((SPM_REGIONS, dim))
    filled = np.zeros(SPM_REGIONS, dtype=bool)
    for code in codes:
        for level in range(len(SPM_LEVELS)):
            r = _LEVEL_OFFSETS[level] + region_index(code.position, bbox, level)
            if filled[r]:
                np.maximum(pooled[r], code.values, out=pooled[r])
            else:
                pooled[r] = code.values
                filled[r] = True
    flat = pooled.ravel()
    norm = np.linalg.norm(flat)
    if norm == 0:
        raise CodebookError("pooled vector is identically zero")
    return flat / norm


def encode_parts(descriptors: np.ndarray, mirror_descriptors: np.ndarray,
                 positions: np.ndarray, codebook: Codebook, k: int) -> list[ShapeCode]:
    """LLC-encode every part and its mirror, merge the pairs, and attach the
    part positions."""
    direct = llc_encode_batch(descriptors, codebook, k)
    mirrored = llc_encode_batch(mirror_descriptors, codebook, k)
    merged = direct + mirrored
    return [ShapeCode(values=merged[i], position=np.asarray(positions[i], dtype=np.float64))
            for i in range(len(merged))]
