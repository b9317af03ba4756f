"""Contour decomposition and the thickness-aware shape context descriptor.

A part descriptor is the concatenation of per-reference-point 3-D histograms
binning, for every other sampled point, the log Euclidean distance (normalized
by the mean pairwise sample distance), the ray orientation in the normalized
shape frame, and the log thickness ratio.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .mask import Contour
from .skeleton import AssociatedContour


@dataclass(frozen=True)
class BinGeometry:
    """Histogram bin edges shared by every descriptor in one experiment."""

    dist_edges: np.ndarray   # (n_dist,) upper edges; first bin is (0, edge0]
    orient_bins: int
    tau_edges: np.ndarray    # (n_thick + 1,) edges including -inf/+inf

    @property
    def n_dist(self) -> int:
        return len(self.dist_edges)

    @property
    def n_thick(self) -> int:
        return len(self.tau_edges) - 1

    @property
    def bins(self) -> int:
        return self.n_dist * self.orient_bins * self.n_thick

    @classmethod
    def create(cls, n_dist: int = 5, n_orient: int = 12, n_thick: int = 5,
               inner: float = 0.125, outer: float = 2.5) -> "BinGeometry":
        dist_edges = np.geomspace(inner, outer, n_dist)
        # symmetric log-ratio ladder around the "same thickness" central bin
        ladder = (0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
        half = (n_thick - 1) // 2
        if half > len(ladder):
            raise ValueError(f"n_thick={n_thick} exceeds the supported ladder")
        interior = sorted([-v for v in ladder[:half]] + list(ladder[:half]))
        tau_edges = np.array([-np.inf] + interior + [np.inf])
        return cls(dist_edges=dist_edges, orient_bins=n_orient, tau_edges=tau_edges)

    def fingerprint(self) -> str:
        payload = self.dist_edges.tobytes() + bytes([self.orient_bins]) + self.tau_edges.tobytes()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class ContourPart:
    """Directed contour fragment between two critical points, sampled uniformly
    by arc length. Thickness is normalized to mean 1 over the samples."""

    start_index: int
    end_index: int
    samples: np.ndarray        # float64 (n_s, 3): x, y, normalized thickness
    reference_idx: np.ndarray  # int (n_r,), indices into samples, endpoints included
    median_position: np.ndarray  # float64 (2,), arc-length midpoint

    @property
    def n_samples(self) -> int:
        return len(self.samples)


def _turn_angles(pts: np.ndarray) -> np.ndarray:
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    v1 = pts - prev
    v2 = nxt - pts
    n1 = np.hypot(v1[:, 0], v1[:, 1])
    n2 = np.hypot(v2[:, 0], v2[:, 1])
    dot = (v1 * v2).sum(axis=1) / np.maximum(n1 * n2, 1e-30)
    return np.arccos(np.clip(dot, -1.0, 1.0))


def dce_relevance(pts: np.ndarray) -> np.ndarray:
    """Relevance of every vertex of a closed polygon: turn angle times the
    harmonic mean of the adjacent segment lengths, lengths normalized by the
    polygon perimeter."""
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    l1 = np.hypot(*(pts - prev).T)
    l2 = np.hypot(*(nxt - pts).T)
    perim = l1.sum()
    l1n, l2n = l1 / perim, l2 / perim
    beta = _turn_angles(pts)
    denom = np.maximum(l1n + l2n, 1e-30)
    return beta * l1n * l2n / denom


def dce_critical_points(contour: Contour, target: int) -> np.ndarray:
    """Discrete contour evolution: repeatedly delete the vertex of minimal
    relevance (ties to the lowest index) until ``target`` vertices remain.
    Returns the surviving contour indices in ascending order."""
    n = len(contour.points)
    if target < 3:
        raise ValueError(f"need at least 3 critical points, requested {target}")
    if target > n:
        raise ValueError(f"requested {target} critical points from a {n}-point contour")
    alive = np.arange(n)
    while len(alive) > target:
        rel = dce_relevance(contour.points[alive])
        alive = np.delete(alive, int(np.argmin(rel)))
    return alive


def _fractional_samples(assoc: AssociatedContour, start: int, span: int,
                        positions: np.ndarray) -> np.ndarray:
    """Linear interpolation of (x, y, thickness) at fractional contour indices
    ``start + positions`` (wrapping), where positions are in [0, span]."""
    n = len(assoc.contour.points)
    f = (start + positions) % n
    i0 = np.floor(f).astype(int) % n
    i1 = (i0 + 1) % n
    t = (f - np.floor(f))[:, None]
    pts = assoc.contour.points
    xy = pts[i0] * (1 - t) + pts[i1] * t
    th = assoc.thickness[i0] * (1 - t[:, 0]) + assoc.thickness[i1] * t[:, 0]
    return np.column_stack([xy, th])


def make_part(assoc: AssociatedContour, start: int, end: int,
              n_samples: int, n_refs: int) -> ContourPart:
    n = len(assoc.contour.points)
    span = (end - start) % n
    if span == 0:
        raise ValueError("a part must join two distinct critical points")
    positions = np.linspace(0.0, span, n_samples)
    samples = _fractional_samples(assoc, start, span, positions)
    samples[:, 2] /= samples[:, 2].mean()
    refs = np.round(np.linspace(0, n_samples - 1, n_refs)).astype(int)
    median = _fractional_samples(assoc, start, span, np.array([span / 2.0]))[0, :2]
    return ContourPart(start_index=start, end_index=end, samples=samples,
                       reference_idx=refs, median_position=median)


def smooth_thickness(assoc: AssociatedContour, window: int | None = None) -> AssociatedContour:
    """Circular moving average of the thickness field along the contour.

    The raw field carries pixel-level distance-transform noise well above the
    +-0.1 log-ratio width of the central thickness bin; averaging over a small
    arc suppresses it without blurring genuine width ramps.
    """
    n = len(assoc.thickness)
    if window is None:
        window = max(3, n // 32)
    if window % 2 == 0:
        window += 1
    from scipy.ndimage import uniform_filter1d

    smoothed = uniform_filter1d(assoc.thickness, size=window, mode="wrap")
    return AssociatedContour(contour=assoc.contour, thickness=smoothed,
                             generating_flags=assoc.generating_flags)


def enumerate_parts(assoc: AssociatedContour, critical: np.ndarray,
                    n_samples: int = 50, n_refs: int = 5,
                    smooth: bool = True) -> list[ContourPart]:
    """All ordered pairs of critical points, each traversed anticlockwise from
    the first to the second: T critical points yield T*(T-1) parts."""
    if smooth:
        assoc = smooth_thickness(assoc)
    parts = []
    for i in critical:
        for j in critical:
            if i == j:
                continue
            parts.append(make_part(assoc, int(i), int(j), n_samples, n_refs))
    return parts


def mirror_samples(samples: np.ndarray) -> np.ndarray:
    """Sample triplets of the horizontally mirrored, orientation-reversed part."""
    out = samples[::-1].copy()
    out[:, 0] = -out[:, 0]
    return out


def ssc_histogram(samples: np.ndarray, ref_index: int, geom: BinGeometry) -> np.ndarray:
    """Histogram of (log distance, orientation, log thickness ratio) triples of
    all sampled points relative to one reference sample.

    Distances are normalized by the mean pairwise distance among the samples;
    points beyond the outermost distance bin and points coincident with the
    reference are dropped. Bin layout is distance-major, then orientation,
    then thickness.
    """
    xy = samples[:, :2]
    th = samples[:, 2]
    d = xy - xy[ref_index]
    dist = np.hypot(d[:, 0], d[:, 1])

    diff = xy[:, None, :] - xy[None, :, :]
    pair = np.hypot(diff[..., 0], diff[..., 1])
    n = len(samples)
    mean_pair = pair.sum() / max(n * (n - 1), 1)
    if mean_pair <= 0:
        return np.zeros(geom.bins)

    keep = (np.arange(n) != ref_index) & (dist > 0)
    nd = dist[keep] / mean_pair
    inside = nd <= geom.dist_edges[-1]
    nd = nd[inside]
    dx = d[keep][inside]
    tq = th[keep][inside]

    dist_bin = np.searchsorted(geom.dist_edges, nd, side="left")
    theta = np.arctan2(dx[:, 1], dx[:, 0]) % (2 * math.pi)
    orient_bin = np.minimum((theta / (2 * math.pi) * geom.orient_bins).astype(int),
                            geom.orient_bins - 1)
    tau = np.log(tq) - math.log(th[ref_index])
    tau_bin = np.searchsorted(geom.tau_edges[1:-1], tau, side="right")

    flat = (dist_bin * geom.orient_bins + orient_bin) * geom.n_thick + tau_bin
    return np.bincount(flat, minlength=geom.bins).astype(np.float64)


def part_descriptor(part: ContourPart, geom: BinGeometry) -> np.ndarray:
    """Concatenated reference-point histograms, each block l2-normalized."""
    return descriptor_of_samples(part.samples, part.reference_idx, geom)


def descriptor_of_samples(samples: np.ndarray, reference_idx: np.ndarray,
                          geom: BinGeometry) -> np.ndarray:
    blocks = []
    for r in reference_idx:
        h = ssc_histogram(samples, int(r), geom)
        norm = np.linalg.norm(h)
        blocks.append(h / norm if norm > 0 else h)
    return np.concatenate(blocks)


def mirror_descriptor(part: ContourPart, geom: BinGeometry) -> np.ndarray:
    return descriptor_of_samples(mirror_samples(part.samples), part.reference_idx, geom)
