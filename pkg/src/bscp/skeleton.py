"""Distance transform, pruned skeleton extraction, and contour thickness
association.

The skeleton is obtained by ridge detection on the exact Euclidean distance
transform (a pixel qualifies when its value is >= the value of at least 6 of
its 8 neighbors and >= 2), reconnection of the ridge fragments through the
homotopic medial axis, topology-preserving thinning to one-pixel width, and
pruning of terminal branches whose discs add little to the reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import cdist
from skimage.morphology import thin as _thin

from .errors import SkeletonError
from .mask import BinaryMask, Contour

_EIGHT = np.ones((3, 3), dtype=bool)
_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
_STEP = {o: float(np.hypot(*o)) for o in _OFFSETS}


@dataclass(frozen=True)
class DistanceField:
    """Per-pixel Euclidean distance to the nearest boundary pixel; zero on the
    boundary itself and outside the foreground."""

    values: np.ndarray  # float64 (height, width)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Skeleton:
    points: np.ndarray     # int64 (m, 2), (x, y)
    radius: np.ndarray     # float64 (m,)
    adjacency: np.ndarray  # int64 (e, 2), index pairs of 8-connected links
    grid: np.ndarray       # bool (height, width)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class AssociatedContour:
    """Contour where every point carries the local object thickness."""

    contour: Contour
    thickness: np.ndarray         # float64 (n,)
    generating_flags: np.ndarray  # bool (n,)


def distance_transform(mask: BinaryMask) -> DistanceField:
    """Exact Euclidean distance of every foreground pixel to the nearest
    boundary pixel (foreground pixels with a background 8-neighbor)."""
    bits = mask.bits
    interior = ndimage.binary_erosion(bits, structure=_EIGHT, border_value=0)
    boundary = bits & ~interior
    dist = ndimage.distance_transform_edt(~boundary)
    return DistanceField(values=np.where(bits, dist, 0.0))


def _ridge_candidates(bits: np.ndarray, dt: np.ndarray) -> np.ndarray:
    padded = np.pad(dt, 1)
    center = padded[1:-1, 1:-1]
    wins = np.zeros(bits.shape, dtype=np.int8)
    for dy, dx in _OFFSETS:
        neigh = padded[1 + dy:1 + dy + bits.shape[0], 1 + dx:1 + dx + bits.shape[1]]
        wins += (center >= neigh).astype(np.int8)
    return bits & (dt >= 2.0) & (wins >= 6)


def _components(grid: np.ndarray):
    labels, n = ndimage.label(grid, structure=_EIGHT)
    return labels, n


def _connect_fragments(cand: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Join ridge fragments into one component by repeatedly bridging the
    closest pair of fragments with a straight pixel run (ridge gaps at saddles
    and bends are short), then fill enclosed slivers so the final thinning
    yields a tree, not a web."""
    work = cand.copy()
    for _ in range(256):
        labels, n = _components(work)
        if n <= 1:
            break
        sizes = ndimage.sum_labels(work, labels, index=np.arange(1, n + 1))
        main = int(np.argmax(sizes)) + 1
        main_pts = np.argwhere(labels == main)
        other_pts = np.argwhere(work & (labels != main))
        d = cdist(other_pts.astype(float), main_pts.astype(float))
        i, j = np.unravel_index(int(np.argmin(d)), d.shape)
        p, q = other_pts[i], main_pts[j]
        steps = int(np.ceil(d[i, j])) * 2 + 3
        for t in np.linspace(0.0, 1.0, steps):
            work[round(p[0] + (q[0] - p[0]) * t), round(p[1] + (q[1] - p[1]) * t)] = True
    # parallel ridge/backbone runs enclose 1-px slivers; the mask is simply
    # connected, so every hole in the working set is spurious
    return ndimage.binary_fill_holes(work)


def _neighbor_count(grid: np.ndarray) -> np.ndarray:
    return ndimage.convolve(grid.astype(np.uint8), np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]],
                                                            dtype=np.uint8), mode="constant")


def _remove_l_corners(grid: np.ndarray) -> np.ndarray:
    """Drop pixels whose only two neighbors touch each other; keeps chains
    unambiguous (degree >= 3 then really means a junction)."""
    grid = grid.copy()
    h, w = grid.shape
    changed = True
    while changed:
        changed = False
        ys, xs = np.nonzero(grid)
        for y, x in zip(ys.tolist(), xs.tolist()):
            if not grid[y, x]:
                continue
            nbrs = [(y + dy, x + dx) for dy, dx in _OFFSETS
                    if 0 <= y + dy < h and 0 <= x + dx < w and grid[y + dy, x + dx]]
            if len(nbrs) == 2:
                (ay, ax), (by, bx) = nbrs
                if max(abs(ay - by), abs(ax - bx)) == 1:
                    grid[y, x] = False
                    changed = True
    return grid


def _prune_branches(grid: np.ndarray, dt: np.ndarray, threshold: float) -> np.ndarray:
    """Remove terminal branches whose maximal reconstruction contribution is
    below ``threshold``.

    A branch contributes what its discs add beyond the union of the remaining
    skeleton's discs: max over branch pixels p of min over kept pixels s of
    d(p, s) + R(p) - R(s). Tangential noise spurs sit next to larger discs and
    contribute nearly nothing; genuine limbs reach far and survive.
    """
    grid = grid.copy()
    for _ in range(64):
        deg = _neighbor_count(grid)
        endpoints = np.argwhere(grid & (deg == 1))
        removed_any = False
        for ey, ex in endpoints:
            if not grid[ey, ex]:
                continue
            path = [(int(ey), int(ex))]
            prev = None
            cur = (int(ey), int(ex))
            junction = None
            while True:
                nbrs = [(cur[0] + dy, cur[1] + dx) for dy, dx in _OFFSETS
                        if 0 <= cur[0] + dy < grid.shape[0] and 0 <= cur[1] + dx < grid.shape[1]
                        and grid[cur[0] + dy, cur[1] + dx] and (cur[0] + dy, cur[1] + dx) != prev]
                if len(nbrs) != 1:
                    break  # other endpoint or ambiguity: whole component is a path
                nxt = nbrs[0]
                if deg[nxt] >= 3:
                    junction = nxt
                    break
                path.append(nxt)
                prev, cur = cur, nxt
            if junction is None:
                continue
            rest = grid.copy()
            for p in path:
                rest[p] = False
            ry, rx = np.nonzero(rest)
            if len(ry) == 0:
                continue
            branch = np.array(path, dtype=np.float64)
            kept = np.column_stack([ry, rx]).astype(np.float64)
            d = cdist(branch, kept)
            slack = d + dt[tuple(np.array(path).T)][:, None] - dt[ry, rx][None, :]
            contribution = float(slack.min(axis=1).max())
            if contribution < threshold:
                for p in path:
                    grid[p] = False
                removed_any = True
        if not removed_any:
            break
    return grid


def extract_skeleton(mask: BinaryMask, field: DistanceField,
                     prune_ratio: float = 0.08) -> Skeleton:
    """Thin, connected, centered skeleton with per-point maximal-disc radii
    read off the distance transform."""
    bits = mask.bits
    dt = field.values
    if dt.max() < 2.0:
        raise SkeletonError(f"foreground too thin to skeletonize (max DT {dt.max():.2f} < 2)")

    cand = _ridge_candidates(bits, dt)
    if not cand.any():
        cand = np.zeros_like(bits)
        cand[np.unravel_index(np.argmax(dt), dt.shape)] = True
    cand = _connect_fragments(cand, bits)
    cand &= dt > 0  # medial pixels of 1-px-wide spurs sit on the boundary
    labels, n = _components(cand)
    if n > 1:
        sizes = ndimage.sum_labels(cand, labels, index=np.arange(1, n + 1))
        cand = labels == (int(np.argmax(sizes)) + 1)
    grid = _remove_l_corners(_thin(cand))
    if not grid.any():
        grid = np.zeros_like(bits)
        grid[np.unravel_index(np.argmax(dt), dt.shape)] = True
    grid = _prune_branches(grid, dt, prune_ratio * float(dt.max()))

    ys, xs = np.nonzero(grid)
    points = np.column_stack([xs, ys]).astype(np.int64)
    radius = dt[ys, xs].copy()
    index = {(int(x), int(y)): i for i, (x, y) in enumerate(points)}
    edges = []
    for i, (x, y) in enumerate(points):
        for dy, dx in _OFFSETS:
            j = index.get((int(x) + dx, int(y) + dy))
            if j is not None and j > i:
                edges.append((i, j))
    adjacency = np.asarray(edges, dtype=np.int64) if edges else np.empty((0, 2), dtype=np.int64)
    return Skeleton(points=points, radius=radius, adjacency=adjacency, grid=grid)


def generating_points(point: tuple[int, int], contour: Contour) -> np.ndarray:
    """Indices of the contour points generated by a skeleton point: for each of
    its eight neighbors, the nearest contour point (ties to the lowest index)."""
    x, y = point
    neighbors = np.array([[x + dx, y + dy] for dy, dx in _OFFSETS], dtype=np.float64)
    d = cdist(neighbors, contour.points)
    return np.unique(np.argmin(d, axis=1))


def associate_thickness(contour: Contour, skeleton: Skeleton) -> AssociatedContour:
    """Assign every contour point an object thickness.

    Generating points receive the radius of their skeleton point (nearest
    claimant wins when several skeleton points map to the same contour point);
    all others copy the thickness of their arc-length-nearest generating point,
    measured both ways around the closed contour.
    """
    if len(skeleton) == 0:
        raise SkeletonError("cannot associate thickness with an empty skeleton")
    n = len(contour.points)
    pts = contour.points

    # all 8-neighbor positions of all skeleton points -> nearest contour index
    offs = np.array([[dx, dy] for dy, dx in _OFFSETS], dtype=np.float64)
    probes = (skeleton.points[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    d = cdist(probes, pts)
    nearest = np.argmin(d, axis=1).reshape(len(skeleton), 8)

    thickness = np.zeros(n)
    flags = np.zeros(n, dtype=bool)
    claim_dist = np.full(n, np.inf)
    sk_xy = skeleton.points.astype(np.float64)
    for si in range(len(skeleton)):
        for q in np.unique(nearest[si]):
            dq = float(np.hypot(*(sk_xy[si] - pts[q])))
            if dq < claim_dist[q]:
                claim_dist[q] = dq
                thickness[q] = skeleton.radius[si]
                flags[q] = True
    if not flags.any():
        raise SkeletonError("no generating points found")

    flagged = np.nonzero(flags)[0]
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - flagged[None, :])
    circ = np.minimum(diff, n - diff)  # uniform resampling: index distance ~ arc length
    order = np.argmin(circ, axis=1)    # ties resolve to the smaller contour index
    unflagged = ~flags
    thickness[unflagged] = thickness[flagged[order[unflagged]]]
    return AssociatedContour(contour=contour, thickness=thickness, generating_flags=flags)


def reconstruction_coverage(mask: BinaryMask, skeleton: Skeleton) -> float:
    """Fraction of foreground pixels covered by the union of skeleton discs."""
    ys, xs = np.nonzero(mask.bits)
    fg = np.column_stack([xs, ys]).astype(np.float64)
    covered = np.zeros(len(fg), dtype=bool)
    for (x, y), r in zip(skeleton.points, skeleton.radius):
        covered |= (fg[:, 0] - x) ** 2 + (fg[:, 1] - y) ** 2 <= (r + 0.5) ** 2
    return float(covered.mean())


def dump_skeleton_overlay_pgm(path: str | Path, mask: BinaryMask, skeleton: Skeleton) -> None:
    """Debug overlay: background 0, foreground 96, skeleton 255, as binary PGM."""
    img = np.where(mask.bits, 96, 0).astype(np.uint8)
    img[skeleton.grid] = 255
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def dump_thickness_table(path: str | Path, assoc: AssociatedContour) -> None:
    """Debug table: one line per contour point, `index x y thickness flagged`."""
    with open(path, "w") as fh:
        fh.write("# contour_index x y thickness flagged\n")
        for i, ((x, y), t, f) in enumerate(zip(assoc.contour.points,
                                               assoc.thickness, assoc.generating_flags)):
            fh.write(f"{i} {x:.3f} {y:.3f} {t:.4f} {int(f)}\n")
