"""Codebook learning: descriptor sampling and seeded Lloyd k-means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CodebookError


@dataclass(frozen=True)
class Codebook:
    entries: np.ndarray  # float32 (K, D)
    geometry_fingerprint: str
    training_samples: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def sample_training_descriptors(descriptor_sets, per_shape_cap: int, seed: int) -> np.ndarray:
    """Uniform seeded sample of part descriptors; each sampled part brings its
    mirror's descriptor along.

    ``descriptor_sets`` is an iterable of ``(descriptors, mirror_descriptors)``
    pairs of matching shape (P, D).
    """
    rng = np.random.default_rng(seed)
    rows = []
    for desc, mirror in descriptor_sets:
        p = len(desc)
        if p == 0:
            continue
        idx = np.arange(p) if p <= per_shape_cap else np.sort(
            rng.choice(p, size=per_shape_cap, replace=False))
        rows.append(desc[idx])
        rows.append(mirror[idx])
    if not rows:
        raise CodebookError("no descriptors available for codebook training")
    return np.vstack(rows).astype(np.float32)


def _squared_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances via the expanded inner product
    xx = (x * x).sum(axis=1)[:, None]
    cc = (centers * centers).sum(axis=1)[None, :]
    d = xx + cc - 2.0 * (x @ centers.T)
    np.maximum(d, 0.0, out=d)
    return d


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = np.empty((k, x.shape[1]), dtype=x.dtype)
    centers[0] = x[rng.integers(n)]
    d2 = _squared_distances(x, centers[:1]).ravel().astype(np.float64)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i] = x[rng.integers(n)]
        else:
            centers[i] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, _squared_distances(x, centers[i:i + 1]).ravel())
    return centers


def kmeans(descriptors: np.ndarray, k: int, seed: int = 0, max_iter: int = 100,
           tol: float = 1e-4, geometry_fingerprint: str = "") -> Codebook:
    """Seeded k-means++ plus Lloyd iterations.

    Stops when the fraction of samples changing assignment drops below ``tol``.
    Empty clusters are re-seeded from the farthest point of the largest cluster.
    """
    x = np.ascontiguousarray(descriptors, dtype=np.float32)
    n = len(x)
    if n < k:
        raise CodebookError(f"cannot build {k} centers from {n} samples")
    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(x, k, rng)

    assign = np.full(n, -1, dtype=np.int64)
    prev_objective = np.inf
    for _ in range(max_iter):
        d2 = _squared_distances(x, centers)
        new_assign = np.argmin(d2, axis=1)
        objective = float(d2[np.arange(n), new_assign].sum())
        if objective > prev_objective + 1e-6 * abs(prev_objective):
            break  # numerical stall; keep the previous centers
        prev_objective = objective
        changed = float((new_assign != assign).mean())
        assign = new_assign
        for j in range(k):
            sel = assign == j
            if sel.any():
                centers[j] = x[sel].mean(axis=0)
        # re-seed empty clusters from the farthest member of the largest one
        counts = np.bincount(assign, minlength=k)
        for j in np.nonzero(counts == 0)[0]:
            big = int(np.argmax(counts))
            members = np.nonzero(assign == big)[0]
            far = members[int(np.argmax(_squared_distances(x[members], centers[big:big + 1]).ravel()))]
            centers[j] = x[far]
            assign[far] = j
            counts = np.bincount(assign, minlength=k)
        if changed < tol:
            break

    centers = _dedupe(centers, x, assign, rng)
    return Codebook(entries=centers, geometry_fingerprint=geometry_fingerprint,
                    training_samples=n)


def _dedupe(centers: np.ndarray, x: np.ndarray, assign: np.ndarray,
            rng: np.random.Generator) -> np.ndarray:
    """Enforce pairwise-distinct codebook entries (> 1e-12 apart)."""
    k = len(centers)
    for _ in range(8):
        d = _squared_distances(centers, centers)
        d[np.diag_indices(k)] = np.inf
        dup = np.argwhere(d <= 1e-24)
        if len(dup) == 0:
            return centers
        j = int(dup[0, 0])
        counts = np.bincount(assign, minlength=k)
        big = int(np.argmax(counts))
        members = np.nonzero(assign == big)[0]
        far = members[int(np.argmax(_squared_distances(x[members], centers[big:big + 1]).ravel()))]
        centers[j] = x[far]
        assign[far] = j
    return centers


def kmeans_objective(descriptors: np.ndarray, centers: np.ndarray) -> float:
    x = np.asarray(descriptors, dtype=np.float32)
    d2 = _squared_distances(x, np.asarray(centers, dtype=np.float32))
    return float(d2.min(axis=1).sum())
