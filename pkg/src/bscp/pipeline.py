"""End-to-end per-shape processing: mask -> normalized pose -> associated
contour -> part descriptors -> pooled shape vector."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codebook import Codebook
from .config import ExperimentConfig
from .descriptor import (BinGeometry, dce_critical_points, enumerate_parts,
                         mirror_descriptor, part_descriptor)
from .encoding import encode_parts, spm_pool
from .errors import DatasetError
from .mask import BinaryMask, foreground_bbox, load_mask, normalize_shape, trace_contour
from .skeleton import associate_thickness, distance_transform, extract_skeleton

log = logging.getLogger("bscp")

MASK_SUFFIXES = (".png", ".pgm")


@dataclass(frozen=True)
class ShapeFeatures:
    """Everything the encoder needs about one shape, independent of any
    codebook or training split."""

    name: str
    descriptors: np.ndarray         # float32 (p, d)
    mirror_descriptors: np.ndarray  # float32 (p, d)
    positions: np.ndarray           # float64 (p, 2) part median points
    pairs: np.ndarray               # int64 (p, 2) critical-point index pairs
    bbox: tuple[float, float, float, float]

    @property
    def n_parts(self) -> int:
        return len(self.descriptors)


def geometry_from_config(cfg: ExperimentConfig) -> BinGeometry:
    return BinGeometry.create(n_dist=cfg.dist_bins, n_orient=cfg.orient_bins,
                              n_thick=cfg.thick_bins)


def extract_features(mask: BinaryMask, cfg: ExperimentConfig,
                     name: str = "", geom: BinGeometry | None = None) -> ShapeFeatures:
    geom = geom or geometry_from_config(cfg)
    norm = normalize_shape(mask)
    contour = trace_contour(norm, n_points=cfg.contour_points)
    field = distance_transform(norm)
    skeleton = extract_skeleton(norm, field, prune_ratio=cfg.prune_ratio)
    assoc = associate_thickness(contour, skeleton)
    critical = dce_critical_points(contour, cfg.dce_vertices)
    parts = enumerate_parts(assoc, critical, n_samples=cfg.part_samples,
                            n_refs=cfg.ref_points)
    desc = np.stack([part_descriptor(p, geom) for p in parts]).astype(np.float32)
    mirror = np.stack([mirror_descriptor(p, geom) for p in parts]).astype(np.float32)
    positions = np.stack([p.median_position for p in parts])
    pairs = np.array([[p.start_index, p.end_index] for p in parts], dtype=np.int64)
    return ShapeFeatures(name=name, descriptors=desc, mirror_descriptors=mirror,
                         positions=positions, pairs=pairs, bbox=foreground_bbox(norm))


def encode_shape(features: ShapeFeatures, codebook: Codebook, llc_neighbors: int) -> np.ndarray:
    """Pooled, l2-normalized shape vector of dimension 21 * codebook size."""
    codes = encode_parts(features.descriptors, features.mirror_descriptors,
                         features.positions, codebook, llc_neighbors)
    return spm_pool(codes, features.bbox)


def shape_vector(mask: BinaryMask, codebook: Codebook, cfg: ExperimentConfig) -> np.ndarray:
    return encode_shape(extract_features(mask, cfg), codebook, cfg.llc_neighbors)


# --- dataset handling --------------------------------------------------------

def list_dataset(root: str | Path) -> tuple[list[str], list[tuple[int, Path]]]:
    """Dataset layout ``<root>/<class_name>/<shape>.png``; returns the sorted
    class names and (class_index, path) records in deterministic order."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset directory not found: {root}")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise DatasetError(f"no class subdirectories under {root}")
    records = []
    for ci, cname in enumerate(classes):
        files = sorted(p for p in (root / cname).iterdir()
                       if p.suffix.lower() in MASK_SUFFIXES)
        if not files:
            raise DatasetError(f"class directory {root / cname} has no mask files")
        records.extend((ci, f) for f in files)
    return classes, records


def extract_dataset_features(root: str | Path, cfg: ExperimentConfig):
    """Per-shape features and labels for a whole dataset directory."""
    classes, records = list_dataset(root)
    geom = geometry_from_config(cfg)
    features, labels = [], []
    for ci, path in records:
        features.append(extract_features(load_mask(path), cfg,
                                         name=f"{classes[ci]}/{path.name}", geom=geom))
        labels.append(ci)
        if len(features) % 50 == 0:
            log.info("extracted features for %d/%d shapes", len(features), len(records))
    return classes, features, np.asarray(labels, dtype=np.int64)
