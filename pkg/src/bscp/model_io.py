"""Binary model file: codebook, classifier weights and the parameters needed
to reproduce feature extraction at prediction time.

Layout (all little-endian):

    magic  "BSCP" (4 bytes)
    version u16 (currently 1)
    header  11 x u32: contour_points, dce_vertices, part_samples, ref_points,
            dist_bins, orient_bins, thick_bins, codebook_size, llc_neighbors,
            n_classes, descriptor_dim
    prune_ratio f32
    dist edges   f32 x dist_bins        (upper edges, first bin open at 0)
    orient edges f32 x orient_bins      (upper edges of the uniform bins)
    tau edges    f32 x (thick_bins + 1) (includes the -inf/+inf rails)
    codebook     f32 x codebook_size x descriptor_dim, row-major
    svm weights  f32 x n_classes x (21 * codebook_size), row-major
    class names  u16 count, then per name u16 byte length + UTF-8 bytes
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import SvmModel
from .codebook import Codebook
from .config import ExperimentConfig
from .descriptor import BinGeometry
from .errors import ModelFormatError

MAGIC = b"BSCP"
VERSION = 1


@dataclass(frozen=True)
class ModelBundle:
    config: ExperimentConfig
    geometry: BinGeometry
    codebook: Codebook
    svm: SvmModel

    @property
    def n_classes(self) -> int:
        return self.svm.n_classes


def build_bundle(cfg: ExperimentConfig, geom: BinGeometry, codebook: Codebook,
                 svm: SvmModel) -> ModelBundle:
    """Normalize all payload arrays to float32 so that save/load round-trips
    bit-exactly."""
    geom32 = BinGeometry(dist_edges=geom.dist_edges.astype(np.float32),
                         orient_bins=geom.orient_bins,
                         tau_edges=geom.tau_edges.astype(np.float32))
    cb32 = Codebook(entries=np.ascontiguousarray(codebook.entries, dtype=np.float32),
                    geometry_fingerprint=geom32.fingerprint(),
                    training_samples=codebook.training_samples)
    svm32 = SvmModel(weights=np.ascontiguousarray(svm.weights, dtype=np.float32),
                     class_labels=list(svm.class_labels), alpha=svm.alpha,
                     epochs=svm.epochs, final_objective=svm.final_objective,
                     seed=svm.seed)
    return ModelBundle(config=cfg, geometry=geom32, codebook=cb32, svm=svm32)


def save_model(bundle: ModelBundle, path: str | Path) -> None:
    cfg = bundle.config
    k, d = bundle.codebook.entries.shape
    l, pooled = bundle.svm.weights.shape
    if d != cfg.descriptor_dim or k != cfg.codebook_size or pooled != 21 * k:
        raise ModelFormatError("bundle dimensions are inconsistent with its config")
    header = struct.pack(
        "<11I", cfg.contour_points, cfg.dce_vertices, cfg.part_samples,
        cfg.ref_points, cfg.dist_bins, cfg.orient_bins, cfg.thick_bins,
        cfg.codebook_size, cfg.llc_neighbors, l, d)
    orient_edges = (2.0 * np.pi * np.arange(1, cfg.orient_bins + 1)
                    / cfg.orient_bins).astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(header)
        fh.write(struct.pack("<f", cfg.prune_ratio))
        fh.write(bundle.geometry.dist_edges.astype("<f4").tobytes())
        fh.write(orient_edges.astype("<f4").tobytes())
        fh.write(bundle.geometry.tau_edges.astype("<f4").tobytes())
        fh.write(bundle.codebook.entries.astype("<f4").tobytes())
        fh.write(bundle.svm.weights.astype("<f4").tobytes())
        fh.write(struct.pack("<H", l))
        for name in bundle.svm.class_labels:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ModelFormatError("truncated model file")
    return buf


def load_model(path: str | Path) -> ModelBundle:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise ModelFormatError("bad magic: not a model file")
        (version,) = struct.unpack("<H", _read_exact(fh, 2))
        if version != VERSION:
            raise ModelFormatError(f"unsupported model version {version}")
        (n_c, t, n_s, n_r, n_d, n_o, n_td, k, llc_k, l, d) = struct.unpack(
            "<11I", _read_exact(fh, 44))
        (prune_ratio,) = struct.unpack("<f", _read_exact(fh, 4))
        dist_edges = np.frombuffer(_read_exact(fh, 4 * n_d), dtype="<f4")
        _ = np.frombuffer(_read_exact(fh, 4 * n_o), dtype="<f4")  # orient edges: uniform
        tau_edges = np.frombuffer(_read_exact(fh, 4 * (n_td + 1)), dtype="<f4")
        entries = np.frombuffer(_read_exact(fh, 4 * k * d), dtype="<f4").reshape(k, d)
        weights = np.frombuffer(_read_exact(fh, 4 * l * 21 * k), dtype="<f4").reshape(l, 21 * k)
        (count,) = struct.unpack("<H", _read_exact(fh, 2))
        if count != l:
            raise ModelFormatError(f"class-name count {count} does not match header {l}")
        names = []
        for _i in range(count):
            (ln,) = struct.unpack("<H", _read_exact(fh, 2))
            names.append(_read_exact(fh, ln).decode("utf-8"))
        if fh.read(1):
            raise ModelFormatError("trailing bytes after model payload")

    if d != n_r * n_d * n_o * n_td:
        raise ModelFormatError("descriptor dimension inconsistent with bin counts")
    cfg = ExperimentConfig().with_overrides(
        contour_points=n_c, dce_vertices=t, part_samples=n_s, ref_points=n_r,
        dist_bins=n_d, orient_bins=n_o, thick_bins=n_td, codebook_size=k,
        llc_neighbors=llc_k, prune_ratio=float(prune_ratio))
    geom = BinGeometry(dist_edges=dist_edges.copy(), orient_bins=n_o,
                       tau_edges=tau_edges.copy())
    codebook = Codebook(entries=entries.copy(), geometry_fingerprint=geom.fingerprint(),
                        training_samples=0)
    svm = SvmModel(weights=weights.copy(), class_labels=names, alpha=0.0, epochs=0,
                   final_objective=0.0, seed=0)
    return ModelBundle(config=cfg, geometry=geom, codebook=codebook, svm=svm)
