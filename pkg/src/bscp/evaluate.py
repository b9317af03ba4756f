"""Evaluation protocols (stratified half splits, leave-one-out), parameter
sweeps, and plain-text reports with a machine-readable key=value block."""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import classifier
from .codebook import kmeans, sample_training_descriptors
from .config import ExperimentConfig
from .errors import DatasetError
from .model_io import ModelBundle, build_bundle
from .pipeline import (ShapeFeatures, encode_shape, extract_dataset_features,
                       geometry_from_config)

log = logging.getLogger("bscp")

SWEEP_PARAMS = {
    "thick_bins": "thick_bins", "n_td": "thick_bins",
    "ref_points": "ref_points", "n_r": "ref_points",
    "codebook_size": "codebook_size", "k": "codebook_size",
}


@dataclass
class EvaluationReport:
    protocol: str
    class_names: list[str]
    seeds: list[int]
    accuracies: list[float]
    confusion: np.ndarray  # (L, L) int, rows true, cols predicted, runs aggregated
    timings: dict[str, float] = field(default_factory=dict)
    train_descriptor_hashes: list[str] = field(default_factory=list)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float | None:
        if len(self.accuracies) < 2:
            return None
        return float(np.std(self.accuracies, ddof=1))


def _hash_matrix(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x, dtype=np.float32).tobytes()).hexdigest()


def _train_on(features: list[ShapeFeatures], labels: np.ndarray,
              class_names: list[str], cfg: ExperimentConfig, seed: int):
    """Codebook + SVM from the given shapes only; returns them plus the hash of
    the k-means input for leakage auditing."""
    pool = sample_training_descriptors(
        [(f.descriptors, f.mirror_descriptors) for f in features],
        per_shape_cap=cfg.codebook_cap, seed=seed)
    geom = geometry_from_config(cfg)
    book = kmeans(pool, cfg.codebook_size, seed=seed, max_iter=cfg.kmeans_max_iter,
                  tol=cfg.kmeans_tol, geometry_fingerprint=geom.fingerprint())
    vectors = np.stack([encode_shape(f, book, cfg.llc_neighbors) for f in features])
    svm = classifier.train(vectors, labels, class_names, alpha=cfg.alpha,
                           seed=seed, epochs=cfg.svm_epochs)
    return book, svm, _hash_matrix(pool)


def train_full(root, cfg: ExperimentConfig, seed: int = 0) -> ModelBundle:
    """Train codebook and classifier on every shape of the dataset."""
    class_names, features, labels = extract_dataset_features(root, cfg)
    book, svm, _ = _train_on(features, labels, class_names, cfg, seed)
    return build_bundle(cfg, geometry_from_config(cfg), book, svm)


def _split_indices(labels: np.ndarray, rng: np.random.Generator):
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        members = np.nonzero(labels == c)[0]
        if len(members) < 2:
            raise DatasetError(f"class {c} has fewer than 2 shapes; cannot half-split")
        perm = rng.permutation(members)
        half = (len(members) + 1) // 2
        train_idx.extend(perm[:half].tolist())
        test_idx.extend(perm[half:].tolist())
    return np.sort(train_idx), np.sort(test_idx)


def run_half_split(root, cfg: ExperimentConfig,
                   prepared=None) -> EvaluationReport:
    """For each configured seed: stratified 50/50 split, codebook and SVM
    trained on the training half only, accuracy measured on the other half."""
    t0 = time.perf_counter()
    class_names, features, labels = prepared or extract_dataset_features(root, cfg)
    t_features = time.perf_counter() - t0

    n_classes = len(class_names)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    accuracies, hashes = [], []
    t_train = 0.0
    for seed in cfg.seeds:
        t1 = time.perf_counter()
        rng = np.random.default_rng(seed)
        train_idx, test_idx = _split_indices(labels, rng)
        book, svm, pool_hash = _train_on([features[i] for i in train_idx],
                                         labels[train_idx], class_names, cfg, seed)
        correct = 0
        for i in test_idx:
            pred = classifier.predict(svm, encode_shape(features[i], book, cfg.llc_neighbors))
            confusion[labels[i], pred] += 1
            correct += int(pred == labels[i])
        accuracies.append(correct / len(test_idx))
        hashes.append(pool_hash)
        t_train += time.perf_counter() - t1
        log.info("seed %d: accuracy %.4f", seed, accuracies[-1])
    return EvaluationReport(protocol="half-split", class_names=class_names,
                            seeds=list(cfg.seeds), accuracies=accuracies,
                            confusion=confusion,
                            timings={"feature_seconds": t_features,
                                     "train_eval_seconds": t_train},
                            train_descriptor_hashes=hashes)


def run_leave_one_out(root, cfg: ExperimentConfig, prepared=None) -> EvaluationReport:
    """Each shape is tested against a classifier trained on all others. The
    codebook is built once from the full dataset (unsupervised; retraining it
    per fold would multiply cost for negligible effect)."""
    t0 = time.perf_counter()
    class_names, features, labels = prepared or extract_dataset_features(root, cfg)
    t_features = time.perf_counter() - t0
    seed = cfg.seeds[0]

    pool = sample_training_descriptors(
        [(f.descriptors, f.mirror_descriptors) for f in features],
        per_shape_cap=cfg.codebook_cap, seed=seed)
    geom = geometry_from_config(cfg)
    book = kmeans(pool, cfg.codebook_size, seed=seed, max_iter=cfg.kmeans_max_iter,
                  tol=cfg.kmeans_tol, geometry_fingerprint=geom.fingerprint())
    vectors = np.stack([encode_shape(f, book, cfg.llc_neighbors) for f in features])

    n = len(features)
    n_classes = len(class_names)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    correct = 0
    t1 = time.perf_counter()
    for i in range(n):
        keep = np.arange(n) != i
        svm = classifier.train(vectors[keep], labels[keep], class_names,
                               alpha=cfg.alpha, seed=seed, epochs=cfg.svm_epochs)
        pred = classifier.predict(svm, vectors[i])
        confusion[labels[i], pred] += 1
        correct += int(pred == labels[i])
    return EvaluationReport(protocol="leave-one-out", class_names=class_names,
                            seeds=[seed], accuracies=[correct / n], confusion=confusion,
                            timings={"feature_seconds": t_features,
                                     "train_eval_seconds": time.perf_counter() - t1},
                            train_descriptor_hashes=[_hash_matrix(pool)])


def run_protocol(root, cfg: ExperimentConfig, prepared=None) -> EvaluationReport:
    if cfg.protocol == "half-split":
        return run_half_split(root, cfg, prepared)
    return run_leave_one_out(root, cfg, prepared)


def sweep(root, cfg: ExperimentConfig, parameter: str, values) -> list[tuple[float, EvaluationReport]]:
    """Re-run the configured protocol for each parameter value. Descriptors are
    re-extracted per value because histogram geometry may change."""
    if parameter not in SWEEP_PARAMS:
        raise DatasetError(f"unknown sweep parameter {parameter!r}; "
                           f"choose from {sorted(set(SWEEP_PARAMS.values()))}")
    name = SWEEP_PARAMS[parameter]
    out = []
    for v in values:
        sub = cfg.with_overrides(**{name: v})
        log.info("sweep %s = %s", name, v)
        out.append((v, run_protocol(root, sub)))
    return out


# --- text report format -------------------------------------------------------

def render_report(report: EvaluationReport) -> str:
    lines = ["# evaluation report", ""]
    lines.append(f"{'class':<20} " + " ".join(f"{c[:8]:>8}" for c in report.class_names))
    for i, cname in enumerate(report.class_names):
        row = " ".join(f"{int(v):>8}" for v in report.confusion[i])
        lines.append(f"{cname[:20]:<20} {row}")
    lines.append("")
    lines.append(f"protocol = {report.protocol}")
    lines.append(f"classes = {','.join(report.class_names)}")
    lines.append(f"runs = {len(report.accuracies)}")
    lines.append(f"seeds = {','.join(str(s) for s in report.seeds)}")
    lines.append(f"accuracies = {','.join(f'{a:.6f}' for a in report.accuracies)}")
    lines.append(f"accuracy_mean = {report.mean_accuracy:.6f}")
    if report.std_accuracy is not None:
        lines.append(f"accuracy_std = {report.std_accuracy:.6f}")
    for i in range(len(report.class_names)):
        lines.append(f"confusion_{i} = {','.join(str(int(v)) for v in report.confusion[i])}")
    if report.train_descriptor_hashes:
        lines.append(f"train_descriptor_hashes = {','.join(report.train_descriptor_hashes)}")
    # timings are excluded from the determinism contract
    for key in sorted(report.timings):
        lines.append(f"{key} = {report.timings[key]:.3f}")
    return "\n".join(lines) + "\n"


def render_sweep(results: list[tuple[float, EvaluationReport]], parameter: str) -> str:
    lines = [f"# sweep over {parameter}", f"{'value':>10} {'mean':>10} {'std':>10}"]
    for v, rep in results:
        std = rep.std_accuracy if rep.std_accuracy is not None else 0.0
        lines.append(f"{v:>10} {rep.mean_accuracy:>10.6f} {std:>10.6f}")
    lines.append("")
    for v, rep in results:
        lines.append(f"sweep_{v} = {rep.mean_accuracy:.6f},{rep.std_accuracy or 0.0:.6f}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Re-parse the key=value block of a rendered report."""
    out: dict = {}
    for line in text.splitlines():
        if "=" not in line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if " " in key:
            continue  # confusion table rows are space-aligned, not key=value
        if key in ("protocol",):
            out[key] = value
        elif key in ("classes", "train_descriptor_hashes"):
            out[key] = value.split(",")
        elif key in ("runs",):
            out[key] = int(value)
        elif key == "seeds":
            out[key] = [int(v) for v in value.split(",")]
        elif key == "accuracies":
            out[key] = [float(v) for v in value.split(",")]
        elif key.startswith("confusion_"):
            out.setdefault("confusion", {})[int(key.split("_")[1])] = [
                int(v) for v in value.split(",")]
        else:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


def deterministic_block(report: EvaluationReport) -> str:
    """Everything in the report that must be bit-identical across reruns with
    the same config and seeds (i.e. all of it except wall-clock timings)."""
    text = render_report(report)
    keep = [ln for ln in text.splitlines() if not ln.split(" =")[0].endswith("_seconds")]
    return "\n".join(keep)
