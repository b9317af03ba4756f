"""Experiment configuration and the line-oriented ``key = value`` config format."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

PROTOCOLS = ("half-split", "leave-one-out")

# Short aliases accepted in config files next to the canonical field names.
_ALIASES = {
    "n_c": "contour_points",
    "t": "dce_vertices",
    "n_s": "part_samples",
    "n_r": "ref_points",
    "n_d": "dist_bins",
    "n_o": "orient_bins",
    "n_td": "thick_bins",
    "k": "codebook_size",
    "llc_k": "llc_neighbors",
    "loo": "protocol",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """All tunables of the pipeline, with desk-scale defaults.

    ``contour_points`` is the resampled contour length, ``dce_vertices`` the
    number of contour-evolution critical points, ``part_samples``/``ref_points``
    the per-part sampling densities, ``dist_bins``/``orient_bins``/``thick_bins``
    the histogram geometry, ``codebook_size`` the number of k-means centers and
    ``llc_neighbors`` the locality constraint of the encoder.
    """

    contour_points: int = 256
    dce_vertices: int = 10
    part_samples: int = 50
    ref_points: int = 5
    dist_bins: int = 5
    orient_bins: int = 12
    thick_bins: int = 5
    codebook_size: int = 2500
    llc_neighbors: int = 5
    alpha: float = 10.0
    prune_ratio: float = 0.08
    codebook_cap: int = 30
    svm_epochs: int = 200
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-4
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9)
    protocol: str = "half-split"
    data: str | None = None

    def __post_init__(self):
        self.validate()

    @property
    def bins_per_histogram(self) -> int:
        return self.dist_bins * self.orient_bins * self.thick_bins

    @property
    def descriptor_dim(self) -> int:
        return self.ref_points * self.bins_per_histogram

    @property
    def pooled_dim(self) -> int:
        return 21 * self.codebook_size

    def validate(self) -> None:
        counts = (
            "contour_points", "dce_vertices", "part_samples", "ref_points",
            "dist_bins", "orient_bins", "thick_bins", "codebook_size",
            "llc_neighbors", "codebook_cap", "svm_epochs", "kmeans_max_iter",
        )
        for name in counts:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.thick_bins % 2 == 0:
            raise ConfigError("thick_bins must be odd (symmetric central bin)")
        if self.llc_neighbors > self.codebook_size:
            raise ConfigError("llc_neighbors cannot exceed codebook_size")
        if self.ref_points < 2 or self.ref_points > self.part_samples:
            raise ConfigError("ref_points must be in [2, part_samples]")
        if self.dce_vertices < 3:
            raise ConfigError("dce_vertices must be at least 3")
        if self.dce_vertices > self.contour_points:
            raise ConfigError("dce_vertices cannot exceed contour_points")
        if self.alpha <= 0 or self.prune_ratio < 0 or self.kmeans_tol < 0:
            raise ConfigError("alpha must be > 0, prune_ratio and kmeans_tol >= 0")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")

    def with_overrides(self, **kv) -> "ExperimentConfig":
        return replace(self, **_coerce_all(kv))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "seeds":
                v = ",".join(str(s) for s in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _coerce(name: str, raw) -> object:
    f = _FIELDS[name]
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if name == "seeds":
            if isinstance(raw, str):
                return tuple(int(s) for s in raw.replace(" ", "").split(",") if s)
            return tuple(int(s) for s in raw)
        if name in ("protocol", "data"):
            return str(raw)
        if f.type.startswith("int") or isinstance(getattr(ExperimentConfig, name), int):
            return int(raw)
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from exc


def _coerce_all(kv: dict) -> dict:
    out = {}
    for key, raw in kv.items():
        name = _ALIASES.get(key.lower(), key)
        if name not in _FIELDS:
            raise ConfigError(f"unknown config key: {key!r}")
        out[name] = _coerce(name, raw)
    return out


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse line-oriented ``key = value`` text. Unknown keys are errors."""
    kv = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    cfg = base or ExperimentConfig()
    return cfg.with_overrides(**kv)


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), base)
