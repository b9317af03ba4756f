"""Request/response models of the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    model_loaded: bool


class LoadModelRequest(BaseModel):
    path: str


class ModelInfoResponse(BaseModel):
    classes: list[str]
    codebook_size: int
    descriptor_dim: int
    pooled_dim: int
    contour_points: int
    dce_vertices: int
    part_samples: int
    ref_points: int
    dist_bins: int
    orient_bins: int
    thick_bins: int
    llc_neighbors: int


class PredictRequest(BaseModel):
    mask_path: str


class PredictResponse(BaseModel):
    label: str
    scores: dict[str, float]


class ExtractRequest(BaseModel):
    mask_path: str
    out_path: str | None = None


class PartMeta(BaseModel):
    start_index: int
    end_index: int
    median_x: float
    median_y: float


class ExtractResponse(BaseModel):
    n_parts: int
    dim: int
    parts: list[PartMeta]
    out_path: str | None = None


class SynthRequest(BaseModel):
    out_dir: str
    variant: str = "four-class"
    per_class: int = Field(default=40, ge=1)
    seed: int = 0


class SynthResponse(BaseModel):
    classes: dict[str, int]


class TrainRequest(BaseModel):
    data_dir: str
    out_model: str
    seed: int = 0
    config: dict[str, str | int | float] = Field(default_factory=dict)


class TrainResponse(BaseModel):
    model_path: str
    classes: list[str]
    n_shapes: int


class EvalRequest(BaseModel):
    data_dir: str
    protocol: str = "half-split"
    config: dict[str, str | int | float] = Field(default_factory=dict)


class EvalResponse(BaseModel):
    protocol: str
    classes: list[str]
    accuracies: list[float]
    mean_accuracy: float
    std_accuracy: float | None
    report_text: str
