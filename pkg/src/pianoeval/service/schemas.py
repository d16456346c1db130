"""Pydantic request/response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class NoteModel(BaseModel):
    pitch: int = Field(ge=0, le=127)
    onset: float = Field(ge=0)
    offset: float
    velocity: int = Field(ge=1, le=127)


class ToleranceModel(BaseModel):
    onset_tol: float = 0.05
    offset_tol: float = 0.05
    pitch_tol: float = 0.5
    velocity_tol: float = 0.1


class StandardizationModel(BaseModel):
    mean: list[float]
    std: list[float]


class TrainingConfigModel(BaseModel):
    lam: float = Field(default=0.01, alias="lambda", ge=0)
    alpha: float = Field(default=0.5, ge=0, le=1)
    tol: float = 1e-6
    max_iter: int = 10_000
    prune_threshold: float = 0.1

    model_config = {"populate_by_name": True}


class ModelDocument(BaseModel):
    format_version: int
    weights: list[float]
    intercept: float
    active_mask: list[bool]
    standardization: StandardizationModel
    training_config: TrainingConfigModel
    feature_names: list[str]
    tool_version: Optional[str] = None


class EvaluateRequest(BaseModel):
    ref: list[NoteModel]
    est: list[NoteModel]
    tolerances: Optional[ToleranceModel] = None
    model: Optional[ModelDocument] = None


class EvaluateResponse(BaseModel):
    precision: float
    recall: float
    f_measure: float
    matched: int
    velocity_scale: tuple[float, float]
    score: Optional[float] = None
    tool_version: str


class FeaturesRequest(BaseModel):
    notes: list[NoteModel]
    length: float = 20.0
    hop: float = 10.0


class WindowFeatures(BaseModel):
    start: float
    values: list[float]


class FeaturesResponse(BaseModel):
    feature_names: list[str]
    windows: list[WindowFeatures]
    tool_version: str


class TrainRequest(BaseModel):
    rows: list[list[float]]
    ratings: list[float]
    grid_lambda: Optional[list[float]] = None
    grid_alpha: Optional[list[float]] = None
    lam: Optional[float] = Field(default=None, alias="lambda")
    alpha: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 10_000
    prune_threshold: float = 0.1
    standardization: Optional[StandardizationModel] = None

    model_config = {"populate_by_name": True}


class GridCell(BaseModel):
    lam: float = Field(alias="lambda")
    alpha: float
    loo_l1: float

    model_config = {"populate_by_name": True}


class TrainResponse(BaseModel):
    model: ModelDocument
    loo_l1: float
    grid: list[GridCell]
    tool_version: str


class ProvenanceModel(BaseModel):
    source: str = ""
    window_start: float = 0.0


class SelectRequest(BaseModel):
    matrix: list[list[float]]
    feature_names: Optional[list[str]] = None
    provenance: Optional[list[ProvenanceModel]] = None
    p: int = Field(default=4, ge=1)
    method: Literal["A", "B", "C", "D"] = "A"
    medoid: bool = False
    metric: Literal["euclidean", "manhattan"] = "euclidean"
    pca_variance: float = Field(default=0.92, gt=0, le=1)
    centroid_excludes: Literal["self", "cluster"] = "self"


class SelectedWindow(BaseModel):
    index: int
    source: str = ""
    window_start: float = 0.0


class SelectResponse(BaseModel):
    indices: list[int]
    min_pairwise: float
    method: str
    pca_components_kept: int
    selected: list[SelectedWindow]
    tool_version: str


class AlignRequest(BaseModel):
    ref: list[NoteModel]
    est: list[NoteModel]
    radius: int = Field(default=10, ge=0)
    frame_rate: float = Field(default=20.0, gt=0)
    feature: Literal["onset-count", "pianoroll"] = "onset-count"


class AlignResponse(BaseModel):
    notes: list[NoteModel]
    cost: float
    tool_version: str


class RatingRowModel(BaseModel):
    subject_id: str
    task: Literal["transcription", "resynthesis", "restoration"]
    excerpt_id: str
    method: Literal["HR", "NR", "OF", "SI"]
    rating: float = Field(ge=0, le=1)
    listen_seconds: float = Field(ge=0)
    moved_cursor: bool


class MeasureValueModel(BaseModel):
    task: str
    excerpt_id: str
    method: str
    value: float


class AnalyzeRequest(BaseModel):
    rows: list[RatingRowModel]
    measures: Optional[list[MeasureValueModel]] = None
    confidence: float = 0.95
    resamples: int = 10_000
    seed: int = 0


class AnalyzeResponse(BaseModel):
    report: dict
    tool_version: str


class HealthResponse(BaseModel):
    status: str
    tool_version: str
    model_loaded: bool
