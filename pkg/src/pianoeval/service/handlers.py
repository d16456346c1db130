"""Request handlers bridging the pydantic wire models and the core package.

The FastAPI routes and the CLI's in-process mode both call these, so the
two front ends cannot drift apart.
"""

from __future__ import annotations

import numpy as np

from .. import __version__
from ..align import AlignConfig, fastdtw, performance_to_frames, remap_performance
from ..analysis import BootstrapConfig, RatingRow, RatingsTable, analyze_report
from ..dispersion import SelectionConfig, selection_pipeline
from ..features import FEATURE_NAMES, StandardizationParams, extract_features
from ..matching import ToleranceConfig, match_notes, obj_measure
from ..measure import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_LAMBDA_GRID,
    TrainingConfig,
    fit_elasticnet,
    grid_train,
    loo_evaluate,
    make_input,
    model_from_dict,
    model_to_dict,
    predict,
    prune_refit,
)
from ..smf import Note, Performance, trim_and_window
from . import schemas


def notes_to_performance(notes: list[schemas.NoteModel]) -> Performance:
    return Performance(
        tuple(Note(n.pitch, n.onset, n.offset, n.velocity) for n in notes)
    )


def performance_to_notes(perf: Performance) -> list[schemas.NoteModel]:
    return [
        schemas.NoteModel(pitch=n.pitch, onset=n.onset, offset=n.offset, velocity=n.velocity)
        for n in perf.notes
    ]


def _tolerances(model: schemas.ToleranceModel | None) -> ToleranceConfig:
    if model is None:
        return ToleranceConfig()
    return ToleranceConfig(
        model.onset_tol, model.offset_tol, model.pitch_tol, model.velocity_tol
    )


def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    ref = notes_to_performance(req.ref)
    est = notes_to_performance(req.est)
    tol = _tolerances(req.tolerances)
    matching = match_notes(ref, est, tol)
    score = obj_measure(ref, est, tol)
    perceptual = None
    if req.model is not None:
        model = model_from_dict(req.model.model_dump(by_alias=True))
        x = make_input(ref, est, model.standardization, tol)
        perceptual = predict(model, x)
    return schemas.EvaluateResponse(
        precision=score.precision,
        recall=score.recall,
        f_measure=score.f_measure,
        matched=len(matching.pairs),
        velocity_scale=matching.velocity_scale,
        score=perceptual,
        tool_version=__version__,
    )


def features(req: schemas.FeaturesRequest) -> schemas.FeaturesResponse:
    perf = notes_to_performance(req.notes)
    windows = trim_and_window(perf, req.length, req.hop)
    out = []
    for k, window in enumerate(windows):
        vec = extract_features(window, window_span=req.length)
        out.append(schemas.WindowFeatures(start=k * req.hop, values=list(vec.values)))
    return schemas.FeaturesResponse(
        feature_names=list(FEATURE_NAMES), windows=out, tool_version=__version__
    )


def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    X = np.asarray(req.rows, dtype=float)
    y = np.asarray(req.ratings, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(FEATURE_NAMES) + 1:
        raise ValueError(f"training rows must have {len(FEATURE_NAMES) + 1} columns")
    if X.shape[0] != y.shape[0]:
        raise ValueError("rows and ratings must have equal length")
    standardization = None
    if req.standardization is not None:
        standardization = StandardizationParams(
            np.array(req.standardization.mean), np.array(req.standardization.std)
        )
    if req.lam is not None and req.alpha is not None:
        cfg = TrainingConfig(req.lam, req.alpha, req.tol, req.max_iter, req.prune_threshold)
        loo = loo_evaluate(X, y, cfg)
        model = prune_refit(fit_elasticnet(X, y, cfg, standardization), X, y)
        grid = [(req.lam, req.alpha, loo)]
    else:
        lambdas = req.grid_lambda or list(DEFAULT_LAMBDA_GRID)
        alphas = req.grid_alpha or list(DEFAULT_ALPHA_GRID)
        model, grid = grid_train(
            X,
            y,
            lambdas,
            alphas,
            req.tol,
            req.max_iter,
            req.prune_threshold,
            standardization,
        )
        loo = min(err for _, _, err in grid)
    return schemas.TrainResponse(
        model=schemas.ModelDocument(**model_to_dict(model)),
        loo_l1=loo,
        grid=[schemas.GridCell(lam=l, alpha=a, loo_l1=e) for l, a, e in grid],
        tool_version=__version__,
    )


def select(req: schemas.SelectRequest) -> schemas.SelectResponse:
    X = np.asarray(req.matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("matrix must be a non-empty 2-D array")
    cfg = SelectionConfig(
        p=req.p, metric=req.metric, add_medoid=req.medoid, pca_variance=req.pca_variance
    )
    result = selection_pipeline(X, cfg, req.method, req.centroid_excludes)
    selected = []
    for idx in result.indices:
        prov = req.provenance[idx] if req.provenance else schemas.ProvenanceModel()
        selected.append(
            schemas.SelectedWindow(index=idx, source=prov.source, window_start=prov.window_start)
        )
    return schemas.SelectResponse(
        indices=list(result.indices),
        min_pairwise=result.min_pairwise,
        method=result.method,
        pca_components_kept=result.pca_components_kept,
        selected=selected,
        tool_version=__version__,
    )


def align(req: schemas.AlignRequest) -> schemas.AlignResponse:
    ref = notes_to_performance(req.ref)
    est = notes_to_performance(req.est)
    cfg = AlignConfig(req.radius, req.frame_rate, req.feature)
    est_frames = performance_to_frames(est, cfg)
    ref_frames = performance_to_frames(ref, cfg)
    path, cost = fastdtw(est_frames, ref_frames, cfg)
    remapped = remap_performance(est, path, cfg.frame_rate)
    return schemas.AlignResponse(
        notes=performance_to_notes(remapped), cost=cost, tool_version=__version__
    )


def analyze(req: schemas.AnalyzeRequest) -> schemas.AnalyzeResponse:
    table = RatingsTable(
        tuple(
            RatingRow(
                r.subject_id,
                r.task,
                r.excerpt_id,
                r.method,
                r.rating,
                r.listen_seconds,
                r.moved_cursor,
            )
            for r in req.rows
        )
    )
    measures = None
    if req.measures is not None:
        measures = [(m.task, m.excerpt_id, m.method, m.value) for m in req.measures]
    cfg = BootstrapConfig(req.confidence, req.resamples, req.seed)
    report = analyze_report(table, measures, cfg)
    return schemas.AnalyzeResponse(report=report, tool_version=__version__)
