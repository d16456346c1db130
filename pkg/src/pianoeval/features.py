"""Symbolic feature extraction and the supporting statistics machinery.

Sixteen features per window: mean and population standard deviation of
pitch, velocity and duration over notes; of polyphony and harmony over
active pianoroll columns; and of onset counts in sliding windows of
0.1 s, 1 s and 10 s with 50% hop. Harmony of a column is the mean
distance of its active pitches from the lowest active pitch.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .smf import DEFAULT_RESOLUTION, Performance, build_pianoroll

FEATURE_NAMES = (
    "pitch_mean",
    "pitch_std",
    "vel_mean",
    "vel_std",
    "dur_mean",
    "dur_std",
    "poly_mean",
    "poly_std",
    "harm_mean",
    "harm_std",
    "onsetrate01_mean",
    "onsetrate01_std",
    "onsetrate1_mean",
    "onsetrate1_std",
    "onsetrate10_mean",
    "onsetrate10_std",
)

ONSET_RATE_WINDOWS = (0.1, 1.0, 10.0)

_EPS = 1e-9
_STD_CLAMP = 1e-9


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # 16 floats in FEATURE_NAMES order

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (len(FEATURE_NAMES),):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column mean and (clamped) standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-D arrays of equal length")
        if np.any(std <= 0):
            raise ValueError("std entries must be > 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def identity(cls, dim: int) -> "StandardizationParams":
        return cls(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True)
class PcaProjection:
    components: np.ndarray  # (d_in, d_out), orthonormal columns
    mean: np.ndarray  # (d_in,)
    explained_variance_ratio: np.ndarray  # (d_out,), non-increasing

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components


def _population_stats(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return 0.0, 0.0
    return float(arr.mean()), float(arr.std())


def onset_rate_window_count(window_size: float, span: float) -> int:
    """Number of half-overlapping windows of `window_size` fitting in `span`."""
    if window_size > span:
        return 1
    hop = window_size / 2
    return int(math.floor((span - window_size) / hop + _EPS)) + 1


def _onset_rate_stats(onsets: np.ndarray, window_size: float, span: float):
    count = onset_rate_window_count(window_size, span)
    if window_size > span:
        return _population_stats([float(len(onsets))])
    hop = window_size / 2
    counts = np.empty(count)
    for k in range(count):
        start = k * hop
        counts[k] = np.count_nonzero((onsets >= start) & (onsets < start + window_size))
    return _population_stats(counts)


def extract_features(
    perf: Performance,
    window_span: float = 20.0,
    resolution: float = DEFAULT_RESOLUTION,
) -> FeatureVector:
    """Extract the 16-feature vector from one performance window.

    The window is assumed re-based to start at time 0 and to span
    `window_span` seconds. An empty window yields the all-zero vector.
    """
    if window_span <= 0:
        raise ValueError("window_span must be > 0")
    if not perf.notes:
        return FeatureVector(np.zeros(len(FEATURE_NAMES)))

    pitches = [n.pitch for n in perf.notes]
    velocities = [n.velocity for n in perf.notes]
    durations = [n.duration for n in perf.notes]

    roll = build_pianoroll(perf, resolution).columns
    active = roll > 0
    col_mask = active.any(axis=0)
    poly = active[:, col_mask].sum(axis=0)
    harmonies = []
    pitch_rows = np.arange(128)
    for col in np.nonzero(col_mask)[0]:
        col_pitches = pitch_rows[active[:, col]]
        harmonies.append(float(np.mean(col_pitches - col_pitches.min())))

    onsets = np.array([n.onset for n in perf.notes])
    values = []
    values.extend(_population_stats(pitches))
    values.extend(_population_stats(velocities))
    values.extend(_population_stats(durations))
    values.extend(_population_stats(poly))
    values.extend(_population_stats(harmonies))
    for size in ONSET_RATE_WINDOWS:
        values.extend(_onset_rate_stats(onsets, size, window_span))
    return FeatureVector(np.array(values))


def _as_matrix(corpus) -> np.ndarray:
    if isinstance(corpus, np.ndarray):
        return np.asarray(corpus, dtype=float)
    rows = [v.values if isinstance(v, FeatureVector) else v for v in corpus]
    return np.asarray(rows, dtype=float)


def fit_standardization(corpus) -> StandardizationParams:
    """Per-feature mean and population std over a corpus of vectors.

    Stds below 1e-9 are clamped to 1 so constant columns standardize to 0.
    """
    X = _as_matrix(corpus)
    if X.size == 0:
        raise ValueError("corpus must be non-empty")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < _STD_CLAMP, 1.0, std)
    return StandardizationParams(mean, std)


def standardize(v: FeatureVector, params: StandardizationParams) -> FeatureVector:
    if v.values.shape != params.mean.shape:
        raise ValueError(
            f"dimension mismatch: vector {v.values.shape} vs params {params.mean.shape}"
        )
    return FeatureVector((v.values - params.mean) / params.std)


def standardize_matrix(X: np.ndarray, params: StandardizationParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1:] != params.mean.shape:
        raise ValueError(
            f"dimension mismatch: matrix {X.shape} vs params {params.mean.shape}"
        )
    return (X - params.mean) / params.std


def pca(X: np.ndarray, variance_threshold: float = 0.92):
    """PCA via eigendecomposition of the covariance matrix.

    Keeps the smallest number of components whose cumulative explained
    variance reaches the threshold. Each component's largest-magnitude
    entry is made positive so the projection is sign-deterministic.

    Returns (PcaProjection, projected matrix).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be a matrix with at least 2 rows")
    if not 0 < variance_threshold <= 1:
        raise ValueError("variance_threshold must be in (0, 1]")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (X.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    total = eigvals.sum()
    if total <= 0:
        raise ValueError("input has zero variance; PCA is undefined")
    ratios = eigvals / total
    # drop numerically-zero components so ratios stay in (0, 1]
    nonzero = ratios > 1e-12
    ratios = ratios[nonzero]
    eigvecs = eigvecs[:, nonzero]
    cumulative = np.cumsum(ratios)
    k = int(np.searchsorted(cumulative, variance_threshold - 1e-12) + 1)
    k = min(k, len(ratios))

    components = eigvecs[:, :k].copy()
    for c in range(k):
        pivot = np.argmax(np.abs(components[:, c]))
        if components[pivot, c] < 0:
            components[:, c] = -components[:, c]
    projection = PcaProjection(components, mean, ratios[:k])
    return projection, centered @ components


def medoid(X: np.ndarray) -> int:
    """Index of the row minimizing the summed Euclidean distance to all rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty matrix")
    diffs = X[:, None, :] - X[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    return int(np.argmin(dist.sum(axis=1)))


def medoid_ranking(X: np.ndarray) -> list[int]:
    """Row indices sorted by summed distance to all rows (best first)."""
    X = np.asarray(X, dtype=float)
    diffs = X[:, None, :] - X[None, :, :]
    totals = np.sqrt((diffs**2).sum(axis=2)).sum(axis=1)
    return sorted(range(X.shape[0]), key=lambda i: (totals[i], i))


# ---------------------------------------------------------------------------
# Feature CSV interchange
# ---------------------------------------------------------------------------

PROVENANCE_COLUMNS = ("source", "window_start")


def save_feature_csv(path, matrix: np.ndarray, feature_names=FEATURE_NAMES, provenance=None):
    """Write a feature matrix as CSV, optionally with provenance columns.

    `provenance` is a list of (source, window_start) per row.
    """
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(PROVENANCE_COLUMNS) if provenance is not None else []
        writer.writerow(header + list(feature_names))
        for i, row in enumerate(matrix):
            prefix = []
            if provenance is not None:
                source, start = provenance[i]
                prefix = [source, f"{start:.6f}"]
            writer.writerow(prefix + [f"{x:.10g}" for x in row])


def load_feature_csv(path):
    """Read a feature CSV.

    Columns named `source` / `window_start` are treated as provenance;
    every other column is a numeric feature (extra externally computed
    columns are accepted verbatim).

    Returns (matrix, feature_names, provenance) where provenance is a list
    of (source, window_start) or None when the file has no such columns.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty feature CSV") from None
        prov_idx = {name: header.index(name) for name in PROVENANCE_COLUMNS if name in header}
        feature_idx = [i for i, name in enumerate(header) if name not in PROVENANCE_COLUMNS]
        feature_names = [header[i] for i in feature_idx]
        rows, provenance = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {line_no} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(row[i]) for i in feature_idx])
            except ValueError as exc:
                raise ValueError(f"{path}: row {line_no}: {exc}") from None
            if prov_idx:
                source = row[prov_idx["source"]] if "source" in prov_idx else ""
                start = float(row[prov_idx["window_start"]]) if "window_start" in prov_idx else 0.0
                provenance.append((source, start))
    matrix = np.asarray(rows, dtype=float) if rows else np.empty((0, len(feature_names)))
    return matrix, feature_names, (provenance if prov_idx else None)
