"""Excerpt selection: Ward clustering, the four cluster-based max-min
dispersion heuristics, an exact subset-enumeration solver for small
instances, and the standardize -> PCA -> disperse -> medoid pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import fit_standardization, medoid_ranking, pca, standardize_matrix

METHODS = ("A", "B", "C", "D")
EXACT_SUBSET_GUARD = 10**6


@dataclass(frozen=True)
class SelectionConfig:
    p: int = 4
    metric: str = "euclidean"  # or "manhattan"
    add_medoid: bool = False
    pca_variance: float = 0.92

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.metric not in ("euclidean", "manhattan"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if not 0 < self.pca_variance <= 1:
            raise ValueError("pca_variance must be in (0, 1]")


@dataclass(frozen=True)
class ClusterLabels:
    labels: np.ndarray  # n ints in [0, p)
    merge_history: tuple[tuple[int, int, float], ...]  # (rep_i, rep_j, ward_cost)

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


@dataclass(frozen=True)
class SelectionResult:
    indices: tuple[int, ...]
    min_pairwise: float
    method: str | None = None
    pca_components_kept: int | None = None


def _pairwise_distances(X: np.ndarray, metric: str) -> np.ndarray:
    diffs = X[:, None, :] - X[None, :, :]
    if metric == "euclidean":
        return np.sqrt((diffs**2).sum(axis=2))
    if metric == "manhattan":
        return np.abs(diffs).sum(axis=2)
    raise ValueError(f"unknown metric {metric!r}")


def _point_distance(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    if metric == "euclidean":
        return float(np.sqrt(((a - b) ** 2).sum()))
    if metric == "manhattan":
        return float(np.abs(a - b).sum())
    raise ValueError(f"unknown metric {metric!r}")


def ward_cluster(X: np.ndarray, p: int) -> ClusterLabels:
    """Agglomerative Ward clustering cut at p clusters.

    Merge costs are the increase in total within-cluster sum of squares,
    maintained with the Lance-Williams recurrence. Clusters are keyed by
    their smallest member index and cost ties merge the lowest (i, j).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"p={p} outside [1, n={n}]")

    # merge-cost matrix over clusters keyed by representative (smallest
    # member) index; only the upper triangle of active reps is finite
    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    D = np.full((n, n), np.inf)
    iu = np.triu_indices(n, k=1)
    D[iu] = 0.5 * sq[iu]

    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    history = []
    for _ in range(n - p):
        flat = int(np.argmin(D))  # first minimum in row-major order = lowest (i, j)
        i, j = divmod(flat, n)
        cost = float(D[i, j])
        history.append((i, j, cost))

        ni, nj = sizes[i], sizes[j]
        ks = np.nonzero(active)[0]
        ks = ks[(ks != i) & (ks != j)]
        if ks.size:
            d_ik = np.where(ks < i, D[ks, i], D[i, ks])
            d_jk = np.where(ks < j, D[ks, j], D[j, ks])
            nk = sizes[ks]
            merged = ((ni + nk) * d_ik + (nj + nk) * d_jk - nk * cost) / (ni + nj + nk)
            lo = np.minimum(ks, i)
            hi = np.maximum(ks, i)
            D[lo, hi] = merged
        D[j, :] = np.inf
        D[:, j] = np.inf
        D[i, j] = np.inf
        active[j] = False
        members[i].extend(members.pop(j))
        sizes[i] += sizes[j]

    labels = np.empty(n, dtype=int)
    for label, rep in enumerate(sorted(members)):
        labels[members[rep]] = label
    return ClusterLabels(labels, tuple(history))


def select_dispersed(
    X: np.ndarray,
    labels: ClusterLabels,
    method: str = "A",
    metric: str = "euclidean",
    centroid_excludes: str = "self",
) -> SelectionResult:
    """Pick one point per cluster by the chosen dispersion criterion.

    A: farthest from the centroid of the other points (`centroid_excludes`
       picks the literal reading, "self", or the whole-cluster variant);
    B: max-min distance to the other clusters' centroids;
    C: max-min distance to the other clusters' points;
    D: max-min distance to all other points.
    Ties resolve to the lowest row index.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if centroid_excludes not in ("self", "cluster"):
        raise ValueError("centroid_excludes must be 'self' or 'cluster'")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    lab = labels.labels
    clusters = [np.nonzero(lab == c)[0] for c in range(labels.n_clusters)]
    total = X.sum(axis=0)
    centroids = [X[idx].mean(axis=0) for idx in clusters]
    dmat = _pairwise_distances(X, metric) if method in ("C", "D") else None

    chosen = []
    for c, idx in enumerate(clusters):
        best_i, best_score = None, -math.inf
        for i in idx:
            if method == "A":
                if centroid_excludes == "self":
                    if n == 1:
                        score = 0.0
                    else:
                        others_centroid = (total - X[i]) / (n - 1)
                        score = _point_distance(X[i], others_centroid, metric)
                else:
                    outside = total - X[idx].sum(axis=0)
                    n_outside = n - len(idx)
                    if n_outside == 0:
                        score = 0.0
                    else:
                        score = _point_distance(X[i], outside / n_outside, metric)
            elif method == "B":
                dists = [
                    _point_distance(X[i], centroids[c2], metric)
                    for c2 in range(len(clusters))
                    if c2 != c
                ]
                score = min(dists) if dists else -math.inf
            elif method == "C":
                mask = lab != c
                score = float(dmat[i, mask].min()) if mask.any() else -math.inf
            else:  # D
                row = np.delete(dmat[i], i)
                score = float(row.min()) if row.size else -math.inf
            if score > best_score:
                best_i, best_score = int(i), score
        chosen.append(best_i)

    chosen = sorted(chosen)
    min_d = min_pairwise_distance(X, chosen, metric) if len(chosen) >= 2 else 0.0
    return SelectionResult(tuple(chosen), min_d, method=method)


def min_pairwise_distance(X: np.ndarray, indices, metric: str = "euclidean") -> float:
    """Minimum pairwise distance among the selected rows."""
    indices = list(indices)
    if len(indices) < 2:
        raise ValueError("need at least 2 indices")
    X = np.asarray(X, dtype=float)
    best = math.inf
    for a in range(len(indices)):
        for b in range(a + 1, len(indices)):
            best = min(best, _point_distance(X[indices[a]], X[indices[b]], metric))
    return best


def exact_pdispersion(X: np.ndarray, p: int, metric: str = "euclidean") -> SelectionResult:
    """Exhaustive max-min p-dispersion with branch-and-bound pruning.

    Ties resolve to the lexicographically smallest index set. Refuses
    instances with more than 10^6 candidate subsets.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 2 <= p <= n:
        raise ValueError(f"p={p} outside [2, n={n}]")
    if math.comb(n, p) > EXACT_SUBSET_GUARD:
        raise ValueError(
            f"C({n},{p}) subsets exceed the {EXACT_SUBSET_GUARD} guard; "
            "use ward_cluster + select_dispersed instead"
        )
    dmat = _pairwise_distances(X, metric)

    best_set, best_min = None, -math.inf

    def extend(chosen: list[int], running_min: float):
        nonlocal best_set, best_min
        if len(chosen) == p:
            if running_min > best_min:
                best_set, best_min = list(chosen), running_min
            return
        start = chosen[-1] + 1 if chosen else 0
        remaining = p - len(chosen)
        for i in range(start, n - remaining + 1):
            new_min = running_min
            if chosen:
                new_min = min(new_min, dmat[np.array(chosen), i].min())
            if new_min <= best_min:
                continue  # cannot strictly improve; lexicographic first wins ties
            chosen.append(i)
            extend(chosen, new_min)
            chosen.pop()

    extend([], math.inf)
    return SelectionResult(tuple(best_set), float(best_min), method="exact")


def farthest_pair(X: np.ndarray, metric: str = "euclidean") -> tuple[int, int]:
    """Indices of the two most distant rows; ties take the smallest (i, j)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    dmat = _pairwise_distances(X, metric)
    best, best_d = (0, 1), -math.inf
    for i in range(n):
        for j in range(i + 1, n):
            if dmat[i, j] > best_d:
                best, best_d = (i, j), float(dmat[i, j])
    return best


def selection_pipeline(
    X_raw: np.ndarray,
    cfg: SelectionConfig,
    method: str = "A",
    centroid_excludes: str = "self",
) -> SelectionResult:
    """Standardize, project by PCA, cluster, disperse, optionally add the medoid.

    The medoid and the reported min_pairwise are computed in PCA space; a
    medoid colliding with a dispersed pick falls back to the next-best
    medoid.
    """
    X_raw = np.asarray(X_raw, dtype=float)
    n = X_raw.shape[0]
    if n <= cfg.p:
        raise ValueError(f"need more rows than p (n={n}, p={cfg.p})")
    params = fit_standardization(X_raw)
    X_std = standardize_matrix(X_raw, params)
    projection, X_pca = pca(X_std, cfg.pca_variance)

    labels = ward_cluster(X_pca, cfg.p)
    picked = select_dispersed(X_pca, labels, method, cfg.metric, centroid_excludes)
    indices = list(picked.indices)

    if cfg.add_medoid:
        for candidate in medoid_ranking(X_pca):
            if candidate not in indices:
                indices.append(candidate)
                break

    min_d = min_pairwise_distance(X_pca, indices, cfg.metric) if len(indices) >= 2 else 0.0
    return SelectionResult(
        tuple(indices),
        min_d,
        method=method,
        pca_components_kept=X_pca.shape[1],
    )
