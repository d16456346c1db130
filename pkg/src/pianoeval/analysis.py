"""Listening-test ratings: ingestion with answer filtering, per-question
aggregation, bootstrap and normal-theory error margins, and correlation
of the aggregates against measure outputs.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import __version__

TASKS = ("transcription", "resynthesis", "restoration")
RATING_METHODS = ("HR", "NR", "OF", "SI")
MIN_LISTEN_SECONDS = 5.0

RATINGS_COLUMNS = (
    "subject_id",
    "task",
    "excerpt_id",
    "method",
    "rating",
    "listen_seconds",
    "moved_cursor",
)


@dataclass(frozen=True)
class RatingRow:
    subject_id: str
    task: str
    excerpt_id: str
    method: str
    rating: float
    listen_seconds: float
    moved_cursor: bool


@dataclass(frozen=True)
class RatingsTable:
    rows: tuple[RatingRow, ...]
    dropped_listen: int = 0
    dropped_cursor: int = 0

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class BootstrapConfig:
    confidence: float = 0.95
    resamples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.resamples < 100:
            raise ValueError("resamples must be >= 100")


@dataclass(frozen=True)
class GroupStats:
    mean: float
    median: float
    count: int


def _parse_bool(text: str, where: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ValueError(f"{where}: bad boolean {text!r}")


def load_and_filter_ratings(path) -> RatingsTable:
    """Read a ratings CSV, dropping too-short listens and untouched sliders.

    Optional `rating_min` / `rating_max` columns declare a raw scale that
    is rescaled to [0, 1] at ingestion. Errors name the offending row.
    """
    rows = []
    dropped_listen = dropped_cursor = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in RATINGS_COLUMNS if c not in fields]
        if missing:
            raise ValueError(f"{path}: missing columns: {', '.join(missing)}")
        has_scale = "rating_min" in fields and "rating_max" in fields
        for line_no, raw in enumerate(reader, start=2):
            where = f"{path}: row {line_no}"
            task = raw["task"].strip()
            if task not in TASKS:
                raise ValueError(f"{where}: unknown task {task!r}")
            method = raw["method"].strip()
            if method not in RATING_METHODS:
                raise ValueError(f"{where}: unknown method {method!r}")
            try:
                rating = float(raw["rating"])
                listen = float(raw["listen_seconds"])
            except ValueError:
                raise ValueError(f"{where}: non-numeric rating or listen_seconds") from None
            if has_scale:
                lo, hi = float(raw["rating_min"]), float(raw["rating_max"])
                if hi <= lo:
                    raise ValueError(f"{where}: rating_max must exceed rating_min")
                rating = (rating - lo) / (hi - lo)
            if not 0 <= rating <= 1:
                raise ValueError(f"{where}: rating {rating} outside [0, 1]")
            if listen < 0:
                raise ValueError(f"{where}: negative listen_seconds")
            moved = _parse_bool(raw["moved_cursor"], where)
            if listen < MIN_LISTEN_SECONDS:
                dropped_listen += 1
                continue
            if not moved:
                dropped_cursor += 1
                continue
            rows.append(
                RatingRow(
                    raw["subject_id"].strip(),
                    task,
                    raw["excerpt_id"].strip(),
                    method,
                    rating,
                    listen,
                    moved,
                )
            )
    return RatingsTable(tuple(rows), dropped_listen, dropped_cursor)


def aggregate_ratings(table: RatingsTable) -> dict[tuple[str, str, str], GroupStats]:
    """Mean/median/count per (task, excerpt_id, method); empty groups absent."""
    grouped: dict[tuple[str, str, str], list[float]] = {}
    for row in table.rows:
        grouped.setdefault((row.task, row.excerpt_id, row.method), []).append(row.rating)
    return {
        key: GroupStats(statistics.fmean(vals), statistics.median(vals), len(vals))
        for key, vals in grouped.items()
    }


def bootstrap_margin(samples, cfg: BootstrapConfig | None = None) -> float:
    """Half-width of the percentile bootstrap CI of the mean."""
    cfg = cfg or BootstrapConfig()
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(cfg.seed)
    idx = rng.integers(0, n, size=(cfg.resamples, n))
    means = samples[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - cfg.confidence) / 2, (1 + cfg.confidence) / 2])
    return float((hi - lo) / 2)


def normal_margin(samples, confidence: float = 0.95) -> float:
    """Parametric margin: z * s / sqrt(n) with the sample std (ddof=1)."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    z = norm.ppf((1 + confidence) / 2)
    return float(z * samples.std(ddof=1) / np.sqrt(n))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their ranks."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def correlation(x, y, kind: str = "pearson") -> float:
    """Pearson or Spearman correlation; constant input is an error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("x and y must be equal-length 1-D arrays with >= 2 entries")
    if kind == "spearman":
        x, y = _average_ranks(x), _average_ranks(y)
    elif kind != "pearson":
        raise ValueError(f"kind must be 'pearson' or 'spearman', got {kind!r}")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0 or sy == 0:
        raise ValueError("correlation undefined for constant input")
    return float((xc @ yc) / np.sqrt(sx * sy))


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


def _correlation_or_none(x, y, kind):
    try:
        return correlation(x, y, kind)
    except ValueError:
        return None


def analyze_report(
    table: RatingsTable,
    measures: list[tuple[str, str, str, float]] | None = None,
    cfg: BootstrapConfig | None = None,
) -> dict:
    """Full JSON-ready analysis: group stats with both error margins and,
    when measure values are supplied, per-task correlation tables.

    `measures` rows are (task, excerpt_id, method, value) and are joined
    with the per-group mean rating.
    """
    cfg = cfg or BootstrapConfig()
    stats = aggregate_ratings(table)
    groups = []
    for key in sorted(stats):
        task, excerpt, method = key
        ratings = [r.rating for r in table.rows if (r.task, r.excerpt_id, r.method) == key]
        entry = {
            "task": task,
            "excerpt_id": excerpt,
            "method": method,
            "mean": stats[key].mean,
            "median": stats[key].median,
            "count": stats[key].count,
            "bootstrap_margin": bootstrap_margin(ratings, cfg) if len(ratings) >= 2 else None,
            "normal_margin": normal_margin(ratings, cfg.confidence) if len(ratings) >= 2 else None,
        }
        groups.append(entry)

    correlations = None
    if measures is not None:
        lookup = {(t, e, m): v for t, e, m, v in measures}
        correlations = {}
        for task in TASKS:
            pairs = [
                (lookup[key], stats[key].mean)
                for key in sorted(stats)
                if key[0] == task and key in lookup
            ]
            if len(pairs) < 2:
                continue
            mx = [p[0] for p in pairs]
            my = [p[1] for p in pairs]
            per_excerpt = {}
            for excerpt in sorted({k[1] for k in stats if k[0] == task}):
                sub = [
                    (lookup[key], stats[key].mean)
                    for key in sorted(stats)
                    if key[0] == task and key[1] == excerpt and key in lookup
                ]
                if len(sub) < 2:
                    continue
                per_excerpt[excerpt] = {
                    "pearson": _correlation_or_none([p[0] for p in sub], [p[1] for p in sub], "pearson"),
                    "spearman": _correlation_or_none([p[0] for p in sub], [p[1] for p in sub], "spearman"),
                    "n": len(sub),
                }
            summary = {}
            for kind in ("pearson", "spearman"):
                vals = [v[kind] for v in per_excerpt.values() if v[kind] is not None]
                if vals:
                    summary[kind] = {
                        "min": min(vals),
                        "max": max(vals),
                        "avg": statistics.fmean(vals),
                    }
            correlations[task] = {
                "pooled": {
                    "pearson": _correlation_or_none(mx, my, "pearson"),
                    "spearman": _correlation_or_none(mx, my, "spearman"),
                    "n": len(pairs),
                },
                "per_excerpt": per_excerpt,
                "summary": summary,
            }

    return {
        "tool_version": __version__,
        "config": {
            "confidence": cfg.confidence,
            "resamples": cfg.resamples,
            "seed": cfg.seed,
        },
        "dropped": {
            "listen_seconds": table.dropped_listen,
            "moved_cursor": table.dropped_cursor,
            "kept": len(table.rows),
        },
        "groups": groups,
        "correlations": correlations,
    }
