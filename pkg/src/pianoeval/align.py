"""Dynamic time warping (exact and radius-constrained multiscale) and
remapping of note times through a warping path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .smf import Note, Performance, build_pianoroll

ALIGN_FEATURES = ("onset-count", "pianoroll")


@dataclass(frozen=True)
class WarpPath:
    """Monotone frame-index alignment from (0,0) to (m-1, n-1)."""

    pairs: tuple[tuple[int, int], ...]

    def check(self, m: int, n: int):
        """Raise if the path violates the warping-path invariants."""
        if not self.pairs:
            raise ValueError("empty path")
        if self.pairs[0] != (0, 0):
            raise ValueError(f"path starts at {self.pairs[0]}, not (0, 0)")
        if self.pairs[-1] != (m - 1, n - 1):
            raise ValueError(f"path ends at {self.pairs[-1]}, not ({m - 1}, {n - 1})")
        for (i0, j0), (i1, j1) in zip(self.pairs, self.pairs[1:]):
            if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1), (1, 1)):
                raise ValueError(f"invalid step ({i0},{j0}) -> ({i1},{j1})")


@dataclass(frozen=True)
class AlignConfig:
    radius: int = 10
    frame_rate: float = 20.0
    feature: str = "onset-count"

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be > 0")
        if self.feature not in ALIGN_FEATURES:
            raise ValueError(f"feature must be one of {ALIGN_FEATURES}")


def _as_frames(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("sequences must be non-empty 1-D or 2-D arrays")
    return np.ascontiguousarray(arr)


def _cost_row(a_frame: np.ndarray, b_block: np.ndarray, metric: str) -> np.ndarray:
    """Distances from one frame to a block of frames.

    Both solvers route through this helper so their local costs agree
    bit-for-bit.
    """
    if metric == "euclidean":
        return np.sqrt(((a_frame - b_block) ** 2).sum(axis=1))
    if metric == "manhattan":
        return np.abs(a_frame - b_block).sum(axis=1)
    raise ValueError(f"unknown metric {metric!r}")


def _backtrack(acc: np.ndarray) -> list[tuple[int, int]]:
    """Recover the path from an accumulated-cost matrix.

    Tie preference: diagonal, then the (1, 0) step, then (0, 1).
    """
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
            if diag <= up and diag <= left:
                i, j = i - 1, j - 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


def dtw_exact(a, b, metric: str = "euclidean") -> tuple[WarpPath, float]:
    """Full dynamic-programming DTW with steps (1,0), (0,1), (1,1).

    The accumulation runs along anti-diagonals, which only depend on the
    two previous ones, so the inner recurrence is vectorized.
    """
    a = _as_frames(a)
    b = _as_frames(b)
    m, n = a.shape[0], b.shape[0]
    cost = np.empty((m, n))
    for i in range(m):
        cost[i] = _cost_row(a[i], b, metric)

    acc = np.full((m, n), np.inf)
    acc[0, 0] = cost[0, 0]
    if n > 1:
        acc[0, 1:] = np.cumsum(cost[0, 1:]) + cost[0, 0]
    if m > 1:
        acc[1:, 0] = np.cumsum(cost[1:, 0]) + cost[0, 0]
    for k in range(2, m + n - 1):
        i_lo = max(1, k - (n - 1))
        i_hi = min(m - 1, k - 1)
        if i_lo > i_hi:
            continue
        i = np.arange(i_lo, i_hi + 1)
        j = k - i
        best = np.minimum(np.minimum(acc[i - 1, j - 1], acc[i - 1, j]), acc[i, j - 1])
        acc[i, j] = cost[i, j] + best
    path = WarpPath(tuple(_backtrack(acc)))
    return path, float(acc[m - 1, n - 1])


def _dtw_windowed(a, b, window: list[tuple[int, int]], metric: str):
    """DTW restricted to per-row column ranges (inclusive)."""
    m, n = a.shape[0], b.shape[0]
    inf = math.inf
    rows: list[np.ndarray] = []
    for i in range(m):
        lo, hi = window[i]
        cost = _cost_row(a[i], b[lo : hi + 1], metric)
        acc = np.empty(hi - lo + 1)
        if i == 0:
            acc[0] = cost[0]
            for j in range(lo + 1, hi + 1):
                acc[j - lo] = cost[j - lo] + acc[j - lo - 1]
        else:
            p_lo, p_hi = window[i - 1]
            prev = rows[i - 1]

            def above(j):
                return prev[j - p_lo] if p_lo <= j <= p_hi else inf

            for j in range(lo, hi + 1):
                best = min(
                    above(j - 1),
                    above(j),
                    acc[j - lo - 1] if j > lo else inf,
                )
                acc[j - lo] = cost[j - lo] + best
        rows.append(acc)

    # backtrack with the same tie preference as the exact solver
    def lookup(i, j):
        if i < 0 or j < 0:
            return inf
        lo, hi = window[i]
        return rows[i][j - lo] if lo <= j <= hi else inf

    i, j = m - 1, n - 1
    path = [(i, j)]
    while (i, j) != (0, 0):
        diag, up, left = lookup(i - 1, j - 1), lookup(i - 1, j), lookup(i, j - 1)
        if diag <= up and diag <= left:
            i, j = i - 1, j - 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return WarpPath(tuple(path)), float(rows[m - 1][n - 1 - window[m - 1][0]])


def _coarsen(seq: np.ndarray) -> np.ndarray:
    """Halve resolution by averaging adjacent frames; odd tails stand alone."""
    m = seq.shape[0]
    pairs = m // 2
    out = np.empty((pairs + (m % 2), seq.shape[1]))
    out[:pairs] = (seq[0 : 2 * pairs : 2] + seq[1 : 2 * pairs : 2]) / 2
    if m % 2:
        out[-1] = seq[-1]
    return out


def _expand_window(path: WarpPath, m: int, n: int, radius: int) -> list[tuple[int, int]]:
    """Project a coarse path to fine resolution and widen it by the radius."""
    proj_lo = np.full(m, n - 1, dtype=int)
    proj_hi = np.zeros(m, dtype=int)
    for ci, cj in path.pairs:
        for i in (2 * ci, 2 * ci + 1):
            if i >= m:
                continue
            proj_lo[i] = min(proj_lo[i], 2 * cj)
            proj_hi[i] = max(proj_hi[i], min(2 * cj + 1, n - 1))
    lo = np.empty(m, dtype=int)
    hi = np.empty(m, dtype=int)
    for i in range(m):
        k_lo, k_hi = max(0, i - radius), min(m - 1, i + radius)
        lo[i] = max(0, int(proj_lo[k_lo : k_hi + 1].min()) - radius)
        hi[i] = min(n - 1, int(proj_hi[k_lo : k_hi + 1].max()) + radius)
    # enforce monotone ranges so every cell can reach a predecessor
    for i in range(1, m):
        lo[i] = max(lo[i], lo[i - 1])
        hi[i] = max(hi[i], hi[i - 1])
    return [(int(lo[i]), int(hi[i])) for i in range(m)]


def fastdtw(a, b, cfg: AlignConfig | None = None, metric: str = "euclidean"):
    """Multiscale DTW: recursively coarsen, solve, and refine within a
    radius-expanded window. A radius covering either sequence reproduces
    dtw_exact bit-for-bit."""
    cfg = cfg or AlignConfig()
    a = _as_frames(a)
    b = _as_frames(b)
    min_size = cfg.radius + 2
    if a.shape[0] <= min_size or b.shape[0] <= min_size:
        return dtw_exact(a, b, metric)
    coarse_path, _ = fastdtw(_coarsen(a), _coarsen(b), cfg, metric)
    window = _expand_window(coarse_path, a.shape[0], b.shape[0], cfg.radius)
    return _dtw_windowed(a, b, window, metric)


# ---------------------------------------------------------------------------
# Performance framing and remapping
# ---------------------------------------------------------------------------


def performance_to_frames(perf: Performance, cfg: AlignConfig) -> np.ndarray:
    """Frame sequence for alignment: per-frame onset counts (1-D) or
    pianoroll columns (128-D) at cfg.frame_rate."""
    duration = perf.duration
    n_frames = max(1, int(math.ceil(duration * cfg.frame_rate - 1e-9)))
    if cfg.feature == "pianoroll":
        roll = build_pianoroll(perf, 1.0 / cfg.frame_rate).columns
        frames = roll.T.astype(float)
        if frames.shape[0] < n_frames:
            frames = np.vstack([frames, np.zeros((n_frames - frames.shape[0], 128))])
        return frames
    counts = np.zeros(n_frames)
    for note in perf.notes:
        idx = min(int(note.onset * cfg.frame_rate), n_frames - 1)
        counts[idx] += 1
    return counts[:, None]


def remap_performance(perf: Performance, path: WarpPath, frame_rate: float) -> Performance:
    """Warp note times through the path's piecewise-linear time map.

    Multiple target frames mapped from one source frame average out; times
    beyond the path span clamp to its end. Notes collapsing to zero length
    get one frame of duration.
    """
    if frame_rate <= 0:
        raise ValueError("frame_rate must be > 0")
    source: dict[int, list[int]] = {}
    for i, j in path.pairs:
        source.setdefault(i, []).append(j)
    src_frames = sorted(source)
    anchors_t = np.array(src_frames, dtype=float) / frame_rate
    anchors_mapped = (
        np.array([sum(source[i]) / len(source[i]) for i in src_frames], dtype=float)
        / frame_rate
    )

    frame = 1.0 / frame_rate
    notes = []
    for n in perf.notes:
        onset = float(np.interp(n.onset, anchors_t, anchors_mapped))
        offset = float(np.interp(n.offset, anchors_t, anchors_mapped))
        if offset <= onset:
            offset = onset + frame
        notes.append(Note(n.pitch, onset, offset, n.velocity))
    return Performance(tuple(notes))
