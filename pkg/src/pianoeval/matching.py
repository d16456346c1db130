"""Tolerance-gated note matching and the objective precision/recall/F measure.

A reference/estimate note pair is a match candidate when pitch, onset and
offset all fall within the configured tolerances; candidates are resolved
to a maximum-cardinality bipartite matching, velocities are affinely
rescaled to the reference via least squares, and pairs whose rescaled
velocity error exceeds the velocity tolerance are rejected before the
final matching.
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .smf import Performance

FULL_VELOCITY_RANGE = 127


@dataclass(frozen=True)
class ToleranceConfig:
    """Gates for note matching. Setting a tolerance to math.inf disables
    that gate; velocity_tol >= 1 bypasses the velocity rescaling stage."""

    onset_tol: float = 0.05  # seconds
    offset_tol: float = 0.05  # seconds
    pitch_tol: float = 0.5  # semitones (one quarter-tone)
    velocity_tol: float = 0.1  # fraction of the full velocity range

    def __post_init__(self):
        for name in ("onset_tol", "offset_tol", "pitch_tol", "velocity_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Matching:
    """Matched (ref index, est index) pairs plus the fitted velocity rescale."""

    pairs: tuple[tuple[int, int], ...]
    velocity_scale: tuple[float, float]  # v_hat = a * v_est + b


@dataclass(frozen=True)
class ObjScore:
    precision: float
    recall: float
    f_measure: float


def max_bipartite_matching(edges) -> tuple[tuple[int, int], ...]:
    """Maximum-cardinality matching over (left, right) index edges.

    Hopcroft-Karp with sorted adjacency, so the result is deterministic
    regardless of the edge input order. Returns sorted pairs.
    """
    adjacency: dict[int, list[int]] = {}
    for left, right in edges:
        if left < 0 or right < 0:
            raise ValueError("vertex indices must be non-negative")
        adjacency.setdefault(left, []).append(right)
    lefts = sorted(adjacency)
    for left in lefts:
        adjacency[left] = sorted(set(adjacency[left]))

    INF = float("inf")
    match_left: dict[int, int] = {}
    match_right: dict[int, int] = {}
    dist: dict[int, float] = {}

    def bfs() -> bool:
        queue = deque()
        for left in lefts:
            if left not in match_left:
                dist[left] = 0
                queue.append(left)
            else:
                dist[left] = INF
        found = INF
        while queue:
            left = queue.popleft()
            if dist[left] >= found:
                continue
            for right in adjacency[left]:
                nxt = match_right.get(right)
                if nxt is None:
                    found = min(found, dist[left] + 1)
                elif dist[nxt] == INF:
                    dist[nxt] = dist[left] + 1
                    queue.append(nxt)
        return found != INF

    def dfs(left: int) -> bool:
        for right in adjacency[left]:
            nxt = match_right.get(right)
            if nxt is None or (dist[nxt] == dist[left] + 1 and dfs(nxt)):
                match_left[left] = right
                match_right[right] = left
                return True
        dist[left] = INF
        return False

    while bfs():
        for left in lefts:
            if left not in match_left:
                dfs(left)

    return tuple(sorted(match_left.items()))


def _candidate_edges(ref: Performance, est: Performance, tol: ToleranceConfig):
    """Stage-1 edges passing the pitch, onset, and offset gates.

    Estimate notes are bucketed by pitch and binary-searched by onset so
    edge construction stays near-linear for long performances.
    """
    by_pitch: dict[int, list[tuple[float, int]]] = {}
    for j, note in enumerate(est.notes):
        by_pitch.setdefault(note.pitch, []).append((note.onset, j))
    for entries in by_pitch.values():
        entries.sort()

    if math.isinf(tol.pitch_tol):
        pitch_range = range(0, 128)
    else:
        pitch_span = int(math.floor(tol.pitch_tol))
        pitch_range = None

    edges = []
    for i, rn in enumerate(ref.notes):
        if pitch_range is not None:
            pitches = pitch_range
        else:
            pitches = range(rn.pitch - pitch_span, rn.pitch + pitch_span + 1)
        for pitch in pitches:
            entries = by_pitch.get(pitch)
            if not entries:
                continue
            if math.isinf(tol.onset_tol):
                lo, hi = 0, len(entries)
            else:
                lo = bisect.bisect_left(entries, (rn.onset - tol.onset_tol, -1))
                hi = bisect.bisect_right(entries, (rn.onset + tol.onset_tol, 1 << 60))
            for onset, j in entries[lo:hi]:
                en = est.notes[j]
                if abs(rn.offset - en.offset) <= tol.offset_tol:
                    edges.append((i, j))
    return edges


def _fit_velocity_scale(pairs, ref: Performance, est: Performance):
    """Least-squares affine map v_hat = a * v_est + b onto reference velocities.

    Degenerate fits (fewer than 2 pairs, or all estimate velocities equal)
    fall back to a = 1 with b zeroing the mean residual; b = 0 with no pairs.
    """
    if not pairs:
        return 1.0, 0.0
    v_ref = np.array([ref.notes[i].velocity for i, _ in pairs], dtype=float)
    v_est = np.array([est.notes[j].velocity for _, j in pairs], dtype=float)
    if len(pairs) < 2 or np.ptp(v_est) == 0:
        return 1.0, float(np.mean(v_ref - v_est))
    a, b = np.polyfit(v_est, v_ref, 1)
    return float(a), float(b)


def match_notes(ref: Performance, est: Performance, tol: ToleranceConfig | None = None) -> Matching:
    """Three-stage matching: tolerance gates, velocity rescale fit, velocity gate."""
    tol = tol or ToleranceConfig()
    edges = _candidate_edges(ref, est, tol)
    provisional = max_bipartite_matching(edges)
    a, b = _fit_velocity_scale(provisional, ref, est)

    if tol.velocity_tol >= 1.0:
        # full-range tolerance bypasses the velocity gate entirely
        return Matching(provisional, (a, b))

    limit = tol.velocity_tol * FULL_VELOCITY_RANGE
    surviving = [
        (i, j)
        for i, j in edges
        if abs(ref.notes[i].velocity - (a * est.notes[j].velocity + b)) <= limit
    ]
    final = max_bipartite_matching(surviving)
    return Matching(final, (a, b))


def obj_measure(ref: Performance, est: Performance, tol: ToleranceConfig | None = None) -> ObjScore:
    """Precision/recall/F over matched notes.

    Empty-vs-empty scores 1 across the board; an empty side against a
    non-empty one scores 0.
    """
    if not ref.notes and not est.notes:
        return ObjScore(1.0, 1.0, 1.0)
    matching = match_notes(ref, est, tol)
    n = len(matching.pairs)
    precision = n / len(est.notes) if est.notes else 0.0
    recall = n / len(ref.notes) if ref.notes else 0.0
    if precision + recall > 0:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = 0.0
    return ObjScore(precision, recall, f_measure)
