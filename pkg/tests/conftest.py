"""Shared fixtures and an SMF byte builder independent of the parser."""

from __future__ import annotations

import numpy as np
import pytest

from pianoeval.smf import Note, Performance


def vlq(value: int) -> bytes:
    """Encode a variable-length quantity."""
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def meta_event(delta: int, meta_type: int, data: bytes) -> bytes:
    return vlq(delta) + bytes([0xFF, meta_type]) + vlq(len(data)) + data


def tempo_event(delta: int, us_per_quarter: int) -> bytes:
    return meta_event(delta, 0x51, us_per_quarter.to_bytes(3, "big"))


def note_on(delta: int, pitch: int, velocity: int, channel: int = 0) -> bytes:
    return vlq(delta) + bytes([0x90 | channel, pitch, velocity])


def note_off(delta: int, pitch: int, channel: int = 0) -> bytes:
    return vlq(delta) + bytes([0x80 | channel, pitch, 64])


def end_of_track(delta: int = 0) -> bytes:
    return meta_event(delta, 0x2F, b"")


def track_chunk(*events: bytes, add_eot: bool = True) -> bytes:
    body = b"".join(events)
    if add_eot:
        body += end_of_track()
    return b"MTrk" + len(body).to_bytes(4, "big") + body


def smf_bytes(*tracks: bytes, fmt: int = 1, division: int = 480) -> bytes:
    header = (
        b"MThd"
        + (6).to_bytes(4, "big")
        + fmt.to_bytes(2, "big")
        + len(tracks).to_bytes(2, "big")
        + division.to_bytes(2, "big")
    )
    return header + b"".join(tracks)


def simple_smf(notes, division: int = 480, tempo: int | None = None) -> bytes:
    """Type-0 SMF holding (pitch, onset_tick, offset_tick, velocity) notes."""
    events = []
    for pitch, on, off, vel in notes:
        events.append((on, 0, pitch, vel))  # (tick, order: on before off, ...)
        events.append((off, 1, pitch, vel))
    events.sort()
    chunks = []
    if tempo is not None:
        chunks.append(tempo_event(0, tempo))
    now = 0
    for tick, kind, pitch, vel in events:
        delta = tick - now
        now = tick
        if kind == 0:
            chunks.append(note_on(delta, pitch, vel))
        else:
            chunks.append(note_off(delta, pitch))
    return smf_bytes(track_chunk(*chunks), fmt=0)


def random_performance(rng: np.random.Generator, n_notes: int, span: float = 10.0) -> Performance:
    notes = []
    for _ in range(n_notes):
        onset = rng.uniform(0, span)
        notes.append(
            Note(
                int(rng.integers(21, 109)),
                onset,
                onset + rng.uniform(0.05, 1.0),
                int(rng.integers(1, 128)),
            )
        )
    return Performance(tuple(notes))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
