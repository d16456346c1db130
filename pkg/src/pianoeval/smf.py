"""Standard MIDI File parsing, pianorolls, and fixed-length windowing.

Performances are flat note lists in seconds; type-0 and type-1 SMFs are
supported with a full tempo map. Sustain pedal and other control changes
are parsed but not carried into the Performance.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_RESOLUTION = 0.005  # seconds per pianoroll column
DEFAULT_TEMPO = 500_000  # microseconds per quarter note (120 BPM)

# guard against binary-float drift when quantizing times to grid indices
_EPS = 1e-9


class SmfParseError(ValueError):
    """Raised when SMF bytes are malformed; message carries the byte offset."""


class SmfWarning(UserWarning):
    """Non-fatal SMF oddities, e.g. a note-on left open at end of track."""


@dataclass(frozen=True, order=True)
class Note:
    """A single timed note event."""

    pitch: int
    onset: float
    offset: float
    velocity: int

    def __post_init__(self):
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside [0, 127]")
        if not 1 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside [1, 127]")
        if self.onset < 0:
            raise ValueError(f"onset {self.onset} < 0")
        if self.offset <= self.onset:
            raise ValueError(f"offset {self.offset} <= onset {self.onset}")

    @property
    def duration(self) -> float:
        return self.offset - self.onset


@dataclass(frozen=True)
class Performance:
    """An ordered collection of notes, sorted by (onset, pitch)."""

    notes: tuple[Note, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.notes, key=lambda n: (n.onset, n.pitch)))
        object.__setattr__(self, "notes", ordered)

    def __len__(self) -> int:
        return len(self.notes)

    @property
    def duration(self) -> float:
        """Time of the last offset, 0 for an empty performance."""
        return max((n.offset for n in self.notes), default=0.0)

    def shifted(self, dt: float) -> "Performance":
        return Performance(
            tuple(
                Note(n.pitch, n.onset + dt, n.offset + dt, n.velocity)
                for n in self.notes
            )
        )


@dataclass(frozen=True)
class Pianoroll:
    """128 x T grid of velocity values at a fixed column resolution."""

    columns: np.ndarray  # (128, T) uint8
    resolution: float = DEFAULT_RESOLUTION

    @property
    def n_columns(self) -> int:
        return self.columns.shape[1]


# ---------------------------------------------------------------------------
# SMF binary parsing
# ---------------------------------------------------------------------------


class _Reader:
    """Byte cursor that reports absolute offsets in parse errors."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def fail(self, msg: str):
        raise SmfParseError(f"{msg} at byte {self.pos}")

    def read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            self.fail(f"unexpected end of file (wanted {n} bytes)")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.read(1)[0]

    def u16(self) -> int:
        b = self.read(2)
        return (b[0] << 8) | b[1]

    def u32(self) -> int:
        b = self.read(4)
        return (b[0] << 24) | (b[1] << 16) | (b[2] << 8) | b[3]

    def vlq(self) -> int:
        value = 0
        for i in range(4):
            byte = self.u8()
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        self.fail("variable-length quantity longer than 4 bytes")


def _parse_track(r: _Reader, end: int, track_index: int):
    """Parse one MTrk body into raw (tick, kind, ...) events.

    Returns (note spans in ticks, tempo events, end tick). Note spans are
    (start_tick, end_tick | None, pitch, velocity); None marks a dangling
    note-on to be closed at end of track.
    """
    spans = []
    tempos = []  # (tick, usec per quarter)
    open_notes: dict[tuple[int, int], list[int]] = {}  # (channel, pitch) -> span idx
    tick = 0
    running_status = None

    while r.pos < end:
        tick += r.vlq()
        status = r.u8()
        if status < 0x80:
            if running_status is None:
                r.pos -= 1
                r.fail("data byte without running status")
            r.pos -= 1
            status = running_status

        if status == 0xFF:  # meta event
            meta_type = r.u8()
            length = r.vlq()
            payload = r.read(length)
            if meta_type == 0x51:
                if length != 3:
                    r.fail(f"tempo meta event with length {length}")
                tempos.append((tick, (payload[0] << 16) | (payload[1] << 8) | payload[2]))
            elif meta_type == 0x2F:
                break
            running_status = None
        elif status in (0xF0, 0xF7):  # sysex
            r.read(r.vlq())
            running_status = None
        elif status >= 0xF0:
            r.fail(f"unsupported system message 0x{status:02x}")
        else:
            running_status = status
            kind = status & 0xF0
            channel = status & 0x0F
            if kind in (0xC0, 0xD0):  # program change / channel pressure
                r.u8()
                continue
            data1 = r.u8()
            data2 = r.u8()
            key = (channel, data1)
            if kind == 0x90 and data2 > 0:
                open_notes.setdefault(key, []).append(len(spans))
                spans.append([tick, None, data1, data2])
            elif kind == 0x80 or (kind == 0x90 and data2 == 0):
                stack = open_notes.get(key)
                if stack:
                    spans[stack.pop(0)][1] = tick  # close the earliest open note
                # stray note-off: ignore
            # aftertouch / control change / pitch bend: parsed, discarded

    dangling = sum(len(v) for v in open_notes.values())
    if dangling:
        warnings.warn(
            f"track {track_index}: {dangling} dangling note-on(s) closed at end of track",
            SmfWarning,
            stacklevel=3,
        )
    return spans, tempos, tick


class _TempoMap:
    """Piecewise tick -> seconds conversion from tempo change events."""

    def __init__(self, division: int, tempos: list[tuple[int, int]]):
        self.smpte_tick_seconds = None
        if division & 0x8000:
            fps = 256 - (division >> 8)  # negative two's-complement high byte
            tpf = division & 0xFF
            self.smpte_tick_seconds = 1.0 / (fps * tpf)
            return
        events = sorted(tempos, key=lambda e: e[0])
        if not events or events[0][0] > 0:
            events.insert(0, (0, DEFAULT_TEMPO))
        self.ticks = []
        self.seconds = []
        self.us_per_tick = []
        now = 0.0
        prev_tick, prev_tempo = events[0]
        self.ticks.append(prev_tick)
        self.seconds.append(0.0)
        self.us_per_tick.append(prev_tempo / division)
        for tick, tempo in events[1:]:
            now += (tick - prev_tick) * self.us_per_tick[-1] / 1e6
            self.ticks.append(tick)
            self.seconds.append(now)
            self.us_per_tick.append(tempo / division)
            prev_tick = tick

    def to_seconds(self, tick: int) -> float:
        if self.smpte_tick_seconds is not None:
            return tick * self.smpte_tick_seconds
        i = bisect.bisect_right(self.ticks, tick) - 1
        return self.seconds[i] + (tick - self.ticks[i]) * self.us_per_tick[i] / 1e6


def parse_smf(data: bytes) -> Performance:
    """Parse SMF bytes (type 0 or 1) into a Performance in seconds.

    Note-on with velocity 0 is treated as note-off; mid-file tempo changes
    are honored; a note-on left open is closed at its track's end with an
    SmfWarning. Malformed input raises SmfParseError with a byte offset.
    """
    r = _Reader(data)
    if r.read(4) != b"MThd":
        r.pos = 0
        r.fail("missing MThd header")
    header_len = r.u32()
    if header_len < 6:
        r.fail(f"header length {header_len} < 6")
    fmt = r.u16()
    n_tracks = r.u16()
    division = r.u16()
    r.read(header_len - 6)
    if fmt not in (0, 1):
        raise SmfParseError(f"unsupported SMF format {fmt} at byte 8")
    if division == 0:
        raise SmfParseError("division of 0 ticks per quarter at byte 12")

    all_spans = []
    all_tempos = []
    tracks_seen = 0
    while tracks_seen < n_tracks and r.pos < len(r.data):
        chunk_id = r.read(4)
        length = r.u32()
        end = r.pos + length
        if end > len(r.data):
            r.fail(f"chunk length {length} overruns file")
        if chunk_id != b"MTrk":
            r.pos = end  # alien chunks are skipped per the SMF spec
            continue
        spans, tempos, end_tick = _parse_track(r, end, tracks_seen)
        for span in spans:
            if span[1] is None:
                span[1] = end_tick
        all_spans.extend(spans)
        all_tempos.extend(tempos)
        tracks_seen += 1
        r.pos = end

    if tracks_seen < n_tracks:
        r.fail(f"expected {n_tracks} tracks, found {tracks_seen}")

    tempo_map = _TempoMap(division, all_tempos)
    notes = []
    for start_tick, end_tick, pitch, velocity in all_spans:
        onset = tempo_map.to_seconds(start_tick)
        offset = tempo_map.to_seconds(end_tick)
        if offset <= onset:
            # zero-length span (e.g. closed at end-of-track on the same
            # tick): give it a one-tick duration to keep it representable
            offset = tempo_map.to_seconds(end_tick + 1)
        notes.append(Note(pitch, onset, offset, velocity))
    return Performance(tuple(notes))


# ---------------------------------------------------------------------------
# Pianoroll and windowing
# ---------------------------------------------------------------------------


def build_pianoroll(perf: Performance, resolution: float = DEFAULT_RESOLUTION) -> Pianoroll:
    """Rasterize a performance onto a 128 x T velocity grid.

    A note occupies columns [floor(onset/res), floor(offset/res)); where
    same-pitch notes overlap, the higher velocity wins.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    duration = perf.duration
    n_cols = int(math.ceil(duration / resolution - _EPS)) if duration > 0 else 0
    roll = np.zeros((128, n_cols), dtype=np.uint8)
    for note in perf.notes:
        lo = int(math.floor(note.onset / resolution + _EPS))
        hi = int(math.floor(note.offset / resolution + _EPS))
        hi = min(hi, n_cols)
        if hi > lo:
            row = roll[note.pitch, lo:hi]
            np.maximum(row, note.velocity, out=row)
    return Pianoroll(roll, resolution)


def trim_and_window(
    perf: Performance, length: float = 20.0, hop: float = 10.0
) -> list[Performance]:
    """Cut a performance into fixed-length windows after trimming lead-in.

    The performance is shifted so its first onset is at 0; windows start at
    multiples of `hop` and notes straddling a boundary are clipped to it.
    Each returned window is re-based to start at time 0. A performance
    shorter than `length` yields a single [0, length) window.
    """
    if length <= 0 or hop <= 0:
        raise ValueError("length and hop must be > 0")
    if not perf.notes:
        return []
    first_onset = min(n.onset for n in perf.notes)
    trimmed = perf.shifted(-first_onset)
    duration = trimmed.duration

    windows = []
    k = 0
    while True:
        start = k * hop
        if k > 0 and start + length > duration + _EPS:
            break
        stop = start + length
        clipped = []
        for n in trimmed.notes:
            if n.offset <= start or n.onset >= stop:
                continue
            clipped.append(
                Note(
                    n.pitch,
                    max(n.onset, start) - start,
                    min(n.offset, stop) - start,
                    n.velocity,
                )
            )
        windows.append(Performance(tuple(clipped)))
        k += 1
    return windows


# ---------------------------------------------------------------------------
# Text table export (for oracle cross-checking and alignment output)
# ---------------------------------------------------------------------------


def performance_to_table(perf: Performance) -> str:
    """Render as `onset<TAB>offset<TAB>pitch<TAB>velocity` lines, 6-decimal seconds."""
    lines = [
        f"{n.onset:.6f}\t{n.offset:.6f}\t{n.pitch}\t{n.velocity}" for n in perf.notes
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def performance_from_table(text: str) -> Performance:
    """Inverse of performance_to_table."""
    notes = []
    for i, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"line {i + 1}: expected 4 tab-separated fields")
        onset, offset, pitch, velocity = parts
        notes.append(Note(int(pitch), float(onset), float(offset), int(velocity)))
    return Performance(tuple(notes))
