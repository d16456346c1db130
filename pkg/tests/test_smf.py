import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    meta_event,
    note_off,
    note_on,
    simple_smf,
    smf_bytes,
    tempo_event,
    track_chunk,
)
from pianoeval.smf import (
    Note,
    Performance,
    SmfParseError,
    SmfWarning,
    build_pianoroll,
    parse_smf,
    performance_from_table,
    performance_to_table,
    trim_and_window,
)


class TestNoteInvariants:
    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError):
            Note(128, 0.0, 1.0, 64)
        with pytest.raises(ValueError):
            Note(60, 0.0, 1.0, 0)
        with pytest.raises(ValueError):
            Note(60, 1.0, 1.0, 64)
        with pytest.raises(ValueError):
            Note(60, -0.1, 1.0, 64)

    def test_performance_sorted(self):
        p = Performance((Note(70, 1.0, 2.0, 10), Note(60, 0.5, 1.0, 20), Note(50, 1.0, 1.5, 30)))
        assert [n.pitch for n in p.notes] == [60, 50, 70]


class TestParseSmf:
    def test_tick_arithmetic_120bpm(self):
        # 480 ticks/quarter at the default 120 BPM: 480 ticks = 0.5 s
        data = simple_smf([(60, 0, 480, 80)])
        perf = parse_smf(data)
        assert len(perf) == 1
        n = perf.notes[0]
        assert (n.pitch, n.velocity) == (60, 80)
        assert n.onset == pytest.approx(0.0, abs=1e-12)
        assert n.offset == pytest.approx(0.5, abs=1e-12)

    def test_meta_only_track(self):
        data = smf_bytes(track_chunk(meta_event(0, 0x03, b"track name")), fmt=0)
        assert len(parse_smf(data)) == 0

    def test_velocity_zero_is_note_off(self):
        explicit = simple_smf([(60, 0, 480, 80)])
        zero_vel = smf_bytes(track_chunk(note_on(0, 60, 80), note_on(480, 60, 0)), fmt=0)
        assert parse_smf(zero_vel) == parse_smf(explicit)

    def test_tempo_change_mid_file(self):
        # 0.5 s at 120 BPM then 480 ticks at 240 BPM (0.25 s)
        data = smf_bytes(
            track_chunk(
                tempo_event(0, 500_000),
                note_on(0, 60, 90),
                tempo_event(480, 250_000),
                note_off(480, 60),
            ),
            fmt=0,
        )
        n = parse_smf(data).notes[0]
        assert n.onset == pytest.approx(0.0)
        assert n.offset == pytest.approx(0.75)

    def test_tempo_from_other_track_applies(self):
        # type 1: tempo lives in track 0, notes in track 1
        data = smf_bytes(
            track_chunk(tempo_event(0, 1_000_000)),  # 60 BPM
            track_chunk(note_on(0, 72, 50), note_off(480, 72)),
        )
        n = parse_smf(data).notes[0]
        assert n.offset == pytest.approx(1.0)

    def test_running_status(self):
        body = note_on(0, 60, 80) + bytes([64]) + bytes([62, 70])  # reuse 0x90 status
        body += note_off(480, 60) + bytes([64]) + bytes([62, 64])
        data = smf_bytes(track_chunk(body), fmt=0)
        perf = parse_smf(data)
        assert sorted(n.pitch for n in perf.notes) == [60, 62]

    def test_dangling_note_on_closed_with_warning(self):
        data = smf_bytes(
            track_chunk(note_on(0, 60, 80), note_on(480, 64, 70), note_off(480, 64)),
            fmt=0,
        )
        with pytest.warns(SmfWarning):
            perf = parse_smf(data)
        assert len(perf) == 2
        dangling = [n for n in perf.notes if n.pitch == 60][0]
        assert dangling.offset == pytest.approx(1.0)  # end of track at tick 960

    def test_malformed_header_reports_offset(self):
        with pytest.raises(SmfParseError, match="byte 0"):
            parse_smf(b"XXXX" + bytes(20))

    def test_truncated_track_reports_offset(self):
        data = simple_smf([(60, 0, 480, 80)])
        with pytest.raises(SmfParseError, match="byte"):
            parse_smf(data[:-4])

    def test_format_2_rejected(self):
        data = smf_bytes(track_chunk(), fmt=2)
        with pytest.raises(SmfParseError, match="format 2"):
            parse_smf(data)

    def test_parse_deterministic(self):
        data = simple_smf([(60, 0, 480, 80), (64, 240, 960, 70), (67, 480, 720, 60)])
        assert parse_smf(data) == parse_smf(data)

    def test_control_changes_ignored(self):
        body = note_on(0, 60, 80) + bytes([0, 0xB0, 64, 127]) + note_off(480, 60)
        perf = parse_smf(smf_bytes(track_chunk(body), fmt=0))
        assert len(perf) == 1
        assert perf.notes[0].offset == pytest.approx(0.5)

    def test_smpte_division(self):
        # -25 fps x 40 ticks/frame = 1000 ticks per second, tempo-independent
        division = ((256 - 25) << 8) | 40
        data = smf_bytes(track_chunk(note_on(0, 60, 80), note_off(500, 60)), fmt=0, division=division)
        n = parse_smf(data).notes[0]
        assert n.offset == pytest.approx(0.5)

    def test_alien_chunk_skipped(self):
        alien = b"XFIH" + (4).to_bytes(4, "big") + b"\0\0\0\0"
        header = (
            b"MThd" + (6).to_bytes(4, "big") + (0).to_bytes(2, "big")
            + (1).to_bytes(2, "big") + (480).to_bytes(2, "big")
        )
        data = header + alien + track_chunk(note_on(0, 60, 80), note_off(480, 60))
        assert len(parse_smf(data)) == 1


class TestPianoroll:
    def test_ten_columns_at_5ms(self):
        roll = build_pianoroll(Performance((Note(60, 0.0, 0.05, 80),)), 0.005)
        assert roll.n_columns == 10
        assert np.all(roll.columns[60, :10] == 80)
        total = int(roll.columns.sum())
        assert total == 80 * 10

    def test_empty_performance(self):
        roll = build_pianoroll(Performance())
        assert roll.columns.shape == (128, 0)

    def test_overlap_takes_max_velocity(self):
        perf = Performance((Note(60, 0.0, 1.0, 50), Note(60, 0.5, 1.5, 90)))
        roll = build_pianoroll(perf, 0.005)
        assert np.all(roll.columns[60, :100] == 50)
        assert np.all(roll.columns[60, 100:200] == 90)
        assert np.all(roll.columns[60, 200:300] == 90)

    def test_roundtrip_column_spans(self, rng):
        # non-overlapping notes on a clean grid reproduce their spans exactly
        res = 0.005
        notes = []
        t = 0.0
        for _ in range(30):
            dur = float(rng.integers(1, 40)) * res
            notes.append(Note(int(rng.integers(21, 109)), t, t + dur, int(rng.integers(1, 128))))
            t += dur + float(rng.integers(1, 10)) * res
        perf = Performance(tuple(notes))
        roll = build_pianoroll(perf, res)
        total_cells = 0
        for n in perf.notes:
            lo = round(n.onset / res)
            hi = round(n.offset / res)
            total_cells += hi - lo
            assert np.all(roll.columns[n.pitch, lo:hi] == n.velocity)
        # notes are disjoint in time, so active cells match the spans exactly
        assert int((roll.columns > 0).sum()) == total_cells


class TestTrimAndWindow:
    def test_40s_gives_3_windows(self):
        notes = tuple(Note(60, t, t + 0.25, 64) for t in np.arange(0.0, 40.0, 0.5))
        perf = Performance(notes)
        assert perf.duration == pytest.approx(39.75)
        wins = trim_and_window(Performance(notes + (Note(60, 39.5, 40.0, 64),)))
        assert len(wins) == 3

    def test_short_performance_single_window(self):
        perf = Performance((Note(60, 1.0, 5.0, 64),))
        wins = trim_and_window(perf, length=20.0)
        assert len(wins) == 1
        assert len(wins[0]) == 1
        # trimmed so the earliest onset sits at zero
        assert wins[0].notes[0].onset == pytest.approx(0.0)

    def test_note_clipped_at_window_edge(self):
        perf = Performance((Note(60, 0.0, 0.5, 64), Note(72, 19.0, 21.0, 80)))
        wins = trim_and_window(perf, length=20.0, hop=10.0)
        first = [n for n in wins[0].notes if n.pitch == 72][0]
        assert first.offset == pytest.approx(20.0)
        assert first.onset == pytest.approx(19.0)

    def test_empty_performance(self):
        assert trim_and_window(Performance()) == []

    def test_rebased_second_window(self):
        perf = Performance((Note(60, 0.0, 0.5, 64), Note(62, 12.0, 12.5, 64), Note(64, 29.5, 30.0, 64)))
        wins = trim_and_window(perf)
        assert len(wins) == 2
        assert [n.pitch for n in wins[1].notes] == [62, 64]
        assert wins[1].notes[0].onset == pytest.approx(2.0)

    @given(
        n_windows=st.integers(1, 6),
        extra=st.integers(0, 3),
        hop=st.sampled_from([2.5, 5.0, 10.0]),
    )
    @settings(deadline=None, max_examples=40)
    def test_window_count_formula(self, n_windows, extra, hop):
        # duration on an exact binary grid: count = floor((D - length)/hop) + 1
        length = 2 * hop
        duration = length + (n_windows - 1) * hop + extra * (hop / 4)
        notes = [Note(60, 0.0, 0.125, 64), Note(60, duration - 0.125, duration, 64)]
        wins = trim_and_window(Performance(tuple(notes)), length=length, hop=hop)
        assert len(wins) == math.floor((duration - length) / hop) + 1

    @given(st.integers(0, 2**31 - 1))
    @settings(deadline=None, max_examples=30)
    def test_window_notes_within_bounds(self, seed):
        from conftest import random_performance

        perf = random_performance(np.random.default_rng(seed), 40, span=45.0)
        for win in trim_and_window(perf):
            for n in win.notes:
                assert 0 <= n.onset < 20.0
                assert n.offset <= 20.0 + 1e-9


class TestTextTable:
    def test_roundtrip(self, rng):
        from conftest import random_performance

        perf = random_performance(rng, 20)
        text = performance_to_table(perf)
        back = performance_from_table(text)
        assert len(back) == len(perf)
        for a, b in zip(perf.notes, back.notes):
            assert a.pitch == b.pitch and a.velocity == b.velocity
            assert a.onset == pytest.approx(b.onset, abs=1e-6)
            assert a.offset == pytest.approx(b.offset, abs=1e-6)

    def test_empty(self):
        assert performance_to_table(Performance()) == ""
        assert len(performance_from_table("")) == 0
