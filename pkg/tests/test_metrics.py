import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from f0vote.errors import DegenerateInputError
from f0vote.metrics import (EvalReport, cents, delta_cent_stats, evaluate, rpa, rpa_shifted,
                            vuv_scores)
from f0vote.track import PitchTrack

from conftest import perturbed, random_track
from oracles import bf_delta_cent, bf_rpa, bf_vuv

hz = st.floats(20, 5000, allow_nan=False)


def test_cents_examples():
    assert cents(440, 220) == 1200.0
    assert cents(300.0, 300.0) == 0.0
    # 261.6256 is 220 * 2**(3/12) rounded to 4 decimals, so it sits slightly sharp
    want = float(1200 * mpmath.log(mpmath.mpf("261.6256") / 220, 2))
    assert cents(261.6256, 220) == pytest.approx(want, abs=1e-9)
    assert cents(261.6256, 220) == pytest.approx(300.0, abs=1e-3)
    f = 220 * 2 ** 0.25
    assert cents(f, 220) == pytest.approx(300.0, abs=1e-9)


@pytest.mark.parametrize("a, b", [(0, 100), (100, -1), (float("nan"), 100)])
def test_cents_rejects_non_positive(a, b):
    with pytest.raises(ValueError):
        cents(a, b)


@given(hz, hz, hz)
def test_cents_antisymmetric_and_additive(a, b, c):
    assert cents(a, b) == pytest.approx(-cents(b, a), abs=1e-9)
    assert cents(a, b) + cents(b, c) == pytest.approx(cents(a, c), abs=1e-9)


def test_rpa_examples():
    ref = PitchTrack.from_hz([100.0] * 4)
    assert rpa(ref, ref, 50) == 1.0
    est = PitchTrack.from_hz([100.0, 100 * 2 ** (60 / 1200), 0.0, 100.0])
    assert rpa(est, ref, 50) == 0.5
    assert rpa(PitchTrack.from_hz([200.0] * 4), ref, 50) == 0.0


def test_rpa_threshold_is_strict():
    ref = PitchTrack.from_hz([100.0])
    est = PitchTrack.from_hz([100 * 2 ** (25 / 1200)])
    assert rpa(est, ref, 25.000001) == 1.0
    assert rpa(est, ref, 24.999999) == 0.0


def test_rpa_needs_voiced_reference():
    ref = PitchTrack.from_hz([0.0, 0.0])
    with pytest.raises(DegenerateInputError):
        rpa(ref, ref, 50)


def test_rpa_shifted_examples():
    base = [0, 0, 100, 110, 120, 130, 140, 150]
    ref = PitchTrack.from_hz(base)
    assert rpa_shifted(ref, ref, 0, 50) == rpa(ref, ref, 50)
    delayed = PitchTrack.from_hz([0, 0] + base[:-2])
    # ref-voiced frames 6 and 7 pair with est frames 8, 9 (off the track): 4 of 6
    assert rpa_shifted(delayed, ref, 2, 50) == pytest.approx(4 / 6)
    full = PitchTrack.from_hz([100, 110, 120, 130, 0, 0])
    lagged = PitchTrack.from_hz([0, 0, 100, 110, 120, 130])
    assert rpa_shifted(lagged, full, 2, 50) == 1.0
    silent = PitchTrack.from_hz([0.0] * 8)
    assert rpa_shifted(silent, ref, 1, 50) == 0.0
    with pytest.raises(ValueError):
        rpa_shifted(ref, ref, 8, 50)


def test_vuv_examples():
    ref = PitchTrack.from_hz([100, 100, 0, 0])
    assert vuv_scores(ref, ref) == (1.0, 0.0)
    assert vuv_scores(PitchTrack.from_hz([100] * 4), ref) == (1.0, 1.0)
    assert vuv_scores(PitchTrack.from_hz([100, 0, 100, 0]), ref) == (0.5, 0.5)


@pytest.mark.parametrize("f0, which", [([100, 100], "false alarm"), ([0, 0], "recall")])
def test_vuv_zero_denominator_names_the_class(f0, which):
    ref = PitchTrack.from_hz(f0)
    with pytest.raises(DegenerateInputError, match=which):
        vuv_scores(ref, ref)


def test_delta_cent_examples():
    ref = PitchTrack.from_hz([100, 120, 0, 90, 300])
    assert delta_cent_stats(ref, ref) == (0.0, 0.0)
    up = ref.with_values(ref.voiced, ref.freq * 2 ** (50 / 1200))
    m, s = delta_cent_stats(up, ref)
    assert m == pytest.approx(50.0, abs=1e-9) and s == pytest.approx(0.0, abs=1e-9)
    ref4 = PitchTrack.from_hz([100.0] * 4)
    est = PitchTrack.from_hz([100 * 2 ** (e / 1200) for e in (10, -10, 10, -10)])
    m, s = delta_cent_stats(est, ref4)
    assert m == pytest.approx(0.0, abs=1e-9)
    # sample std of +-10 with n = 4: sqrt(400 / 3)
    assert s == pytest.approx(math.sqrt(400 / 3), abs=1e-9)
    assert s == pytest.approx(11.547, abs=1e-3)


def test_delta_cent_excludes_voicing_mismatch():
    ref = PitchTrack.from_hz([100, 100, 0, 100])
    est = PitchTrack.from_hz([100, 100, 500, 0])
    assert delta_cent_stats(est, ref) == (0.0, 0.0)
    with pytest.raises(DegenerateInputError):
        delta_cent_stats(PitchTrack.from_hz([100, 0, 0, 0]), ref)


def test_metrics_against_oracle(rng):
    for _ in range(200):
        L = int(rng.integers(1, 65))
        ref = random_track(rng, L)
        est = perturbed(rng, ref)
        thr = float(rng.choice([5, 25, 50, 100]))
        want = bf_rpa(est, ref, thr)
        if want is None:
            with pytest.raises(DegenerateInputError):
                rpa(est, ref, thr)
        else:
            assert rpa(est, ref, thr) == want[0] / want[1]
        tp, pos, fp, neg = bf_vuv(est, ref)
        if pos and neg:
            assert vuv_scores(est, ref) == (tp / pos, fp / neg)
        want = bf_delta_cent(est, ref)
        if want is not None:
            got = delta_cent_stats(est, ref)
            assert got[0] == pytest.approx(want[0], rel=1e-9, abs=1e-9)
            assert got[1] == pytest.approx(want[1], rel=1e-9, abs=1e-9)


track_values = st.lists(st.one_of(st.just(0.0), st.floats(50, 2000)), min_size=1, max_size=64)


@settings(max_examples=80, deadline=None)
@given(track_values, st.data())
def test_rpa_monotone_in_threshold(ref_f0, data):
    ref_f0 = ref_f0[:]
    ref_f0[0] = 100.0
    est_f0 = data.draw(st.lists(st.one_of(st.just(0.0), st.floats(50, 2000)),
                                min_size=len(ref_f0), max_size=len(ref_f0)))
    ref, est = PitchTrack.from_hz(ref_f0), PitchTrack.from_hz(est_f0)
    values = [rpa(est, ref, t) for t in (1, 5, 25, 50, 100, 1200, 5000)]
    assert values == sorted(values)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.booleans(), min_size=2, max_size=40), st.data())
def test_vuv_invariant_to_frequencies(flags, data):
    flags = [True, False] + flags
    L = len(flags)
    ref = PitchTrack.from_hz([100.0 if f else 0.0 for f in flags])
    est_flags = data.draw(st.lists(st.booleans(), min_size=L, max_size=L))
    f1 = data.draw(st.lists(st.floats(50, 1000), min_size=L, max_size=L))
    f2 = data.draw(st.lists(st.floats(50, 1000), min_size=L, max_size=L))
    a = PitchTrack(0.005, 0, est_flags, f1)
    b = PitchTrack(0.005, 0, est_flags, f2)
    assert vuv_scores(a, ref) == vuv_scores(b, ref)


def test_evaluate_report(rng):
    ref = random_track(rng, 50)
    rep = evaluate(ref, ref, [50, 5, 25])
    assert list(rep.rpa) == ["5", "25", "50"]
    assert all(v == 1.0 for v in rep.rpa.values())
    assert (rep.vuv_recall, rep.vuv_false_alarm) == (1.0, 0.0)
    assert rep.counted_frames["frames"] == 50
    assert EvalReport.from_dict(rep.to_dict()) == rep
    assert "RPA50=100.00" in rep.summary()


def test_evaluate_degenerate_fields_are_none():
    ref = PitchTrack.from_hz([100.0, 100.0])
    rep = evaluate(PitchTrack.from_hz([0.0, 0.0]), ref)
    assert rep.vuv_false_alarm is None and rep.delta_cent_mean is None
    assert rep.vuv_recall == 0.0
