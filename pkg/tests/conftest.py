import numpy as np
import pytest

from f0vote.track import PitchTrack


def random_track(rng, L, p_voiced=0.7, shift=0.005, lo=80.0, hi=800.0):
    voiced = rng.random(L) < p_voiced
    freq = np.exp(rng.uniform(np.log(lo), np.log(hi), L))
    return PitchTrack(shift, 0.0, voiced, freq)


def perturbed(rng, track, sigma_cents=40.0, p_flip=0.2):
    """Copy of ``track`` with cent noise and some voicing flips."""
    L = len(track)
    base = np.where(track.voiced, track.freq, 200.0)
    freq = base * 2.0 ** (rng.normal(0, sigma_cents, L) / 1200)
    voiced = track.voiced ^ (rng.random(L) < p_flip)
    return track.with_values(voiced, freq)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
