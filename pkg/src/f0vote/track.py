"""Pitch tracks, track files and experiment manifests.

A track file is plain CSV with a ``time_s,f0_hz`` header and one row per
frame. An f0 of 0 (or anything non-positive / non-finite) means the frame is
unvoiced. In memory, voicing is carried by an explicit boolean array; the
frequency array holds NaN on unvoiced frames and must never be read there.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import TrackFormatError

DEFAULT_FRAME_SHIFT = 0.005
GRID_JITTER = 0.01  # relative to frame_shift
TIME_ATOL = 1e-9


@dataclass(frozen=True)
class FrequencyBounds:
    f_min: float = 25.0
    f_max: float = 4200.0

    def __post_init__(self):
        if not (0 < self.f_min < self.f_max):
            raise ValueError(f"invalid bounds: need 0 < f_min < f_max, got {self.f_min}, {self.f_max}")


@dataclass(frozen=True)
class FrameValue:
    voiced: bool
    frequency: float | None = None

    def __post_init__(self):
        if self.voiced:
            if self.frequency is None or not self.frequency > 0:
                raise ValueError("voiced frame needs a positive frequency")
        elif self.frequency is not None:
            raise ValueError("unvoiced frame carries no frequency")

    @classmethod
    def v(cls, frequency: float) -> "FrameValue":
        return cls(True, float(frequency))

    @classmethod
    def u(cls) -> "FrameValue":
        return cls(False, None)

    def __repr__(self):
        return f"V:{self.frequency:g}" if self.voiced else "U"


class PitchTrack:
    """A time-regular f0 track.

    Frame ``l`` sits at ``start_time + l * frame_shift``. Instances are
    immutable: the arrays are copied and flagged read-only.
    """

    __slots__ = ("frame_shift", "start_time", "voiced", "freq")

    def __init__(self, frame_shift: float, start_time: float, voiced, freq):
        voiced = np.array(voiced, dtype=bool).reshape(-1)
        freq = np.array(freq, dtype=float).reshape(-1)
        if not frame_shift > 0:
            raise ValueError("frame_shift must be positive")
        if voiced.size < 1:
            raise ValueError("a track needs at least one frame")
        if voiced.shape != freq.shape:
            raise ValueError("voiced and freq must have the same length")
        freq = np.where(voiced, freq, np.nan)
        if np.any(~(freq[voiced] > 0)):
            raise ValueError("voiced frames need positive, finite frequencies")
        voiced.flags.writeable = False
        freq.flags.writeable = False
        object.__setattr__(self, "frame_shift", float(frame_shift))
        object.__setattr__(self, "start_time", float(start_time))
        object.__setattr__(self, "voiced", voiced)
        object.__setattr__(self, "freq", freq)

    def __setattr__(self, name, value):
        raise AttributeError("PitchTrack is immutable")

    @classmethod
    def from_frames(cls, frames: Iterable[FrameValue], frame_shift: float = DEFAULT_FRAME_SHIFT,
                    start_time: float = 0.0) -> "PitchTrack":
        frames = list(frames)
        voiced = [fv.voiced for fv in frames]
        freq = [fv.frequency if fv.voiced else np.nan for fv in frames]
        return cls(frame_shift, start_time, voiced, freq)

    @classmethod
    def from_hz(cls, f0: Sequence[float], frame_shift: float = DEFAULT_FRAME_SHIFT,
                start_time: float = 0.0) -> "PitchTrack":
        """Build from an f0 array where values <= 0 or NaN mean unvoiced."""
        f0 = np.asarray(f0, dtype=float)
        voiced = np.isfinite(f0) & (f0 > 0)
        return cls(frame_shift, start_time, voiced, np.where(voiced, f0, np.nan))

    def __len__(self):
        return self.voiced.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.frame_shift * np.arange(len(self))

    def frame(self, l: int) -> FrameValue:
        if self.voiced[l]:
            return FrameValue.v(self.freq[l])
        return FrameValue.u()

    def frames(self) -> list[FrameValue]:
        return [self.frame(l) for l in range(len(self))]

    def to_hz(self) -> np.ndarray:
        """f0 array with 0.0 on unvoiced frames (the on-disk convention)."""
        return np.where(self.voiced, self.freq, 0.0)

    def same_grid(self, other: "PitchTrack") -> bool:
        return (len(self) == len(other)
                and math.isclose(self.frame_shift, other.frame_shift, rel_tol=1e-9, abs_tol=0)
                and abs(self.start_time - other.start_time) <= TIME_ATOL)

    def with_values(self, voiced, freq) -> "PitchTrack":
        return PitchTrack(self.frame_shift, self.start_time, voiced, freq)

    def __eq__(self, other):
        if not isinstance(other, PitchTrack):
            return NotImplemented
        return (self.same_grid(other)
                and np.array_equal(self.voiced, other.voiced)
                and np.array_equal(self.freq[self.voiced], other.freq[other.voiced]))

    __hash__ = None

    def __repr__(self):
        return (f"PitchTrack(L={len(self)}, frame_shift={self.frame_shift:g}, "
                f"start_time={self.start_time:g}, voiced={int(self.voiced.sum())})")


def check_same_grid(*tracks: PitchTrack):
    first = tracks[0]
    for t in tracks[1:]:
        if not first.same_grid(t):
            raise ValueError(f"tracks are on different grids: {first!r} vs {t!r}")


@dataclass(frozen=True)
class TrackSet:
    """Named member tracks on one common grid, plus optional ground truth."""

    members: Mapping[str, PitchTrack]
    reference_name: str
    ground_truth: PitchTrack | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("a TrackSet needs at least one member")
        if self.reference_name not in self.members:
            raise TrackFormatError(f"unknown reference {self.reference_name!r}")
        tracks = list(self.members.values())
        if self.ground_truth is not None:
            tracks.append(self.ground_truth)
        try:
            check_same_grid(*tracks)
        except ValueError as exc:
            raise TrackFormatError(str(exc)) from None
        object.__setattr__(self, "members", dict(self.members))

    @property
    def names(self) -> list[str]:
        return list(self.members)

    @property
    def reference(self) -> PitchTrack:
        return self.members[self.reference_name]

    def subset(self, names: Iterable[str]) -> "TrackSet":
        names = list(names)
        ref = self.reference_name if self.reference_name in names else names[0]
        return TrackSet({n: self.members[n] for n in names}, ref, self.ground_truth)

    def replace_members(self, members: Mapping[str, PitchTrack]) -> "TrackSet":
        return TrackSet(members, self.reference_name, self.ground_truth)


# ---------------------------------------------------------------- file i/o


def _parse_float(text: str, path, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TrackFormatError(f"{path}:{lineno}: malformed {what} {text!r}") from None


def load_track(path, bounds: FrequencyBounds = FrequencyBounds(),
               frame_shift: float | None = None) -> PitchTrack:
    """Read a ``time_s,f0_hz`` CSV track.

    Non-positive or non-finite f0 values, and voiced values outside
    ``bounds``, become unvoiced frames. ``frame_shift`` is only needed for
    single-row files, where it cannot be inferred.
    """
    path = Path(path)
    times, f0 = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time_s", "f0_hz"]:
            raise TrackFormatError(f"{path}:1: expected header 'time_s,f0_hz'")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise TrackFormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            t = _parse_float(row[0], path, lineno, "time")
            if not math.isfinite(t):
                raise TrackFormatError(f"{path}:{lineno}: non-finite time")
            if times and t <= times[-1]:
                raise TrackFormatError(f"{path}:{lineno}: time column is not strictly increasing")
            times.append(t)
            f0.append(_parse_float(row[1], path, lineno, "f0"))
    if not times:
        raise TrackFormatError(f"{path}: no frames")

    t = np.array(times)
    if t.size == 1:
        shift = DEFAULT_FRAME_SHIFT if frame_shift is None else frame_shift
    else:
        shift = (t[-1] - t[0]) / (t.size - 1)
        nominal = t[0] + shift * np.arange(t.size)
        bad = np.flatnonzero(np.abs(t - nominal) > GRID_JITTER * shift)
        if bad.size:
            # +2: header line and 1-based numbering
            raise TrackFormatError(f"{path}:{bad[0] + 2}: time step jitter exceeds "
                                   f"{GRID_JITTER:.0%} of the frame shift")

    f = np.array(f0)
    with np.errstate(invalid="ignore"):
        voiced = np.isfinite(f) & (f > 0) & (f >= bounds.f_min) & (f <= bounds.f_max)
    return PitchTrack(shift, t[0], voiced, np.where(voiced, f, np.nan))


def emit_track(track: PitchTrack, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,f0_hz\n")
        for t, f in zip(track.times, track.to_hz()):
            fh.write(f"{t:.6f},{f:.10g}\n")


# ---------------------------------------------------------------- resampling


def resample_to_grid(track: PitchTrack, grid_shift: float, grid_start: float,
                     grid_len: int) -> PitchTrack:
    """Linear (Hz) interpolation of ``track`` onto a regular grid.

    A grid time within 1e-9 s of a source frame copies that frame. Between
    frames the output is voiced only if both bracketing frames are voiced;
    outside the source span it is unvoiced.
    """
    if not grid_shift > 0 or grid_len < 1:
        raise ValueError("need grid_shift > 0 and grid_len >= 1")
    L = len(track)
    t = grid_start + grid_shift * np.arange(grid_len)
    pos = (t - track.start_time) / track.frame_shift
    nearest = np.rint(pos)
    exact = (np.abs(pos - nearest) * track.frame_shift <= TIME_ATOL) & (nearest >= 0) & (nearest <= L - 1)

    voiced = np.zeros(grid_len, dtype=bool)
    freq = np.full(grid_len, np.nan)

    idx = nearest[exact].astype(int)
    voiced[exact] = track.voiced[idx]
    freq[exact] = track.freq[idx]

    inside = ~exact & (pos > 0) & (pos < L - 1)
    lo = np.floor(pos[inside]).astype(int)
    hi = lo + 1
    w = pos[inside] - lo
    both = track.voiced[lo] & track.voiced[hi]
    interp = np.where(both, (1 - w) * track.freq[lo] + w * track.freq[hi], np.nan)
    voiced[inside] = both
    freq[inside] = interp
    return PitchTrack(grid_shift, grid_start, voiced, freq)


# ---------------------------------------------------------------- manifests


def _no_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise TrackFormatError(f"duplicate key {key!r} in manifest")
        out[key] = value
    return out


def load_manifest(path) -> TrackSet:
    """Load a JSON manifest and bring every track onto the reference grid.

    Relative track paths are resolved against the manifest's directory.
    When ``frame_shift_s`` is given the grid keeps the reference start time
    and span but uses that shift.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"), object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise TrackFormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise TrackFormatError(f"{path}: manifest must be a JSON object")

    members = doc.get("members")
    if not isinstance(members, dict) or not members:
        raise TrackFormatError(f"{path}: 'members' must be a non-empty name -> path map")
    reference = doc.get("reference")
    if reference not in members:
        raise TrackFormatError(f"{path}: unknown reference {reference!r}")
    try:
        bounds = FrequencyBounds(float(doc.get("f_min", 25.0)), float(doc.get("f_max", 4200.0)))
    except (TypeError, ValueError) as exc:
        raise TrackFormatError(f"{path}: {exc}") from None
    shift_override = doc.get("frame_shift_s")

    base = path.parent

    def _load(p):
        p = Path(p)
        p = p if p.is_absolute() else base / p
        if not p.exists():
            raise TrackFormatError(f"{path}: missing track file {p}")
        return load_track(p, bounds, frame_shift=shift_override)

    raw = {name: _load(p) for name, p in members.items()}
    ref = raw[reference]
    if shift_override is None:
        shift, start, length = ref.frame_shift, ref.start_time, len(ref)
    else:
        shift = float(shift_override)
        if not shift > 0:
            raise TrackFormatError(f"{path}: frame_shift_s must be positive")
        span = (len(ref) - 1) * ref.frame_shift
        length = int(math.floor(span / shift + 1e-9)) + 1
        start = ref.start_time

    def _grid(track):
        return resample_to_grid(track, shift, start, length)

    gt = doc.get("ground_truth")
    truth = _grid(_load(gt)) if gt is not None else None
    return TrackSet({name: _grid(t) for name, t in raw.items()}, reference, truth)


def write_manifest(path, members: Mapping[str, str], reference: str,
                   ground_truth: str | None = None, bounds: FrequencyBounds | None = None,
                   frame_shift: float | None = None) -> None:
    doc: dict = {"reference": reference, "members": dict(members)}
    if ground_truth is not None:
        doc["ground_truth"] = ground_truth
    if bounds is not None:
        doc["f_min"], doc["f_max"] = bounds.f_min, bounds.f_max
    if frame_shift is not None:
        doc["frame_shift_s"] = frame_shift
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
