"""Why voting works, numerically.

* :func:`condorcet_exact` -- probability that a strict majority of ``n``
  independent voters, each right with probability ``p``, is right.
* :func:`variance_predict` -- asymptotic variance of the ensemble median
  error, ``(1 + (n - 1) * rho) / (4 * n * h**2)``, where ``rho`` is the mean
  pairwise error-sign correlation and ``h`` the mean error density at zero.
* :func:`simulate_ensemble` -- synthetic ground truth plus ``n`` noisy
  member tracks, used to check both formulas and the whole pipeline.

Correlated member errors come from a Gaussian copula: each member mixes a
shared latent normal with its own, ``g = sqrt(w) z + sqrt(1 - w) e``, and
``g`` is mapped to the target marginal through its CDF. Sign is preserved by
the mapping, so the sign correlation depends on ``w`` only; ``w`` is found
by bisection on a pilot sample.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .metrics import shift_track
from .selection import SignMatrix, avg_sign_correlation
from .track import DEFAULT_FRAME_SHIFT, FrequencyBounds, PitchTrack, TrackSet


class ErrorDist(str, Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of a synthetic estimator ensemble.

    ``per_member_time_shift`` and ``per_member_cent_bias`` accept either one
    value per member or a scalar; a scalar applies to every member except
    the first, which serves as the alignment reference.
    """

    n: int = 5
    error_scale: float = 30.0
    error_dist: ErrorDist = ErrorDist.GAUSSIAN
    sign_correlation: float = 0.0
    octave_error_rate: float = 0.0
    vuv_accuracy: float = 1.0
    per_member_time_shift: int | tuple[int, ...] = 0
    per_member_cent_bias: float | tuple[float, ...] = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "error_dist", ErrorDist(self.error_dist))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.error_scale > 0:
            raise ValueError("error_scale must be positive")
        if not 0 <= self.sign_correlation < 1:
            raise ValueError("sign_correlation must lie in [0, 1)")
        for name in ("octave_error_rate", "vuv_accuracy"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be a probability")
        object.__setattr__(self, "per_member_time_shift",
                           self._per_member(self.per_member_time_shift, int))
        object.__setattr__(self, "per_member_cent_bias",
                           self._per_member(self.per_member_cent_bias, float))

    def _per_member(self, value, kind):
        if isinstance(value, (int, float, np.integer, np.floating)):
            return tuple(kind(0) if i == 0 else kind(value) for i in range(self.n))
        value = tuple(kind(v) for v in value)
        if len(value) != self.n:
            raise ValueError(f"expected {self.n} per-member values, got {len(value)}")
        return value

    @property
    def density_at_zero(self) -> float:
        if self.error_dist is ErrorDist.GAUSSIAN:
            return 1.0 / (self.error_scale * math.sqrt(2 * math.pi))
        return 1.0 / (2 * self.error_scale)

    @property
    def error_variance(self) -> float:
        if self.error_dist is ErrorDist.GAUSSIAN:
            return self.error_scale ** 2
        return 2 * self.error_scale ** 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error_dist"] = self.error_dist.value
        d["per_member_time_shift"] = list(self.per_member_time_shift)
        d["per_member_cent_bias"] = list(self.per_member_cent_bias)
        return d


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


# ---------------------------------------------------------------- Condorcet


def condorcet_exact(p: float, n: int) -> float:
    """Probability that a strict majority of ``n`` (odd) independent voters is correct."""
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    if n < 1 or n % 2 == 0:
        raise ValueError("n must be a positive odd integer")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    lfn = math.lgamma(n + 1)
    terms = []
    for m in range((n + 1) // 2, n + 1):
        log_comb = lfn - math.lgamma(m + 1) - math.lgamma(n - m + 1)
        terms.append(math.exp(log_comb + m * lp + (n - m) * lq))
    return min(1.0, math.fsum(terms))


def validate_condorcet(p: float, n: int, trials: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """(exact, empirical) majority-correct probability."""
    exact = condorcet_exact(p, n)
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    rng = _rng(seed, 10)
    correct = np.zeros(trials, dtype=np.int64)
    # chunked to bound memory at large trials * n
    chunk = max(1, 1_000_000 // n)
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        correct[lo:hi] = (rng.random((hi - lo, n)) < p).sum(axis=1)
    return exact, float(np.mean(2 * correct > n))


# ---------------------------------------------------------------- variance law


def variance_predict(n: int, rho_bar: float, h_bar: float) -> float:
    """Asymptotic variance of the median error of ``n`` estimators."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not h_bar > 0:
        raise ValueError("h_bar must be positive")
    if rho_bar >= 1:
        raise ValueError("mean sign correlation must be < 1")
    if n >= 2 and rho_bar <= -1.0 / (n - 1):
        raise ValueError(f"mean sign correlation must exceed -1/(n-1) = {-1.0 / (n - 1):.6g}")
    return (1 + (n - 1) * rho_bar) / (4 * n * h_bar ** 2)


def _to_marginal(g: np.ndarray, dist: ErrorDist, scale: float) -> np.ndarray:
    if dist is ErrorDist.GAUSSIAN:
        return scale * g
    # Laplace quantile of ndtr(g), written through the tail for accuracy
    return np.sign(g) * (-scale * np.log(2.0 * ndtr(-np.abs(g))))


def _copula_normals(rng: np.random.Generator, rows: int, n: int, w: float) -> np.ndarray:
    z = rng.standard_normal((rows, 1))
    e = rng.standard_normal((rows, n))
    return math.sqrt(w) * z + math.sqrt(1.0 - w) * e


@lru_cache(maxsize=64)
def calibrate_mixing(target: float, pilot: int = 200_000, seed: int = 12345) -> float:
    """Mixing weight ``w`` whose measured pairwise sign correlation hits ``target``.

    Bisection on a fixed pilot sample (common random numbers), so the result
    is deterministic.
    """
    if not 0 <= target < 1:
        raise ValueError("target sign correlation must lie in [0, 1)")
    if target == 0:
        return 0.0
    rng = _rng(seed, 20)
    z = rng.standard_normal(pilot)
    e1 = rng.standard_normal(pilot)
    e2 = rng.standard_normal(pilot)

    def measured(w):
        a = np.sign(math.sqrt(w) * z + math.sqrt(1 - w) * e1)
        b = np.sign(math.sqrt(w) * z + math.sqrt(1 - w) * e2)
        return float(np.corrcoef(a, b)[0, 1])

    lo, hi = 0.0, 1.0 - 1e-12
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if measured(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_errors(spec: EnsembleSpec, rows: int, rng: np.random.Generator) -> np.ndarray:
    """(rows, n) cent errors with the spec's marginal and sign correlation."""
    w = calibrate_mixing(spec.sign_correlation)
    return _to_marginal(_copula_normals(rng, rows, spec.n, w), spec.error_dist, spec.error_scale)


@dataclass
class VariancePrediction:
    predicted: float
    empirical: float
    n: int
    rho_bar_used: float
    h_bar_used: float
    trials: int = 0
    exact_single_variance: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return self.empirical / self.predicted

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


def measured_sign_correlation(errors: np.ndarray) -> float:
    n = errors.shape[1]
    if n < 2:
        return 0.0
    names = [f"m{i}" for i in range(n)]
    return avg_sign_correlation(SignMatrix.from_rows(names, np.sign(errors).T), names)


def validate_variance(spec: EnsembleSpec, trials: int = 10_000) -> VariancePrediction:
    """Monte-Carlo median-error variance beside the asymptotic prediction.

    Each trial is one frame: ``n`` errors are drawn and their median taken.
    The prediction uses the analytic density at zero and the sign
    correlation measured on the same draws.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if any(spec.per_member_time_shift) or any(spec.per_member_cent_bias) or spec.octave_error_rate:
        raise ValueError("variance validation needs zero shifts, biases and octave errors")
    rng = _rng(spec.seed, 30)
    errors = sample_errors(spec, trials, rng)
    med = np.median(errors, axis=1)
    rho = measured_sign_correlation(errors)
    h = spec.density_at_zero
    notes = []
    if spec.n < 9:
        notes.append("asymptotic formula; agreement is not expected for small n")
    return VariancePrediction(
        predicted=variance_predict(spec.n, rho, h),
        empirical=float(np.var(med, ddof=1)),
        n=spec.n,
        rho_bar_used=rho,
        h_bar_used=h,
        trials=trials,
        exact_single_variance=spec.error_variance if spec.n == 1 else None,
        notes=notes,
    )


# ---------------------------------------------------------------- simulation


def _truth_contour(rng: np.random.Generator, frames: int, bounds: FrequencyBounds):
    """Latent pitch (Hz, defined everywhere) and voicing of a synthetic signal.

    Pitch: piecewise log-linear glides plus a light vibrato. Voicing:
    alternating voiced runs and gaps, with unvoiced margins at both ends.
    """
    base = rng.uniform(100.0, 300.0)
    knots = [0]
    while knots[-1] < frames - 1:
        knots.append(min(frames - 1, knots[-1] + int(rng.integers(20, 80))))
    knot_cents = rng.uniform(-500.0, 500.0, size=len(knots))
    l = np.arange(frames)
    contour = np.interp(l, knots, knot_cents) if len(knots) > 1 else np.full(frames, knot_cents[0])
    rate = rng.uniform(4.0, 7.0) * DEFAULT_FRAME_SHIFT
    contour = contour + rng.uniform(10.0, 40.0) * np.sin(2 * np.pi * rate * l + rng.uniform(0, 2 * np.pi))
    hz = np.clip(base * 2.0 ** (contour / 1200.0), bounds.f_min, bounds.f_max)

    voiced = np.zeros(frames, dtype=bool)
    margin = min(20, frames // 5)
    pos = margin
    while pos < frames - margin:
        run = int(rng.integers(30, 150))
        voiced[pos:min(pos + run, frames - margin)] = True
        pos += run + int(rng.integers(10, 60))
    if not voiced.any():
        voiced[frames // 2] = True
    return hz, voiced


def simulate_ensemble(spec: EnsembleSpec, frames: int = 2000,
                      bounds: FrequencyBounds = FrequencyBounds()) -> tuple[TrackSet, PitchTrack]:
    """Synthetic members ``m0 .. m{n-1}`` (``m0`` is the reference) and the truth."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    rng = _rng(spec.seed, 40)
    hz, voiced = _truth_contour(rng, frames, bounds)
    truth = PitchTrack(DEFAULT_FRAME_SHIFT, 0.0, voiced, hz)

    errors = sample_errors(spec, frames, rng)
    octave = rng.random((frames, spec.n)) < spec.octave_error_rate
    octave_sign = np.where(rng.random((frames, spec.n)) < 0.5, -1.0, 1.0)
    flips = rng.random((frames, spec.n)) >= spec.vuv_accuracy

    members = {}
    for i in range(spec.n):
        c = errors[:, i] + np.where(octave[:, i], 1200.0 * octave_sign[:, i], 0.0)
        c = c + spec.per_member_cent_bias[i]
        f = hz * 2.0 ** (c / 1200.0)
        v = (voiced ^ flips[:, i]) & (f >= bounds.f_min) & (f <= bounds.f_max)
        track = PitchTrack(DEFAULT_FRAME_SHIFT, 0.0, v, f)
        # a member lagging by k frames shows frame l of the truth at l + k
        members[f"m{i}"] = shift_track(track, -spec.per_member_time_shift[i])
    return TrackSet(members, "m0", truth), truth
