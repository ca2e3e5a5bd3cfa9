"""Exit criteria. Each test records one PASS/FAIL line, printed in the
terminal summary."""
import filecmp
import time

import numpy as np

from f0vote.align import align_set, find_frequency_bias, find_temporal_offset
from f0vote.cli import main
from f0vote.errors import DegenerateInputError
from f0vote.metrics import delta_cent_stats, rpa, rpa_shifted, shift_track, vuv_scores
from f0vote.selection import Criterion, greedy_select
from f0vote.theory import (EnsembleSpec, _truth_contour, condorcet_exact, simulate_ensemble,
                           validate_variance)
from f0vote.track import FrequencyBounds, PitchTrack, TrackSet
from f0vote.vote import vote_set

from conftest import ACCEPTANCE_LINES, perturbed, random_track
from oracles import bf_condorcet, bf_delta_cent, bf_rpa, bf_vuv


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")
    return ok


def _raises_degenerate(fn, *args):
    try:
        fn(*args)
    except DegenerateInputError:
        return True
    return False


def test_1_metric_oracle_equivalence():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        L = int(rng.integers(1, 65))
        ref = random_track(rng, L, p_voiced=float(rng.uniform(0.1, 1.0)))
        est = perturbed(rng, ref, sigma_cents=float(rng.uniform(1, 200)), p_flip=float(rng.uniform(0, 0.5)))
        thr = float(rng.choice([5.0, 25.0, 50.0]))
        k = int(rng.integers(-(L - 1), L)) if L > 1 else 0

        for kk in (0, k):
            want = bf_rpa(est, ref, thr, kk)
            if want is None:
                mismatches += not _raises_degenerate(rpa_shifted, est, ref, kk, thr)
            else:
                mismatches += rpa_shifted(est, ref, kk, thr) != want[0] / want[1]
        tp, pos, fp, neg = bf_vuv(est, ref)
        if pos and neg:
            mismatches += vuv_scores(est, ref) != (tp / pos, fp / neg)
        else:
            mismatches += not _raises_degenerate(vuv_scores, est, ref)
        want = bf_delta_cent(est, ref)
        if want is None:
            mismatches += not _raises_degenerate(delta_cent_stats, est, ref)
        else:
            m, s = delta_cent_stats(est, ref)
            mismatches += not (np.isclose(m, want[0], rtol=1e-9, atol=1e-9)
                               and np.isclose(s, want[1], rtol=1e-9, atol=1e-9))
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 5.0
    record(1, ok, f"metric oracle equivalence: {mismatches} mismatches / 1000 pairs, {elapsed:.2f}s (< 5s)")
    assert ok


def test_2_condorcet_exactness():
    t0 = time.perf_counter()
    head = condorcet_exact(0.6, 3)
    ok = abs(head - 0.648) <= 1e-12 and abs(head - bf_condorcet(0.6, 3)) <= 1e-12
    worst = 0.0
    beats = True
    for p in (0.55, 0.7, 0.9):
        for n in range(1, 16, 2):
            exact = condorcet_exact(p, n)
            worst = max(worst, abs(exact - bf_condorcet(p, n)))
            if n >= 3:
                beats &= exact > p
    elapsed = time.perf_counter() - t0
    ok = ok and worst <= 1e-10 and beats and elapsed < 1.0
    record(2, ok, f"Condorcet: P(0.6,3)={head:.15f}, max |exact-enum|={worst:.2e} (<= 1e-10), "
                  f"P_n>p for n>=3: {beats}, {elapsed:.2f}s (< 1s)")
    assert ok


def test_3_variance_law():
    t0 = time.perf_counter()
    ratios = {}
    for n in (9, 15, 25):
        r = validate_variance(EnsembleSpec(n=n, error_scale=30.0, sign_correlation=0.0, seed=300 + n), 10_000)
        ratios[n] = r.ratio
    emp = [validate_variance(EnsembleSpec(n=9, error_scale=30.0, sign_correlation=rho, seed=390), 10_000).empirical
           for rho in (0.0, 0.3, 0.6)]
    elapsed = time.perf_counter() - t0
    in_band = all(0.85 <= v <= 1.15 for v in ratios.values())
    increasing = emp[0] < emp[1] < emp[2]
    ok = in_band and increasing and elapsed < 30.0
    record(3, ok, "variance law: empirical/predicted "
                  + ", ".join(f"n={n}: {v:.3f}" for n, v in ratios.items())
                  + " (in [0.85, 1.15]); var at rho 0/0.3/0.6 = "
                  + "/".join(f"{v:.1f}" for v in emp) + f" strictly increasing: {increasing}, {elapsed:.1f}s")
    assert ok


def _alignment_case(seed):
    """Random contour thinned to a voiced fraction in [0.25, 0.8], plus a
    random lag and bias."""
    rng = np.random.default_rng([4, seed])
    frames = 3000
    hz, voiced = _truth_contour(rng, frames, FrequencyBounds())
    target = rng.uniform(0.25, 0.8)
    starts = np.flatnonzero(np.diff(np.r_[0, voiced.astype(int)]) == 1)
    for s in rng.permutation(starts):
        if voiced.mean() <= target:
            break
        run = s + np.argmin(voiced[s:]) if not voiced[s:].all() else frames
        candidate = voiced.copy()
        candidate[s:run] = False
        if candidate.mean() >= 0.25:
            voiced = candidate
    ref = PitchTrack(0.005, 0.0, voiced, hz)
    k = int(rng.integers(-10, 11))
    b = float(rng.uniform(-200, 200))
    est = shift_track(ref.with_values(voiced, hz * 2 ** (b / 1200)), -k)
    noisy = est.with_values(est.voiced, est.freq * 2 ** (rng.normal(0, 30, frames) / 1200))
    return ref, est, noisy, k, b


def test_4_alignment_recovery():
    t0 = time.perf_counter()
    exact = k_ok = b_ok = 0
    fractions = []
    for seed in range(200):
        ref, est, noisy, k, b = _alignment_case(seed)
        fractions.append(ref.voiced.mean())
        kk, _ = find_temporal_offset(est, ref, 10, 50)
        exact += kk == k and abs(find_frequency_bias(est, ref, kk) - b) <= 1e-6
        kn, _ = find_temporal_offset(noisy, ref, 10, 50)
        k_ok += kn == k
        b_ok += abs(find_frequency_bias(noisy, ref, kn) - b) <= 3.0
    elapsed = time.perf_counter() - t0
    ok = exact == 200 and k_ok >= 190 and b_ok >= 190 and elapsed < 10.0 and min(fractions) >= 0.25
    record(4, ok, f"alignment recovery: noiseless {exact}/200 exact; 30-cent noise lag {k_ok}/200, "
                  f"bias within 3 cents {b_ok}/200 (need >= 190); voiced fraction "
                  f"{min(fractions):.2f}..{max(fractions):.2f}; {elapsed:.1f}s (< 10s)")
    assert ok


ABLATION_SHIFTS = (0, 3, -4, 5, -2)
ABLATION_BIASES = (0.0, 40.0, 60.0, 35.0, -30.0)


def test_5_ablation_direction():
    strict = 0
    for seed in range(100):
        spec = EnsembleSpec(n=5, error_scale=30.0, octave_error_rate=0.05, vuv_accuracy=0.9,
                            per_member_time_shift=ABLATION_SHIFTS, per_member_cent_bias=ABLATION_BIASES,
                            seed=500 + seed)
        ts, truth = simulate_ensemble(spec, 2000)
        full, time_only, none = (rpa(vote_set(align_set(ts, mode=m)[0]), truth, 50)
                                 for m in ("full", "time-only", "none"))
        strict += full > time_only > none
    ok = strict >= 90
    record(5, ok, f"ablation: RPA50 full > time-only > none strictly in {strict}/100 seeds (need >= 90)")
    assert ok


def test_6_voting_robustness():
    rpa_wins = recall_wins = 0
    for seed in range(100):
        spec = EnsembleSpec(n=5, error_scale=30.0, sign_correlation=0.0, octave_error_rate=0.05,
                            vuv_accuracy=0.9, seed=600 + seed)
        ts, truth = simulate_ensemble(spec, 2000)
        voted = vote_set(align_set(ts)[0])
        members = list(ts.members.values())
        rpa_wins += rpa(voted, truth, 50) > np.mean([rpa(m, truth, 50) for m in members])
        recall_wins += vuv_scores(voted, truth)[0] > np.mean([vuv_scores(m, truth)[0] for m in members])
    ok = rpa_wins >= 95 and recall_wins >= 95
    record(6, ok, f"voting robustness: voted RPA50 > mean member in {rpa_wins}/100, "
                  f"voted recall > mean member in {recall_wins}/100 (need >= 95 each)")
    assert ok


def test_7_greedy_selection_sanity():
    seeds = range(30)
    corr_ok = acc_ok = stop_ok = 0
    for seed in seeds:
        base, truth = simulate_ensemble(EnsembleSpec(n=6, error_scale=30.0, octave_error_rate=0.05,
                                                     vuv_accuracy=0.9, seed=700 + seed), 1500)
        m = base.members
        pool = TrackSet({"seed": m["m0"], "dup": m["m0"], "indep": m["m1"]}, "seed", truth)
        r = greedy_select(pool, "seed", Criterion.CORRELATION, 2)
        corr_ok += r.chosen[1:] == ["indep"]

        r = greedy_select(base, "m0", Criterion.ACCURACY, 2)
        aligned, _ = align_set(base)
        scan = {c: rpa(vote_set(aligned.subset(["m0", c])), truth, 50) for c in sorted(m) if c != "m0"}
        best = max(scan.values())
        acc_ok += r.chosen[1] == min(c for c, s in scan.items() if s == best)

        mute = PitchTrack(0.005, 0.0, np.zeros(len(truth), bool), np.ones(len(truth)))
        r = greedy_select(TrackSet({"m0": m["m0"], "mute": mute}, "m0", truth), "m0", Criterion.ACCURACY, 5)
        stop_ok += r.chosen == ["m0"] and r.stop_reason.value == "no-improvement"
    n = len(seeds)
    ok = corr_ok == acc_ok == stop_ok == n
    record(7, ok, f"greedy selection: correlation picks independent {corr_ok}/{n}, accuracy pick "
                  f"matches exhaustive scan {acc_ok}/{n}, no-improvement stop {stop_ok}/{n}")
    assert ok


def test_8_cli_determinism(tmp_path):
    shared = tmp_path / "shared"
    assert main(["simulate", "--out-dir", str(shared), "--n", "5", "--frames", "1000",
                 "--octave-error-rate", "0.05", "--vuv-accuracy", "0.9", "--time-shifts", "0,2,-3,4,1",
                 "--cent-biases", "0,30,-20,45,10", "--rng-seed", "8"]) == 0
    manifest = str(shared / "manifest.json")

    def run(root):
        root.mkdir()
        args = [
            ["simulate", "--out-dir", str(root / "sim"), "--n", "5", "--frames", "1000",
             "--octave-error-rate", "0.05", "--vuv-accuracy", "0.9", "--time-shifts", "0,2,-3,4,1",
             "--cent-biases", "0,30,-20,45,10", "--rng-seed", "8"],
            ["align", manifest, "--out-dir", str(root / "align")],
            ["vote", manifest, "--out", str(root / "voted.csv"), "--report", str(root / "vote.json")],
            ["vote", manifest, "--no-align", "--median-domain", "log-hz", "--out", str(root / "voted_na.csv")],
            ["select", manifest, "--criterion", "accuracy", "--out", str(root / "sel_acc.json")],
            ["select", manifest, "--criterion", "correlation", "--reference", "ensemble-median",
             "--out", str(root / "sel_cor.json")],
            ["eval", manifest, "--out", str(root / "eval.json")],
            ["theory", "--p", "0.6", "0.7", "--n-max", "7", "--condorcet-trials", "5000",
             "--n-values", "1", "9", "--rho", "0", "0.3", "--trials", "1000", "--out", str(root / "theory.json")],
        ]
        return [main(a) for a in args]

    a, b = tmp_path / "a", tmp_path / "b"
    codes = run(a) + run(b)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    same = [filecmp.cmp(a / f, b / f, shallow=False) for f in files]
    ok = set(codes) == {0} and len(files) >= 15 and all(same)
    record(8, ok, f"CLI determinism: {sum(same)}/{len(files)} output files byte-identical across reruns "
                  f"of 6 subcommands")
    assert ok
