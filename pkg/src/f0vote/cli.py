"""Command line entry point: ``f0vote {align,vote,select,eval,simulate,theory}``.

Every report is JSON (sorted keys) and carries the effective configuration.
Exit codes: 0 ok, 2 usage, 3 data error, 4 degenerate input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .align import DEFAULT_EPSILON, DEFAULT_SEARCH_RANGE, AlignMode, align_set
from .errors import F0VoteError, TrackFormatError
from .metrics import DEFAULT_THRESHOLDS, EvalReport, evaluate
from .pipeline import run_eval, voted_track
from .selection import Criterion, ReferenceMode, greedy_select
from .theory import (EnsembleSpec, ErrorDist, condorcet_exact, simulate_ensemble,
                     validate_condorcet, validate_variance)
from .track import emit_track, load_manifest, write_manifest
from .vote import MedianDomain, TieRule, VoteConfig

log = logging.getLogger("f0vote")


def _dump(obj, out: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _alignment_flags(p):
    p.add_argument("--search-range", type=int, default=DEFAULT_SEARCH_RANGE, metavar="H",
                   help="max temporal offset searched, in frames (default: %(default)s)")
    p.add_argument("--epsilon-cents", type=float, default=DEFAULT_EPSILON,
                   help="cent tolerance of the lag score (default: %(default)s)")


def _vote_flags(p):
    p.add_argument("--tie-rule", choices=[t.value for t in TieRule], default=TieRule.FAVOR_VOICED.value,
                   help="voicing decision when exactly half vote voiced (default: %(default)s)")
    p.add_argument("--median-domain", choices=[m.value for m in MedianDomain], default=MedianDomain.HZ.value,
                   help="domain of the even-count central mean (default: %(default)s)")


def _vote_cfg(args) -> VoteConfig:
    return VoteConfig(args.tie_rule, args.median_domain)


def _corrections_dict(corrections):
    return {name: {"k_frames": c.k_align, "f_cents": c.f_align, "rpa": c.rpa_at_best,
                   "warning": c.warning}
            for name, c in corrections.items()}


# ---------------------------------------------------------------- commands


def cmd_align(args):
    ts = load_manifest(args.manifest)
    aligned, corrections = align_set(ts, args.search_range, args.epsilon_cents)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, track in aligned.members.items():
        emit_track(track, out / f"{name}.csv")
        paths[name] = f"{name}.csv"
    gt = None
    if aligned.ground_truth is not None:
        emit_track(aligned.ground_truth, out / "ground_truth.csv")
        gt = "ground_truth.csv"
    write_manifest(out / "manifest.json", paths, aligned.reference_name, gt)
    _dump({
        "config": {"manifest": str(args.manifest), "search_range": args.search_range,
                   "epsilon_cents": args.epsilon_cents},
        "corrections": _corrections_dict(corrections),
    }, str(out / "corrections.json"))
    return 0


def cmd_vote(args):
    ts = load_manifest(args.manifest)
    cfg = _vote_cfg(args)
    voted, corrections = voted_track(ts, args.align, args.search_range, args.epsilon_cents, cfg)
    emit_track(voted, args.out)
    if args.report:
        report = {
            "config": {"manifest": str(args.manifest), "align": AlignMode(args.align).value,
                       "search_range": args.search_range, "epsilon_cents": args.epsilon_cents,
                       "tie_rule": cfg.tie_rule.value, "median_domain": cfg.median_domain.value},
            "corrections": _corrections_dict(corrections),
            "frames": len(voted),
            "voiced_frames": int(voted.voiced.sum()),
        }
        if ts.ground_truth is not None:
            report["eval"] = evaluate(voted, ts.ground_truth).to_dict()
        _dump(report, args.report)
    return 0


def cmd_select(args):
    ts = load_manifest(args.manifest)
    result = greedy_select(ts, args.seed, args.criterion, args.max_size, args.reference,
                           args.threshold_cents, args.search_range, args.epsilon_cents,
                           _vote_cfg(args))
    _dump(result.to_dict(), args.out)
    return 0


def cmd_eval(args):
    ts = load_manifest(args.manifest)
    cfg = _vote_cfg(args)
    reports = run_eval(ts, args.thresholds, args.search_range, args.epsilon_cents, cfg)
    _dump({
        "config": {"manifest": str(args.manifest), "thresholds_cents": sorted(args.thresholds),
                   "search_range": args.search_range, "epsilon_cents": args.epsilon_cents,
                   "tie_rule": cfg.tie_rule.value, "median_domain": cfg.median_domain.value},
        "reports": reports,
    }, args.out)
    if args.out not in (None, "-"):
        width = max(map(len, reports))
        for name, rep in reports.items():
            print(f"{name:<{width}}  {EvalReport.from_dict(rep).summary()}")
    return 0


def _number_list(text: str, kind):
    parts = [kind(x) for x in text.split(",") if x.strip()]
    return parts[0] if len(parts) == 1 else tuple(parts)


def cmd_simulate(args):
    fields = {}
    if args.spec_file:
        fields.update(json.loads(Path(args.spec_file).read_text(encoding="utf-8")))
    for key in ("n", "error_scale", "error_dist", "sign_correlation", "octave_error_rate",
                "vuv_accuracy"):
        value = getattr(args, key)
        if value is not None:
            fields[key] = value
    if args.time_shifts is not None:
        fields["per_member_time_shift"] = _number_list(args.time_shifts, int)
    if args.cent_biases is not None:
        fields["per_member_cent_bias"] = _number_list(args.cent_biases, float)
    if args.rng_seed is not None:
        fields["seed"] = args.rng_seed
    spec = EnsembleSpec(**fields)

    ts, truth = simulate_ensemble(spec, args.frames)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, track in ts.members.items():
        emit_track(track, out / f"{name}.csv")
        paths[name] = f"{name}.csv"
    emit_track(truth, out / "truth.csv")
    write_manifest(out / "manifest.json", paths, ts.reference_name, "truth.csv")
    _dump({"frames": args.frames, "spec": spec.to_dict()}, str(out / "spec.json"))
    return 0


def cmd_theory(args):
    condorcet = {}
    for p in args.p:
        rows = {}
        for n in range(1, args.n_max + 1, 2):
            exact = condorcet_exact(p, n)
            row = {"exact": exact}
            if args.condorcet_trials:
                _, emp = validate_condorcet(p, n, args.condorcet_trials, args.rng_seed)
                row["empirical"] = emp
            rows[str(n)] = row
        condorcet[f"{p:g}"] = rows

    variance = []
    for rho in args.rho:
        for n in args.n_values:
            spec = EnsembleSpec(n=n, error_scale=args.error_scale, error_dist=args.error_dist,
                                sign_correlation=rho, seed=args.rng_seed)
            res = validate_variance(spec, args.trials).to_dict()
            res["target_sign_correlation"] = rho
            variance.append(res)
    _dump({
        "config": {"p": args.p, "n_max": args.n_max, "condorcet_trials": args.condorcet_trials,
                   "n_values": args.n_values, "rho": args.rho, "error_scale": args.error_scale,
                   "error_dist": args.error_dist, "trials": args.trials, "rng_seed": args.rng_seed},
        "condorcet": condorcet,
        "variance": variance,
    }, args.out)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="f0vote", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align members to the reference member", formatter_class=fmt)
    p.add_argument("manifest")
    _alignment_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("vote", help="write the voted track", formatter_class=fmt)
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="voted track CSV")
    p.add_argument("--report", help="optional JSON report (corrections, eval if ground truth)")
    _vote_flags(p)
    _alignment_flags(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--align-full", dest="align", action="store_const", const=AlignMode.FULL.value,
                   help="correct lags and frequency biases before voting (default)")
    g.add_argument("--align-time-only", dest="align", action="store_const", const=AlignMode.TIME_ONLY.value,
                   help="correct lags only")
    g.add_argument("--no-align", dest="align", action="store_const", const=AlignMode.NONE.value,
                   help="vote on the raw tracks")
    p.set_defaults(func=cmd_vote, align=AlignMode.FULL.value)

    p = sub.add_parser("select", help="greedy ensemble selection", formatter_class=fmt)
    p.add_argument("manifest")
    p.add_argument("--criterion", choices=[c.value for c in Criterion], default=Criterion.ACCURACY.value)
    p.add_argument("--seed", metavar="NAME", help="initial member (default: the manifest reference)")
    p.add_argument("--max-size", type=int, default=5)
    p.add_argument("--reference", choices=[r.value for r in ReferenceMode],
                   default=ReferenceMode.GROUND_TRUTH.value)
    p.add_argument("--threshold-cents", type=float, default=50.0, help="RPA threshold of the accuracy criterion")
    p.add_argument("--out", help="JSON output (default: stdout)")
    _vote_flags(p)
    _alignment_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="metrics for every member and voting setting", formatter_class=fmt)
    p.add_argument("manifest")
    p.add_argument("--thresholds", type=float, nargs="+", default=list(DEFAULT_THRESHOLDS),
                   help="RPA thresholds in cents")
    p.add_argument("--out", help="JSON output (default: stdout)")
    _vote_flags(p)
    _alignment_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="write a synthetic ensemble + manifest", formatter_class=fmt)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--spec-file", help="JSON object of ensemble fields; flags override it")
    p.add_argument("--frames", type=int, default=2000)
    p.add_argument("--n", type=int)
    p.add_argument("--error-scale", type=float, help="cents (default 30)")
    p.add_argument("--error-dist", choices=[d.value for d in ErrorDist])
    p.add_argument("--sign-correlation", type=float)
    p.add_argument("--octave-error-rate", type=float)
    p.add_argument("--vuv-accuracy", type=float)
    p.add_argument("--time-shifts", help="frames: one value, or a comma list with one per member")
    p.add_argument("--cent-biases", help="cents: one value, or a comma list with one per member")
    p.add_argument("--rng-seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("theory", help="Condorcet table and variance-law check", formatter_class=fmt)
    p.add_argument("--p", type=float, nargs="+", default=[0.55, 0.6, 0.7, 0.9])
    p.add_argument("--n-max", type=int, default=15)
    p.add_argument("--condorcet-trials", type=int, default=100_000, help="0 disables the Monte-Carlo column")
    p.add_argument("--n-values", type=int, nargs="+", default=[1, 3, 5, 9, 15, 25])
    p.add_argument("--rho", type=float, nargs="+", default=[0.0])
    p.add_argument("--error-scale", type=float, default=30.0)
    p.add_argument("--error-dist", choices=[d.value for d in ErrorDist], default=ErrorDist.GAUSSIAN.value)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", help="JSON output (default: stdout)")
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except F0VoteError as exc:
        return _fail(exc, exc.exit_code)
    except (ValueError, OSError) as exc:
        return _fail(exc, TrackFormatError.exit_code)


def _fail(exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
