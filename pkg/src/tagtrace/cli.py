"""Command-line front end.

Every subcommand writes machine-readable output (CSV, TSV or JSON) to the file
given by ``-o`` or to standard output.  Delimited outputs start with ``#``
comment lines carrying a JSON metadata object and any scalar results; JSON
outputs carry the same metadata under ``"meta"``.  Diagnostics go to standard
error.  Exit codes: 0 success, 1 input or validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import secrets
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from fractions import Fraction
from typing import IO, Iterator

import numpy as np

from . import __version__
from .activity import HoerlParams, Metric, correlation_r2, fit_hoerl, rank_distribution, user_metric
from .errors import ConfigError, TagTraceError
from .graph import SimilarityKind, as_threshold, build_graph, format_fraction, sweep_ladder, threshold_sweep, write_edge_list
from .ingest import CleaningConfig, clean, parse_trace, write_trace
from .model import Community, build_community, summary_stats
from .navigability import MODES, average_neighborhood_entropy, entropy, entropy_timeline, hit_ratio, item_popularity
from .urn import SyntheticTraceConfig, UrnState, generate_trace, urn_converged_fraction, urn_run


class UsageError(TagTraceError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _threshold(text: str) -> Fraction:
    try:
        return as_threshold(text)
    except TagTraceError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _hoerl(text: str) -> HoerlParams:
    try:
        return HoerlParams.parse(text)
    except (ValueError, TagTraceError) as err:
        raise argparse.ArgumentTypeError(f"invalid Hoerl parameters {text!r}: {err}") from None


def _urn_state(text: str) -> UrnState:
    try:
        return UrnState.parse(text)
    except (ValueError, TagTraceError) as err:
        raise argparse.ArgumentTypeError(f"invalid urn state {text!r}: {err}") from None


def _jsonable(value):
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, (SimilarityKind, Metric)):
        return value.value
    if isinstance(value, HoerlParams):
        return [value.a, value.b, value.c]
    if isinstance(value, UrnState):
        return list(value.color_counts)
    if isinstance(value, (list, tuple, frozenset, set)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_jsonable(v) for v in items]
    return value


def _meta(args: argparse.Namespace) -> dict:
    skip = {"command", "func", "threads", "output"}
    config = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}
    return {"tool": "tagtrace", "version": __version__, "subcommand": args.command, "config": config}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@contextmanager
def _sink(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        f = open(path, "w", encoding="utf-8", newline="")
    except OSError as err:
        raise UsageError(f"cannot write {path}: {err.strerror}") from None
    with f:
        yield f


def _load(args: argparse.Namespace) -> Community:
    try:
        f = open(args.trace, "rb")
    except OSError:
        raise UsageError(f"cannot open {args.trace}") from None
    skipped: list = []
    with f:
        records = parse_trace(f, strict=not args.lenient, skipped=skipped)
    for err in skipped:
        print(f"warning: skipped {err}", file=sys.stderr)
    return build_community(r.to_assignment() for r in records)


def _comment(out: IO[str], key: str, obj) -> None:
    out.write(f"# {key} {_dumps(obj)}\n")


def _writer(out: IO[str]):
    return csv.writer(out, lineterminator="\n")


def cmd_clean(args) -> None:
    config = CleaningConfig(
        reserved_tags=frozenset(args.reserved_tags),
        burst_count=args.burst_count,
        burst_window=args.burst_window,
        min_timestamp=args.min_timestamp,
    )
    try:
        f = open(args.trace, "rb")
    except OSError:
        raise UsageError(f"cannot open {args.trace}") from None
    skipped: list = []
    with f:
        records = parse_trace(f, strict=not args.lenient, skipped=skipped)
    kept, report = clean(records, config)
    summary = report.to_dict()
    summary["lines_skipped"] = len(skipped)
    if args.report:
        with _sink(args.report) as rf:
            rf.write(_dumps({"meta": _meta(args), "report": summary}) + "\n")
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        _comment(out, "report", summary)
        write_trace(kept, out)


def cmd_stats(args) -> None:
    c = _load(args)
    dist = rank_distribution(c, args.metric)
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        _comment(out, "summary", summary_stats(c))
        if args.fit_hoerl:
            fit = fit_hoerl(dist).to_dict()
            _comment(out, "fit", fit)
            if args.fit_output:
                with _sink(args.fit_output) as ff:
                    ff.write(_dumps({"meta": _meta(args), "fit": fit}) + "\n")
        if args.correlate:
            a, b = args.correlate
            xs, ys = user_metric(c, a).astype(float), user_metric(c, b).astype(float)
            if args.log:
                xs, ys = np.log(xs), np.log(ys)
            _comment(out, "correlation", {"x": a.value, "y": b.value, "log": args.log,
                                          "r2": correlation_r2(xs, ys), "n": len(xs)})
        w = _writer(out)
        w.writerow(["rank", "value"])
        w.writerows(dist.points)


def cmd_sweep(args) -> None:
    c = _load(args)
    ladder = sweep_ladder(args.start, args.stop, args.step)
    rows = threshold_sweep(c, args.kind, ladder)
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        w = _writer(out)
        w.writerow(["threshold", "components", "isolated", "largest", "nonisolated"])
        for t, s in rows:
            w.writerow([format_fraction(t), s.components_excluding_isolated, s.isolated_count,
                        s.largest_component_size, s.nonisolated_node_count])


def cmd_graph(args) -> None:
    c = _load(args)
    g = build_graph(c, args.kind, args.threshold)
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        write_edge_list(c, g, out)


def cmd_entropy(args) -> None:
    c = _load(args)
    points = entropy_timeline(c, args.interval, args.log_base, args.popularity)
    total = entropy(item_popularity(c, popularity=args.popularity), args.log_base)
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        _comment(out, "total", {"entropy": total, "num_items": c.num_items})
        w = _writer(out)
        w.writerow(["period_end", "entropy", "num_items"])
        for p in points:
            w.writerow([p.period_end, repr(p.entropy), p.num_items])


def cmd_neigh_entropy(args) -> None:
    c = _load(args)
    modes = list(MODES) if args.mode == "all" else [args.mode]
    tasks = [(t, m) for t in args.threshold for m in modes]
    graphs = {t: build_graph(c, args.kind, t) for t in args.threshold}
    seeds = np.random.SeedSequence(args.seed).spawn(len(tasks))

    def run(i):
        t, mode = tasks[i]
        return average_neighborhood_entropy(c, graphs[t], mode, args.trials,
                                            int(seeds[i].generate_state(1, np.uint64)[0]), args.log_base)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            reports = list(pool.map(run, range(len(tasks))))
    else:
        reports = [run(i) for i in range(len(tasks))]
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        w = _writer(out)
        w.writerow(["threshold", "mode", "mean", "ci95_half_width", "users_measured", "trials", "trial_spread"])
        for r in reports:
            w.writerow([format_fraction(r.threshold), r.mode, repr(r.mean), repr(r.ci95_half_width),
                        r.users_measured, r.trials, repr(r.trial_spread)])


def cmd_predict(args) -> None:
    c = _load(args)
    kind = SimilarityKind(args.kind)
    if args.directed:
        if kind is SimilarityKind.USER_TAG:
            raise ConfigError("--directed applies to item similarity only")
        kind = SimilarityKind.DIRECTED_USER_ITEM
    report = hit_ratio(c, kind, args.threshold, args.granularity, threads=args.threads)
    body = report.to_dict()
    body["threshold"] = format_fraction(report.threshold)
    with _sink(args.output) as out:
        out.write(json.dumps({"meta": _meta(args), "report": body}, sort_keys=True, indent=1) + "\n")


def cmd_generate(args) -> None:
    cfg = SyntheticTraceConfig(
        num_users=args.users,
        num_items=args.items,
        num_tags=args.tags,
        assignments_per_user=args.hoerl,
        urn_init=args.urn_init,
        copy_probability=args.copy_prob,
        interest_groups=args.groups,
        start_time=args.start_time,
        time_step=args.time_step,
        seed=args.seed,
    )
    trace = generate_trace(cfg)
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        write_trace(trace, out)


def cmd_urn(args) -> None:
    traj = urn_run(args.init, args.steps, args.seed)
    fractions = traj.fractions
    with _sink(args.output) as out:
        _comment(out, "meta", _meta(args))
        if args.window:
            conv = urn_converged_fraction(traj, args.window, args.tol)
            _comment(out, "converged", None if conv is None else conv.tolist())
        _comment(out, "final_counts", list(traj.final_counts))
        w = _writer(out)
        w.writerow(["step"] + [f"color_{k}" for k in range(fractions.shape[1])])
        for s, row in enumerate(fractions, start=1):
            w.writerow([s] + [repr(float(v)) for v in row])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tagtrace", description="Usage-pattern analytics for collaborative tagging traces.")
    p.add_argument("--version", action="version", version=f"tagtrace {__version__}")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads (output is identical at any count)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help, trace=True):
        sp = sub.add_parser(name, help=help)
        if trace:
            sp.add_argument("trace", help="input trace (TSV: user, item, tag, timestamp)")
            sp.add_argument("--lenient", action="store_true", help="skip malformed lines instead of failing")
        sp.add_argument("-o", "--output", help="output file (default: standard output)")
        sp.set_defaults(func=func)
        return sp

    sp = command("clean", cmd_clean, "drop reserved-tag-only users, robots and bogus timestamps")
    sp.add_argument("--reserved-tags", type=_csv_list, default=sorted(CleaningConfig().reserved_tags))
    sp.add_argument("--burst-count", type=_positive_int, default=CleaningConfig.burst_count)
    sp.add_argument("--burst-window", type=_positive_int, default=CleaningConfig.burst_window)
    sp.add_argument("--min-timestamp", type=int, default=None)
    sp.add_argument("--report", help="also write the cleaning report as JSON to this file")

    metric_choices = [m.value for m in Metric] + ["assignments", "library", "vocabulary"]
    sp = command("stats", cmd_stats, "user activity rank distribution, Hoerl fit, correlations")
    sp.add_argument("--metric", type=Metric.parse, default=Metric.TAG_ASSIGNMENTS, metavar="{" + ",".join(metric_choices) + "}")
    sp.add_argument("--fit-hoerl", action="store_true")
    sp.add_argument("--fit-output", help="also write the fit report as JSON to this file")
    sp.add_argument("--correlate", type=lambda s: tuple(Metric.parse(m) for m in _csv_list(s)), metavar="A,B")
    sp.add_argument("--log", action="store_true", help="log-transform both metrics before correlating")

    kinds = [k.value for k in SimilarityKind]
    sp = command("sweep", cmd_sweep, "component structure across a threshold ladder")
    sp.add_argument("--kind", choices=kinds, default="user_item")
    sp.add_argument("--from", dest="start", type=_threshold, default=Fraction(1, 100))
    sp.add_argument("--to", dest="stop", type=_threshold, default=Fraction(99, 100))
    sp.add_argument("--step", type=Fraction, default=Fraction(1, 100))

    sp = command("graph", cmd_graph, "export one interest-sharing graph as an edge list")
    sp.add_argument("--kind", choices=kinds, default="user_item")
    sp.add_argument("--threshold", type=_threshold, default=Fraction(1, 100))

    sp = command("entropy", cmd_entropy, "item-popularity entropy over time")
    sp.add_argument("--interval", type=_positive_int, default=86400 * 30)
    sp.add_argument("--log-base", type=float, default=2.0)
    sp.add_argument("--popularity", choices=["users", "assignments"], default="users")

    sp = command("neigh-entropy", cmd_neigh_entropy, "neighborhood entropy against random baselines")
    sp.add_argument("--kind", choices=kinds, default="user_item")
    sp.add_argument("--threshold", type=lambda s: [_threshold(v) for v in _csv_list(s)], default=[Fraction(1, 20)])
    sp.add_argument("--mode", choices=list(MODES) + ["all"], default="all")
    sp.add_argument("--trials", type=_positive_int, default=30)
    sp.add_argument("--seed", type=_seed, default=None)
    sp.add_argument("--log-base", type=float, default=2.0)

    sp = command("predict", cmd_predict, "hit ratio of neighbor libraries for future additions")
    sp.add_argument("--kind", choices=["user_item", "user_tag"], default="user_item")
    sp.add_argument("--threshold", type=_threshold, default=Fraction(1, 100))
    sp.add_argument("--granularity", type=_positive_int, default=3600)
    sp.add_argument("--directed", action="store_true")

    defaults = SyntheticTraceConfig()
    sp = command("generate", cmd_generate, "synthetic trace from Hoerl activity and per-item urns", trace=False)
    sp.add_argument("--users", type=_positive_int, default=defaults.num_users)
    sp.add_argument("--items", type=_positive_int, default=defaults.num_items)
    sp.add_argument("--tags", type=_positive_int, default=defaults.num_tags)
    sp.add_argument("--copy-prob", type=float, default=defaults.copy_probability)
    sp.add_argument("--groups", type=_positive_int, default=defaults.interest_groups)
    sp.add_argument("--hoerl", type=_hoerl, default=defaults.assignments_per_user, metavar="A,B,C")
    sp.add_argument("--urn-init", type=_urn_state, default=defaults.urn_init, metavar="N1,N2,...")
    sp.add_argument("--start-time", type=int, default=defaults.start_time)
    sp.add_argument("--time-step", type=_positive_int, default=defaults.time_step)
    sp.add_argument("--seed", type=_seed, default=defaults.seed)

    sp = command("urn", cmd_urn, "simulate a Pólya urn", trace=False)
    sp.add_argument("--init", type=_urn_state, default=UrnState((1, 1)), metavar="N1,N2,...")
    sp.add_argument("--steps", type=_positive_int, default=1000)
    sp.add_argument("--seed", type=_seed, default=None)
    sp.add_argument("--window", type=_positive_int, default=None, help="report convergence over this many final steps")
    sp.add_argument("--tol", type=float, default=0.01)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = secrets.randbits(63)
        args.func(args)
    except TagTraceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1
    except Exception as err:  # noqa: BLE001
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
