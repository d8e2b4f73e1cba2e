"""Command-line interface: ``simulate``, ``calibrate`` and ``compare``.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .calibration import BinningScheme, bin_forecasts, curve_to_table, table_to_csv, table_to_json
from .censoring import filter_scheduled, surprisingly_early_subset
from .ingest import parse_archive, records_from_synthetic, to_observed, write_archive
from .model import ValidationError
from .simulate import SimulationConfig, generate_snapshots, sample_events, snapshot_counts
from .stats import calibration_shift, raw_frequency_difference, shift_significance

log = logging.getLogger("earlybias")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="earlybias", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate events and a perfect forecaster")
    s.add_argument("--n", type=int, default=100_000, help="number of events (default 100000)")
    s.add_argument("--seed", type=int, default=SimulationConfig.seed)
    s.add_argument("--horizon", type=float, default=1.0)
    s.add_argument("--mu-range", type=_pair, help="LOW,HIGH for event locations (default 0,T)")
    s.add_argument("--sigma-range", type=_pair, help="LOW,HIGH for event scales (default 0.05T,0.3T)")
    s.add_argument("--snapshot-times", type=_floats, help="comma-separated collection times (default 0.1T..T)")
    s.add_argument("--bias", type=float, default=0.0, help="log-odds shift applied to every forecast")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True, help="archive file to write")
    s.add_argument("--manifest", help="manifest path (default OUT.manifest.json)")

    for name, helptext in (("calibrate", "emit a calibration table"), ("compare", "compare unfiltered and filtered calibration")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--input", required=True, help="archive file")
        c.add_argument("--collection-time", required=True)
        c.add_argument("--time-convention", choices=("unitless", "iso8601"), default="unitless")
        c.add_argument("--bins", type=int, default=20)
        c.add_argument("--format", choices=("csv", "json"), default="csv")
        c.add_argument("--out", help="output file (default standard output)")
        c.add_argument("--manifest", help="manifest path (default OUT.manifest.json when --out is set)")
        if name == "calibrate":
            g = c.add_mutually_exclusive_group()
            g.add_argument("--filter", dest="filter", action="store_true")
            g.add_argument("--no-filter", dest="filter", action="store_false")
            c.set_defaults(filter=False)
        else:
            c.add_argument("--resamples", type=int, default=10_000)
            c.add_argument("--seed", type=int, default=0)
            c.add_argument("--stratify", action="store_true", help="permute within forecast bins")
            c.add_argument("--workers", type=int, default=1)
    return p


# ---- helpers ---------------------------------------------------------------

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, command: str, settings: dict, inputs=(), outputs=()):
    manifest = {
        "tool": "earlybias",
        "version": __version__,
        "subcommand": command,
        "settings": settings,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _settings(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("verbose",)}


def _load_observed(args):
    if not Path(args.input).is_file():
        raise FileNotFoundError(f"input archive not found: {args.input}")
    records, summary = parse_archive(args.input, args.time_convention, args.collection_time)
    observed = to_observed(records, summary.collection_time)
    if len(observed) == 0:
        raise ValidationError(f"no resolved forecasts at collection time {args.collection_time}")
    return observed, summary


def _finish(args, outputs, command):
    manifest = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if manifest:
        inputs = [args.input] if getattr(args, "input", None) else []
        _write_manifest(manifest, command, _settings(args), inputs, outputs)


# ---- subcommands -----------------------------------------------------------

def cmd_simulate(args) -> int:
    config = SimulationConfig(
        n_events=args.n,
        horizon=args.horizon,
        mu_range=args.mu_range,
        sigma_range=args.sigma_range,
        snapshot_times=args.snapshot_times,
        seed=args.seed,
        bias=args.bias,
    )
    dataset = sample_events(config, workers=args.workers)
    write_archive(records_from_synthetic(dataset), args.out, "unitless")
    snaps = [snapshot_counts(s) for s in generate_snapshots(dataset)]
    for row in snaps:
        log.info("t_c=%g positive=%d negative=%d censored=%d", *row.values())
    settings = _settings(args)
    settings.update(
        mu_range=list(config.mu_range),
        sigma_range=list(config.sigma_range),
        snapshot_times=list(config.snapshot_times),
        time_convention="unitless",
        snapshots=snaps,
    )
    manifest = args.manifest or f"{args.out}.manifest.json"
    _write_manifest(manifest, "simulate", settings, outputs=[args.out])
    return EXIT_OK


def cmd_calibrate(args) -> int:
    observed, _ = _load_observed(args)
    if args.filter:
        dropped = len(surprisingly_early_subset(observed))
        observed = filter_scheduled(observed)
        print(f"filter: excluded {dropped} surprisingly-early records", file=sys.stderr)
        if len(observed) == 0:
            raise ValidationError("nothing left after filtering")
    rows = curve_to_table(bin_forecasts(observed, BinningScheme(args.bins)))
    view = "filtered" if args.filter else "unfiltered"
    if args.format == "csv":
        text = table_to_csv(rows)
    else:
        text = table_to_json(rows, view=view, collection_time=observed.collection_time, n_records=len(observed))
    _emit(text, args.out)
    _finish(args, [args.out] if args.out else [], "calibrate")
    return EXIT_OK


def compare_report(observed, summary, bins: int, resamples: int, seed: int, stratify: bool, workers: int = 1) -> dict:
    scheme = BinningScheme(bins)
    filtered = filter_scheduled(observed)
    if len(filtered) == 0:
        raise ValidationError("every resolved record is scheduled after the collection time")
    excluded = len(observed) - len(filtered)
    report = {
        "collection_time": observed.collection_time,
        "n_unfiltered": len(observed),
        "n_filtered": len(filtered),
        "excluded_count": excluded,
        "excluded_events": summary.n_events_scheduled_after_collection,
        "early_negatives": observed.early_negatives,
        "raw_frequency_difference": raw_frequency_difference(observed, filtered),
        "shift": calibration_shift(observed, filtered),
        "p_value": None,
        "n_resamples": resamples,
        "seed": seed,
        "stratified": stratify,
    }
    if excluded:
        result = shift_significance(observed, resamples, seed, scheme if stratify else None, workers)
        report["p_value"] = result.p_value
    report["rows"] = [
        {"view": view, **row}
        for view, data in (("unfiltered", observed), ("filtered", filtered))
        for row in curve_to_table(bin_forecasts(data, scheme))
    ]
    return report


def _report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for k, v in report.items():
        if k != "rows":
            w.writerow([k, "" if v is None else (repr(v) if isinstance(v, float) else v)])
    buf.write("\n")
    for view in ("unfiltered", "filtered"):
        rows = [{k: v for k, v in r.items() if k != "view"} for r in report["rows"] if r["view"] == view]
        text = table_to_csv(rows, extra={"view": view})
        buf.write(text if view == "unfiltered" else text.split("\n", 1)[1])
    return buf.getvalue()


def cmd_compare(args) -> int:
    observed, summary = _load_observed(args)
    report = compare_report(observed, summary, args.bins, args.resamples, args.seed, args.stratify, args.workers)
    if report["excluded_count"]:
        print(
            f"excluded {report['excluded_count']} records; shift={report['shift']:.6g} p={report['p_value']:.4g}",
            file=sys.stderr,
        )
    else:
        print("no surprisingly-early records; shift is 0 and the test is skipped", file=sys.stderr)
    text = json.dumps(report, indent=2) + "\n" if args.format == "json" else _report_csv(report)
    _emit(text, args.out)
    _finish(args, [args.out] if args.out else [], "compare")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "calibrate": cmd_calibrate, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if getattr(args, "bins", 1) < 1:
            raise ValidationError("--bins must be positive")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
