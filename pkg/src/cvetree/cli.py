"""Command line interface.

Exit status: ``0`` on success, ``1`` on data errors (schema, vocabulary,
unknown ids, ...), ``2`` on usage and configuration errors.
"""
import argparse
import logging
import sys
from datetime import datetime
from datetime import timedelta
from datetime import timezone
from pathlib import Path
from typing import List
from typing import Optional
from typing import Sequence

from . import __version__
from .config import CONFIG_ENV_VAR
from .config import IMPACT_SOURCE_ALIASES
from .config import IMPACT_SOURCES
from .config import PIPELINE_VARIANT_ALIASES
from .config import PIPELINE_VARIANTS
from .config import load_config
from .dataset import balance_by_kev
from .dataset import filter_by_date
from .dataset import filter_by_field
from .dataset import load_records
from .dataset import parse_date
from .dataset import validate_dataset
from .dataset import write_encoded_csv
from .eventtree import SMOOTHING_MODES
from .exceptions import ArgumentError
from .exceptions import ConfigError
from .exceptions import CveTreeError
from .exceptions import DateParseError
from .exceptions import DocumentParseError
from .register import AnnotationStore
from .register import QualitativeAnnotation
from .register import atomic_write_text
from .register import build_entries
from .register import export_register
from .register import import_register
from .risk import RiskScore
from .risk import check_path_mass
from .risk import format_sig
from .risk import rank
from .risk import read_report
from .risk import score_dataset
from .risk import write_report

# ----------------------------------------------------------------------------


LOGGER = logging.getLogger(__name__)

#: Lower / upper bound for open date ranges.
_DATE_MIN = datetime(1970, 1, 1, tzinfo=timezone.utc)
_DATE_MAX = datetime(9999, 12, 31, 23, 59, 59, tzinfo=timezone.utc)


# ----------------------------------------------------------------------------


def _date_arg(text: str) -> datetime:
    try:
        dt = parse_date(text)
    except DateParseError as ex:
        raise argparse.ArgumentTypeError(str(ex)) from None
    return dt


def _date_to_arg(text: str) -> datetime:
    # a plain date as upper bound includes the whole day
    dt = _date_arg(text)
    if len(text.strip()) == 10:
        dt += timedelta(days=1) - timedelta(microseconds=1)
    return dt


def _area_arg(text: str):
    name, sep, values = text.partition("=")
    if not sep or not name.strip() or not values.strip():
        raise argparse.ArgumentTypeError(f"expected FIELD=VALUE[,VALUE...], got {text!r}")
    return name.strip(), [v.strip() for v in values.split(",") if v.strip()]


def _add_date_filter(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--from", dest="date_from", type=_date_arg, help="published on or after (YYYY-MM-DD)"
    )
    parser.add_argument(
        "--to", dest="date_to", type=_date_to_arg, help="published on or before (YYYY-MM-DD)"
    )


def _filter_dates(items, args):
    if args.date_from is None and args.date_to is None:
        return list(items)
    items = [i for i in items if i.published_date is not None]
    return filter_by_date(items, args.date_from or _DATE_MIN, args.date_to or _DATE_MAX)


def _write_text(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def _print_table(scores: Sequence[RiskScore]):
    print(f"{'#':>4}  {'cve_id':<18} {'risk_norm':>10} {'risk_raw':>10} {'likelihood':>10} {'impact':>8}  class")
    for pos, s in enumerate(scores, start=1):
        print(
            f"{pos:>4}  {s.cve_id:<18} {format_sig(s.risk_norm):>10} {format_sig(s.risk_raw):>10}"
            f" {format_sig(s.likelihood_raw):>10} {format_sig(s.impact_raw):>8}  {s.risk_class.label}"
        )


# ----------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    records = _filter_dates(load_records(args.data), args)
    stats = validate_dataset(records)

    print(f"rows: {stats.row_count}")
    print(f"exploited (KEV): {stats.exploited_count}")
    print(f"not exploited: {stats.non_exploited_count}")
    print(f"duplicate ids: {stats.duplicate_id_count}")
    for name, (low, high) in stats.per_field_min_max.items():
        print(f"  {name:<24} {format_sig(low):>8} .. {format_sig(high)}")

    if args.out:
        if args.out == "-":
            write_encoded_csv(records, sys.stdout, decode=args.decode)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fp:
                count = write_encoded_csv(records, fp, decode=args.decode)
            LOGGER.info("Wrote %d rows to %s", count, args.out)
    return 0


def cmd_score(args) -> int:
    config = load_config(args.config).replace(
        threshold=args.threshold,
        pipeline_variant=args.variant,
        impact_source=args.impact_source,
        smoothing=args.smoothing,
        likelihood_model="conditional" if args.conditional else None,
        log_space=True if args.log_space else None,
        cycles=args.cycles,
        enumeration_cap=args.enumeration_cap,
    )

    records = _filter_dates(load_records(args.data), args)
    for name, values in args.area or ():
        records = filter_by_field(records, name, values)
    if args.balanced:
        records = balance_by_kev(records, seed=args.seed)

    report = score_dataset(records, config)
    if args.out:
        write_report(report, args.out)
    else:
        _print_table(report.scores)

    print(
        f"{report.row_count} rows, {report.risky_count} risky, "
        f"runtime {report.runtime_seconds:.3f} s"
    )
    if args.check_paths:
        mass = check_path_mass(records, config)
        print(f"{mass.path_count} paths, total probability {format_sig(mass.total, 12)}")
    return 0


def cmd_explain(args) -> int:
    report = read_report(args.report)
    score = report.find(args.cve_id)
    if not score.factors:
        raise DocumentParseError(
            f"Report {args.report} has no per-attribute factors, score with a .json output"
        )

    print(score.cve_id)
    for factor in score.factors:
        print(f"  {factor.attribute:<24} = {str(factor.outcome):<8} p = {format_sig(factor.probability)}")
    print(f"likelihood_raw   {format_sig(score.likelihood_raw)}")
    print(f"likelihood_norm  {format_sig(score.likelihood_norm)}")
    print(f"impact_raw       {format_sig(score.impact_raw)}")
    print(f"impact_norm      {format_sig(score.impact_norm)}")
    print(f"risk_raw         {format_sig(score.risk_raw)}")
    print(f"risk_norm        {format_sig(score.risk_norm)}")
    print(f"risk_class       {score.risk_class.label}")
    if score.underflow:
        print("(likelihood underflowed to 0)")
    return 0


def cmd_rank(args) -> int:
    if args.top is not None and args.top < 1:
        raise ArgumentError(f"--top must be >= 1, got {args.top}")
    report = read_report(args.report)
    scores = _filter_dates(report.scores, args)
    _print_table(rank(scores, top_k=args.top))
    return 0


def cmd_register_annotate(args) -> int:
    store = AnnotationStore.load(args.store)
    store.attach(
        QualitativeAnnotation(
            cve_id=args.cve,
            context=args.context or "",
            risk_factors=tuple(args.factor or ()),
            consequences=tuple(args.consequence or ()),
            analyst=args.analyst,
        )
    )
    store.save()
    print(f"{len(store)} annotations in {args.store}")
    return 0


def cmd_register_export(args) -> int:
    report = read_report(args.report)
    store = AnnotationStore.load(args.annotations) if args.annotations else None
    entries = build_entries(
        report.scores, store, category=args.category, response_type=args.response_type
    )
    _write_text(export_register(entries), args.out)
    LOGGER.info("Exported %d register entries", len(entries))
    return 0


def cmd_register_import(args) -> int:
    try:
        text = Path(args.register).read_text(encoding="utf-8")
    except OSError as ex:
        raise DocumentParseError(f"Could not read register {args.register}: {ex}") from ex
    entries = import_register(text)
    for entry in sorted(entries, key=lambda e: (e.priority, e.cve_id)):
        risk = format_sig(entry.score.risk_norm) if entry.score else "-"
        print(f"{entry.priority:>4}  {entry.cve_id:<18} {risk:>10}  {entry.description}")
    print(f"{len(entries)} entries")
    return 0


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvetree",
        description="Event-tree risk scoring over CVE data.",
        epilog=f"The default config file is read from ${CONFIG_ENV_VAR} or ./cvetree.json.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    # ingest
    p = commands.add_parser("ingest", help="validate and encode a dataset, print statistics")
    p.add_argument("data", help="dataset CSV (path, URL or - for stdin)")
    p.add_argument("--out", help="write the encoded dataset (- for stdout)")
    p.add_argument("--decode", action="store_true", help="write vocabulary tokens, not codes")
    _add_date_filter(p)
    p.set_defaults(func=cmd_ingest)

    # score
    p = commands.add_parser("score", help="score a dataset, write a risk report")
    p.add_argument("data", help="dataset CSV (path, URL or - for stdin)")
    p.add_argument("--config", help="config file or folder with cvetree.json")
    p.add_argument("--out", help="report file, .json or .csv (explain needs .json)")
    p.add_argument("--threshold", type=float, help="normalized risk threshold for Risky")
    p.add_argument(
        "--variant",
        choices=PIPELINE_VARIANTS + tuple(PIPELINE_VARIANT_ALIASES),
        help="risk from raw or normalized inputs",
    )
    p.add_argument("--impact-source", choices=IMPACT_SOURCES + tuple(IMPACT_SOURCE_ALIASES))
    p.add_argument("--smoothing", choices=SMOOTHING_MODES)
    p.add_argument("--conditional", action="store_true", help="conditional chain likelihood")
    p.add_argument("--log-space", action="store_true", help="multiply in log space")
    p.add_argument("--cycles", type=int, help="repeat scoring for timing")
    p.add_argument(
        "--check-paths",
        action="store_true",
        help="sum the probabilities of all paths of the fitted event tree",
    )
    p.add_argument("--enumeration-cap", type=int, help="maximum number of paths for --check-paths")
    p.add_argument(
        "--area",
        type=_area_arg,
        action="append",
        metavar="FIELD=VALUE[,VALUE]",
        help="keep rows whose field takes one of the values",
    )
    p.add_argument("--balanced", action="store_true", help="undersample to equal KEV classes")
    p.add_argument("--seed", type=int, default=0, help="seed for --balanced")
    _add_date_filter(p)
    p.set_defaults(func=cmd_score)

    # explain
    p = commands.add_parser("explain", help="per-attribute breakdown of one CVE")
    p.add_argument("report", help="JSON report")
    p.add_argument("cve_id")
    p.set_defaults(func=cmd_explain)

    # rank
    p = commands.add_parser("rank", help="rank a report by normalized risk")
    p.add_argument("report")
    p.add_argument("--top", type=int, help="only the first N rows")
    _add_date_filter(p)
    p.set_defaults(func=cmd_rank)

    # register
    p = commands.add_parser("register", help="risk register")
    register = p.add_subparsers(dest="register_command", metavar="ACTION")
    register.required = True

    r = register.add_parser("annotate", help="add a qualitative annotation")
    r.add_argument("store", help="annotation store JSON")
    r.add_argument("--cve", required=True)
    r.add_argument("--context")
    r.add_argument("--factor", action="append", help="risk factor, repeatable")
    r.add_argument("--consequence", action="append", help="consequence, repeatable")
    r.add_argument("--analyst")
    r.set_defaults(func=cmd_register_annotate)

    r = register.add_parser("export", help="export a register from a report")
    r.add_argument("report")
    r.add_argument("--annotations", help="annotation store JSON")
    r.add_argument("--out", help="register JSON (default stdout)")
    r.add_argument("--category", default="vulnerability")
    r.add_argument("--response-type", default="undetermined")
    r.set_defaults(func=cmd_register_export)

    r = register.add_parser("import", help="read and list a register")
    r.add_argument("register")
    r.set_defaults(func=cmd_register_import)

    return parser


def _setup_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    logging.getLogger("cvetree").setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else 2

    _setup_logging(args)
    try:
        return args.func(args)
    except (ConfigError, ArgumentError) as ex:
        print(f"cvetree: error: {ex}", file=sys.stderr)
        return 2
    except CveTreeError as ex:
        print(f"cvetree: error: {ex}", file=sys.stderr)
        return 1


# ----------------------------------------------------------------------------
