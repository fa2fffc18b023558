"""Command-line entry point for batch runs.

Subcommands:
  generate   synthesize a corpus (CDR, roster, ground truth) from a JSON config
  detect     flag high-index hours per antenna and write the event list
  report     dump one antenna's full index series for plotting
  subgraph   induced contact subgraph of attenders at one antenna/day/window
  infer      attendance-probability tables and linear fit for one window

All outputs are plain delimited text written atomically (temp file + rename),
and every command is deterministic given identical inputs and flags.
"""

from __future__ import annotations

import argparse
import contextlib
import datetime as dt
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Mapping

from . import activity, inference, social, synth
from .ingest import (
    IngestError,
    IngestReport,
    load_client_set,
    parse_cdr_file,
    write_cdr_file,
    write_client_roster,
)
from .model import CalendarRangeError, DatasetCalendar, build_contact_graph

CDR_FILENAME = "cdr.csv"
ROSTER_FILENAME = "clients.txt"
TRUTH_FILENAME = "truth.csv"
EVENTS_FILENAME = "events.csv"

EVENTS_HEADER = "antenna,week,dow,start_hour,end_hour,peak_index"
INDEX_HEADER = "week,dow,hour,E"
SUMMARY_HEADER = "attenders,social_attenders,singlets,max_component"
ATTENDANCE_HEADER = "k,numerator,denominator,p"
CUMULATIVE_HEADER = "K,p"
FIT_HEADER = "slope,intercept,r,n_points"


class CliError(Exception):
    """User-facing failure; message printed to stderr, exit status 1."""


@dataclass(frozen=True)
class RunManifest:
    """What a command was asked to do: inputs, output directory, parameters."""

    command: str
    inputs: tuple[Path, ...]
    out_dir: Path
    parameters: Mapping[str, object]

    def check_inputs(self) -> None:
        for path in self.inputs:
            if not path.exists():
                raise CliError(f"input path does not exist: {path}")


@contextlib.contextmanager
def atomic_output(path: Path) -> Iterator[IO[bytes]]:
    """Write to a temp file in the target directory, rename on success."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    stream = os.fdopen(fd, "wb")
    try:
        yield stream
        stream.close()
        os.replace(tmp_name, path)
    except BaseException:
        stream.close()
        with contextlib.suppress(OSError):
            os.unlink(tmp_name)
        raise


def write_lines(path: Path, lines: Iterator[str] | list[str]) -> None:
    with atomic_output(path) as stream:
        for line in lines:
            stream.write((line + "\n").encode("utf-8"))


def fmt(value: float) -> str:
    return f"{value:.12g}"


def parse_utc_offset(token: str) -> int:
    """'±HH:MM' to signed minutes."""
    try:
        sign = {"+": 1, "-": -1}[token[0]]
        hours, minutes = token[1:].split(":")
        if len(hours) != 2 or len(minutes) != 2 or not 0 <= int(minutes) < 60:
            raise ValueError(token)
        return sign * (int(hours) * 60 + int(minutes))
    except (KeyError, ValueError, IndexError):
        raise argparse.ArgumentTypeError(
            f"bad UTC offset {token!r}, expected ±HH:MM"
        ) from None


def parse_window(token: str) -> tuple[int, int]:
    """'HH:HH' to a half-open hour range."""
    try:
        start, end = (int(part) for part in token.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad window {token!r}, expected HH:HH"
        ) from None
    if not 0 <= start < end <= 24:
        raise argparse.ArgumentTypeError(
            f"bad window {token!r}: need 0 <= start < end <= 24"
        )
    return start, end


def parse_date(token: str) -> dt.date:
    try:
        return dt.date.fromisoformat(token)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad date {token!r}, expected YYYY-MM-DD"
        ) from None


def _load_corpus(cdr_path: Path, roster_path: Path | None):
    with open(cdr_path, "rb") as stream:
        records, report = parse_cdr_file(stream)
    _print_rejections(cdr_path, report)
    clients: set[str] = set()
    if roster_path is not None:
        with open(roster_path, "rb") as stream:
            clients = load_client_set(stream)
    return records, clients


def _print_rejections(path: Path, report: IngestReport) -> None:
    if not report.rejected:
        return
    print(
        f"{path}: rejected {report.rejected} of "
        f"{report.accepted + report.rejected} lines",
        file=sys.stderr,
    )
    for line_no, reason in report.first_errors:
        print(f"  line {line_no}: {reason}", file=sys.stderr)


def _calendar_for(records, args):
    """Calendar derived from the corpus plus the records it covers."""
    if not records:
        raise CliError("corpus is empty, nothing to analyze")
    try:
        calendar = DatasetCalendar.from_records(
            records, args.utc_offset, getattr(args, "epoch_start", None)
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    in_range = [r for r in records if calendar.contains(r.timestamp)]
    dropped = len(records) - len(in_range)
    if dropped:
        print(
            f"dropped {dropped} records outside the {calendar.n_weeks} whole "
            f"calendar weeks starting {calendar.epoch_start}",
            file=sys.stderr,
        )
    return calendar, in_range


def cmd_generate(args) -> int:
    manifest = RunManifest(
        "generate", (args.config,), args.out, {"seed": args.seed}
    )
    manifest.check_inputs()
    config = synth.load_config(args.config)
    if args.seed is not None:
        config = synth.with_seed(config, args.seed)
    result = synth.generate(config)

    with atomic_output(args.out / CDR_FILENAME) as stream:
        write_cdr_file(result.records, stream)
    with atomic_output(args.out / ROSTER_FILENAME) as stream:
        write_client_roster(result.clients, stream)
    with atomic_output(args.out / TRUTH_FILENAME) as stream:
        synth.write_truth_file(result.truth, stream)

    print(
        f"generated {len(result.records)} records, {len(result.clients)} clients, "
        f"{config.n_antennas} antennas, planted events: {len(result.truth)}"
    )
    print(
        f"calendar: {config.n_weeks} weeks from {config.epoch_start} "
        f"(utc offset {config.utc_offset_minutes} min)"
    )
    return 0


def _detection_pipeline(records, calendar, percentile):
    cube = activity.aggregate(records, calendar)
    series = activity.event_index(cube)
    events = activity.detect_events(series, percentile)
    return series, events


def cmd_detect(args) -> int:
    manifest = RunManifest(
        "detect",
        (args.cdr, args.roster),
        args.out,
        {"percentile": args.percentile, "utc_offset": args.utc_offset},
    )
    manifest.check_inputs()
    if not 0 < args.percentile <= 1:
        raise CliError(f"--percentile must be in (0, 1], got {args.percentile}")
    records, _clients = _load_corpus(args.cdr, args.roster)
    calendar, in_range = _calendar_for(records, args)
    series, events = _detection_pipeline(in_range, calendar, args.percentile)

    silent = series.silent_antennas()
    for antenna in silent:
        print(f"skipped silent antenna {antenna} (no traffic)", file=sys.stderr)

    if args.dump_index is not None:
        _write_index_dump(args.out, series, args.dump_index)

    lines = [EVENTS_HEADER]
    for ev in events:
        lines.append(
            f"{ev.antenna},{ev.week},{ev.dow},{ev.start_hour},{ev.end_hour},"
            f"{fmt(ev.peak_index)}"
        )
    write_lines(args.out / EVENTS_FILENAME, lines)
    print(
        f"detected {len(events)} events across "
        f"{len(series.antennas) - len(silent)} active antennas "
        f"(calendar {calendar.n_weeks} weeks from {calendar.epoch_start})"
    )
    return 0


def _write_index_dump(out_dir: Path, series, antenna: str) -> None:
    if antenna not in series.antennas:
        raise CliError(f"unknown antenna {antenna!r}")
    lines = [INDEX_HEADER]
    for week, dow, hour, value in series.antenna_rows(antenna):
        token = "nan" if value is None else fmt(value)
        lines.append(f"{week},{dow},{hour},{token}")
    write_lines(out_dir / f"index_{antenna}.csv", lines)


def cmd_report(args) -> int:
    manifest = RunManifest(
        "report", (args.cdr,), args.out, {"antenna": args.antenna}
    )
    manifest.check_inputs()
    records, _ = _load_corpus(args.cdr, None)
    calendar, in_range = _calendar_for(records, args)
    cube = activity.aggregate(in_range, calendar)
    series = activity.event_index(cube)
    _write_index_dump(args.out, series, args.antenna)
    print(f"wrote index series for {args.antenna} ({calendar.n_weeks} weeks)")
    return 0


def _window_analysis(args):
    """Shared prep for subgraph/infer: attenders and the induced subgraph."""
    records, clients = _load_corpus(args.cdr, args.roster)
    calendar, in_range = _calendar_for(records, args)
    try:
        week, dow = calendar.slot_of_date(args.date)
    except CalendarRangeError as exc:
        raise CliError(str(exc)) from exc
    start_hour, end_hour = args.window
    window = social.EventWindow(args.antenna, week, dow, start_hour, end_hour)
    present = social.attenders(in_range, window, clients, calendar)
    if not present:
        raise CliError(
            f"no attenders at {args.antenna} on {args.date} "
            f"{start_hour:02d}:00-{end_hour:02d}:00"
        )
    graph = build_contact_graph(in_range, clients)
    subgraph = social.induce_subgraph(graph, present)
    return graph, subgraph


def _summary_lines(subgraph) -> list[str]:
    histogram = social.component_size_histogram(subgraph)
    max_component = max(histogram) if histogram else 0
    return [
        SUMMARY_HEADER,
        f"{len(subgraph.attenders)},{len(subgraph.social_attenders)},"
        f"{len(subgraph.singlets)},{max_component}",
    ]


def cmd_subgraph(args) -> int:
    manifest = RunManifest(
        "subgraph",
        (args.cdr, args.roster),
        args.out,
        {"antenna": args.antenna, "date": args.date, "window": args.window},
    )
    manifest.check_inputs()
    _, subgraph = _window_analysis(args)
    edge_lines = ["u,v"] + [f"{u},{v}" for u, v in sorted(subgraph.edges)]
    write_lines(args.out / "subgraph_edges.csv", edge_lines)
    write_lines(args.out / "subgraph_summary.csv", _summary_lines(subgraph))
    print(
        f"{len(subgraph.attenders)} attenders, "
        f"{len(subgraph.social_attenders)} social, {len(subgraph.singlets)} singlets"
    )
    return 0


def cmd_infer(args) -> int:
    manifest = RunManifest(
        "infer",
        (args.cdr, args.roster),
        args.out,
        {
            "antenna": args.antenna,
            "date": args.date,
            "window": args.window,
            "min_denominator": args.min_denominator,
        },
    )
    manifest.check_inputs()
    graph, subgraph = _window_analysis(args)
    table = inference.attendance_probability(graph, subgraph.attenders)
    cumulative = inference.cumulative_attendance_probability(graph, subgraph.attenders)
    points = table.points(args.min_denominator)
    try:
        fit = inference.linear_fit(points)
    except ValueError as exc:
        raise CliError(
            f"cannot fit: {exc} (after --min-denominator {args.min_denominator})"
        ) from exc

    attendance_lines = [ATTENDANCE_HEADER] + [
        f"{k},{row.numerator},{row.denominator},{fmt(row.p)}"
        for k, row in sorted(table.rows.items())
    ]
    cumulative_lines = [CUMULATIVE_HEADER] + [
        f"{k},{fmt(row.p)}" for k, row in sorted(cumulative.items())
    ]
    fit_lines = [
        FIT_HEADER,
        f"{fmt(fit.slope)},{fmt(fit.intercept)},{fmt(fit.r)},{len(points)}",
    ]
    write_lines(args.out / "subgraph_summary.csv", _summary_lines(subgraph))
    write_lines(args.out / "attendance.csv", attendance_lines)
    write_lines(args.out / "cumulative.csv", cumulative_lines)
    write_lines(args.out / "fit.csv", fit_lines)
    degenerate = " (degenerate)" if fit.degenerate else ""
    print(
        f"fit over {len(points)} points: slope {fmt(fit.slope)}, "
        f"intercept {fmt(fit.intercept)}, r {fmt(fit.r)}{degenerate}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdrevents",
        description="Event detection and social analysis over call detail records",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, roster=True, dated=False):
        p.add_argument("cdr", type=Path, help="CDR file")
        if roster:
            p.add_argument("roster", type=Path, help="client roster file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument(
            "--utc-offset",
            type=parse_utc_offset,
            default="-03:00",
            help="fixed local offset ±HH:MM (default -03:00)",
        )
        p.add_argument(
            "--epoch-start",
            type=parse_date,
            default=None,
            help="pin week 0 to this local date instead of the first record",
        )
        if dated:
            p.add_argument("--antenna", required=True, help="antenna identifier")
            p.add_argument(
                "--date", type=parse_date, required=True, help="local date YYYY-MM-DD"
            )
            p.add_argument(
                "--window",
                type=parse_window,
                default="18:22",
                help="local hour window HH:HH (default 18:22)",
            )

    p_gen = sub.add_parser("generate", help="synthesize a corpus with ground truth")
    p_gen.add_argument("config", type=Path, help="JSON generator config")
    p_gen.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p_gen.add_argument("--seed", type=int, default=None, help="override config seed")
    p_gen.set_defaults(func=cmd_generate)

    p_detect = sub.add_parser("detect", help="flag high-index hours per antenna")
    add_common(p_detect)
    p_detect.add_argument(
        "--percentile",
        type=float,
        default=0.99,
        help="per-antenna detection percentile in (0, 1] (default 0.99)",
    )
    p_detect.add_argument(
        "--dump-index",
        metavar="ANTENNA",
        default=None,
        help="also write the full index series of this antenna",
    )
    p_detect.set_defaults(func=cmd_detect)

    p_report = sub.add_parser("report", help="dump one antenna's index series")
    add_common(p_report, roster=False)
    p_report.add_argument("--antenna", required=True, help="antenna identifier")
    p_report.set_defaults(func=cmd_report)

    p_sub = sub.add_parser("subgraph", help="induced attender subgraph for one window")
    add_common(p_sub, dated=True)
    p_sub.set_defaults(func=cmd_subgraph)

    p_infer = sub.add_parser("infer", help="attendance probability and linear fit")
    add_common(p_infer, dated=True)
    p_infer.add_argument(
        "--min-denominator",
        type=int,
        default=5,
        help="drop table rows below this denominator before fitting (default 5)",
    )
    p_infer.set_defaults(func=cmd_infer)
    return parser


def _join_offset_values(argv: list[str]) -> list[str]:
    """Fold '--utc-offset -03:00' into '--utc-offset=-03:00'.

    argparse treats a leading '-' value as an option string, so the separated
    form would otherwise be rejected.
    """
    out: list[str] = []
    i = 0
    while i < len(argv):
        if argv[i] == "--utc-offset" and i + 1 < len(argv):
            out.append(f"--utc-offset={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_parser().parse_args(_join_offset_values(list(argv)))
    try:
        return args.func(args)
    except (CliError, IngestError, synth.ConfigError, CalendarRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
