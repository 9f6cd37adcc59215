"""Command-line interface: ``rank-cusum {test,locate,simulate,quantiles}``.

Input files are CSV with a header row. Two layouts are accepted:

* ``--xy FILE``: paired observations in columns ``x`` and ``y`` (names
  configurable), with an optional ``date`` column.
* ``--prices FILE_X FILE_Y``: two price histories with columns ``date`` and
  ``value``. They are inner-joined on date and turned into log returns.

``test`` prints a JSON report (schema below) and exits with 0 if no selected
test rejects, 1 if at least one rejects, and 2 on any error. With ``--out``
the report is also written to that path and each CUSUM process is written
next to it as ``<stem>_<statistic>_process.csv`` with columns
``k, [date,] weighted_abs_diff``.

Report schema::

    {"input": {"n", "start", "end", "source"},
     "tests": {kind: TestResult.to_dict()},
     "change_point": {"k_hat", "lambda_hat", "date"} | null,
     "config": {"kernel", "bandwidth", "level", "seed"}}
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np

from .cptest import (
    TESTS,
    ChangePointEstimate,
    TestResult,
    kolmogorov_quantile,
    kolmogorov_sf,
    locate_change,
)
from .lrv import KernelSpec, LrvConfig
from .series import BivariateSeries, DegenerateVarianceError, InvalidInputError
from .simulate import (
    TABLE_DISTRIBUTIONS,
    TABLE_JUMPS,
    TABLE_TESTS,
    ScenarioSpec,
    jump_label,
    run_convergence_experiment,
    run_locator_experiment,
    run_rejection_table,
)

EXIT_ACCEPT, EXIT_REJECT, EXIT_ERROR = 0, 1, 2
STATISTIC_CHOICES = {"kendall": "kendall", "pearson": "pearson", "spearman": "spearman_copula"}


# --------------------------------------------------------------------------
# ingestion


class IngestError(InvalidInputError):
    """Problem reading input data. ``code`` tells the failure kinds apart."""

    EMPTY_INTERSECTION = "empty_intersection"
    DOMAIN = "domain"
    MALFORMED = "malformed"

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class IngestConfig:
    mode: Literal["paired_xy", "two_price_files"] = "paired_xy"
    date_column: str = "date"
    value_column: str = "value"
    x_column: str = "x"
    y_column: str = "y"
    log_returns: bool = True


def _parse_date(text: str, where: str) -> date:
    try:
        return datetime.fromisoformat(text.strip()).date()
    except ValueError:
        raise IngestError(IngestError.MALFORMED, f"{where}: cannot parse date {text!r}") from None


def _parse_float(text: Optional[str], where: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise IngestError(IngestError.MALFORMED, f"{where}: non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise IngestError(IngestError.MALFORMED, f"{where}: non-finite value {text!r}")
    return value


def _read_rows(path: Path, required: Sequence[str]):
    """Yield ``(line_number, row)`` after checking the header."""
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise IngestError(IngestError.MALFORMED, f"{path}: {exc.strerror}") from None
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestError(IngestError.MALFORMED, f"{path}: missing column(s) {', '.join(missing)}")
        for row in reader:
            if None in row or any(v is None for v in row.values()):
                raise IngestError(IngestError.MALFORMED, f"{path}, line {reader.line_num}: wrong number of fields")
            yield reader.line_num, row


def _read_prices(path: Path, config: IngestConfig) -> dict[date, tuple[float, int]]:
    prices: dict[date, tuple[float, int]] = {}
    for line, row in _read_rows(path, (config.date_column, config.value_column)):
        where = f"{path}, line {line}"
        day = _parse_date(row[config.date_column], where)
        if day in prices:
            raise IngestError(IngestError.MALFORMED, f"{where}: duplicate date {day}")
        prices[day] = (_parse_float(row[config.value_column], where), line)
    return prices


def _log_returns(levels: list[tuple[float, int]], path: Path) -> np.ndarray:
    for value, line in levels:
        if value <= 0.0:
            raise IngestError(IngestError.DOMAIN, f"{path}, line {line}: non-positive price {value} for log returns")
    return np.diff(np.log([v for v, _ in levels]))


def ingest(config: IngestConfig, paths: Sequence[str | Path]) -> BivariateSeries:
    """Read one paired file or two price files into a series."""
    paths = [Path(p) for p in paths]
    if config.mode == "paired_xy":
        if len(paths) != 1:
            raise InvalidInputError("paired_xy mode takes exactly one file")
        (path,) = paths
        xs, ys, days = [], [], []
        has_dates = None
        for line, row in _read_rows(path, (config.x_column, config.y_column)):
            where = f"{path}, line {line}"
            xs.append(_parse_float(row[config.x_column], where))
            ys.append(_parse_float(row[config.y_column], where))
            if has_dates is None:
                has_dates = config.date_column in row
            if has_dates:
                days.append(_parse_date(row[config.date_column], where))
        if not xs:
            raise IngestError(IngestError.MALFORMED, f"{path}: no data rows")
        try:
            return BivariateSeries(xs, ys, tuple(days) if has_dates else None)
        except InvalidInputError as exc:
            raise IngestError(IngestError.MALFORMED, f"{path}: {exc}") from None

    if config.mode != "two_price_files":
        raise InvalidInputError(f"unknown ingest mode {config.mode!r}")
    if len(paths) != 2:
        raise InvalidInputError("two_price_files mode takes exactly two files")
    px, py = (_read_prices(p, config) for p in paths)
    common = sorted(px.keys() & py.keys())
    if not common:
        raise IngestError(IngestError.EMPTY_INTERSECTION, f"{paths[0]} and {paths[1]} share no dates")
    lx, ly = [px[d] for d in common], [py[d] for d in common]
    if config.log_returns:
        xs, ys = _log_returns(lx, paths[0]), _log_returns(ly, paths[1])
        days = common[1:]
    else:
        xs, ys = np.array([v for v, _ in lx]), np.array([v for v, _ in ly])
        days = common
    if len(xs) == 0:
        raise IngestError(IngestError.EMPTY_INTERSECTION, "a single common date leaves no returns")
    return BivariateSeries(xs, ys, tuple(days))


# --------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    n: int
    start: Optional[str]
    end: Optional[str]
    source: list[str]
    tests: dict[str, TestResult] = field(default_factory=dict)
    change_point: Optional[ChangePointEstimate] = None
    change_date: Optional[str] = None
    kernel: str = "quartic"
    bandwidth: int | str = "auto"
    level: float = 0.05
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        cp = None
        if self.change_point is not None:
            cp = {"k_hat": self.change_point.k_hat, "lambda_hat": self.change_point.lambda_hat, "date": self.change_date}
        return {
            "input": {"n": self.n, "start": self.start, "end": self.end, "source": list(self.source)},
            "tests": {k: r.to_dict() for k, r in self.tests.items()},
            "change_point": cp,
            "config": {"kernel": self.kernel, "bandwidth": self.bandwidth, "level": self.level, "seed": self.seed},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        cp = d.get("change_point")
        return cls(
            n=d["input"]["n"],
            start=d["input"]["start"],
            end=d["input"]["end"],
            source=list(d["input"]["source"]),
            tests={k: TestResult.from_dict(v) for k, v in d["tests"].items()},
            change_point=None if cp is None else ChangePointEstimate(cp["k_hat"], cp["lambda_hat"]),
            change_date=None if cp is None else cp["date"],
            **d["config"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def _date_at(series: BivariateSeries, k: int) -> Optional[str]:
    """Date of the k-th observation (1-based)."""
    return None if series.timestamps is None else series.timestamps[k - 1].isoformat()


def write_process_csv(path: Path, result: TestResult, series: BivariateSeries) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        dated = series.timestamps is not None
        writer.writerow(["k", "date", "weighted_abs_diff"] if dated else ["k", "weighted_abs_diff"])
        for k, v in zip(result.ks, result.process):
            row = [int(k), _date_at(series, int(k)), repr(float(v))] if dated else [int(k), repr(float(v))]
            writer.writerow(row)


# --------------------------------------------------------------------------
# argument types


def _bandwidth(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bandwidth must be 'auto' or a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"bandwidth must be at least 1, got {value}")
    return value


def _open_unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"value must lie in (0, 1), got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_input_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--xy", metavar="FILE", help="CSV with paired columns x and y (optional date)")
    src.add_argument("--prices", nargs=2, metavar=("FILE_X", "FILE_Y"), help="two CSV price files (date,value)")
    p.add_argument("--date-column", default="date")
    p.add_argument("--value-column", default="value")
    p.add_argument("--x-column", default="x")
    p.add_argument("--y-column", default="y")
    p.add_argument("--levels", action="store_true", help="pair price levels instead of log returns")


def _load(args) -> tuple[BivariateSeries, list[str]]:
    common = dict(
        date_column=args.date_column,
        value_column=args.value_column,
        x_column=args.x_column,
        y_column=args.y_column,
        log_returns=not args.levels,
    )
    if args.xy:
        return ingest(IngestConfig("paired_xy", **common), [args.xy]), [args.xy]
    return ingest(IngestConfig("two_price_files", **common), args.prices), list(args.prices)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rank-cusum", description="Change-point tests for constant correlation.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run CUSUM tests for a change in correlation")
    _add_input_args(t)
    t.add_argument("--statistic", choices=[*STATISTIC_CHOICES, "all"], default="kendall")
    t.add_argument("--kernel", choices=["quartic", "bartlett"], default="quartic")
    t.add_argument("--bandwidth", type=_bandwidth, default="auto")
    t.add_argument("--level", type=_open_unit, default=0.05)
    t.add_argument("--out", type=Path, help="write the JSON report here and process CSVs beside it")

    loc = sub.add_parser("locate", help="estimate the change-point position")
    _add_input_args(loc)

    sim = sub.add_parser("simulate", help="Monte Carlo experiments")
    exp = sim.add_subparsers(dest="experiment", required=True)
    for name, model in (("table1", 1), ("table2", 2)):
        e = exp.add_parser(name, help=f"rejection frequencies, AR coefficient of model {model}")
        e.add_argument("--n", type=int, default=500)
        e.add_argument("--reps", type=int, default=1000)
        e.add_argument("--level", type=_open_unit, default=0.05)
        e.add_argument("--distributions", type=lambda s: s.split(","), default=list(TABLE_DISTRIBUTIONS))
        e.add_argument("--jumps", type=_float_list, default=list(TABLE_JUMPS), help="second-half rho values")
        e.set_defaults(model=model)
    c = exp.add_parser("convergence", help="null distribution against the Kolmogorov law")
    c.add_argument("--model", type=int, choices=[1, 2], default=1)
    c.add_argument("--n", type=_int_list, default=[10, 20, 50, 100, 500, 1000], help="comma-separated sizes")
    c.add_argument("--reps", type=int, default=5000)
    lo = exp.add_parser("locator", help="accuracy of the change-point estimate")
    lo.add_argument("--model", type=int, choices=[1, 2], default=1)
    lo.add_argument("--n", type=_int_list, default=[500, 1000, 2000], help="comma-separated sizes")
    lo.add_argument("--reps", type=int, default=200)
    lo.add_argument("--rho1", type=float, default=0.4)
    lo.add_argument("--rho2", type=float, default=-0.4)
    lo.add_argument("--distribution", default="normal")
    for e in exp.choices.values():
        e.add_argument("--seed", type=int, default=42)
        e.add_argument("--out-dir", type=Path, default=Path("out"))
        e.add_argument("--workers", type=int, default=None, help="worker processes (default: RANK_CUSUM_THREADS)")

    q = sub.add_parser("quantiles", help="Kolmogorov quantile or p-value")
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=_open_unit, help="probability; prints the quantile")
    g.add_argument("--x", type=float, help="statistic value; prints the p-value")
    return parser


# --------------------------------------------------------------------------
# commands


def cmd_test(args) -> int:
    series, source = _load(args)
    config = LrvConfig(kernel=KernelSpec(args.kernel), bandwidth=args.bandwidth)
    kinds = list(STATISTIC_CHOICES.values()) if args.statistic == "all" else [STATISTIC_CHOICES[args.statistic]]
    results = {kind: TESTS[kind](series, config, args.level) for kind in kinds}
    cp = locate_change(series) if series.n >= 4 else None
    report = RunReport(
        n=series.n,
        start=_date_at(series, 1),
        end=_date_at(series, series.n),
        source=source,
        tests=results,
        change_point=cp,
        change_date=None if cp is None else _date_at(series, cp.k_hat),
        kernel=args.kernel,
        bandwidth=args.bandwidth,
        level=args.level,
    )
    text = report.to_json()
    print(text)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text + "\n")
        for kind, res in results.items():
            write_process_csv(args.out.with_name(f"{args.out.stem}_{kind}_process.csv"), res, series)
    return EXIT_REJECT if any(r.reject for r in results.values()) else EXIT_ACCEPT


def cmd_locate(args) -> int:
    series, _ = _load(args)
    est = locate_change(series)
    print(json.dumps({"n": series.n, "k_hat": est.k_hat, "lambda_hat": est.lambda_hat, "date": _date_at(series, est.k_hat)}))
    return EXIT_ACCEPT


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _simulate_table(args) -> None:
    rows = run_rejection_table(
        args.model,
        args.distributions,
        args.jumps,
        n=args.n,
        reps=args.reps,
        level=args.level,
        seed=args.seed,
        workers=args.workers,
    )
    labels = [jump_label(j) for j in args.jumps]
    body = [[r.distribution, r.test, *(f"{f:.3f}" for f in r.frequencies)] for r in rows]
    _write_csv(args.out_dir / f"{args.experiment}.csv", ["distribution", "test", *labels], body)
    meta = {"model": args.model, "n": args.n, "reps": args.reps, "level": args.level, "seed": args.seed, "tests": list(TABLE_TESTS)}
    (args.out_dir / f"{args.experiment}.json").write_text(json.dumps(meta, indent=2) + "\n")
    width = max(len(d) for d in args.distributions) + 17
    print(f"{'':{width}}" + "".join(f"{lab:>7}" for lab in labels))
    for r in rows:
        print(f"{r.distribution + ' ' + r.test:{width}}" + "".join(f"{f:7.2f}" for f in r.frequencies))


def _simulate_convergence(args) -> None:
    results = run_convergence_experiment(args.model, args.n, reps=args.reps, seed=args.seed, workers=args.workers)
    summary = []
    for res in results:
        _write_csv(
            args.out_dir / f"convergence_model{args.model}_n{res.n}.csv",
            ["estimated", "known"],
            ([repr(float(a)), repr(float(b))] for a, b in zip(res.estimated, res.known)),
        )
        summary.append([res.n, res.sup_estimated, res.sup_known])
    _write_csv(args.out_dir / f"convergence_model{args.model}_summary.csv", ["n", "sup_estimated", "sup_known"], summary)
    print(f"{'n':>6} {'sup |F_n - K| (D_n)':>20} {'sup |F_n - K| (D)':>18}")
    for n, a, b in summary:
        print(f"{n:>6} {a:20.4f} {b:18.4f}")


def _simulate_locator(args) -> None:
    specs = [ScenarioSpec.jump(args.model, args.distribution, args.rho1, args.rho2, n) for n in args.n]
    results = run_locator_experiment(specs, reps=args.reps, seed=args.seed, workers=args.workers)
    body = [[s.spec.n, s.mean, s.median, s.quantile(0.9)] for s in results]
    _write_csv(args.out_dir / f"locator_model{args.model}.csv", ["n", "mean_error", "median_error", "q90_error"], body)
    print(f"{'n':>6} {'mean':>8} {'median':>8} {'q90':>8}")
    for n, mean, med, q90 in body:
        print(f"{n:>6} {mean:8.4f} {med:8.4f} {q90:8.4f}")


def cmd_simulate(args) -> int:
    args.out_dir.mkdir(parents=True, exist_ok=True)
    runners = {
        "table1": _simulate_table,
        "table2": _simulate_table,
        "convergence": _simulate_convergence,
        "locator": _simulate_locator,
    }
    runners[args.experiment](args)
    return EXIT_ACCEPT


def cmd_quantiles(args) -> int:
    value = kolmogorov_quantile(args.p) if args.p is not None else kolmogorov_sf(args.x)
    print(f"{value:.10g}")
    return EXIT_ACCEPT


COMMANDS = {"test": cmd_test, "locate": cmd_locate, "simulate": cmd_simulate, "quantiles": cmd_quantiles}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (InvalidInputError, DegenerateVarianceError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
