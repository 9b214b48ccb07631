"""``coverage-study`` command line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields

from . import mixtures
from .errors import ConfigError, NumericFailureError
from .harness import REPORT_FIELDS, StudyConfig, emit_report, format_csv_rows, run_study

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _csv_list(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in _csv_list(s)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 as well, keep the message format
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coverage-study", description="Coverage and volume study for ellipsoidal bootstrap regions.")
    p.add_argument("--config", help="JSON file with StudyConfig fields; flags override it")
    p.add_argument("--dist", type=_csv_list, dest="distributions", help="comma-separated catalog names")
    p.add_argument("--n", type=_int_list, dest="sample_sizes", help="comma-separated sample sizes")
    p.add_argument("--alpha", type=float)
    p.add_argument("--methods", type=_csv_list, help="subset of bp,bt,sbp,an,rbp")
    p.add_argument("--trials", type=int)
    p.add_argument("--boot", type=int, dest="B", help="bootstrap resamples B")
    p.add_argument("--inner", type=int, dest="C", help="inner resamples C (RBP)")
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", dest="output_path", help="report path (default: stdout)")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    p.add_argument("--list", action="store_true", help="list catalog distributions and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args: argparse.Namespace) -> StudyConfig:
    base: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    for f in fields(StudyConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return StudyConfig.from_dict(base).validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.list:
        for name in mixtures.CATALOG:
            print(mixtures.describe(mixtures.builtin(name)))
        return EXIT_OK
    try:
        cfg = load_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"coverage-study: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_study(cfg)
    except NumericFailureError as exc:
        print(f"coverage-study: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.output_path:
        emit_report(report, cfg.output_format, cfg.output_path)
    elif cfg.output_format == "json":
        print(json.dumps({"rows": [asdict(r) for r in report.rows]}, indent=2))
    else:
        print(",".join(REPORT_FIELDS))
        for row in format_csv_rows(report):
            print(",".join(row))
    print(f"elapsed {report.elapsed_seconds:.1f} s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
