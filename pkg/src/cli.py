"""
Command-line entry point.

    python -m src.cli simulate --config data/reference_model.env --seed 7 --output-dir out
    python -m src.cli loglik --catalog out/catalog.csv
    python -m src.cli fit --catalog out/catalog.csv --restarts 5
    python -m src.cli posterior --catalog out/catalog.csv
    python -m src.cli decode --catalog out/catalog.csv --truth out/labels.csv
    python -m src.cli oracle-check
    python -m src.cli report --catalog out/catalog.csv --top-k 1500

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import pathlib
import sys
from typing import List, Optional

from pydantic import ValidationError

from .catalog_io import (
    ingest,
    read_labels,
    write_active,
    write_catalog,
    write_fit_result,
    write_labels,
    write_posterior,
)
from .cluster_filter import smoothed_report
from .constants import (
    DEFAULT_HORIZON_DAYS,
    DEFAULT_MAX_DEPTH_KM,
    DEFAULT_MIN_MAGNITUDE,
    DEFAULT_RESTARTS,
    DEFAULT_TIME_ORIGIN,
    DEFAULT_TOP_K,
)
from .decoder import confusion_counts, path_weight, viterbi_decode
from .errors import DataError, NumericalError, StateError
from .estimator import fit_mle
from .factory import create_intensity
from .likelihood import log_likelihood
from .models import Catalog, FitConfig, SimConfig
from .oracle import oracle_check
from .reporting import report
from .settings import ModelConfig, load_model_config
from .simulator import simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

ORACLE_FIXTURE = pathlib.Path(__file__).parent.parent / "data" / "oracle_fixture.csv"


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", help="KEY=VALUE model config (parameters, region, NU)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--horizon", type=float, default=None, help="observation end in days")
    common.add_argument("--nu", choices=["probability", "lebesgue"], default=None)
    common.add_argument("--output-dir", default=".", help="where result files are written")
    common.add_argument("-v", "--verbose", action="count", default=0)

    catalog_opts = CliParser(add_help=False)
    catalog_opts.add_argument("--catalog", required=True, help="catalog CSV (time,lon,lat[,magnitude,depth_km])")
    catalog_opts.add_argument("--min-magnitude", type=float, default=DEFAULT_MIN_MAGNITUDE)
    catalog_opts.add_argument("--max-depth", type=float, default=DEFAULT_MAX_DEPTH_KM)
    catalog_opts.add_argument("--origin", default=DEFAULT_TIME_ORIGIN, help="time origin for ISO timestamps")
    catalog_opts.add_argument("--jitter", type=float, default=None, help="seconds added to break exact time ties")

    parser = CliParser(prog="swarmfilter", description="Exact inference for the mother-cluster point process")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="simulate a catalog with ground-truth labels")
    sub.add_parser("loglik", parents=[common, catalog_opts], help="forward-algorithm log-likelihood")
    fit = sub.add_parser("fit", parents=[common, catalog_opts], help="maximum likelihood estimate")
    fit.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    fit.add_argument("--workers", type=int, default=1)
    sub.add_parser("posterior", parents=[common, catalog_opts], help="smoothed membership probabilities")
    decode = sub.add_parser("decode", parents=[common, catalog_opts], help="most likely hidden labelling")
    decode.add_argument("--truth", default=None, help="label CSV to score the decoded path against")

    oracle = sub.add_parser("oracle-check", parents=[common], help="compare the recursions with enumeration")
    oracle.add_argument("--catalog", default=str(ORACLE_FIXTURE))
    oracle.add_argument("--origin", default=DEFAULT_TIME_ORIGIN)
    oracle.add_argument("--jitter", type=float, default=None)

    rep = sub.add_parser("report", parents=[common, catalog_opts], help="write posterior report files")
    rep.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    rep.add_argument("--external", default=None, help="per-event probabilities from another method")
    return parser


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load_catalog(args: argparse.Namespace, config: ModelConfig) -> Catalog:
    return ingest(
        args.catalog,
        config.region,
        min_magnitude=getattr(args, "min_magnitude", None),
        max_depth=getattr(args, "max_depth", None),
        time_origin=args.origin,
        jitter=args.jitter,
    )


def _output_dir(args: argparse.Namespace) -> pathlib.Path:
    out = pathlib.Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args: argparse.Namespace, config: ModelConfig) -> int:
    horizon = args.horizon if args.horizon is not None else DEFAULT_HORIZON_DAYS
    sim = SimConfig(params=config.params, region=config.region, horizon=horizon, seed=args.seed, nu=config.nu)
    catalog, labels = simulate(sim)
    out = _output_dir(args)
    write_catalog(catalog, out / "catalog.csv")
    write_labels(labels, out / "labels.csv")
    print(f"simulated {catalog.n} events over {horizon:g} days -> {out}")
    return EXIT_OK


def cmd_loglik(args: argparse.Namespace, config: ModelConfig) -> int:
    catalog = _load_catalog(args, config)
    model = create_intensity(config.params, config.region, config.nu)
    print(f"loglik: {log_likelihood(catalog, model, args.horizon):.10f}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, config: ModelConfig) -> int:
    catalog = _load_catalog(args, config)
    fit_config = FitConfig(
        init=config.params, restarts=args.restarts, seed=args.seed, horizon=args.horizon, workers=args.workers
    )
    result = fit_mle(catalog, fit_config, config.region, config.nu)
    path = write_fit_result(result, _output_dir(args) / "fit.txt")
    print(path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_posterior(args: argparse.Namespace, config: ModelConfig) -> int:
    catalog = _load_catalog(args, config)
    model = create_intensity(config.params, config.region, config.nu)
    posterior = smoothed_report(catalog, model, horizon=args.horizon)
    out = _output_dir(args)
    write_posterior(posterior, out / "posterior.csv")
    write_active(posterior, out / "active.csv")
    print(f"fraction outside (0.1, 0.9): {posterior.fraction_decisive():.4f}")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace, config: ModelConfig) -> int:
    catalog = _load_catalog(args, config)
    model = create_intensity(config.params, config.region, config.nu)
    path, weight = viterbi_decode(catalog, model)
    write_labels(path, _output_dir(args) / "decoded_labels.csv")
    print(f"log-weight: {weight:.10f}")
    if args.truth:
        truth = read_labels(args.truth)
        print(f"truth log-weight: {path_weight(catalog, truth, model):.10f}")
        for key, count in confusion_counts(truth, path).items():
            print(f"{key}: {count}")
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace, config: ModelConfig) -> int:
    catalog = ingest(args.catalog, config.region, None, None, args.origin, args.jitter)
    model = create_intensity(config.params, config.region, config.nu)
    result = oracle_check(catalog, model)
    for line in result.lines():
        print(line)
    return EXIT_OK if result.passed() else EXIT_NUMERICAL


def cmd_report(args: argparse.Namespace, config: ModelConfig) -> int:
    catalog = _load_catalog(args, config)
    model = create_intensity(config.params, config.region, config.nu)
    written = report(catalog, model, args.output_dir, top_k=args.top_k, external=args.external, horizon=args.horizon)
    for name, path in written.items():
        print(f"{name}: {path}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "loglik": cmd_loglik,
    "fit": cmd_fit,
    "posterior": cmd_posterior,
    "decode": cmd_decode,
    "oracle-check": cmd_oracle_check,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE

    _configure_logging(args.verbose)
    try:
        config = load_model_config(args.config, nu=args.nu)
        return COMMANDS[args.command](args, config)
    except (DataError, ValidationError, FileNotFoundError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, StateError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("\n\nAborted by user", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
