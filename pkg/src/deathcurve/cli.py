"""Batch command-line interface.

Subcommands wire the pipeline: ``fit`` (source-country fit under the diffuse
prior), ``forecast`` (target country under a transferred prior), ``sensitivity``
(forecast repeated across prior-inflation factors) and ``report`` (regenerate
plots from a run directory's CSVs).

Exit codes: 0 success, 1 data/usage error, 2 sampler failure, 3 convergence
gate (any R-hat > 1.01 without --allow-unconverged).  Every command is
deterministic for a fixed --seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import dataio, plots, quantities
from .errors import DataError, SamplerError
from .model import PriorSpec
from .sampler import SamplerConfig, diagnostics, fit_series, substream

_RHAT_GATE = 1.01
_ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X",
          "XI", "XII", "XIII", "XIV", "XV", "XVI", "XVII", "XVIII", "XIX", "XX")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; this artifact uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--target-accept", type=float, default=0.8)
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--allow-unconverged", action="store_true",
                   help="do not fail on R-hat above the 1.01 gate")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="ECDC-format CSV file")
    p.add_argument("--country", required=True)
    p.add_argument("--origin", type=int, choices=(0, 1), default=1,
                   help="day index of the first reported death")
    p.add_argument("--population-millions", type=float, default=None,
                   help="override the population from the data file")
    p.add_argument("--no-correction", action="store_true",
                   help="skip the China report-pair correction")
    p.add_argument("--horizon", type=int, default=None,
                   help="forecast horizon in days (default 70)")


def build_parser() -> _Parser:
    parser = _Parser(prog="deathcurve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="fit one country under the diffuse prior")
    _add_data_flags(p_fit)
    p_fit.add_argument("--flat-prior", action=argparse.BooleanOptionalAction, default=True,
                       help="use the diffuse N(0, 10^2) prior (the only fit mode)")
    _add_sampler_flags(p_fit)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--config", default=None, help="key=value defaults file")

    p_fc = sub.add_parser("forecast", help="forecast a country under a transferred prior")
    _add_data_flags(p_fc)
    p_fc.add_argument("--prior", required=True, help="summary.csv from a previous fit")
    p_fc.add_argument("--inflate", type=float, default=1.0,
                      help="multiply the transferred prior SDs (not log_p)")
    p_fc.add_argument("--p-free", action=argparse.BooleanOptionalAction, default=True,
                      help="use the weakly informative N(0, 10^2) prior on log_p")
    _add_sampler_flags(p_fc)
    p_fc.add_argument("--out", required=True)
    p_fc.add_argument("--config", default=None)

    p_sens = sub.add_parser("sensitivity", help="forecast under several prior inflations")
    _add_data_flags(p_sens)
    p_sens.add_argument("--prior", required=True)
    p_sens.add_argument("--factors", default="1,5,10",
                        help="comma-separated inflation factors (default 1,5,10)")
    p_sens.add_argument("--p-free", action=argparse.BooleanOptionalAction, default=True)
    _add_sampler_flags(p_sens)
    p_sens.add_argument("--out", required=True)
    p_sens.add_argument("--config", default=None)

    p_rep = sub.add_parser("report", help="regenerate plots from run artifacts")
    p_rep.add_argument("--out", required=True, help="directory holding a prior run")
    p_rep.add_argument("--config", default=None)

    return parser


def _load_config_tokens(path: str) -> list[str]:
    tokens = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"config line {ln}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            tokens.append("--no-" + key.replace("_", "-"))
        else:
            tokens.extend([flag, value])
    return tokens


def _apply_config(argv: list[str]) -> list[str]:
    """Splice config-file tokens after the subcommand so CLI flags override them."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    out = []
    config_path = None
    i = 0
    while i < len(argv):
        a = argv[i]
        if a == "--config":
            config_path = argv[i + 1]
            i += 2
        elif a.startswith("--config="):
            config_path = a.split("=", 1)[1]
            i += 1
        else:
            out.append(a)
            i += 1
    if config_path is None or not out:
        return out
    return [out[0]] + _load_config_tokens(config_path) + out[1:]


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        chains=args.chains, warmup=args.warmup, samples=args.samples,
        target_accept=args.target_accept, max_tree_depth=args.max_depth,
        seed=args.seed,
    )


def _load_series(args):
    rows = dataio.parse_ecdc_csv(Path(args.data).read_bytes())
    series = dataio.build_series(rows, args.country, origin=args.origin)
    if args.country == "China" and not args.no_correction:
        series = dataio.apply_china_correction(series)
    if args.population_millions is not None:
        series = replace(series, population_millions=args.population_millions)
    return series


def _run_pipeline(args, prior: PriorSpec, out_dir: Path) -> int:
    series = _load_series(args)
    cfg = _sampler_config(args)
    try:
        draws = fit_series(series, prior, cfg)
    except SamplerError as exc:
        print(f"sampler error: {exc}", file=sys.stderr)
        return 2

    diag = None
    if cfg.chains >= 2:
        diag = diagnostics(draws)
    else:
        print("warning: R-hat unavailable with a single chain", file=sys.stderr)

    horizon = args.horizon
    if horizon is None:
        horizon = max(quantities.DEFAULT_HORIZON, int(series.day[-1]))
    summary = quantities.forecast_summary(
        draws, series.population_millions, horizon, rng=substream(cfg.seed, 2)
    )
    dataio.write_outputs(draws, summary, diag, out_dir, series=series)

    if diag is not None and diag.max_rhat() > _RHAT_GATE and not args.allow_unconverged:
        print(
            f"warning: max R-hat {diag.max_rhat():.4f} exceeds {_RHAT_GATE}; "
            "rerun longer or pass --allow-unconverged",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_fit(args) -> int:
    if not args.flat_prior:
        raise DataError("fit supports only the diffuse prior; "
                        "use the forecast command for transferred priors")
    return _run_pipeline(args, PriorSpec.flat(), Path(args.out))


def cmd_forecast(args) -> int:
    prior = dataio.prior_from_summary_file(args.prior, inflation=args.inflate,
                                           p_free=args.p_free)
    return _run_pipeline(args, prior, Path(args.out))


def cmd_sensitivity(args) -> int:
    try:
        factors = [float(f) for f in str(args.factors).split(",") if f.strip()]
    except ValueError as exc:
        raise DataError(f"bad --factors value {args.factors!r}") from exc
    if not factors:
        raise DataError("no inflation factors given")
    if len(factors) > len(_ROMAN):
        raise DataError(f"at most {len(_ROMAN)} scenarios supported")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = [_ROMAN[i] for i in range(len(factors))]
    rows = []
    for label, factor in zip(labels, factors):
        prior = dataio.prior_from_summary_file(args.prior, inflation=factor,
                                               p_free=args.p_free)
        scenario_dir = out / f"scenario_{label}"
        code = _run_pipeline(args, prior, scenario_dir)
        if code not in (0, 3):
            print(f"scenario {label} (inflation {factor:g}) failed", file=sys.stderr)
            return code
        table = dataio.read_quantities_csv(scenario_dir / "quantities.csv")
        for quantity in ("time_to_threshold", "inflection_point", "total_deaths"):
            q = table[quantity]
            rows.append((label, quantity, q["mean"], q["q2.5"], q["q97.5"]))

    dataio._write_csv(out / "sensitivity.csv",
                      ["scenario", "quantity", "mean", "q2.5", "q97.5"], rows)
    plots.render_sensitivity_plot(out, labels)
    return 0


def cmd_report(args) -> int:
    plots.render_run_plots(Path(args.out))
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "sensitivity": cmd_sensitivity,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(argv)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except SamplerError as exc:
        print(f"sampler error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
