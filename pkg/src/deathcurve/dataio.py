"""ECDC-format ingestion, the documented China data correction, and artifact I/O.

Input is the ECDC daily-report CSV layout: dateRep (DD/MM/YYYY), deaths,
countriesAndTerritories and popData2019 (popData2018 accepted); extra columns
and column order are ignored.  Output artifacts are plain CSVs with full
round-trip float formatting plus standalone SVG plots rendered from the CSVs
alone, so a report run byte-reproduces them.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import DeathSeries, PriorSpec
from .quantities import ForecastSummary
from .sampler import Diagnostics, DrawMatrix

# summary.csv rows follow the conventional reporting order
SUMMARY_ORDER = ("beta", "log_alpha", "eta", "log_p")
_COLUMN_OF = {"log_p": 0, "log_alpha": 1, "beta": 2, "eta": 3}
_CORRECTION_PAIR = (254, 13)
_CORRECTION_REPLACEMENT = (134, 133)


@dataclass(frozen=True)
class RawReportRow:
    date: dt.date
    deaths: int
    country: str
    population: int


def china_snapshot_path() -> Path:
    """Bundled ECDC-format snapshot (China through 2020-03-31) used by tests."""
    return Path(resources.files("deathcurve").joinpath("data/china_ecdc_snapshot.csv"))


def parse_ecdc_csv(data: bytes) -> list[RawReportRow]:
    """Parse an ECDC daily-report CSV into raw rows (all countries)."""
    text = data.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DataError("empty CSV: no header row")
    fields = set(reader.fieldnames)
    required = {"dateRep", "deaths", "countriesAndTerritories"}
    missing = required - fields
    if missing:
        raise DataError(f"missing required column(s): {', '.join(sorted(missing))}")
    if "popData2019" in fields:
        pop_col = "popData2019"
    elif "popData2018" in fields:
        pop_col = "popData2018"
    else:
        raise DataError("missing required column(s): popData2019 or popData2018")

    rows = []
    for idx, rec in enumerate(reader, start=2):  # header is line 1
        try:
            date = dt.datetime.strptime(rec["dateRep"].strip(), "%d/%m/%Y").date()
        except ValueError as exc:
            raise DataError(f"row {idx}: unparseable date {rec['dateRep']!r}") from exc
        try:
            deaths = int(rec["deaths"].strip())
        except ValueError as exc:
            raise DataError(f"row {idx}: non-integer deaths {rec['deaths']!r}") from exc
        pop_raw = (rec.get(pop_col) or "").strip()
        population = int(float(pop_raw)) if pop_raw else 0
        rows.append(
            RawReportRow(
                date=date,
                deaths=deaths,
                country=rec["countriesAndTerritories"].strip(),
                population=population,
            )
        )
    return rows


def build_series(rows: list[RawReportRow], country: str, origin: int = 1) -> DeathSeries:
    """DeathSeries for one country, anchored at the first reported death.

    Sorts by date, truncates everything before the first positive count,
    fills missing calendar days with zero, and clamps negative raw counts to
    zero with a warning.  The day index starts at ``origin`` (0 or 1).
    """
    if origin not in (0, 1):
        raise ValueError("origin must be 0 or 1")
    mine = sorted((r for r in rows if r.country == country), key=lambda r: r.date)
    if not mine:
        raise DataError(f"country not found in report: {country}")

    by_date: dict[dt.date, int] = {}
    for r in mine:
        by_date[r.date] = r.deaths

    first = None
    for date in sorted(by_date):
        if by_date[date] > 0:
            first = date
            break
    if first is None:
        raise DataError(f"no deaths recorded for {country}")

    last = max(by_date)
    n_days = (last - first).days + 1
    deaths = np.zeros(n_days, dtype=np.int64)
    clamped = 0
    for offset in range(n_days):
        v = by_date.get(first + dt.timedelta(days=offset), 0)
        if v < 0:
            clamped += 1
            v = 0
        deaths[offset] = v
    if clamped:
        warnings.warn(f"clamped {clamped} negative death count(s) to zero", stacklevel=2)

    population = next((r.population for r in mine if r.population > 0), 0)
    if population <= 0:
        raise DataError(f"no positive population figure for {country}")

    day = np.arange(origin, origin + n_days, dtype=np.int64)
    return DeathSeries(day=day, deaths=deaths, population_millions=population / 1e6)


def apply_china_correction(series: DeathSeries) -> DeathSeries:
    """Replace the disputed (254, 13) report pair by its total-preserving split.

    The two-day total 267 is kept by substituting (134, 133).  When the pair
    is absent (snapshot drift, or already corrected) the series is returned
    unchanged with a warning.
    """
    deaths = series.deaths
    for i in range(len(deaths) - 1):
        if deaths[i] == _CORRECTION_PAIR[0] and deaths[i + 1] == _CORRECTION_PAIR[1]:
            fixed = deaths.copy()
            fixed[i], fixed[i + 1] = _CORRECTION_REPLACEMENT
            return replace(series, deaths=fixed)
    warnings.warn(
        "expected report pair (254, 13) not found; correction skipped", stacklevel=2
    )
    return series


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def write_draws_csv(path: Path, draws: DrawMatrix) -> None:
    rows = []
    for c in range(draws.n_chains):
        for it in range(draws.n_samples):
            v = draws.values[it, c]
            rows.append(
                (c + 1, it + 1, v[0], v[1], v[2], v[3],
                 draws.lp[it, c], int(draws.divergent[it, c]))
            )
    _write_csv(path, ["chain", "iter", "log_p", "log_alpha", "beta", "eta", "lp", "divergent"], rows)


def write_summary_csv(path: Path, draws: DrawMatrix) -> None:
    flat = draws.flat_values()
    rows = []
    for name in SUMMARY_ORDER:
        x = flat[:, _COLUMN_OF[name]]
        q = np.quantile(x, [0.025, 0.5, 0.975])
        rows.append((name, x.mean(), x.std(ddof=1), q[0], q[1], q[2]))
    _write_csv(path, ["parameter", "mean", "sd", "q2.5", "q50", "q97.5"], rows)


def write_bands_csv(path: Path, band) -> None:
    rows = zip(band.day, band.mean, band.q2_5, band.q97_5)
    _write_csv(path, ["day", "mean", "q2.5", "q97.5"], rows)


def write_quantities_csv(path: Path, summary: ForecastSummary) -> None:
    rows = [
        ("time_to_threshold", *_triple(summary.time_to_threshold)),
        ("inflection_point", *_triple(summary.inflection_point)),
        ("total_deaths", *_triple(summary.total_deaths)),
    ]
    _write_csv(path, ["quantity", "mean", "q2.5", "q97.5"], rows)


def _triple(q) -> tuple[float, float, float]:
    return (q.mean, q.q2_5, q.q97_5)


def write_diagnostics_csv(path: Path, diag: Diagnostics | None, divergences: int) -> None:
    rows = []
    for name in SUMMARY_ORDER:
        if diag is None:
            rows.append((name, float("nan"), float("nan"), divergences))
        else:
            rows.append((name, diag.rhat[name], diag.ess_bulk[name], divergences))
    _write_csv(path, ["parameter", "rhat", "ess", "divergences"], rows)


def write_series_csv(path: Path, series: DeathSeries) -> None:
    rows = (
        (int(d), int(y), series.population_millions)
        for d, y in zip(series.day, series.deaths)
    )
    _write_csv(path, ["day", "deaths", "population_millions"], rows)


def write_outputs(
    draws: DrawMatrix,
    summary: ForecastSummary,
    diag: Diagnostics | None,
    out_dir,
    series: DeathSeries | None = None,
) -> list[Path]:
    """Write the full artifact set for one run and render its plots."""
    from . import plots  # deferred: keeps matplotlib out of library-only use

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_draws_csv(out / "draws.csv", draws)
    write_summary_csv(out / "summary.csv", draws)
    write_bands_csv(out / "bands_daily.csv", summary.daily_band)
    write_bands_csv(out / "bands_cumulative.csv", summary.cumulative_band)
    write_quantities_csv(out / "quantities.csv", summary)
    write_diagnostics_csv(out / "diagnostics.csv", diag, int(draws.divergent.sum()))
    if series is not None:
        write_series_csv(out / "series.csv", series)
    plots.render_run_plots(out)
    names = [
        "draws.csv", "summary.csv", "bands_daily.csv", "bands_cumulative.csv",
        "quantities.csv", "diagnostics.csv", "daily.svg", "cumulative.svg",
    ]
    if series is not None:
        names.insert(6, "series.csv")
    return [out / n for n in names]


# ---------------------------------------------------------------------------
# Artifact reading
# ---------------------------------------------------------------------------


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    if not Path(path).exists():
        raise DataError(f"missing artifact file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise DataError(f"empty artifact file: {path}") from exc
        return header, [row for row in reader]


def read_bands_csv(path: Path):
    from .quantities import Band

    header, rows = _read_csv(path)
    if header != ["day", "mean", "q2.5", "q97.5"]:
        raise DataError(f"unexpected band header in {path}: {header}")
    cols = np.array([[float(v) for v in row] for row in rows])
    return Band(
        day=cols[:, 0].astype(np.int64), mean=cols[:, 1], q2_5=cols[:, 2], q97_5=cols[:, 3]
    )


def read_series_csv(path: Path) -> DeathSeries:
    header, rows = _read_csv(path)
    if header != ["day", "deaths", "population_millions"]:
        raise DataError(f"unexpected series header in {path}: {header}")
    day = np.array([int(r[0]) for r in rows], dtype=np.int64)
    deaths = np.array([int(r[1]) for r in rows], dtype=np.int64)
    pop = float(rows[0][2]) if rows else 1.0
    return DeathSeries(day=day, deaths=deaths, population_millions=pop)


def read_quantities_csv(path: Path) -> dict[str, dict[str, float]]:
    header, rows = _read_csv(path)
    if header != ["quantity", "mean", "q2.5", "q97.5"]:
        raise DataError(f"unexpected quantities header in {path}: {header}")
    return {row[0]: {k: float(v) for k, v in zip(header[1:], row[1:])} for row in rows}


def read_summary_table(path: Path) -> dict[str, dict[str, float]]:
    header, rows = _read_csv(path)
    expected = ["parameter", "mean", "sd", "q2.5", "q50", "q97.5"]
    if header != expected:
        raise DataError(f"unexpected summary header in {path}: {header}")
    table = {}
    for row in rows:
        table[row[0]] = {k: float(v) for k, v in zip(header[1:], row[1:])}
    return table


def prior_from_summary_file(path, inflation: float = 1.0, p_free: bool = True) -> PriorSpec:
    """Rebuild a transfer PriorSpec from a fit's summary.csv."""
    table = read_summary_table(Path(path))
    missing = [n for n in SUMMARY_ORDER if n not in table]
    if missing:
        raise DataError(f"summary file {path} lacks parameter row(s): {', '.join(missing)}")
    mean = np.array([table[n]["mean"] for n in ("log_p", "log_alpha", "beta", "eta")])
    sd = np.array([table[n]["sd"] for n in ("log_p", "log_alpha", "beta", "eta")])
    return PriorSpec(mean=mean, sd=sd, inflation=float(inflation), p_free=bool(p_free))
