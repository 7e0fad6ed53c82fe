"""SVG plot rendering, driven purely by the CSV artifacts of a run.

Rendering reads only the CSVs, pins the SVG hash salt and drops the creation
date, so regenerating a plot from unchanged CSVs reproduces it byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import DataError  # noqa: E402

_SVG_PARAMS = {"svg.hashsalt": "deathcurve", "svg.fonttype": "path"}


def _save(fig, path: Path) -> None:
    with plt.rc_context(_SVG_PARAMS):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _band_plot(band, observed, ylabel: str):
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    ax.fill_between(band.day, band.q2_5, band.q97_5, alpha=0.25, color="tab:blue",
                    linewidth=0, label="95% predictive interval")
    ax.plot(band.day, band.mean, color="tab:blue", label="predictive mean")
    if observed is not None:
        day, counts = observed
        mask = (day >= band.day[0]) & (day <= band.day[-1])
        ax.scatter(day[mask], counts[mask], s=14, color="black", zorder=3, label="observed")
    ax.set_xlim(band.day[0], band.day[-1])
    ax.set_xlabel("days since first reported death")
    ax.set_ylabel(ylabel)
    ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    return fig


def render_run_plots(out_dir) -> list[Path]:
    """Render daily.svg / cumulative.svg from a run directory's CSVs."""
    from .dataio import read_bands_csv, read_series_csv

    out = Path(out_dir)
    daily = read_bands_csv(out / "bands_daily.csv")
    cumulative = read_bands_csv(out / "bands_cumulative.csv")

    observed_daily = None
    observed_cum = None
    series_path = out / "series.csv"
    if series_path.exists():
        series = read_series_csv(series_path)
        observed_daily = (series.day, series.deaths)
        observed_cum = (series.day, np.cumsum(series.deaths))

    _save(_band_plot(daily, observed_daily, "deaths per day"), out / "daily.svg")
    _save(_band_plot(cumulative, observed_cum, "cumulative deaths"), out / "cumulative.svg")
    return [out / "daily.svg", out / "cumulative.svg"]


def render_sensitivity_plot(out_dir, labels: list[str]) -> Path:
    """Overlay the scenarios' cumulative bands (one colour per scenario)."""
    from .dataio import read_bands_csv

    out = Path(out_dir)
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    for i, label in enumerate(labels):
        path = out / f"scenario_{label}" / "bands_cumulative.csv"
        if not path.exists():
            plt.close(fig)
            raise DataError(f"missing artifact file: {path}")
        band = read_bands_csv(path)
        color = f"C{i}"
        ax.fill_between(band.day, band.q2_5, band.q97_5, alpha=0.15, color=color, linewidth=0)
        ax.plot(band.day, band.mean, color=color, label=f"scenario {label}")
    ax.set_xlabel("days since first reported death")
    ax.set_ylabel("cumulative deaths")
    ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    _save(fig, out / "sensitivity.svg")
    return out / "sensitivity.svg"
