#!/usr/bin/env python3
"""Synthesize the bundled ECDC-format China snapshot used by the test-suite.

The live ECDC feed is not fetched at test time; instead the repo ships a
frozen, realistically shaped snapshot.  Daily deaths are Poisson draws from
the package's own intensity curve at the published-summary parameter point,
with the disputed 2020-02-13/14 report pair (254, 13) embedded verbatim so
the correction path is exercised.  Regenerate with:

    python scripts/make_china_snapshot.py
"""

import csv
import datetime as dt
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from deathcurve import kernels  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "deathcurve" / "data" / "china_ecdc_snapshot.csv"

POP_CHINA = 1_433_783_686
POP_ITALY = 60_359_546
ALPHA = math.exp(2.91)
BETA = 16.52
ETA = 2.34
TOTAL_DEATHS = 3325.0  # asymptote p * K
FIRST_DEATH = dt.date(2020, 1, 11)
FIRST_ROW = dt.date(2019, 12, 31)
LAST_ROW = dt.date(2020, 3, 31)
SEED = 20200111


def main() -> None:
    rng = np.random.Generator(np.random.Philox(SEED))
    n_days = (LAST_ROW - FIRST_DEATH).days + 1
    t = np.arange(1, n_days + 1, dtype=float)
    lam = TOTAL_DEATHS * np.exp(np.asarray(kernels.sn_logpdf_vec(t, ALPHA, BETA, ETA)))
    deaths = rng.poisson(lam).astype(int)

    by_date = {}
    date = FIRST_ROW
    while date < FIRST_DEATH:
        by_date[date] = 0
        date += dt.timedelta(days=1)
    for i in range(n_days):
        by_date[FIRST_DEATH + dt.timedelta(days=i)] = int(deaths[i])
    # the disputed report pair, kept verbatim so the correction has work to do
    by_date[dt.date(2020, 2, 13)] = 254
    by_date[dt.date(2020, 2, 14)] = 13

    rows = []
    for date in sorted(by_date, reverse=True):
        d = by_date[date]
        cases = int(round(d * 22.5)) + int(rng.integers(0, 40))
        rows.append(
            {
                "dateRep": date.strftime("%d/%m/%Y"),
                "day": date.day,
                "month": date.month,
                "year": date.year,
                "cases": cases,
                "deaths": d,
                "countriesAndTerritories": "China",
                "geoId": "CN",
                "countryterritoryCode": "CHN",
                "popData2019": POP_CHINA,
                "continentExp": "Asia",
            }
        )
    # a second country so country filtering is exercised on the real fixture
    italy_deaths = {dt.date(2020, 3, 28) - dt.timedelta(days=i): v
                    for i, v in enumerate([889, 756, 662, 743, 683, 651, 601])}
    for date in sorted(italy_deaths, reverse=True):
        rows.append(
            {
                "dateRep": date.strftime("%d/%m/%Y"),
                "day": date.day,
                "month": date.month,
                "year": date.year,
                "cases": int(italy_deaths[date] * 8.3),
                "deaths": italy_deaths[date],
                "countriesAndTerritories": "Italy",
                "geoId": "IT",
                "countryterritoryCode": "ITA",
                "popData2019": POP_ITALY,
                "continentExp": "Europe",
            }
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    total = sum(v for v in by_date.values())
    print(f"wrote {OUT} ({len(rows)} rows, China total deaths {total})")


if __name__ == "__main__":
    main()
