"""Regenerate the bundled example CSV/GeoJSON fixtures, deterministically.

The accident table is synthetic but constructed so its marginal counts hit
the documented worked example exactly: 877 records over 2020-2022, 81 in
January, 338 in the short-daylight season (Nov-Feb) of which 37 fall in the
18:00-19:00 window, 285 on line 139 of which 50 lie in km [10, 15), and the
traffic table carries 131 trains/day through that km bin.  No randomness is
used, so rerunning this script reproduces the files byte for byte.

Run from the repository root:  python data/generate_fixtures.py
"""

from __future__ import annotations

import csv
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

N_TOTAL = 877
N_JANUARY = 81
N_SHORT_SEASON = 338  # months 11, 12, 1, 2
N_DUSK_SHORT = 37  # short-season records in [18:00, 19:00)
N_LINE_139 = 285
N_SEGMENT = 50  # line-139 records in km [10, 15)

# month -> record count; Jan fixed at 81, the rest of Nov/Dec/Feb fills the
# short season to 338, and the remaining 539 spread over the other months
MONTH_QUOTA = {
    1: N_JANUARY,
    11: 86,
    12: 86,
    2: 85,
    3: 68,
    4: 68,
    5: 68,
    6: 67,
    7: 67,
    8: 67,
    9: 67,
    10: 67,
}

LINE_QUOTA = {"139": N_LINE_139, "1": 292, "140": 300}

SPECIES_CYCLE = (
    "roe deer", "roe deer", "roe deer", "wild boar", "roe deer", "red deer",
    "roe deer", "wild boar", "roe deer", "wild boar", "fox", "roe deer",
    "red deer", "roe deer", "wild boar", "", "roe deer", "hare",
)

# hour palettes; the short-season palette must avoid hour 18, which is
# reserved for the exact dusk quota
SHORT_HOURS = (5, 6, 7, 16, 17, 19, 20, 21, 22, 4, 23, 3)
OTHER_HOURS = (19, 20, 21, 5, 6, 7, 18, 22, 4, 17, 3, 16)

SHORT_MONTHS = {11, 12, 1, 2}


def month_sequence() -> list[int]:
    months: list[int] = []
    for m in range(1, 13):
        months.extend([m] * MONTH_QUOTA[m])
    assert len(months) == N_TOTAL
    return months


def line_sequence() -> list[str]:
    """Interleave lines proportionally (largest remaining ratio first)."""
    remaining = dict(LINE_QUOTA)
    out: list[str] = []
    for _ in range(N_TOTAL):
        line = max(sorted(remaining), key=lambda l: remaining[l] / LINE_QUOTA[l])
        out.append(line)
        remaining[line] -= 1
    assert not any(remaining.values())
    return out


def make_accidents() -> list[tuple[str, str, str, str, str]]:
    months = month_sequence()
    lines = line_sequence()
    rows = []
    short_i = 0
    dusk_used = 0
    i139 = 0
    seg_used = 0
    for i, (month, line) in enumerate(zip(months, lines)):
        year = 2020 + i % 3
        day = 1 + (i * 3) % 28
        if month in SHORT_MONTHS:
            if short_i % 9 == 0 and dusk_used < N_DUSK_SHORT:
                hh, mm = 18, (short_i * 7) % 60
                dusk_used += 1
            else:
                hh = SHORT_HOURS[short_i % len(SHORT_HOURS)]
                mm = (i * 13) % 60
            short_i += 1
        else:
            hh = OTHER_HOURS[i % len(OTHER_HOURS)]
            mm = (i * 17) % 60
        if line == "139":
            if i139 % 5 == 0 and seg_used < N_SEGMENT:
                km = round(10.0 + (i139 % 50) * 0.1, 1)
                seg_used += 1
            else:
                base = round((i139 * 1.7) % 55.0, 1)
                km = base if base < 10.0 else round(base + 5.0, 1)
            i139 += 1
        elif line == "1":
            km = round((i * 2.3) % 45.0, 1)
        else:
            km = round((i * 3.1) % 80.0, 1)
        species = SPECIES_CYCLE[i % len(SPECIES_CYCLE)]
        rows.append((f"{year:04d}-{month:02d}-{day:02d}", f"{hh:02d}:{mm:02d}", line, repr(km), species))
    assert dusk_used == N_DUSK_SHORT and seg_used == N_SEGMENT
    rows.sort()
    return rows


def make_test_accidents() -> list[tuple[str, str, str, str, str]]:
    """Hold-out set: early 2023, biased toward the trained hotspots."""
    rows = []
    for i in range(120):
        month = 1 + i % 4
        day = 1 + (i * 5) % 28
        if i % 5 < 3:
            line = "139"
            km = round(10.0 + (i * 0.7) % 5.0, 1) if i % 3 else round((i * 2.9) % 55.0, 1)
            hh = (17, 18, 19, 6, 18)[i % 5]
        elif i % 5 == 3:
            line = "1"
            km = round((i * 1.9) % 45.0, 1)
            hh = (5, 19, 20)[i % 3]
        else:
            line = "140"
            km = round((i * 2.2) % 80.0, 1)
            hh = (6, 18, 21)[i % 3]
        mm = (i * 11) % 60
        species = SPECIES_CYCLE[(i * 5) % len(SPECIES_CYCLE)]
        rows.append((f"2023-{month:02d}-{day:02d}", f"{hh:02d}:{mm:02d}", line, repr(km), species))
    rows.sort()
    return rows


def write_csv(name: str, header: tuple[str, ...], rows) -> None:
    path = os.path.join(HERE, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def make_traffic() -> list[tuple[str, str, str]]:
    rows = []
    for start in range(0, 60, 5):
        count = 131 if start == 10 else 95 + (start * 7) % 40
        rows.append(("139", str(float(start)), str(count)))
    for start in range(0, 45, 5):
        rows.append(("1", str(float(start)), str(80 + (start * 11) % 35)))
    for start in range(0, 80, 5):
        rows.append(("140", str(float(start)), str(100 + (start * 13) % 45)))
    return rows


def make_speeds() -> list[tuple[str, str, str, str]]:
    return [
        ("139", "0.0", "10.0", "100"),
        ("139", "10.0", "15.0", "70"),
        ("139", "15.0", "30.0", "120"),
        ("139", "30.0", "60.0", "100"),
        ("1", "0.0", "20.0", "140"),
        ("1", "20.0", "45.0", "120"),
        ("140", "0.0", "40.0", "90"),
        ("140", "40.0", "80.0", "110"),
    ]


def make_geometries() -> dict:
    # nominal polylines in a ~50 N regional window; km arrays calibrate the
    # track chainage onto the vertices
    lines = {
        "139": {
            "km": [0.0, 12.0, 25.0, 40.0, 60.0],
            "coords": [
                [19.00, 50.10],
                [18.95, 50.01],
                [19.02, 49.90],
                [18.93, 49.78],
                [19.05, 49.62],
            ],
        },
        "1": {
            "km": [0.0, 15.0, 30.0, 45.0],
            "coords": [
                [19.10, 50.25],
                [19.22, 50.35],
                [19.40, 50.42],
                [19.55, 50.52],
            ],
        },
        "140": {
            "km": [0.0, 20.0, 45.0, 65.0, 80.0],
            "coords": [
                [18.60, 50.05],
                [18.42, 49.98],
                [18.20, 49.90],
                [17.98, 49.85],
                [17.80, 49.78],
            ],
        },
    }
    features = []
    for line in sorted(lines):
        spec = lines[line]
        features.append(
            {
                "type": "Feature",
                "properties": {"line": line, "km": spec["km"]},
                "geometry": {"type": "LineString", "coordinates": spec["coords"]},
            }
        )
    return {"type": "FeatureCollection", "features": features}


def main() -> None:
    write_csv("accidents_2020_2022.csv", ("date", "time", "line", "km", "species"), make_accidents())
    write_csv("accidents_2023_test.csv", ("date", "time", "line", "km", "species"), make_test_accidents())
    write_csv("traffic.csv", ("line", "km_from", "count"), make_traffic())
    write_csv("speeds.csv", ("line", "km_from", "km_to", "vmax"), make_speeds())
    geo_path = os.path.join(HERE, "lines.geojson")
    with open(geo_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(make_geometries(), fh, sort_keys=True)
        fh.write("\n")
    print(f"wrote {geo_path}")


if __name__ == "__main__":
    main()
