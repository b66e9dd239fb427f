"""Descriptive and evaluative analytics over accident data and warning grids."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import pearsonr, spearmanr

from .ingest import Dataset, SpeedProfile, TrafficTable, bin_start
from .model import SeasonScheme
from .warn import WarningGrid

__all__ = [
    "UndefinedCorrelationError",
    "HexGrid",
    "CorrelationReport",
    "EvalReport",
    "hex_bin",
    "hex_grid_to_geojson",
    "species_profile",
    "hourly_profile",
    "speed_correlation",
    "correlation_to_json",
    "evaluate_holdout",
    "eval_report_to_json",
]

KM_PER_DEGREE = math.pi * 6371.0 / 180.0

UNKNOWN_SPECIES = "unknown"


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined because one of the variables has zero variance."""


@dataclass(frozen=True)
class HexGrid:
    """Accident counts on a flat-top hexagonal lattice.

    Cells are keyed by (column, row).  Columns are ``spacing`` km apart
    horizontally; centers within a column are 2*spacing/sqrt(3) km apart
    vertically, with odd columns shifted down by half that step.  Coordinates
    live in a local equirectangular plane around (lat0, lon0), the centroid
    of the binned points, with longitude scaled by cos(lat0).
    """

    spacing: float
    lat0: float
    lon0: float
    cells: dict[tuple[int, int], int]

    @property
    def total(self) -> int:
        return sum(self.cells.values())

    @property
    def vertical_step(self) -> float:
        return 2.0 * self.spacing / math.sqrt(3.0)

    def project(self, lat: float, lon: float) -> tuple[float, float]:
        """(lat, lon) -> local (x, y) in km."""
        x = (lon - self.lon0) * KM_PER_DEGREE * math.cos(math.radians(self.lat0))
        y = (lat - self.lat0) * KM_PER_DEGREE
        return (x, y)

    def unproject(self, x: float, y: float) -> tuple[float, float]:
        lon = self.lon0 + x / (KM_PER_DEGREE * math.cos(math.radians(self.lat0)))
        lat = self.lat0 + y / KM_PER_DEGREE
        return (lat, lon)

    def center_xy(self, col: int, row: int) -> tuple[float, float]:
        v = self.vertical_step
        return (col * self.spacing, (row + 0.5 * (col & 1)) * v)

    def assign_xy(self, x: float, y: float) -> tuple[int, int]:
        """Nearest hex center to a projected point; ties go to the smallest (col, row)."""
        v = self.vertical_step
        col0 = round(x / self.spacing)
        best: tuple[float, int, int] | None = None
        for col in (col0 - 1, col0, col0 + 1):
            offset = 0.5 * (col & 1)
            row0 = round(y / v - offset)
            for row in (row0 - 1, row0, row0 + 1):
                cx, cy = self.center_xy(col, row)
                d2 = (x - cx) ** 2 + (y - cy) ** 2
                key = (d2, col, row)
                if best is None or key < best:
                    best = key
        assert best is not None
        return (best[1], best[2])


def hex_bin(points: list[tuple[float, float]], spacing: float = 2.5) -> HexGrid:
    """Count (lat, lon) points into nearest-center hexagonal cells.

    Args:
        points: geographic points as (lat, lon) pairs.
        spacing: horizontal center-to-center distance in km.

    Returns:
        HexGrid with one count per occupied cell; empty input yields an
        empty grid.
    """
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing!r}")
    if not points:
        return HexGrid(spacing=spacing, lat0=0.0, lon0=0.0, cells={})
    lat0 = sum(lat for lat, _ in points) / len(points)
    lon0 = sum(lon for _, lon in points) / len(points)
    grid = HexGrid(spacing=spacing, lat0=lat0, lon0=lon0, cells={})
    cells: dict[tuple[int, int], int] = {}
    for lat, lon in points:
        key = grid.assign_xy(*grid.project(lat, lon))
        cells[key] = cells.get(key, 0) + 1
    return HexGrid(spacing=spacing, lat0=lat0, lon0=lon0, cells=cells)


def hex_grid_to_geojson(grid: HexGrid) -> str:
    """Occupied hex cells as GeoJSON polygons with a ``count`` property."""
    # circumradius of a hexagon whose flat-to-flat width equals the
    # center-to-center distance between neighbors
    radius = grid.vertical_step / math.sqrt(3.0)
    features = []
    for col, row in sorted(grid.cells):
        cx, cy = grid.center_xy(col, row)
        ring = []
        for i in range(6):
            angle = math.radians(60.0 * i)
            lat, lon = grid.unproject(cx + radius * math.cos(angle), cy + radius * math.sin(angle))
            ring.append([lon, lat])
        ring.append(ring[0])
        features.append(
            {
                "type": "Feature",
                "properties": {"col": col, "row": row, "count": grid.cells[(col, row)]},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    return json.dumps({"type": "FeatureCollection", "features": features}, sort_keys=True)


def species_profile(data: Dataset) -> dict[str, int]:
    """Accident counts per species, most frequent first (ties alphabetical).

    Records with an empty species field are grouped under "unknown".
    """
    counts: dict[str, int] = {}
    for rec in data.records:
        label = rec.species.strip() or UNKNOWN_SPECIES
        counts[label] = counts.get(label, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def hourly_profile(data: Dataset, seasons: SeasonScheme) -> dict[tuple[str, int], int]:
    """Accident counts per (season label, hour of day), dense over all 24 hours."""
    counts = {(label, hour): 0 for label in seasons.labels for hour in range(24)}
    for rec in data.records:
        counts[(seasons.season_of(rec.month), rec.time // 60)] += 1
    return counts


@dataclass(frozen=True)
class CorrelationReport:
    """Speed vs accidents-per-train pairing with its correlation coefficients."""

    n: int
    pearson: float
    spearman: float
    pairs: tuple[tuple[str, float, float, float], ...]  # (line, x_from, speed, acc_per_train)


def speed_correlation(
    data: Dataset,
    traffic: TrafficTable,
    speeds: dict[str, SpeedProfile],
    delta_x: float = 5.0,
) -> CorrelationReport:
    """Correlate track speed with accidents per train across km bins.

    For every traffic bin with trains, a defined speed at the bin midpoint
    pairs with accidents-per-train = accident count in the bin divided by its
    daily train count.  Bins without a covering speed interval are dropped.

    Raises:
        ValueError: delta_x mismatching the traffic table, or fewer than 3
            usable bins.
        UndefinedCorrelationError: zero variance in either variable.
    """
    if delta_x != traffic.delta_x:
        raise ValueError(
            f"delta_x={delta_x} does not match the traffic table bin width {traffic.delta_x}"
        )
    acc_counts: dict[tuple[str, float], int] = {}
    for rec in data.records:
        key = (rec.line, bin_start(rec.km, delta_x))
        acc_counts[key] = acc_counts.get(key, 0) + 1
    pairs: list[tuple[str, float, float, float]] = []
    for line, x_from in sorted(traffic.counts):
        m = traffic.counts[(line, x_from)]
        if m <= 0:
            continue
        profile = speeds.get(line)
        if profile is None:
            continue
        speed = profile.speed_at(x_from + delta_x / 2.0)
        if speed is None:
            continue
        pairs.append((line, x_from, speed, acc_counts.get((line, x_from), 0) / m))
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 usable bins for a correlation, got {len(pairs)}")
    speed_arr = np.array([p[2] for p in pairs])
    risk_arr = np.array([p[3] for p in pairs])
    if speed_arr.min() == speed_arr.max():
        raise UndefinedCorrelationError("speed is constant across bins; correlation undefined")
    if risk_arr.min() == risk_arr.max():
        raise UndefinedCorrelationError(
            "accidents-per-train is constant across bins; correlation undefined"
        )
    pearson = float(pearsonr(speed_arr, risk_arr).statistic)
    spearman = float(spearmanr(speed_arr, risk_arr).statistic)
    return CorrelationReport(n=len(pairs), pearson=pearson, spearman=spearman, pairs=tuple(pairs))


def correlation_to_json(report: CorrelationReport) -> str:
    doc = {
        "n": report.n,
        "pearson": report.pearson,
        "spearman": report.spearman,
        "pairs": [list(pair) for pair in report.pairs],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class EvalReport:
    """Hold-out evaluation of a warning grid against later accidents.

    ``hit_rate`` is the fraction of mappable test accidents whose exact
    (line, km bin, hour bin, month) cell was warned at ``theta``;
    ``warned_fraction`` is the fraction of traffic-positive cells warned.
    ``curve`` lists (theta, warned_fraction, hit_rate) for the grid's
    thresholds plus the requested theta, ascending.
    """

    theta: float
    hit_rate: float
    warned_fraction: float
    n_test: int
    n_mapped: int
    n_unmapped: int
    hits: int
    curve: tuple[tuple[float, float, float], ...]
    include_adjacent: bool = False


def evaluate_holdout(
    grid: WarningGrid,
    test: Dataset,
    theta: float,
    *,
    include_adjacent: bool = False,
) -> EvalReport:
    """Score a warning grid against a held-out accident set.

    Each test accident maps to its grid cell by line, km bin (a km exactly at
    a line's final bin edge clamps into the final bin), hour bin, and month;
    accidents that miss the grid are counted as unmapped and excluded from
    the hit rate.  ``include_adjacent`` additionally accepts a warning in a
    neighbouring km bin as a hit (off by default).

    Raises:
        ValueError: empty test set or negative theta.
    """
    if test.n == 0:
        raise ValueError("empty test set")
    if theta < 0:
        raise ValueError(f"theta must be non-negative, got {theta!r}")
    # per accident, the p_pt values that can produce its hit (cell + optional neighbours)
    mapped_ps: list[list[float]] = []
    n_unmapped = 0
    for rec in test.records:
        if rec.line not in grid.x_starts:
            n_unmapped += 1
            continue
        xi = grid.x_index(rec.line, rec.km)
        mi = grid.month_index(rec.month)
        ti = grid.t_index(rec.hour)
        if xi is None or mi is None or ti is None:
            n_unmapped += 1
            continue
        arr = grid.p_pt[rec.line]
        candidates = [xi]
        if include_adjacent:
            candidates.extend(i for i in (xi - 1, xi + 1) if 0 <= i < arr.shape[0])
        ps = [float(arr[i, mi, ti]) for i in candidates]
        mapped_ps.append([p for p in ps if not math.isnan(p)])
    n_mapped = len(mapped_ps)
    traffic_positive = grid.traffic_positive_cells()

    def point(th: float) -> tuple[float, float]:
        hits = sum(1 for ps in mapped_ps if any(p > th for p in ps))
        hit_rate = hits / n_mapped if n_mapped else 0.0
        warned_fraction = grid.warned_cells(th) / traffic_positive if traffic_positive else 0.0
        return (warned_fraction, hit_rate)

    warned_fraction, hit_rate = point(theta)
    hits_at_theta = sum(1 for ps in mapped_ps if any(p > theta for p in ps))
    curve = tuple(
        (th,) + point(th) for th in sorted(set(grid.thresholds) | {float(theta)})
    )
    return EvalReport(
        theta=float(theta),
        hit_rate=hit_rate,
        warned_fraction=warned_fraction,
        n_test=test.n,
        n_mapped=n_mapped,
        n_unmapped=n_unmapped,
        hits=hits_at_theta,
        curve=curve,
        include_adjacent=include_adjacent,
    )


def eval_report_to_json(report: EvalReport) -> str:
    doc = {
        "theta": report.theta,
        "hit_rate": report.hit_rate,
        "warned_fraction": report.warned_fraction,
        "n_test": report.n_test,
        "n_mapped": report.n_mapped,
        "n_unmapped": report.n_unmapped,
        "hits": report.hits,
        "include_adjacent": report.include_adjacent,
        "curve": [list(pt) for pt in report.curve],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
