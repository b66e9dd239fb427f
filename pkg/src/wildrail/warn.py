"""Per-train collision probabilities and threshold warnings on a space-time grid.

A cell is (line, km bin, month, hour bin).  Its per-train probability is

    p_pt = temporal_part(month, t) * spatial_part(line, x) / m_window

where m_window = m(line, x) * alpha(t, delta_t) * delta_t is the expected
number of trains in the window.  A warning is raised in a cell exactly when
p_pt exceeds a threshold (strictly).  Cells without traffic carry no p_pt and
are never warned; they are flagged instead.  p_pt is a ratio of an expected
event count to a train count and is deliberately not clamped: values above 1
get an "exceeds unity" flag so data problems stay visible.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .ingest import LineGeometry, TrafficTable, bin_index, km_to_geo
from .model import MONTHS, FittedModel, spatial_part, temporal_part

__all__ = [
    "NoTrafficError",
    "TrafficProfile",
    "DEFAULT_PROFILE",
    "CellResult",
    "WarningGrid",
    "alpha",
    "traffic_m",
    "p_per_train",
    "bayes_warn_animals",
    "sweep_all",
    "warnings_to_csv",
    "warnings_to_geojson",
]

FLAG_NO_TRAFFIC = "no_traffic"
FLAG_INSUFFICIENT_DATA = "insufficient_data"
FLAG_EXCEEDS_UNITY = "exceeds_unity"

_NO_TRAFFIC_BIT = 1
_INSUFFICIENT_BIT = 2
_EXCEEDS_BIT = 4

_FLAG_NAMES = (
    (_NO_TRAFFIC_BIT, FLAG_NO_TRAFFIC),
    (_INSUFFICIENT_BIT, FLAG_INSUFFICIENT_DATA),
    (_EXCEEDS_BIT, FLAG_EXCEEDS_UNITY),
)


class NoTrafficError(ValueError):
    """A per-train probability was requested for a cell with zero expected trains."""


@dataclass(frozen=True)
class TrafficProfile:
    """Within-day distribution of train departures as piecewise-constant rates.

    ``groups`` is a tuple of (mass, windows) entries: each group's probability
    mass is spread evenly over the total hours of its windows.  The windows of
    all groups must tile [0, 24) exactly and the masses must sum to 1.  The
    default is the night / rush-hour / off-peak split: 5 % of trains in
    [0, 4), 40 % in [6, 9) and [15, 18), and the remaining 55 % over the other
    14 hours.
    """

    groups: tuple[tuple[float, tuple[tuple[float, float], ...]], ...]
    _segments: tuple[tuple[float, float, float], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        segments: list[tuple[float, float, float]] = []
        total_mass = 0.0
        for mass, windows in self.groups:
            if mass < 0:
                raise ValueError(f"piece mass must be non-negative, got {mass!r}")
            if not windows:
                raise ValueError("every profile group needs at least one window")
            hours = 0.0
            for start, end in windows:
                if not 0.0 <= start < end <= 24.0:
                    raise ValueError(f"window [{start}, {end}) must lie within [0, 24)")
                hours += end - start
            rate = mass / hours
            for start, end in windows:
                segments.append((start, end, rate))
            total_mass += mass
        segments.sort()
        covered = 0.0
        for i, (start, end, _) in enumerate(segments):
            expected = segments[i - 1][1] if i else 0.0
            if abs(start - expected) > 1e-9:
                raise ValueError(f"profile windows leave a gap or overlap near hour {start}")
            covered = end
        if abs(covered - 24.0) > 1e-9:
            raise ValueError("profile windows must cover the full day")
        if abs(total_mass - 1.0) > 1e-9:
            raise ValueError(f"piece masses must sum to 1, got {total_mass!r}")
        object.__setattr__(self, "_segments", tuple(segments))

    @property
    def boundaries(self) -> tuple[float, ...]:
        return tuple(end for _, end, _ in self._segments)


DEFAULT_PROFILE = TrafficProfile(
    groups=(
        (0.05, ((0.0, 4.0),)),
        (0.4, ((6.0, 9.0), (15.0, 18.0))),
        (0.55, ((4.0, 6.0), (9.0, 15.0), (18.0, 24.0))),
    )
)


def alpha(t: float, delta_t: float, profile: TrafficProfile = DEFAULT_PROFILE) -> float:
    """Average per-hour traffic fraction over the window [t, t+delta_t).

    On a window inside a single profile piece this is exactly the piece's
    rate (e.g. 0.05/4 at night); windows spanning several pieces average the
    rates, so alpha(t, dt) * dt always sums to 1 over any partition of the
    day.

    Raises:
        ValueError: t outside [0, 24), non-positive delta_t, or a window
            reaching past midnight.
    """
    if not 0.0 <= t < 24.0:
        raise ValueError(f"t must be in [0, 24), got {t!r}")
    if delta_t <= 0:
        raise ValueError(f"delta_t must be positive, got {delta_t!r}")
    if t + delta_t > 24.0 + 1e-9:
        raise ValueError(f"window [{t}, {t + delta_t}) reaches past midnight")
    t_end = t + delta_t
    mass = 0.0
    for start, end, rate in profile._segments:
        overlap = min(end, t_end) - max(start, t)
        if overlap > 0.0:
            if overlap >= delta_t:
                # window fully inside one piece: return its rate untouched
                return rate
            mass += overlap * rate
    return mass / delta_t


def traffic_m(
    traffic: TrafficTable,
    profile: TrafficProfile,
    line: str,
    x: float,
    t: float,
    delta_t: float,
) -> float:
    """Expected trains through (line, x's bin) in the window [t, t+delta_t)."""
    return (traffic.count(line, x) * alpha(t, delta_t, profile)) * delta_t


def p_per_train(
    model: FittedModel,
    traffic: TrafficTable,
    profile: TrafficProfile,
    tau: int,
    t: float,
    line: str,
    x: float,
) -> float:
    """Per-train accident probability for one cell.

    The window width is the model's time bin.  The value is an expected event
    count per train and is not clamped to [0, 1].

    Raises:
        NoTrafficError: the window has zero expected trains.
        InsufficientDataError: a required model probability is undefined.
    """
    delta_t = model.bins.delta_t
    m_window = traffic_m(traffic, profile, line, x, model.bins.t_bin(t), delta_t)
    if m_window == 0.0:
        raise NoTrafficError(f"no trains on line {line!r} km {x} in window starting {t} h")
    temporal = temporal_part(model, tau, t)
    spatial = spatial_part(model, line, x)
    return temporal * spatial / m_window


@dataclass(frozen=True)
class CellResult:
    """One grid cell: location, window, traffic, probability, flags, warnings."""

    line: str
    x_from: float
    x_to: float
    month: int
    t_from: float
    t_to: float
    m_window: float
    p_pt: float | None
    flags: tuple[str, ...]
    warned: dict[float, bool]


@dataclass(frozen=True)
class WarningGrid:
    """Warning state over (line, km bin, month, hour bin) cells.

    Per line, ``p_pt`` is a (n_x, n_months, n_t) float array with NaN in
    flagged cells, ``m_window`` a (n_x, n_t) array, and ``flags`` a bitmask
    array parallel to ``p_pt``.  ``warned`` state is derived on demand:
    a cell is warned at theta exactly when p_pt > theta.
    """

    delta_x: float
    delta_t: float
    thresholds: tuple[float, ...]
    lines: tuple[str, ...]
    months: tuple[int, ...]
    t_starts: tuple[float, ...]
    x_starts: dict[str, tuple[float, ...]]
    p_pt: dict[str, np.ndarray]
    m_window: dict[str, np.ndarray]
    flags: dict[str, np.ndarray]

    def x_index(self, line: str, km: float) -> int | None:
        """Index of the km bin containing ``km``, or None when off-grid.

        A value exactly at the final bin's end edge is clamped into the final
        bin; anything further out is off-grid.
        """
        starts = self.x_starts.get(line)
        if not starts:
            return None
        first = round(starts[0] / self.delta_x)
        pos = bin_index(km, self.delta_x) - first
        if 0 <= pos < len(starts):
            return pos
        if pos == len(starts) and km == (first + len(starts)) * self.delta_x:
            return len(starts) - 1
        return None

    def month_index(self, month: int) -> int | None:
        try:
            return self.months.index(month)
        except ValueError:
            return None

    def t_index(self, hour: float) -> int | None:
        if not 0.0 <= hour < 24.0:
            return None
        start = bin_index(hour, self.delta_t) * self.delta_t
        try:
            return self.t_starts.index(start)
        except ValueError:
            return None

    def warned_mask(self, line: str, theta: float) -> np.ndarray:
        """Boolean (n_x, n_months, n_t) array: p_pt strictly above theta (NaN never warns)."""
        with np.errstate(invalid="ignore"):
            return self.p_pt[line] > theta

    def traffic_positive_cells(self) -> int:
        """Number of cells whose window holds at least one expected train."""
        total = 0
        for line in self.lines:
            total += int((self.m_window[line] > 0.0).sum()) * len(self.months)
        return total

    def warned_cells(self, theta: float) -> int:
        return sum(int(self.warned_mask(line, theta).sum()) for line in self.lines)

    def n_cells(self) -> int:
        return sum(arr.size for arr in self.p_pt.values())

    def cell(self, line: str, xi: int, mi: int, ti: int) -> CellResult:
        """Materialize the cell at array indices (xi, mi, ti) of ``line``."""
        p = float(self.p_pt[line][xi, mi, ti])
        bits = int(self.flags[line][xi, mi, ti])
        flags = tuple(name for bit, name in _FLAG_NAMES if bits & bit)
        p_out: float | None = None if math.isnan(p) else p
        warned = {theta: (p_out is not None and p_out > theta) for theta in self.thresholds}
        x_from = self.x_starts[line][xi]
        t_from = self.t_starts[ti]
        return CellResult(
            line=line,
            x_from=x_from,
            x_to=x_from + self.delta_x,
            month=self.months[mi],
            t_from=t_from,
            t_to=t_from + self.delta_t,
            m_window=float(self.m_window[line][xi, ti]),
            p_pt=p_out,
            flags=flags,
            warned=warned,
        )

    def cells(self) -> Iterator[CellResult]:
        """All cells in deterministic (line, x, month, t) order."""
        for line in self.lines:
            for xi in range(len(self.x_starts[line])):
                for mi in range(len(self.months)):
                    for ti in range(len(self.t_starts)):
                        yield self.cell(line, xi, mi, ti)


def _check_thresholds(thresholds) -> tuple[float, ...]:
    out = tuple(sorted(set(float(th) for th in thresholds)))
    if not out:
        raise ValueError("at least one threshold is required")
    if out[0] <= 0:
        raise ValueError(f"thresholds must be strictly positive, got {out[0]!r}")
    return out


def _build_grid(
    model: FittedModel,
    traffic: TrafficTable,
    profile: TrafficProfile,
    thresholds: tuple[float, ...],
    lines: tuple[str, ...],
    months: tuple[int, ...],
    t_starts: tuple[float, ...],
    x_starts: dict[str, tuple[float, ...]],
) -> WarningGrid:
    delta_t = model.bins.delta_t
    delta_x = model.bins.delta_x
    if traffic.counts and traffic.delta_x != delta_x:
        raise ValueError(
            f"traffic bin width {traffic.delta_x} does not match model bin width {delta_x}"
        )
    alpha_vec = np.array([alpha(t, delta_t, profile) for t in t_starts])

    # temporal part per (month, t-bin); months with an undefined season table
    # are flagged, months with mu=0 are plain zeros
    n_m, n_t = len(months), len(t_starts)
    temporal = np.zeros((n_m, n_t))
    month_insufficient = np.zeros(n_m, dtype=bool)
    for mi, tau in enumerate(months):
        mu = model.mu_at(tau)
        if mu == 0.0:
            continue
        table = model.p_time.get(model.seasons.season_of(tau))
        if table is None:
            month_insufficient[mi] = True
            continue
        temporal[mi, :] = np.array([table[ts] for ts in t_starts]) * mu

    p_pt: dict[str, np.ndarray] = {}
    m_window: dict[str, np.ndarray] = {}
    flags: dict[str, np.ndarray] = {}
    for line in lines:
        starts = x_starts[line]
        p_line = model.p_line_at(line)
        segment_table = model.p_segment.get(line, {})
        if p_line == 0.0:
            spatial = np.zeros(len(starts))
        else:
            spatial = np.array([segment_table.get(xs, 0.0) for xs in starts]) * p_line
        m_vec = np.array([traffic.count(line, xs) for xs in starts])
        window = (m_vec[:, None] * alpha_vec[None, :]) * delta_t  # (n_x, n_t)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = (temporal[None, :, :] * spatial[:, None, None]) / window[:, None, :]
        cell_flags = np.zeros(p.shape, dtype=np.uint8)
        no_traffic = np.broadcast_to((window == 0.0)[:, None, :], p.shape)
        insufficient = np.broadcast_to(month_insufficient[None, :, None], p.shape)
        p = np.where(no_traffic | insufficient, np.nan, p)
        with np.errstate(invalid="ignore"):
            exceeds = p > 1.0
        cell_flags |= np.where(no_traffic, _NO_TRAFFIC_BIT, 0).astype(np.uint8)
        cell_flags |= np.where(insufficient, _INSUFFICIENT_BIT, 0).astype(np.uint8)
        cell_flags |= np.where(exceeds, _EXCEEDS_BIT, 0).astype(np.uint8)
        p_pt[line] = p
        m_window[line] = window
        flags[line] = cell_flags

    return WarningGrid(
        delta_x=delta_x,
        delta_t=delta_t,
        thresholds=thresholds,
        lines=lines,
        months=months,
        t_starts=t_starts,
        x_starts=x_starts,
        p_pt=p_pt,
        m_window=m_window,
        flags=flags,
    )


def bayes_warn_animals(
    model: FittedModel,
    traffic: TrafficTable,
    profile: TrafficProfile,
    line: str,
    tau: int,
    t: float,
    delta_t: float,
    thresholds,
    x0: float,
    xf: float,
) -> WarningGrid:
    """Warning sweep along one line for one month and one time window.

    Walks the km bins from the bin containing ``x0`` through the bin starting
    at ``xf`` and computes p_pt and per-threshold warnings in each.  Cells
    without traffic or with undefined probabilities are flagged, not warned.
    The quantities that do not depend on km (temporal part, line probability)
    are computed once for the whole sweep.

    Args:
        delta_t: window width in hours; must equal the model's time bin so
            the conditional hour distribution applies to the window.
    """
    if xf < x0:
        raise ValueError(f"need x0 <= xf, got {x0}..{xf}")
    if delta_t != model.bins.delta_t:
        raise ValueError(
            f"delta_t={delta_t} does not match the model's time bin {model.bins.delta_t}"
        )
    if tau not in MONTHS:
        raise ValueError(f"month must be 1..12, got {tau!r}")
    checked = _check_thresholds(thresholds)
    delta_x = model.bins.delta_x
    first = bin_index(x0, delta_x)
    last = bin_index(xf, delta_x)
    starts = tuple(i * delta_x for i in range(first, last + 1))
    return _build_grid(
        model,
        traffic,
        profile,
        checked,
        lines=(line,),
        months=(tau,),
        t_starts=(model.bins.t_bin(t),),
        x_starts={line: starts},
    )


def sweep_all(
    model: FittedModel,
    traffic: TrafficTable,
    profile: TrafficProfile,
    thresholds,
) -> WarningGrid:
    """Full warning grid: every model line, all 12 months, all time bins.

    Per line the km range is the dense span of the model's observed bins
    united with the traffic table's bins.  Cell evaluation is vectorized and
    order-independent; the result is identical to evaluating cells one at a
    time.
    """
    checked = _check_thresholds(thresholds)
    delta_x = model.bins.delta_x
    x_starts: dict[str, tuple[float, ...]] = {}
    for line in model.lines:
        indices = [round(xs / delta_x) for xs in model.x_bins_for(line)]
        if traffic.delta_x == delta_x:
            indices.extend(round(xs / delta_x) for xs in traffic.bins_for(line))
        lo, hi = min(indices), max(indices)
        x_starts[line] = tuple(i * delta_x for i in range(lo, hi + 1))
    return _build_grid(
        model,
        traffic,
        profile,
        checked,
        lines=model.lines,
        months=MONTHS,
        t_starts=model.bins.t_starts,
        x_starts=x_starts,
    )


def warnings_to_csv(grid: WarningGrid) -> str:
    """Serialize a WarningGrid to CSV, one row per cell, deterministic order.

    Columns: line, x_from, x_to, month, hour_from, hour_to, m_window, p_pt,
    flags (semicolon-joined), then one warned@<theta> 0/1 column per
    threshold.  Cells without a defined p_pt leave that field empty.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = [
        "line",
        "x_from",
        "x_to",
        "month",
        "hour_from",
        "hour_to",
        "m_window",
        "p_pt",
        "flags",
    ] + [f"warned@{theta!r}" for theta in grid.thresholds]
    writer.writerow(header)
    for cell in grid.cells():
        row = [
            cell.line,
            repr(cell.x_from),
            repr(cell.x_to),
            cell.month,
            repr(cell.t_from),
            repr(cell.t_to),
            repr(cell.m_window),
            "" if cell.p_pt is None else repr(cell.p_pt),
            ";".join(cell.flags),
        ] + [int(cell.warned[theta]) for theta in grid.thresholds]
        writer.writerow(row)
    return out.getvalue()


def _segment_coordinates(geometry: LineGeometry, km_a: float, km_b: float) -> list[list[float]]:
    """[lon, lat] polyline between two km posts, keeping intermediate vertices."""
    coords: list[list[float]] = []
    lat, lon = km_to_geo(geometry, km_a)
    coords.append([lon, lat])
    for vlat, vlon, vkm in geometry.vertices:
        if km_a < vkm < km_b:
            coords.append([vlon, vlat])
    lat, lon = km_to_geo(geometry, km_b)
    coords.append([lon, lat])
    return coords


def warnings_to_geojson(
    grid: WarningGrid,
    geometries: dict[str, LineGeometry],
    theta: float,
    *,
    month: int | None = None,
    hour: float | None = None,
) -> str:
    """Warned track segments as GeoJSON LineStrings.

    A feature is emitted per (line, km bin) that is warned at ``theta`` in
    any surviving (month, hour) cell after the optional ``month``/``hour``
    filters; the warned months and window starts are listed in its
    properties.  Bins on lines without geometry, or falling entirely outside
    the calibrated km range, are omitted (they remain in the CSV export).
    """
    features = []
    for line in grid.lines:
        geometry = geometries.get(line)
        if geometry is None:
            continue
        mask = grid.warned_mask(line, theta)
        p_arr = grid.p_pt[line]
        starts = grid.x_starts[line]
        for xi, x_from in enumerate(starts):
            hits = [
                (grid.months[mi], grid.t_starts[ti])
                for mi in range(len(grid.months))
                for ti in range(len(grid.t_starts))
                if mask[xi, mi, ti]
                and (month is None or grid.months[mi] == month)
                and (hour is None or grid.t_starts[ti] == bin_index(hour, grid.delta_t) * grid.delta_t)
            ]
            if not hits:
                continue
            x_to = x_from + grid.delta_x
            seg_a = max(x_from, geometry.km_min)
            seg_b = min(x_to, geometry.km_max)
            if seg_a >= seg_b:
                continue
            p_max = max(float(p_arr[xi, grid.months.index(m), grid.t_starts.index(ts)]) for m, ts in hits)
            features.append(
                {
                    "type": "Feature",
                    "properties": {
                        "line": line,
                        "x_from": x_from,
                        "x_to": x_to,
                        "theta": theta,
                        "months": sorted({m for m, _ in hits}),
                        "hours": sorted({ts for _, ts in hits}),
                        "p_pt_max": p_max,
                    },
                    "geometry": {
                        "type": "LineString",
                        "coordinates": _segment_coordinates(geometry, seg_a, seg_b),
                    },
                }
            )
    return json.dumps({"type": "FeatureCollection", "features": features}, sort_keys=True)
