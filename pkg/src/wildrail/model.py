"""Empirical accident-rate tables: monthly rate and conditional time/place distributions.

The model is a set of count ratios over a fixed binning: a monthly accident
rate mu(tau) = N_tau / (T/12), an hour-of-day distribution conditioned on the
daylight season containing the month, a line distribution p(l) = N_l / N, and
a km-bin distribution along each line p(x, dx | l).  All tables keep their
underlying counts so estimates stay auditable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .ingest import Dataset, bin_index, bin_start

__all__ = [
    "InsufficientDataError",
    "SeasonScheme",
    "DEFAULT_SEASONS",
    "BinConfig",
    "ModelCounts",
    "FittedModel",
    "fit",
    "estimate_mu",
    "estimate_p_time",
    "estimate_p_line",
    "estimate_p_segment",
    "temporal_part",
    "spatial_part",
    "model_to_json",
    "model_from_json",
]

MONTHS = tuple(range(1, 13))
MONTHS_PER_YEAR = 12

# time-of-day piece boundaries that model time bins must not straddle
_PIECE_BOUNDARIES = (4.0, 6.0, 9.0, 15.0, 18.0, 24.0)


class InsufficientDataError(ValueError):
    """A requested probability is undefined because its conditioning count is zero."""


def _divides(whole: float, part: float) -> bool:
    ratio = whole / part
    return abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1


@dataclass(frozen=True)
class SeasonScheme:
    """Partition of the twelve months into labeled daylight seasons.

    The default groups months by daylight length: short days (Nov-Feb), long
    days (May-Aug), and the transitional months in between.  Every month must
    belong to exactly one group.
    """

    groups: dict[str, tuple[int, ...]]
    _by_month: dict[int, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_month: dict[int, str] = {}
        for label, months in self.groups.items():
            if not label:
                raise ValueError("season label must be non-empty")
            if not months:
                raise ValueError(f"season {label!r} has no months")
            for m in months:
                if m not in MONTHS:
                    raise ValueError(f"season {label!r} lists invalid month {m!r}")
                if m in by_month:
                    raise ValueError(f"month {m} appears in both {by_month[m]!r} and {label!r}")
                by_month[m] = label
        if len(by_month) != 12:
            missing = sorted(set(MONTHS) - set(by_month))
            raise ValueError(f"months {missing} are not assigned to any season")
        object.__setattr__(self, "_by_month", by_month)

    def season_of(self, month: int) -> str:
        if month not in MONTHS:
            raise ValueError(f"month must be 1..12, got {month!r}")
        return self._by_month[month]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.groups)


DEFAULT_SEASONS = SeasonScheme(
    groups={
        "short": (11, 12, 1, 2),
        "long": (5, 6, 7, 8),
        "mid": (3, 4, 9, 10),
    }
)


@dataclass(frozen=True)
class BinConfig:
    """Grid resolution: km bin width and hour-of-day bin width.

    ``delta_t`` must divide 24 and every daily traffic piece boundary (4, 6,
    9, 15, 18, 24 hours) so that no time bin straddles a piece; in practice
    that allows 1, 0.5, 0.25, ... hour bins.
    """

    delta_x: float = 5.0
    delta_t: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta_x) and self.delta_x > 0):
            raise ValueError(f"delta_x must be positive, got {self.delta_x!r}")
        if not (math.isfinite(self.delta_t) and self.delta_t > 0):
            raise ValueError(f"delta_t must be positive, got {self.delta_t!r}")
        for boundary in _PIECE_BOUNDARIES:
            if not _divides(boundary, self.delta_t):
                raise ValueError(
                    f"delta_t={self.delta_t} straddles the traffic piece boundary at {boundary} h"
                )

    @property
    def n_t_bins(self) -> int:
        return round(24.0 / self.delta_t)

    @property
    def t_starts(self) -> tuple[float, ...]:
        return tuple(i * self.delta_t for i in range(self.n_t_bins))

    def t_bin(self, hour: float) -> float:
        """Start of the time bin containing the fractional hour ``hour``."""
        if not 0.0 <= hour < 24.0:
            raise ValueError(f"hour must be in [0, 24), got {hour!r}")
        return bin_start(hour, self.delta_t)

    def x_bin(self, km: float) -> float:
        """Start of the km bin containing ``km``."""
        if km < 0:
            raise ValueError(f"km must be non-negative, got {km!r}")
        return bin_start(km, self.delta_x)


@dataclass(frozen=True)
class ModelCounts:
    """Raw counts behind a FittedModel; every table entry is a ratio of these."""

    n: int
    total_days: float
    by_month: dict[int, int]
    by_season: dict[str, int]
    by_season_tbin: dict[str, dict[float, int]]
    by_line: dict[str, int]
    by_line_xbin: dict[str, dict[float, int]]


@dataclass(frozen=True)
class FittedModel:
    """Immutable probability tables fitted from a Dataset.

    ``mu`` maps month -> accidents per average month; ``p_time`` maps season
    label -> time-bin start -> probability (a season with zero accidents and
    zero smoothing is absent, and lookups for it raise
    InsufficientDataError); ``p_line`` maps line -> probability; ``p_segment``
    maps line -> km-bin start -> probability over the line's observed bin
    range.  Treat all tables as read-only.
    """

    mu: dict[int, float]
    p_time: dict[str, dict[float, float]]
    p_line: dict[str, float]
    p_segment: dict[str, dict[float, float]]
    seasons: SeasonScheme
    bins: BinConfig
    counts: ModelCounts
    smoothing: float = 0.0

    @property
    def lines(self) -> tuple[str, ...]:
        return tuple(sorted(self.p_line))

    def x_bins_for(self, line: str) -> tuple[float, ...]:
        return tuple(sorted(self.p_segment.get(line, {})))

    def mu_at(self, tau: int) -> float:
        if tau not in MONTHS:
            raise ValueError(f"month must be 1..12, got {tau!r}")
        return self.mu[tau]

    def p_time_at(self, tau: int, t: float) -> float:
        """p(t, t+delta_t | season containing tau)."""
        label = self.seasons.season_of(tau)
        table = self.p_time.get(label)
        if table is None:
            raise InsufficientDataError(f"no accidents in season {label!r}; p(t|season) undefined")
        return table[self.bins.t_bin(t)]

    def p_line_at(self, line: str) -> float:
        return self.p_line.get(line, 0.0)

    def p_segment_at(self, line: str, x: float) -> float:
        """p(x, x+delta_x | line); 0 for bins outside the observed range."""
        table = self.p_segment.get(line)
        if table is None:
            raise InsufficientDataError(f"no accidents on line {line!r}; p(x|line) undefined")
        return table.get(self.bins.x_bin(x), 0.0)


def fit(
    data: Dataset,
    seasons: SeasonScheme = DEFAULT_SEASONS,
    bins: BinConfig | None = None,
    *,
    total_days: float | None = None,
    smoothing: float = 0.0,
) -> FittedModel:
    """Count the dataset into probability tables.

    Args:
        data: accident records with their observation period.
        seasons: month grouping for the hour-of-day distribution.
        bins: km/hour bin widths (defaults to 5 km x 1 h).
        total_days: override for the exposure T in days; defaults to the
            dataset's calendar day count.
        smoothing: optional additive (Laplace) count added to every cell of
            the three probability tables; 0 keeps the raw ratios.

    Raises:
        ValueError: empty dataset, non-positive exposure, negative smoothing.
    """
    if bins is None:
        bins = BinConfig()
    if data.n == 0:
        raise ValueError("cannot fit a model on an empty dataset")
    T = float(data.total_days if total_days is None else total_days)
    if not T > 0:
        raise ValueError(f"total_days must be positive, got {T!r}")
    if smoothing < 0:
        raise ValueError(f"smoothing must be non-negative, got {smoothing!r}")

    by_month = {m: 0 for m in MONTHS}
    t_starts = bins.t_starts
    by_season_tbin = {label: {ts: 0 for ts in t_starts} for label in seasons.labels}
    lines = sorted({rec.line for rec in data.records})
    by_line = {line: 0 for line in lines}
    line_bin_idx: dict[str, dict[int, int]] = {line: {} for line in lines}
    for rec in data.records:
        by_month[rec.month] += 1
        by_season_tbin[seasons.season_of(rec.month)][bins.t_bin(rec.hour)] += 1
        by_line[rec.line] += 1
        idx = bin_index(rec.km, bins.delta_x)
        per_line = line_bin_idx[rec.line]
        per_line[idx] = per_line.get(idx, 0) + 1
    by_season = {
        label: sum(by_month[m] for m in months) for label, months in seasons.groups.items()
    }
    # dense per-line bins over the observed index range, zeros in the gaps
    by_line_xbin: dict[str, dict[float, int]] = {}
    for line in lines:
        indices = line_bin_idx[line]
        lo, hi = min(indices), max(indices)
        by_line_xbin[line] = {
            i * bins.delta_x: indices.get(i, 0) for i in range(lo, hi + 1)
        }

    month_denom = T / MONTHS_PER_YEAR
    mu = {m: by_month[m] / month_denom for m in MONTHS}
    p_time: dict[str, dict[float, float]] = {}
    for label in seasons.labels:
        denom = by_season[label] + smoothing * len(t_starts)
        if denom > 0:
            p_time[label] = {
                ts: (cnt + smoothing) / denom for ts, cnt in by_season_tbin[label].items()
            }
    line_denom = data.n + smoothing * len(lines)
    p_line = {line: (by_line[line] + smoothing) / line_denom for line in lines}
    p_segment: dict[str, dict[float, float]] = {}
    for line in lines:
        table = by_line_xbin[line]
        denom = by_line[line] + smoothing * len(table)
        p_segment[line] = {xs: (cnt + smoothing) / denom for xs, cnt in table.items()}

    counts = ModelCounts(
        n=data.n,
        total_days=T,
        by_month=by_month,
        by_season=by_season,
        by_season_tbin=by_season_tbin,
        by_line=by_line,
        by_line_xbin=by_line_xbin,
    )
    return FittedModel(
        mu=mu,
        p_time=p_time,
        p_line=p_line,
        p_segment=p_segment,
        seasons=seasons,
        bins=bins,
        counts=counts,
        smoothing=smoothing,
    )


def estimate_mu(data: Dataset, tau: int, *, total_days: float | None = None) -> float:
    """Accidents per average month for calendar month ``tau``: N_tau / (T/12)."""
    if tau not in MONTHS:
        raise ValueError(f"month must be 1..12, got {tau!r}")
    T = float(data.total_days if total_days is None else total_days)
    if not T > 0:
        raise ValueError(f"total_days must be positive, got {T!r}")
    n_tau = sum(1 for rec in data.records if rec.month == tau)
    return n_tau / (T / MONTHS_PER_YEAR)


def estimate_p_time(
    data: Dataset, seasons: SeasonScheme, tau: int, t: float, delta_t: float
) -> float:
    """Probability that an accident in tau's season falls in [t, t+delta_t) hours.

    Raises:
        InsufficientDataError: the season containing ``tau`` has no accidents.
    """
    label = seasons.season_of(tau)
    in_season = [rec for rec in data.records if seasons.season_of(rec.month) == label]
    if not in_season:
        raise InsufficientDataError(f"no accidents in season {label!r}; p(t|season) undefined")
    hits = sum(1 for rec in in_season if t <= rec.hour < t + delta_t)
    return hits / len(in_season)


def estimate_p_line(data: Dataset, line: str) -> float:
    """Probability that an accident falls on ``line``: N_l / N."""
    if data.n == 0:
        raise InsufficientDataError("empty dataset; p(l) undefined")
    return sum(1 for rec in data.records if rec.line == line) / data.n


def estimate_p_segment(data: Dataset, line: str, x: float, delta_x: float) -> float:
    """Probability that an accident on ``line`` falls in [x, x+delta_x) km.

    Raises:
        InsufficientDataError: ``line`` has no accidents.
    """
    n_line = sum(1 for rec in data.records if rec.line == line)
    if n_line == 0:
        raise InsufficientDataError(f"no accidents on line {line!r}; p(x|line) undefined")
    hits = sum(1 for rec in data.records if rec.line == line and x <= rec.km < x + delta_x)
    return hits / n_line


def temporal_part(model: FittedModel, tau: int, t: float) -> float:
    """p(tau, t, delta_t) = p(t, t+delta_t | season(tau)) * mu(tau).

    mu(tau) = 0 short-circuits to 0 even when the season's hour distribution
    is undefined; otherwise an undefined distribution propagates as
    InsufficientDataError.
    """
    mu = model.mu_at(tau)
    if mu == 0.0:
        return 0.0
    return model.p_time_at(tau, t) * mu


def spatial_part(model: FittedModel, line: str, x: float) -> float:
    """p(l, x, delta_x) = p(x, x+delta_x | l) * p(l), with p(l)=0 short-circuiting to 0."""
    p_line = model.p_line_at(line)
    if p_line == 0.0:
        return 0.0
    return model.p_segment_at(line, x) * p_line


_FORMAT_TAG = "wildrail.model/1"


def model_to_json(model: FittedModel) -> str:
    """Serialize a FittedModel to a single deterministic JSON document."""
    doc = {
        "format": _FORMAT_TAG,
        "bins": {"delta_x": model.bins.delta_x, "delta_t": model.bins.delta_t},
        "seasons": {label: list(months) for label, months in model.seasons.groups.items()},
        "smoothing": model.smoothing,
        "mu": {str(m): v for m, v in model.mu.items()},
        "p_time": {
            label: {repr(ts): p for ts, p in table.items()}
            for label, table in model.p_time.items()
        },
        "p_line": dict(model.p_line),
        "p_segment": {
            line: {repr(xs): p for xs, p in table.items()}
            for line, table in model.p_segment.items()
        },
        "counts": {
            "n": model.counts.n,
            "total_days": model.counts.total_days,
            "by_month": {str(m): c for m, c in model.counts.by_month.items()},
            "by_season": dict(model.counts.by_season),
            "by_season_tbin": {
                label: {repr(ts): c for ts, c in table.items()}
                for label, table in model.counts.by_season_tbin.items()
            },
            "by_line": dict(model.counts.by_line),
            "by_line_xbin": {
                line: {repr(xs): c for xs, c in table.items()}
                for line, table in model.counts.by_line_xbin.items()
            },
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def model_from_json(text: str) -> FittedModel:
    """Rebuild a FittedModel from model_to_json output.

    Raises:
        ValueError: malformed JSON or wrong document format.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid model JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != _FORMAT_TAG:
        raise ValueError(f"model document must have format={_FORMAT_TAG!r}")
    try:
        seasons = SeasonScheme(
            groups={label: tuple(months) for label, months in doc["seasons"].items()}
        )
        bins = BinConfig(delta_x=doc["bins"]["delta_x"], delta_t=doc["bins"]["delta_t"])
        raw_counts = doc["counts"]
        counts = ModelCounts(
            n=int(raw_counts["n"]),
            total_days=float(raw_counts["total_days"]),
            by_month={int(m): int(c) for m, c in raw_counts["by_month"].items()},
            by_season={label: int(c) for label, c in raw_counts["by_season"].items()},
            by_season_tbin={
                label: {float(ts): int(c) for ts, c in table.items()}
                for label, table in raw_counts["by_season_tbin"].items()
            },
            by_line={line: int(c) for line, c in raw_counts["by_line"].items()},
            by_line_xbin={
                line: {float(xs): int(c) for xs, c in table.items()}
                for line, table in raw_counts["by_line_xbin"].items()
            },
        )
        return FittedModel(
            mu={int(m): float(v) for m, v in doc["mu"].items()},
            p_time={
                label: {float(ts): float(p) for ts, p in table.items()}
                for label, table in doc["p_time"].items()
            },
            p_line={line: float(p) for line, p in doc["p_line"].items()},
            p_segment={
                line: {float(xs): float(p) for xs, p in table.items()}
                for line, table in doc["p_segment"].items()
            },
            seasons=seasons,
            bins=bins,
            counts=counts,
            smoothing=float(doc.get("smoothing", 0.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model document: {exc!r}") from None
