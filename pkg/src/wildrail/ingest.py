"""Input records, CSV/GeoJSON parsing, and linear referencing for railway lines."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

__all__ = [
    "ParseError",
    "AccidentRecord",
    "Dataset",
    "TrafficTable",
    "LineGeometry",
    "SpeedProfile",
    "bin_index",
    "bin_start",
    "count_days",
    "parse_accidents",
    "dataset_to_csv",
    "parse_traffic",
    "parse_traffic_runs",
    "parse_geometries",
    "geometries_to_geojson",
    "km_to_geo",
    "parse_speed_profiles",
]

ACCIDENT_HEADER = ("date", "time", "line", "km", "species")
TRAFFIC_HEADER = ("line", "km_from", "count")
TRAFFIC_RUN_HEADER = ("line", "km_from", "km_to", "departure")
SPEED_HEADER = ("line", "km_from", "km_to", "vmax")

MINUTES_PER_DAY = 24 * 60


class ParseError(ValueError):
    """Raised when an input stream violates its schema.

    ``line_no`` is the 1-based physical line of the offending row when the
    error is row-level, ``None`` for stream-level problems.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def bin_index(value: float, delta: float) -> int:
    """Index k of the half-open bin [k*delta, (k+1)*delta) containing ``value``.

    Bins are anchored at 0.  The floor is corrected so that the result is
    always consistent with interval membership (start <= value < start+delta)
    even when value/delta rounds across an integer.
    """
    idx = math.floor(value / delta)
    if idx * delta > value:
        idx -= 1
    elif (idx + 1) * delta <= value:
        idx += 1
    return idx


def bin_start(value: float, delta: float) -> float:
    """Start of the half-open bin containing ``value`` (see bin_index)."""
    return bin_index(value, delta) * delta


def count_days(start: dt.date, end: dt.date, days_per_year: str = "calendar") -> int:
    """Number of days in the inclusive span [start, end].

    ``days_per_year="365"`` skips leap days (Feb 29), so every year
    contributes at most 365 days; ``"calendar"`` counts real days.
    """
    if end < start:
        raise ValueError(f"period end {end} precedes start {start}")
    if days_per_year not in ("calendar", "365"):
        raise ValueError(f"days_per_year must be 'calendar' or '365', got {days_per_year!r}")
    days = (end - start).days + 1
    if days_per_year == "365":
        for year in range(start.year, end.year + 1):
            try:
                leap_day = dt.date(year, 2, 29)
            except ValueError:
                continue
            if start <= leap_day <= end:
                days -= 1
    return days


@dataclass(frozen=True)
class AccidentRecord:
    """One wildlife-train collision report.

    ``time`` is minutes since midnight in [0, 1440); ``km`` is the position
    along the line in kilometres (any non-negative real); ``species`` is
    free-form and may be empty.
    """

    date: dt.date
    time: int
    line: str
    km: float
    species: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.time, int) or not 0 <= self.time < MINUTES_PER_DAY:
            raise ValueError(f"time must be an int in [0, {MINUTES_PER_DAY}), got {self.time!r}")
        if not self.line:
            raise ValueError("line identifier must be non-empty")
        if not math.isfinite(self.km) or self.km < 0:
            raise ValueError(f"km must be a finite non-negative number, got {self.km!r}")

    @property
    def month(self) -> int:
        return self.date.month

    @property
    def hour(self) -> float:
        """Time of day in fractional hours (e.g. 18:23 -> 18.383...)."""
        return self.time / 60.0


@dataclass(frozen=True)
class Dataset:
    """Accident records together with the observation period that produced them.

    The period is what the exposure time T is computed from, so it must be
    stated even when no accident falls on its first or last day.
    """

    records: tuple[AccidentRecord, ...]
    period_start: dt.date
    period_end: dt.date

    def __post_init__(self) -> None:
        if self.period_end < self.period_start:
            raise ValueError("period_end precedes period_start")
        for rec in self.records:
            if not self.period_start <= rec.date <= self.period_end:
                raise ValueError(
                    f"record dated {rec.date} falls outside period "
                    f"{self.period_start}..{self.period_end}"
                )

    @property
    def n(self) -> int:
        """Total number of records (N)."""
        return len(self.records)

    @property
    def total_days(self) -> int:
        """Calendar days in the observation period, inclusive."""
        return count_days(self.period_start, self.period_end)


def _open_text(stream: Union[str, IO[str]]) -> IO[str]:
    if isinstance(stream, str):
        return io.StringIO(stream)
    return stream


def _read_header(reader: Iterable[list[str]], expected: tuple[str, ...], what: str) -> bool:
    """Consume and check the header row.  Returns False when the stream is empty."""
    try:
        header = next(iter(reader))
    except StopIteration:
        return False
    got = tuple(cell.strip() for cell in header)
    if got != expected:
        raise ParseError(
            f"{what} header must be {','.join(expected)!r}, got {','.join(got)!r}",
            line_no=1,
        )
    return True


def _parse_time_field(text: str, line_no: int) -> int:
    parts = text.strip().split(":")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ParseError(f"time must be HH:MM, got {text!r}", line_no)
    hh, mm = int(parts[0]), int(parts[1])
    if hh > 23 or mm > 59:
        raise ParseError(f"time out of range, got {text!r}", line_no)
    return hh * 60 + mm


def _parse_float_field(text: str, name: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name} must be a number, got {text!r}", line_no) from None
    if not math.isfinite(value):
        raise ParseError(f"{name} must be finite, got {text!r}", line_no)
    return value


def parse_accidents(stream: Union[str, IO[str]], period: tuple[dt.date, dt.date]) -> Dataset:
    """Parse accident CSV (``date,time,line,km,species``) into a Dataset.

    Parsing is strict: any malformed row aborts with a ParseError naming the
    offending physical line, as does a record dated outside ``period``.  An
    input with no data rows is an error.

    Args:
        stream: CSV text or an open text stream.
        period: inclusive (start, end) observation dates.

    Raises:
        ParseError: malformed header, row, field, or out-of-period record.
    """
    start, end = period
    reader = csv.reader(_open_text(stream))
    if not _read_header(reader, ACCIDENT_HEADER, "accident"):
        raise ParseError("empty accident file")
    records: list[AccidentRecord] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(ACCIDENT_HEADER):
            raise ParseError(f"expected {len(ACCIDENT_HEADER)} fields, got {len(row)}", line_no)
        date_text, time_text, line, km_text, species = (cell.strip() for cell in row)
        try:
            date = dt.date.fromisoformat(date_text)
        except ValueError:
            raise ParseError(f"invalid calendar date {date_text!r}", line_no) from None
        time = _parse_time_field(time_text, line_no)
        km = _parse_float_field(km_text, "km", line_no)
        if km < 0:
            raise ParseError(f"km must be non-negative, got {km_text!r}", line_no)
        if not line:
            raise ParseError("line identifier must be non-empty", line_no)
        if not start <= date <= end:
            raise ParseError(f"record dated {date} outside period {start}..{end}", line_no)
        records.append(AccidentRecord(date=date, time=time, line=line, km=km, species=species))
    if not records:
        raise ParseError("no accident records in input")
    return Dataset(records=tuple(records), period_start=start, period_end=end)


def dataset_to_csv(data: Dataset) -> str:
    """Serialize a Dataset back to accident CSV.  Round-trips via parse_accidents."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ACCIDENT_HEADER)
    for rec in data.records:
        hh, mm = divmod(rec.time, 60)
        writer.writerow([rec.date.isoformat(), f"{hh:02d}:{mm:02d}", rec.line, repr(rec.km), rec.species])
    return out.getvalue()


@dataclass(frozen=True)
class TrafficTable:
    """Daily train counts per (line, km bin).

    Keys are (line, bin start); bin starts are multiples of ``delta_x``.
    Unknown cells count as zero traffic.
    """

    counts: dict[tuple[str, float], float]
    delta_x: float

    def __post_init__(self) -> None:
        if self.delta_x <= 0:
            raise ValueError(f"delta_x must be positive, got {self.delta_x!r}")
        for (line, start), value in self.counts.items():
            ratio = start / self.delta_x
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"bin start {start} on line {line} is not a multiple of {self.delta_x}")
            if value < 0:
                raise ValueError(f"negative count {value} on line {line} at km {start}")

    def count(self, line: str, km: float) -> float:
        """Trains per day through the bin containing ``km`` on ``line`` (0 if unknown)."""
        return self.counts.get((line, bin_start(km, self.delta_x)), 0.0)

    @property
    def lines(self) -> tuple[str, ...]:
        return tuple(sorted({line for line, _ in self.counts}))

    def bins_for(self, line: str) -> tuple[float, ...]:
        return tuple(sorted(start for ln, start in self.counts if ln == line))


def parse_traffic(stream: Union[str, IO[str]], delta_x: float) -> TrafficTable:
    """Parse traffic CSV (``line,km_from,count``) into a TrafficTable.

    km_from must sit on the ``delta_x`` grid.  Duplicate (line, bin) rows are
    summed.  An empty stream yields an empty table (all lookups return 0).
    """
    reader = csv.reader(_open_text(stream))
    counts: dict[tuple[str, float], float] = {}
    if not _read_header(reader, TRAFFIC_HEADER, "traffic"):
        return TrafficTable(counts={}, delta_x=delta_x)
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRAFFIC_HEADER):
            raise ParseError(f"expected {len(TRAFFIC_HEADER)} fields, got {len(row)}", line_no)
        line, km_text, count_text = (cell.strip() for cell in row)
        if not line:
            raise ParseError("line identifier must be non-empty", line_no)
        km_from = _parse_float_field(km_text, "km_from", line_no)
        ratio = km_from / delta_x
        if abs(ratio - round(ratio)) > 1e-9:
            raise ParseError(f"km_from {km_text} is not aligned to the {delta_x} km grid", line_no)
        count = _parse_float_field(count_text, "count", line_no)
        if count < 0:
            raise ParseError(f"count must be non-negative, got {count_text!r}", line_no)
        key = (line, round(ratio) * delta_x)
        counts[key] = counts.get(key, 0.0) + count
    return TrafficTable(counts=counts, delta_x=delta_x)


def parse_traffic_runs(stream: Union[str, IO[str]], delta_x: float) -> TrafficTable:
    """Aggregate per-train run records into a daily-count TrafficTable.

    Input CSV is ``line,km_from,km_to,departure`` with one row per train run
    on a representative day.  A run adds one train to every delta_x bin its
    [km_from, km_to) extent overlaps; the departure time is validated but not
    retained (time-of-day shaping is owned by the traffic profile).
    """
    reader = csv.reader(_open_text(stream))
    counts: dict[tuple[str, float], float] = {}
    if not _read_header(reader, TRAFFIC_RUN_HEADER, "traffic run"):
        return TrafficTable(counts={}, delta_x=delta_x)
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRAFFIC_RUN_HEADER):
            raise ParseError(f"expected {len(TRAFFIC_RUN_HEADER)} fields, got {len(row)}", line_no)
        line, from_text, to_text, dep_text = (cell.strip() for cell in row)
        if not line:
            raise ParseError("line identifier must be non-empty", line_no)
        km_from = _parse_float_field(from_text, "km_from", line_no)
        km_to = _parse_float_field(to_text, "km_to", line_no)
        if km_from < 0 or km_to <= km_from:
            raise ParseError(f"need 0 <= km_from < km_to, got {from_text}..{to_text}", line_no)
        _parse_time_field(dep_text, line_no)
        first = int(bin_start(km_from, delta_x) / delta_x + 0.5)
        idx = first
        while idx * delta_x < km_to:
            # open-interval overlap: a run touching a bin only at its edge adds nothing
            if (idx + 1) * delta_x > km_from:
                key = (line, idx * delta_x)
                counts[key] = counts.get(key, 0.0) + 1.0
            idx += 1
    return TrafficTable(counts=counts, delta_x=delta_x)


@dataclass(frozen=True)
class LineGeometry:
    """Calibrated polyline of one railway line.

    ``vertices`` are (lat, lon, km) triples with strictly increasing km; the
    km values tie track positions to the map, so at least two are required.
    """

    line: str
    vertices: tuple[tuple[float, float, float], ...]
    _kms: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError(f"line {self.line}: need at least 2 vertices")
        kms = tuple(v[2] for v in self.vertices)
        for a, b in zip(kms, kms[1:]):
            if b <= a:
                raise ValueError(f"line {self.line}: km values must strictly increase ({a} -> {b})")
        for lat, lon, _ in self.vertices:
            if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
                raise ValueError(f"line {self.line}: coordinate ({lat}, {lon}) out of range")
        object.__setattr__(self, "_kms", kms)

    @property
    def km_min(self) -> float:
        return self.vertices[0][2]

    @property
    def km_max(self) -> float:
        return self.vertices[-1][2]


def km_to_geo(geometry: LineGeometry, km: float) -> tuple[float, float]:
    """Map a km post on a line to (lat, lon) by linear interpolation.

    Positions between calibration vertices interpolate both coordinates
    linearly in km, which keeps the mapping continuous and monotone along
    each polyline segment.

    Raises:
        ValueError: km outside the calibrated [km_min, km_max] range.
    """
    if not geometry.km_min <= km <= geometry.km_max:
        raise ValueError(
            f"km {km} outside calibrated range "
            f"[{geometry.km_min}, {geometry.km_max}] of line {geometry.line}"
        )
    kms = geometry._kms
    idx = bisect_right(kms, km) - 1
    if idx == len(kms) - 1:
        lat, lon, _ = geometry.vertices[-1]
        return (lat, lon)
    lat0, lon0, k0 = geometry.vertices[idx]
    lat1, lon1, k1 = geometry.vertices[idx + 1]
    if km == k0:
        return (lat0, lon0)
    t = (km - k0) / (k1 - k0)
    return (lat0 + t * (lat1 - lat0), lon0 + t * (lon1 - lon0))


def parse_geometries(stream: Union[str, IO[str]]) -> dict[str, LineGeometry]:
    """Parse line geometries from GeoJSON.

    Expects a FeatureCollection of LineString features; each feature carries
    ``properties.line`` and a ``properties.km`` array parallel to the
    coordinate list (GeoJSON coordinates are [lon, lat]).
    """
    text = stream if isinstance(stream, str) else stream.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid GeoJSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError("geometry document must be a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise ParseError("FeatureCollection must carry a 'features' array")
    result: dict[str, LineGeometry] = {}
    for i, feature in enumerate(features):
        geom = feature.get("geometry") or {}
        props = feature.get("properties") or {}
        if geom.get("type") != "LineString":
            raise ParseError(f"feature {i}: geometry must be a LineString")
        line = props.get("line")
        kms = props.get("km")
        coords = geom.get("coordinates") or []
        if not line:
            raise ParseError(f"feature {i}: missing 'line' property")
        if not isinstance(kms, list) or len(kms) != len(coords):
            raise ParseError(f"feature {i}: 'km' array must parallel the coordinates")
        if line in result:
            raise ParseError(f"feature {i}: duplicate geometry for line {line}")
        vertices = tuple(
            (float(lat), float(lon), float(km)) for (lon, lat), km in zip(coords, kms)
        )
        result[str(line)] = LineGeometry(line=str(line), vertices=vertices)
    return result


def geometries_to_geojson(geometries: dict[str, LineGeometry]) -> str:
    """Serialize line geometries to the GeoJSON form parse_geometries reads."""
    features = []
    for line in sorted(geometries):
        geom = geometries[line]
        features.append(
            {
                "type": "Feature",
                "properties": {"line": geom.line, "km": [v[2] for v in geom.vertices]},
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[v[1], v[0]] for v in geom.vertices],
                },
            }
        )
    return json.dumps({"type": "FeatureCollection", "features": features}, sort_keys=True)


@dataclass(frozen=True)
class SpeedProfile:
    """Maximum permitted speed along one line as disjoint [km_from, km_to) steps."""

    line: str
    intervals: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        prev_end = -math.inf
        for km_from, km_to, vmax in self.intervals:
            if km_to <= km_from:
                raise ValueError(f"line {self.line}: empty interval {km_from}..{km_to}")
            if km_from < prev_end:
                raise ValueError(f"line {self.line}: overlapping interval at km {km_from}")
            if vmax <= 0:
                raise ValueError(f"line {self.line}: vmax must be positive, got {vmax}")
            prev_end = km_to

    def speed_at(self, km: float) -> float | None:
        """vmax of the interval containing ``km``, or None where undefined."""
        for km_from, km_to, vmax in self.intervals:
            if km_from <= km < km_to:
                return vmax
        return None


def parse_speed_profiles(stream: Union[str, IO[str]]) -> dict[str, SpeedProfile]:
    """Parse speed CSV (``line,km_from,km_to,vmax``) into per-line SpeedProfiles."""
    reader = csv.reader(_open_text(stream))
    if not _read_header(reader, SPEED_HEADER, "speed"):
        return {}
    rows: dict[str, list[tuple[float, float, float]]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(SPEED_HEADER):
            raise ParseError(f"expected {len(SPEED_HEADER)} fields, got {len(row)}", line_no)
        line, from_text, to_text, vmax_text = (cell.strip() for cell in row)
        if not line:
            raise ParseError("line identifier must be non-empty", line_no)
        km_from = _parse_float_field(from_text, "km_from", line_no)
        km_to = _parse_float_field(to_text, "km_to", line_no)
        vmax = _parse_float_field(vmax_text, "vmax", line_no)
        if vmax <= 0:
            raise ParseError(f"vmax must be positive, got {vmax_text!r}", line_no)
        rows.setdefault(line, []).append((km_from, km_to, vmax))
    profiles: dict[str, SpeedProfile] = {}
    for line, intervals in rows.items():
        intervals.sort(key=lambda iv: iv[0])
        try:
            profiles[line] = SpeedProfile(line=line, intervals=tuple(intervals))
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    return profiles
