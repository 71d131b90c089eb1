"""Event-file ingestion: parsing, spatial and night-window filters, per-user grouping.

Input records are geo-tagged messages with an opaque id, an opaque user id,
a UTC timestamp and a coordinate pair. Two on-disk layouts are supported:
NDJSON (one ``{"id", "user", "ts", "lat", "lon"}`` object per line) and CSV
with the header ``id,user,ts,lat,lon``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable, Sequence

from .geo import BoundingBox, GeoPoint

log = logging.getLogger(__name__)

FORMAT_NDJSON = "ndjson"
FORMAT_CSV = "csv"

_CSV_HEADER = ["id", "user", "ts", "lat", "lon"]
MINUTES_PER_DAY = 24 * 60


@dataclass(frozen=True)
class GeoEvent:
    """One geo-tagged message."""

    event_id: str
    user_id: str
    instant: datetime  # timezone-aware, UTC
    location: GeoPoint


@dataclass(frozen=True)
class RecordIssue:
    """A skipped or suspicious input record, keyed by 1-based line number."""

    line: int
    message: str


@dataclass(frozen=True)
class NightWindow:
    """Half-open local-time window [start, end), wrapping midnight when start > end.

    Minutes count from local midnight; ``end_minute`` may be 1440 so that a
    full-day window (00:00-24:00) is expressible. ``start == end`` keeps
    nothing. The UTC offset is a single fixed value for the whole region
    (no DST modeling).
    """

    start_minute: int = 22 * 60
    end_minute: int = 4 * 60
    utc_offset_minutes: int = -480

    def __post_init__(self) -> None:
        if not 0 <= self.start_minute < MINUTES_PER_DAY:
            raise ValueError(f"window start out of range: {self.start_minute}")
        if not 0 <= self.end_minute <= MINUTES_PER_DAY:
            raise ValueError(f"window end out of range: {self.end_minute}")
        if not -840 <= self.utc_offset_minutes <= 840:
            raise ValueError(f"utc offset out of range [-840, 840]: {self.utc_offset_minutes}")

    @classmethod
    def parse(cls, window: str, utc_offset: str | int = -480) -> "NightWindow":
        """Build from ``"HH:MM-HH:MM"`` plus an offset like ``"-08:00"`` or minutes."""
        try:
            start_s, end_s = window.split("-")
            start = _parse_clock_minute(start_s)
            end = _parse_clock_minute(end_s, allow_midnight_end=True)
        except ValueError as exc:
            raise ValueError(f"bad night window {window!r}: {exc}") from exc
        return cls(start, end, parse_utc_offset(utc_offset))

    def keeps(self, instant: datetime) -> bool:
        local = instant + timedelta(minutes=self.utc_offset_minutes)
        minute = local.hour * 60 + local.minute
        if self.start_minute < self.end_minute:
            return self.start_minute <= minute < self.end_minute
        if self.start_minute > self.end_minute:
            return minute >= self.start_minute or minute < self.end_minute
        return False

    def local_minutes(self) -> int:
        """Length of the window in minutes."""
        if self.start_minute == self.end_minute:
            return 0
        if self.end_minute > self.start_minute:
            return self.end_minute - self.start_minute
        return self.end_minute - self.start_minute + MINUTES_PER_DAY


def _parse_clock_minute(text: str, allow_midnight_end: bool = False) -> int:
    hh, mm = text.strip().split(":")
    hours, minutes = int(hh), int(mm)
    if hours == 24 and minutes == 0 and allow_midnight_end:
        return MINUTES_PER_DAY
    if not (0 <= hours < 24 and 0 <= minutes < 60):
        raise ValueError(f"bad clock time {text!r}")
    return hours * 60 + minutes


def parse_utc_offset(value: str | int) -> int:
    """Offset minutes from either an int or a ``±HH:MM`` string."""
    if isinstance(value, int):
        return value
    text = value.strip()
    if ":" in text:
        sign = -1 if text.startswith("-") else 1
        body = text.lstrip("+-")
        hh, mm = body.split(":")
        return sign * (int(hh) * 60 + int(mm))
    return int(text)


def parse_timestamp_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp and normalize it to UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp_utc(instant: datetime) -> str:
    return instant.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_events(stream: IO, fmt: str = FORMAT_NDJSON,
                 seen_ids: set[str] | None = None) -> tuple[list[GeoEvent], list[RecordIssue]]:
    """Parse a stream of event records.

    Malformed records never abort the run: each one is collected as a
    :class:`RecordIssue` with its line number and skipped. Duplicate event
    ids keep the first occurrence and record an issue. ``seen_ids`` lets
    callers deduplicate across several files.
    """
    if isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    if fmt == FORMAT_NDJSON:
        rows = _ndjson_rows(stream)
    elif fmt == FORMAT_CSV:
        rows = _csv_rows(stream)
    else:
        raise ValueError(f"unknown event format {fmt!r}")

    seen = seen_ids if seen_ids is not None else set()
    events: list[GeoEvent] = []
    issues: list[RecordIssue] = []
    for line_no, row, err in rows:
        if err is not None:
            issues.append(RecordIssue(line_no, err))
            continue
        try:
            event = GeoEvent(
                event_id=str(row["id"]),
                user_id=str(row["user"]),
                instant=parse_timestamp_utc(str(row["ts"])),
                location=GeoPoint(float(row["lat"]), float(row["lon"])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(RecordIssue(line_no, f"bad record: {exc}"))
            continue
        if event.event_id in seen:
            issues.append(RecordIssue(line_no, f"duplicate event id {event.event_id!r}; kept first"))
            log.warning("duplicate event id %r at line %d", event.event_id, line_no)
            continue
        seen.add(event.event_id)
        events.append(event)
    return events, issues


def _ndjson_rows(stream: IO) -> Iterable[tuple[int, dict | None, str | None]]:
    for line_no, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            yield line_no, None, f"invalid JSON: {exc.msg}"
            continue
        if not isinstance(obj, dict):
            yield line_no, None, "record is not an object"
            continue
        yield line_no, obj, None


def _csv_rows(stream: IO) -> Iterable[tuple[int, dict | None, str | None]]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        return
    if [h.strip() for h in header] != _CSV_HEADER:
        yield 1, None, f"bad CSV header {header!r}, expected {_CSV_HEADER!r}"
        return
    for row in reader:
        if not row:
            continue
        if len(row) != len(_CSV_HEADER):
            yield reader.line_num, None, f"expected {len(_CSV_HEADER)} fields, got {len(row)}"
            continue
        yield reader.line_num, dict(zip(_CSV_HEADER, row)), None


def write_events_ndjson(events: Iterable[GeoEvent], path) -> int:
    """Write events in the canonical NDJSON layout; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in events:
            fh.write(json.dumps({
                "id": e.event_id,
                "user": e.user_id,
                "ts": format_timestamp_utc(e.instant),
                "lat": e.location.lat,
                "lon": e.location.lon,
            }) + "\n")
            count += 1
    return count


def filter_bbox(events: Sequence[GeoEvent], bb: BoundingBox) -> list[GeoEvent]:
    return [e for e in events if bb.contains(e.location)]


def filter_night(events: Sequence[GeoEvent], window: NightWindow) -> list[GeoEvent]:
    return [e for e in events if window.keeps(e.instant)]


def group_by_user(events: Sequence[GeoEvent]) -> dict[str, list[GeoEvent]]:
    """Partition events per user, preserving input order within each group."""
    groups: dict[str, list[GeoEvent]] = {}
    for e in events:
        groups.setdefault(e.user_id, []).append(e)
    return groups
