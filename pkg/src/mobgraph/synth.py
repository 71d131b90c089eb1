"""Synthetic geo-event corpora with planted homes, zones and commuting blocks.

The generator stands in for an unavailable real feed: each user lives in
one zone, posts around that zone's center at night, and scatters day
events over zones drawn from a commute-propensity matrix. Timestamps encode
the day/night split directly so the ingest night filter is exercised
end-to-end. Everything is a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .geo import GeoPoint
from .ingest import MINUTES_PER_DAY, GeoEvent, NightWindow
from .partition import entropy_labels, mutual_information_labels

DAY_WINDOW_START = 9 * 60
DAY_WINDOW_END = 18 * 60


@dataclass
class SynthConfig:
    """Planted-truth generator settings."""

    zone_centers: list[GeoPoint]
    users_per_zone: int = 10
    night_events: int = 5
    day_events: int = 10
    noise_sigma: float = 0.005  # degrees
    commute: list[list[float]] | None = None  # zone x zone propensities in [0, 1]
    zone_communities: list[int] | None = None
    seed: int = 0
    utc_offset_minutes: int = -480
    night_window: NightWindow = field(default_factory=NightWindow)
    start_date: date = date(2014, 1, 1)
    days: int = 28

    def __post_init__(self) -> None:
        z = len(self.zone_centers)
        if z < 1:
            raise ValueError("at least one zone is required")
        if self.users_per_zone < 1:
            raise ValueError("users_per_zone must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.night_window.local_minutes() == 0:
            raise ValueError("night window must be non-empty")
        if self.commute is None:
            self.commute = [[1.0 if i == j else 0.0 for j in range(z)] for i in range(z)]
        if len(self.commute) != z or any(len(row) != z for row in self.commute):
            raise ValueError("commute matrix must be square over the zones")
        for row in self.commute:
            for value in row:
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"commute propensity out of [0, 1]: {value}")
        if self.zone_communities is None:
            self.zone_communities = list(range(z))
        if len(self.zone_communities) != z:
            raise ValueError("zone_communities must name one community per zone")


@dataclass
class GroundTruth:
    """What the generator planted: each user's zone, each zone's community."""

    user_zone: dict[str, int]
    zone_community: list[int]


def block_commute_matrix(blocks: Sequence[int], within: float = 0.5,
                         cross: float = 0.0, home: float = 1.0) -> list[list[float]]:
    """Commute propensities that are dense inside blocks and sparse across."""
    z = len(blocks)
    matrix = []
    for i in range(z):
        row = []
        for j in range(z):
            if i == j:
                row.append(home)
            elif blocks[i] == blocks[j]:
                row.append(within)
            else:
                row.append(cross)
        matrix.append(row)
    return matrix


def _scatter(rng: np.random.Generator, center: GeoPoint, sigma: float) -> GeoPoint:
    if sigma == 0.0:
        return center
    while True:  # isotropic Gaussian truncated at 3 sigma
        dlat, dlon = rng.normal(0.0, sigma, size=2)
        if dlat * dlat + dlon * dlon <= (3.0 * sigma) ** 2:
            return GeoPoint(center.lat + dlat, center.lon + dlon)


def _instant(rng: np.random.Generator, cfg: SynthConfig, night: bool) -> datetime:
    day = int(rng.integers(0, cfg.days))
    if night:
        window = cfg.night_window
        offset = int(rng.integers(0, window.local_minutes()))
        minute = (window.start_minute + offset) % MINUTES_PER_DAY
    else:
        minute = int(rng.integers(DAY_WINDOW_START, DAY_WINDOW_END))
    second = int(rng.integers(0, 60))
    local = datetime.combine(
        cfg.start_date + timedelta(days=day),
        time(minute // 60, minute % 60, second),
        tzinfo=timezone.utc,
    )
    # the stored instant is UTC; the night filter adds the offset back
    return local - timedelta(minutes=cfg.utc_offset_minutes)


def generate(cfg: SynthConfig) -> tuple[list[GeoEvent], GroundTruth]:
    """Generate the event stream (time-ordered) and its ground truth."""
    rng = np.random.default_rng(cfg.seed)
    zones = cfg.zone_centers
    commute = np.asarray(cfg.commute, dtype=float)
    events: list[GeoEvent] = []
    user_zone: dict[str, int] = {}
    eid = 0
    for z in range(len(zones)):
        row = commute[z]
        row_sum = float(row.sum())
        probs = row / row_sum if row_sum > 0 else None
        for u in range(cfg.users_per_zone):
            uid = f"u{z:02d}-{u:05d}"
            user_zone[uid] = z
            for _ in range(cfg.night_events):
                point = _scatter(rng, zones[z], cfg.noise_sigma)
                events.append(GeoEvent(f"e{eid:08d}", uid, _instant(rng, cfg, True), point))
                eid += 1
            for _ in range(cfg.day_events):
                dest = z if probs is None else int(rng.choice(len(zones), p=probs))
                point = _scatter(rng, zones[dest], cfg.noise_sigma)
                events.append(GeoEvent(f"e{eid:08d}", uid, _instant(rng, cfg, False), point))
                eid += 1
    events.sort(key=lambda e: (e.instant, e.event_id))
    return events, GroundTruth(user_zone, list(cfg.zone_communities or []))


def nmi_labels(a: Sequence[int], b: Sequence[int]) -> float:
    """Normalized mutual information, 2I/(H1+H2), in [0, 1].

    Two constant labelings agree perfectly (1.0); one constant against a
    varied labeling shares nothing (0.0).
    """
    h1 = entropy_labels(a)
    h2 = entropy_labels(b)
    if h1 == 0.0 and h2 == 0.0:
        return 1.0
    if h1 == 0.0 or h2 == 0.0:
        return 0.0
    value = 2.0 * mutual_information_labels(a, b) / (h1 + h2)
    return min(1.0, max(0.0, value))


# ---------------------------------------------------------------------------
# flat key-value config files


def write_synth_config(cfg: SynthConfig, path) -> None:
    lines = [
        f"seed = {cfg.seed}",
        "zones = " + ", ".join(f"{p.lat!r}:{p.lon!r}" for p in cfg.zone_centers),
        f"users_per_zone = {cfg.users_per_zone}",
        f"night_events = {cfg.night_events}",
        f"day_events = {cfg.day_events}",
        f"noise_sigma = {cfg.noise_sigma!r}",
        "commute = " + " ; ".join(
            " ".join(repr(v) for v in row) for row in (cfg.commute or [])),
        "communities = " + " ".join(str(c) for c in (cfg.zone_communities or [])),
        f"utc_offset = {cfg.utc_offset_minutes}",
        f"start_date = {cfg.start_date.isoformat()}",
        f"days = {cfg.days}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_synth_config(path) -> SynthConfig:
    """Parse the flat ``key = value`` layout produced by :func:`write_synth_config`."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad synth config line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    try:
        zones = [GeoPoint(float(lat), float(lon))
                 for lat, lon in (part.split(":") for part in values["zones"].split(","))]
    except KeyError as exc:
        raise ValueError(f"synth config missing key {exc}") from exc
    commute = None
    if values.get("commute"):
        commute = [[float(v) for v in row.split()] for row in values["commute"].split(";")]
    communities = None
    if values.get("communities"):
        communities = [int(v) for v in values["communities"].split()]
    return SynthConfig(
        zone_centers=zones,
        users_per_zone=int(values.get("users_per_zone", 10)),
        night_events=int(values.get("night_events", 5)),
        day_events=int(values.get("day_events", 10)),
        noise_sigma=float(values.get("noise_sigma", 0.005)),
        commute=commute,
        zone_communities=communities,
        seed=int(values.get("seed", 0)),
        utc_offset_minutes=int(values.get("utc_offset", -480)),
        start_date=date.fromisoformat(values.get("start_date", "2014-01-01")),
        days=int(values.get("days", 28)),
    )
