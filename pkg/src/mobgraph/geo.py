"""Geodesic primitives shared by the whole toolkit.

Coordinates are WGS-84 decimal degrees. Two distance notions coexist on
purpose: great-circle kilometres (haversine) for assigning points to
neighborhood centers and for reporting, and plain Euclidean distance in
degree space for density clustering, whose radius parameters are expressed
in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# IUGG mean Earth radius.
EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range [-90, 90]: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range [-180, 180]: {self.lon}")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned lat/lon rectangle; all four edges are inclusive."""

    south_west: GeoPoint
    north_east: GeoPoint

    def __post_init__(self) -> None:
        if (self.south_west.lat > self.north_east.lat
                or self.south_west.lon > self.north_east.lon):
            raise ValueError("south_west corner must not exceed north_east corner")

    def contains(self, p: GeoPoint) -> bool:
        return (self.south_west.lat <= p.lat <= self.north_east.lat
                and self.south_west.lon <= p.lon <= self.north_east.lon)


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in kilometres."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    # rounding can push h a hair above 1 for near-antipodal pairs
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def euclidean_deg(a: GeoPoint, b: GeoPoint) -> float:
    """Euclidean distance in raw degree space (the clustering metric)."""
    return math.hypot(a.lat - b.lat, a.lon - b.lon)


def nearest_center(p: GeoPoint, centers: Sequence[GeoPoint]) -> int:
    """Index of the center nearest to ``p`` by great-circle distance.

    Ties are broken toward the lowest index so the result is deterministic.
    """
    if len(centers) == 0:
        raise ValueError("nearest_center requires at least one center")
    best = 0
    best_d = haversine_km(p, centers[0])
    for i in range(1, len(centers)):
        d = haversine_km(p, centers[i])
        if d < best_d:
            best, best_d = i, d
    return best


def nearest_center_bulk(lats: np.ndarray, lons: np.ndarray,
                        centers: Sequence[GeoPoint], chunk: int = 4096) -> np.ndarray:
    """Vectorized ``nearest_center`` over many points.

    Returns one center index per input point, with the same lowest-index
    tie-break as the scalar version (``argmin`` keeps the first minimum).
    """
    if len(centers) == 0:
        raise ValueError("nearest_center_bulk requires at least one center")
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    clat = np.radians(np.array([c.lat for c in centers], dtype=float))
    clon = np.radians(np.array([c.lon for c in centers], dtype=float))
    cos_clat = np.cos(clat)
    out = np.empty(len(lats), dtype=np.int64)
    for start in range(0, len(lats), chunk):
        plat = np.radians(lats[start:start + chunk])[:, None]
        plon = np.radians(lons[start:start + chunk])[:, None]
        h = (np.sin((clat[None, :] - plat) / 2.0) ** 2
             + np.cos(plat) * cos_clat[None, :] * np.sin((clon[None, :] - plon) / 2.0) ** 2)
        # monotone in distance, so argmin over h == argmin over distance
        out[start:start + chunk] = np.argmin(h, axis=1)
    return out
