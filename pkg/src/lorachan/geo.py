"""Tx-Rx range from GPS fixes.

Distance is 3-D Euclidean in a local East-North-Up sense: great-circle
surface distance on the WGS-84 mean-radius sphere combined with the
altitude difference. UAV altitude therefore contributes to range.
"""
from __future__ import annotations

import math

from .records import GeoFix

# WGS-84 mean radius R1 = (2a + b) / 3
EARTH_RADIUS_M = 6_371_008.8


def horizontal_distance(a: GeoFix, b: GeoFix) -> float:
    """Great-circle distance in meters, ignoring altitude (haversine)."""
    lat1 = math.radians(a.latitude)
    lat2 = math.radians(b.latitude)
    dlat = math.radians(b.latitude - a.latitude)
    dlon = math.radians(b.longitude - a.longitude)
    h = (math.sin(dlat / 2.0) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2)
    return EARTH_RADIUS_M * 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def compute_distance(tx: GeoFix, rx: GeoFix) -> float:
    """3-D distance in meters between a transmitter and a receiver fix."""
    surface = horizontal_distance(tx, rx)
    vertical = tx.altitude - rx.altitude
    return math.hypot(surface, vertical)
