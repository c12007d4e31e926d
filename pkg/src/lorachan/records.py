"""Core record types: GPS fixes, frame annotations, and SNR series."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidRecordError

VALID_SPREADING_FACTORS = (7, 8, 9, 10, 11, 12)
VALID_BANDWIDTHS_HZ = (125e3, 250e3, 500e3)
VALID_CODE_RATES = ("4/5", "4/6", "4/7", "4/8")


class Scenario(str, enum.Enum):
    """Measurement scenario a series or model belongs to."""

    UAV_LOS = "uav-los"
    UAV_NLOS = "uav-nlos"
    PEDESTRIAN_NLOS = "ped-nlos"

    @classmethod
    def from_tag(cls, tag: str) -> "Scenario":
        for member in cls:
            if member.value == tag:
                return member
        raise ValueError(f"unknown scenario tag {tag!r}; expected one of "
                         f"{[m.value for m in cls]}")


@dataclass(frozen=True)
class GeoFix:
    """A GPS position: latitude/longitude in degrees, altitude in meters."""

    latitude: float
    longitude: float
    altitude: float

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise InvalidRecordError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise InvalidRecordError(f"longitude {self.longitude} outside [-180, 180]")
        if not math.isfinite(self.altitude):
            raise InvalidRecordError(f"altitude {self.altitude} is not finite")


@dataclass(frozen=True)
class FrameRecord:
    """One received-frame annotation with resolved receiver identity.

    Timestamps are integer nanoseconds since the Unix epoch; ``payload``
    holds the raw frame payload bytes.
    """

    spreading_factor: int
    code_rate: str
    carrier_frequency_hz: float
    bandwidth_hz: float
    receiver_id: str
    sampling_rate_hz: float
    reception_time_ns: int
    snr_db: float
    tx_position: GeoFix
    velocity_mps: float
    cfo_hz: float
    frame_id: int
    payload: bytes
    iq_file_id: str
    frame_start: int
    iq_file_time_ns: int

    def validate(self) -> None:
        """Raise InvalidRecordError if any field invariant is violated."""
        problems = []
        if self.spreading_factor not in VALID_SPREADING_FACTORS:
            problems.append(f"spreading_factor {self.spreading_factor} not in 7..12")
        if self.code_rate not in VALID_CODE_RATES:
            problems.append(f"code_rate {self.code_rate!r} not one of {VALID_CODE_RATES}")
        if not any(math.isclose(self.bandwidth_hz, bw) for bw in VALID_BANDWIDTHS_HZ):
            problems.append(f"bandwidth {self.bandwidth_hz} Hz not one of {VALID_BANDWIDTHS_HZ}")
        if self.frame_start < 0:
            problems.append(f"frame_start {self.frame_start} is negative")
        if self.sampling_rate_hz <= 0:
            problems.append(f"sampling_rate {self.sampling_rate_hz} not positive")
        if not math.isfinite(self.snr_db):
            problems.append(f"snr {self.snr_db} is not finite")
        if problems:
            raise InvalidRecordError("; ".join(problems))


@dataclass
class SnrSeries:
    """Distance-sorted (distance, SNR) samples for one receiver.

    ``distances_m`` must be strictly positive, sorted ascending, and the
    same length as ``snr_db``.
    """

    receiver_id: str
    scenario: Scenario
    distances_m: np.ndarray
    snr_db: np.ndarray

    def __post_init__(self):
        self.distances_m = np.asarray(self.distances_m, dtype=np.float64)
        self.snr_db = np.asarray(self.snr_db, dtype=np.float64)
        if self.distances_m.shape != self.snr_db.shape or self.distances_m.ndim != 1:
            raise ValueError("distances and SNR must be 1-D arrays of equal length")
        if len(self.distances_m) and self.distances_m.min() <= 0:
            raise ValueError("all distances must be positive")
        if np.any(np.diff(self.distances_m) < 0):
            raise ValueError("distances must be sorted ascending")
        if not np.all(np.isfinite(self.snr_db)):
            raise ValueError("SNR values must be finite")

    def __len__(self) -> int:
        return len(self.distances_m)
