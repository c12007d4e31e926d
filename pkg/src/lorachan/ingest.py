"""Dataset assembly: SNR estimation, receiver config, per-receiver series."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, SampleWindowError, UnknownReceiverError
from .geo import compute_distance
from .records import FrameRecord, GeoFix, Scenario, SnrSeries
from .sigmf_io import RecordIssue, parse_sigmf

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

MIN_NOISE_WINDOW = 64


def estimate_snr_from_iq(samples: np.ndarray, frame_start: int, frame_len: int,
                         noise_len: int) -> Optional[float]:
    """Estimate frame SNR in dB from synchronized IQ samples.

    Uses the mean squared magnitude over a noise-only window immediately
    before the frame and over the frame itself:
    ``10*log10((P_frame - P_noise) / P_noise)``. Returns None when the
    frame power does not exceed the noise power (estimator invalid, as
    opposed to a window error). This is an optional cross-check; the
    dataset's SNR annotations remain the source of truth.
    """
    if noise_len < MIN_NOISE_WINDOW:
        raise SampleWindowError(
            f"noise window of {noise_len} samples is below the minimum "
            f"{MIN_NOISE_WINDOW}")
    if frame_start - noise_len < 0 or frame_start + frame_len > len(samples):
        raise SampleWindowError(
            f"windows [{frame_start - noise_len}, {frame_start + frame_len}) "
            f"fall outside {len(samples)} samples")
    if frame_len <= 0:
        raise SampleWindowError("frame window must be non-empty")
    noise = samples[frame_start - noise_len:frame_start]
    frame = samples[frame_start:frame_start + frame_len]
    p_noise = np.mean(np.abs(noise) ** 2)
    p_frame = np.mean(np.abs(frame) ** 2)
    if p_noise <= 0 or p_frame <= p_noise:
        return None
    return float(10.0 * np.log10((p_frame - p_noise) / p_noise))


@dataclass
class ReceiverConfig:
    """Receiver positions plus optional annotation-key overrides."""

    positions: dict[str, GeoFix]
    field_map: dict[str, str] = field(default_factory=dict)


def load_receiver_config(path: str | Path) -> ReceiverConfig:
    """Load a JSON or TOML config with ``receivers`` and optional ``field_map``.

    Expected shape::

        receivers = [{id = "gw0", lat = 46.52, lon = 6.57, alt = 420.0}, ...]
        [field_map]
        snr = "lora:snr"
    """
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        doc = _toml.loads(raw.decode("utf-8"))
    else:
        doc = json.loads(raw)
    positions = {}
    for entry in doc.get("receivers", []):
        positions[str(entry["id"])] = GeoFix(
            float(entry["lat"]), float(entry["lon"]), float(entry["alt"]))
    field_map = {str(k): str(v) for k, v in doc.get("field_map", {}).items()}
    return ReceiverConfig(positions=positions, field_map=field_map)


@dataclass
class SeriesBuildResult:
    series: list[SnrSeries]
    n_excluded: int


def build_snr_series(records: Sequence[FrameRecord],
                     receiver_positions: Mapping[str, GeoFix],
                     scenario: Scenario,
                     min_distance_m: float = 1.0) -> SeriesBuildResult:
    """Group records by receiver into distance-sorted SNR series.

    Distances come from compute_distance between each record's transmitter
    fix and the configured receiver position. Records closer than
    ``min_distance_m`` are excluded (and counted) to keep log-distance
    coordinates well defined near the reference.
    """
    by_receiver: dict[str, list[tuple[float, float]]] = {}
    n_excluded = 0
    for rec in records:
        if rec.receiver_id not in receiver_positions:
            raise UnknownReceiverError(
                f"record {rec.frame_id} references receiver "
                f"{rec.receiver_id!r} with no configured position")
        d = compute_distance(rec.tx_position, receiver_positions[rec.receiver_id])
        if d < min_distance_m:
            n_excluded += 1
            continue
        by_receiver.setdefault(rec.receiver_id, []).append((d, rec.snr_db))

    series = []
    for rx_id in sorted(by_receiver):
        pairs = np.asarray(by_receiver[rx_id], dtype=np.float64)
        order = np.argsort(pairs[:, 0], kind="stable")
        series.append(SnrSeries(receiver_id=rx_id, scenario=scenario,
                                distances_m=pairs[order, 0],
                                snr_db=pairs[order, 1]))
    return SeriesBuildResult(series=series, n_excluded=n_excluded)


@dataclass
class DatasetLoadResult:
    records: list[FrameRecord]
    issues: list[RecordIssue]
    meta_files: list[Path]


def load_dataset(dataset_dir: str | Path,
                 field_map: Optional[Mapping[str, str]] = None
                 ) -> DatasetLoadResult:
    """Parse every ``.sigmf-meta`` file under a dataset directory."""
    dataset_dir = Path(dataset_dir)
    meta_files = sorted(dataset_dir.glob("*.sigmf-meta"))
    records: list[FrameRecord] = []
    issues: list[RecordIssue] = []
    for meta in meta_files:
        result = parse_sigmf(meta.read_bytes(), field_map=field_map)
        records.extend(result.records)
        issues.extend(result.issues)
    if not meta_files:
        raise InsufficientDataError(
            f"no .sigmf-meta files found in {dataset_dir}")
    return DatasetLoadResult(records=records, issues=issues, meta_files=meta_files)
