"""SigMF metadata and IQ sample I/O.

A dataset entry is a pair of files: a JSON ``.sigmf-meta`` document with
``global``, ``captures`` and ``annotations`` sections, and a raw
``.sigmf-data`` file of interleaved complex samples. Each annotation
describes one received frame; the mapping from frame fields to annotation
keys is configurable because deployed recorders name them differently.
"""
from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    InvalidRecordError,
    SampleWindowError,
    SigmfParseError,
    UnsupportedFormatError,
)
from .records import FrameRecord, GeoFix

SIGMF_VERSION = "1.0.0"

# Default annotation keys: snake_case field names under a "lora:" namespace,
# except where the SigMF core vocabulary already provides the slot.
DEFAULT_FIELD_MAP: dict[str, str] = {
    "spreading_factor": "lora:spreading_factor",
    "code_rate": "lora:code_rate",
    "carrier_frequency": "lora:carrier_frequency",
    "bandwidth": "lora:bandwidth",
    "receiver_id": "lora:receiver_id",
    "sampling_rate": "core:sample_rate",
    "reception_time": "lora:reception_time",
    "snr": "lora:snr",
    "tx_position": "lora:tx_position",
    "velocity": "lora:velocity",
    "cfo": "lora:cfo",
    "frame_id": "lora:frame_id",
    "payload": "lora:payload",
    "iq_file_id": "lora:iq_file_id",
    "frame_start": "core:sample_start",
    "iq_file_time": "lora:iq_file_time",
}

# Keys that live in the "global" section rather than on each annotation.
_GLOBAL_KEYS = frozenset({"core:sample_rate"})

# datatype tag -> numpy scalar type of one I/Q component (interleaved pairs)
_DATATYPES: dict[str, str] = {
    "cf32_le": "<f4",
    "cf64_le": "<f8",
    "ci16_le": "<i2",
    "ci8": "i1",
}


@dataclass
class RecordIssue:
    """A problem with one annotation, reported instead of silently dropping it."""

    annotation_index: int
    field: Optional[str]
    message: str

    def __str__(self) -> str:
        loc = f"annotation {self.annotation_index}"
        if self.field:
            loc += f", field {self.field!r}"
        return f"{loc}: {self.message}"


@dataclass
class SigmfParseResult:
    records: list[FrameRecord]
    issues: list[RecordIssue]
    global_info: dict = field(default_factory=dict)
    captures: list = field(default_factory=list)

    @property
    def datatype(self) -> str:
        return self.global_info.get("core:datatype", "cf32_le")


def _parse_time_ns(value) -> int:
    """Accept integer nanoseconds or an ISO 8601 string (up to ns digits)."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.replace("Z", "+00:00")
        frac_ns = 0
        if "." in text:
            head, _, rest = text.partition(".")
            digits = ""
            tail = ""
            for i, ch in enumerate(rest):
                if ch.isdigit():
                    digits += ch
                else:
                    tail = rest[i:]
                    break
            frac_ns = int(digits.ljust(9, "0")[:9])
            text = head + tail
        dt = _dt.datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=_dt.timezone.utc)
        return int(dt.timestamp()) * 1_000_000_000 + frac_ns
    raise ValueError(f"cannot interpret {value!r} as a timestamp")


def _parse_geofix(value) -> GeoFix:
    if isinstance(value, Mapping):
        return GeoFix(float(value["latitude"]), float(value["longitude"]),
                      float(value["altitude"]))
    if isinstance(value, Sequence) and len(value) == 3:
        return GeoFix(float(value[0]), float(value[1]), float(value[2]))
    raise ValueError(f"cannot interpret {value!r} as a position fix")


_FIELD_PARSERS = {
    "spreading_factor": int,
    "code_rate": str,
    "carrier_frequency": float,
    "bandwidth": float,
    "receiver_id": str,
    "sampling_rate": float,
    "reception_time": _parse_time_ns,
    "snr": float,
    "tx_position": _parse_geofix,
    "velocity": float,
    "cfo": float,
    "frame_id": int,
    "payload": bytes.fromhex,
    "iq_file_id": str,
    "frame_start": int,
    "iq_file_time": _parse_time_ns,
}

_RECORD_ATTRS = {
    "spreading_factor": "spreading_factor",
    "code_rate": "code_rate",
    "carrier_frequency": "carrier_frequency_hz",
    "bandwidth": "bandwidth_hz",
    "receiver_id": "receiver_id",
    "sampling_rate": "sampling_rate_hz",
    "reception_time": "reception_time_ns",
    "snr": "snr_db",
    "tx_position": "tx_position",
    "velocity": "velocity_mps",
    "cfo": "cfo_hz",
    "frame_id": "frame_id",
    "payload": "payload",
    "iq_file_id": "iq_file_id",
    "frame_start": "frame_start",
    "iq_file_time": "iq_file_time_ns",
}


def parse_sigmf(meta_bytes: bytes, field_map: Optional[Mapping[str, str]] = None
                ) -> SigmfParseResult:
    """Parse a SigMF metadata document into frame records.

    A malformed document raises SigmfParseError with the byte offset of the
    failure. Individual annotations that are missing mapped keys or violate
    record invariants are reported in ``issues`` and skipped; all other
    annotations still yield records.
    """
    fmap = dict(DEFAULT_FIELD_MAP)
    if field_map:
        fmap.update(field_map)

    try:
        doc = json.loads(meta_bytes.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise SigmfParseError(f"metadata is not UTF-8: {exc.reason}",
                              byte_offset=exc.start) from exc
    except json.JSONDecodeError as exc:
        raise SigmfParseError(f"metadata is not valid JSON: {exc.msg}",
                              byte_offset=exc.pos) from exc

    if not isinstance(doc, dict):
        raise SigmfParseError("top-level JSON value is not an object")
    for section in ("global", "captures", "annotations"):
        if section not in doc:
            raise SigmfParseError(f"missing required section {section!r}")
    global_info = doc["global"]
    annotations = doc["annotations"]
    if not isinstance(annotations, list):
        raise SigmfParseError("'annotations' section is not a list")

    records: list[FrameRecord] = []
    issues: list[RecordIssue] = []
    for i, ann in enumerate(annotations):
        if not isinstance(ann, dict):
            issues.append(RecordIssue(i, None, "annotation is not a JSON object"))
            continue
        kwargs = {}
        problems = []
        for fname, key in fmap.items():
            if key in ann:
                raw = ann[key]
            elif key in global_info:
                raw = global_info[key]
            else:
                problems.append(RecordIssue(i, fname, f"missing key {key!r}"))
                continue
            try:
                kwargs[_RECORD_ATTRS[fname]] = _FIELD_PARSERS[fname](raw)
            except (ValueError, TypeError, KeyError, InvalidRecordError) as exc:
                problems.append(RecordIssue(i, fname, f"bad value {raw!r}: {exc}"))
        if problems:
            issues.extend(problems)
            continue
        record = FrameRecord(**kwargs)
        try:
            record.validate()
        except InvalidRecordError as exc:
            issues.append(RecordIssue(i, None, str(exc)))
            continue
        records.append(record)
    return SigmfParseResult(records=records, issues=issues,
                            global_info=global_info, captures=doc["captures"])


def _field_to_json(fname: str, value):
    if fname in ("reception_time", "iq_file_time", "frame_id", "frame_start",
                 "spreading_factor"):
        return int(value)
    if fname == "payload":
        return value.hex()
    if fname == "tx_position":
        return {"latitude": value.latitude, "longitude": value.longitude,
                "altitude": value.altitude}
    if fname in ("receiver_id", "code_rate", "iq_file_id"):
        return str(value)
    return float(value)


def serialize_sigmf(records: Sequence[FrameRecord],
                    field_map: Optional[Mapping[str, str]] = None,
                    datatype: str = "cf32_le",
                    extra_global: Optional[Mapping] = None) -> bytes:
    """Render frame records back into a SigMF metadata document.

    Inverse of parse_sigmf on all frame fields: parsing the output yields
    records equal to the input.
    """
    fmap = dict(DEFAULT_FIELD_MAP)
    if field_map:
        fmap.update(field_map)

    global_info: dict = {
        "core:datatype": datatype,
        "core:version": SIGMF_VERSION,
    }
    if extra_global:
        global_info.update(extra_global)
    annotations = []
    for rec in records:
        ann = {}
        for fname, key in fmap.items():
            value = _field_to_json(fname, getattr(rec, _RECORD_ATTRS[fname]))
            if key in _GLOBAL_KEYS and global_info.setdefault(key, value) == value:
                continue
            # heterogeneous values for a global key stay on the annotation,
            # which the parser checks first
            ann[key] = value
        annotations.append(ann)
    doc = {
        "global": global_info,
        "captures": [{"core:sample_start": 0}],
        "annotations": annotations,
    }
    return json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")


def _component_dtype(datatype: str) -> np.dtype:
    try:
        return np.dtype(_DATATYPES[datatype])
    except KeyError:
        raise UnsupportedFormatError(
            f"unsupported SigMF datatype {datatype!r}; "
            f"supported: {sorted(_DATATYPES)}") from None


def load_iq_window(data_bytes: bytes, datatype: str, start: int, count: int
                   ) -> np.ndarray:
    """Decode ``count`` complex samples starting at sample index ``start``.

    The decode is bit-exact: stored component values are promoted to
    float64 without scaling.
    """
    dtype = _component_dtype(datatype)
    stride = 2 * dtype.itemsize
    n_total = len(data_bytes) // stride
    if start < 0 or count < 0:
        raise SampleWindowError(f"negative window: start={start}, count={count}")
    if start + count > n_total:
        raise SampleWindowError(
            f"window [{start}, {start + count}) exceeds file length "
            f"{n_total} samples")
    if count == 0:
        return np.empty(0, dtype=np.complex128)
    flat = np.frombuffer(data_bytes, dtype=dtype, count=2 * count,
                         offset=start * stride).astype(np.float64)
    return flat[0::2] + 1j * flat[1::2]


def encode_iq(samples: np.ndarray, datatype: str = "cf32_le") -> bytes:
    """Encode complex samples as interleaved components (inverse of decode)."""
    dtype = _component_dtype(datatype)
    samples = np.asarray(samples)
    flat = np.empty(2 * len(samples), dtype=dtype)
    flat[0::2] = samples.real.astype(dtype)
    flat[1::2] = samples.imag.astype(dtype)
    return flat.tobytes()
