"""SigMF metadata parsing/serialization and IQ window decoding."""
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorachan import (
    GeoFix,
    SampleWindowError,
    SigmfParseError,
    UnsupportedFormatError,
    encode_iq,
    load_iq_window,
    parse_sigmf,
    serialize_sigmf,
)


def _annotation(frame_id, snr=7.25, missing=()):
    ann = {
        "core:sample_start": 1024 * frame_id,
        "lora:spreading_factor": 10,
        "lora:code_rate": "4/5",
        "lora:carrier_frequency": 862.5e6,
        "lora:bandwidth": 250e3,
        "lora:receiver_id": "gw2",
        "lora:reception_time": 1_700_000_000_123_456_789 + frame_id,
        "lora:snr": snr,
        "lora:tx_position": {"latitude": 46.52, "longitude": 6.57,
                             "altitude": 472.5},
        "lora:velocity": 11.8,
        "lora:cfo": -312.5,
        "lora:frame_id": frame_id,
        "lora:payload": (b"\x01\x02" + frame_id.to_bytes(2, "big")).hex(),
        "lora:iq_file_id": "gw2-0001.sigmf-data",
        "lora:iq_file_time": 1_700_000_000_000_000_000,
    }
    for key in missing:
        del ann[key]
    return ann


def _meta(annotations):
    return json.dumps({
        "global": {
            "core:datatype": "cf32_le",
            "core:version": "1.0.0",
            "core:sample_rate": 1e6,
        },
        "captures": [{"core:sample_start": 0}],
        "annotations": annotations,
    }).encode()


class TestParseSigmf:
    def test_two_annotations_full_fields(self):
        result = parse_sigmf(_meta([_annotation(0), _annotation(1, snr=-3.5)]))
        assert not result.issues
        assert len(result.records) == 2
        r0, r1 = result.records
        assert r0.spreading_factor == 10
        assert r0.code_rate == "4/5"
        assert r0.carrier_frequency_hz == 862.5e6
        assert r0.bandwidth_hz == 250e3
        assert r0.receiver_id == "gw2"
        assert r0.sampling_rate_hz == 1e6
        assert r0.reception_time_ns == 1_700_000_000_123_456_789
        assert r0.snr_db == 7.25
        assert r0.tx_position == GeoFix(46.52, 6.57, 472.5)
        assert r0.velocity_mps == 11.8
        assert r0.cfo_hz == -312.5
        assert r0.frame_id == 0
        assert r0.payload == b"\x01\x02\x00\x00"
        assert r0.iq_file_id == "gw2-0001.sigmf-data"
        assert r0.frame_start == 0
        assert r0.iq_file_time_ns == 1_700_000_000_000_000_000
        assert r1.snr_db == -3.5
        assert r1.frame_start == 1024

    def test_zero_annotations(self):
        result = parse_sigmf(_meta([]))
        assert result.records == []
        assert result.issues == []

    def test_missing_snr_reports_field_and_keeps_others(self):
        result = parse_sigmf(_meta([
            _annotation(0), _annotation(1, missing=("lora:snr",)),
            _annotation(2)]))
        assert len(result.records) == 2
        assert [r.frame_id for r in result.records] == [0, 2]
        assert len(result.issues) == 1
        issue = result.issues[0]
        assert issue.annotation_index == 1
        assert issue.field == "snr"
        assert "lora:snr" in issue.message

    def test_invariant_violation_reported_not_silently_dropped(self):
        bad = _annotation(1)
        bad["lora:spreading_factor"] = 13
        result = parse_sigmf(_meta([_annotation(0), bad]))
        assert len(result.records) == 1
        assert len(result.issues) == 1
        assert "spreading_factor" in result.issues[0].message

    def test_malformed_json_names_byte_offset(self):
        doc = b'{"global": {}, "captures": [], "annotations": [}'
        with pytest.raises(SigmfParseError) as err:
            parse_sigmf(doc)
        # offset points at the offending bracket region of the document
        assert doc.rindex(b"[") <= err.value.byte_offset <= len(doc)

    def test_missing_section(self):
        with pytest.raises(SigmfParseError, match="annotations"):
            parse_sigmf(b'{"global": {}, "captures": []}')

    def test_iso_timestamp_accepted(self):
        ann = _annotation(0)
        ann["lora:reception_time"] = "2023-11-14T22:13:20.123456789+00:00"
        (rec,) = parse_sigmf(_meta([ann])).records
        assert rec.reception_time_ns == 1_700_000_000_123_456_789

    def test_custom_field_map(self):
        ann = _annotation(0)
        ann["snr_est"] = ann.pop("lora:snr")
        (rec,) = parse_sigmf(_meta([ann]),
                             field_map={"snr": "snr_est"}).records
        assert rec.snr_db == 7.25


class TestRoundTrip:
    def test_parse_serialize_parse_fixed_point(self):
        first = parse_sigmf(_meta([_annotation(0), _annotation(1),
                                   _annotation(5, snr=0.125)]))
        blob = serialize_sigmf(first.records)
        second = parse_sigmf(blob)
        assert not second.issues
        assert second.records == first.records
        # serialize is stable byte-for-byte once normalized
        assert serialize_sigmf(second.records) == blob

    def test_heterogeneous_sample_rates_survive(self):
        # records disagreeing on a global-section key keep their own value
        # on the annotation, which the parser reads first
        a0, a1 = _annotation(0), _annotation(1)
        first = parse_sigmf(_meta([a0, a1]))
        changed = first.records[1]
        changed = type(changed)(**{**changed.__dict__,
                                   "sampling_rate_hz": 5e5})
        records = [first.records[0], changed]
        out = parse_sigmf(serialize_sigmf(records))
        assert not out.issues
        assert [r.sampling_rate_hz for r in out.records] == [1e6, 5e5]


class TestIqWindow:
    FIXTURE = np.array([1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0],
                       dtype="<f4").tobytes()

    def test_hand_built_fixture(self):
        out = load_iq_window(self.FIXTURE, "cf32_le", 0, 4)
        assert np.array_equal(out, [1 + 0j, 1j, -1 + 0j, -1j])

    def test_zero_count(self):
        assert len(load_iq_window(self.FIXTURE, "cf32_le", 2, 0)) == 0

    def test_window_beyond_file(self):
        with pytest.raises(SampleWindowError):
            load_iq_window(self.FIXTURE, "cf32_le", 3, 2)

    def test_negative_start(self):
        with pytest.raises(SampleWindowError):
            load_iq_window(self.FIXTURE, "cf32_le", -1, 2)

    def test_unsupported_datatype(self):
        with pytest.raises(UnsupportedFormatError):
            load_iq_window(self.FIXTURE, "rf32_le", 0, 1)

    def test_offset_window(self):
        out = load_iq_window(self.FIXTURE, "cf32_le", 2, 2)
        assert np.array_equal(out, [-1 + 0j, -1j])

    def test_ci16_decode(self):
        data = np.array([100, -200, 32767, -32768], dtype="<i2").tobytes()
        out = load_iq_window(data, "ci16_le", 0, 2)
        assert np.array_equal(out, [100 - 200j, 32767 - 32768j])

    @given(st.lists(st.tuples(
        st.floats(-1e6, 1e6, width=32), st.floats(-1e6, 1e6, width=32)),
        max_size=64))
    def test_encode_decode_bit_exact(self, pairs):
        vec = np.array([complex(i, q) for i, q in pairs], dtype=np.complex64)
        blob = encode_iq(vec, "cf32_le")
        out = load_iq_window(blob, "cf32_le", 0, len(vec))
        assert np.array_equal(out, vec.astype(np.complex128))

    def test_encode_decode_cf64(self, rng):
        vec = rng.normal(size=32) + 1j * rng.normal(size=32)
        blob = encode_iq(vec, "cf64_le")
        assert np.array_equal(load_iq_window(blob, "cf64_le", 0, 32), vec)
