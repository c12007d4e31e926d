"""SNR estimation from IQ and series assembly."""
import numpy as np
import pytest

from lorachan import (
    FrameRecord,
    GeoFix,
    SampleWindowError,
    Scenario,
    UnknownReceiverError,
    build_snr_series,
    compute_distance,
    estimate_snr_from_iq,
    load_receiver_config,
)


class TestEstimateSnr:
    def test_exact_powers(self):
        # noise mean power 1.0, frame mean power 2.0 -> (2-1)/1 -> 0 dB
        noise = np.ones(64, dtype=complex)
        frame = np.full(64, np.sqrt(2.0), dtype=complex)
        samples = np.concatenate([noise, frame])
        assert estimate_snr_from_iq(samples, 64, 64, 64) == pytest.approx(0.0,
                                                                          abs=1e-12)

    def test_tone_ten_db_above_noise(self):
        rng = np.random.default_rng(2024)
        n = 4096
        noise = (rng.normal(0, np.sqrt(0.5), 2 * n)
                 + 1j * rng.normal(0, np.sqrt(0.5), 2 * n))  # unit power
        tone = np.sqrt(10.0) * np.exp(2j * np.pi * 0.01 * np.arange(n))
        samples = noise.copy()
        samples[n:] += tone
        est = estimate_snr_from_iq(samples, n, n, n)
        assert est == pytest.approx(10.0, abs=0.5)

    def test_frame_equals_noise_is_estimator_invalid(self):
        samples = np.ones(256, dtype=complex)
        assert estimate_snr_from_iq(samples, 128, 128, 128) is None

    def test_window_out_of_range(self):
        samples = np.ones(200, dtype=complex)
        with pytest.raises(SampleWindowError):
            estimate_snr_from_iq(samples, 64, 200, 64)
        with pytest.raises(SampleWindowError):
            estimate_snr_from_iq(samples, 32, 64, 64)

    def test_noise_window_too_short(self):
        samples = np.ones(256, dtype=complex)
        with pytest.raises(SampleWindowError):
            estimate_snr_from_iq(samples, 63, 64, 63)


def _record(receiver_id, lat, frame_id=0, snr=5.0):
    return FrameRecord(
        spreading_factor=10, code_rate="4/5", carrier_frequency_hz=862.5e6,
        bandwidth_hz=250e3, receiver_id=receiver_id, sampling_rate_hz=1e6,
        reception_time_ns=0, snr_db=snr,
        tx_position=GeoFix(lat, 6.57, 400.0),
        velocity_mps=0.0, cfo_hz=0.0, frame_id=frame_id, payload=b"",
        iq_file_id="f", frame_start=0, iq_file_time_ns=0)


RX = {"A": GeoFix(46.50, 6.57, 400.0), "B": GeoFix(46.60, 6.57, 400.0)}


class TestBuildSnrSeries:
    def test_groups_by_receiver(self):
        records = [_record("A", 46.51, 0), _record("A", 46.53, 1),
                   _record("A", 46.52, 2), _record("B", 46.61, 3),
                   _record("B", 46.62, 4)]
        built = build_snr_series(records, RX, Scenario.UAV_LOS)
        assert [s.receiver_id for s in built.series] == ["A", "B"]
        assert [len(s) for s in built.series] == [3, 2]
        assert built.n_excluded == 0
        for s in built.series:
            assert np.all(np.diff(s.distances_m) >= 0)

    def test_empty_records(self):
        built = build_snr_series([], RX, Scenario.UAV_LOS)
        assert built.series == []
        assert built.n_excluded == 0

    def test_tx_at_rx_excluded_and_counted(self):
        records = [_record("A", 46.50, 0), _record("A", 46.51, 1)]
        built = build_snr_series(records, RX, Scenario.UAV_LOS)
        assert built.n_excluded == 1
        assert [len(s) for s in built.series] == [1]

    def test_unknown_receiver(self):
        with pytest.raises(UnknownReceiverError, match="gw9"):
            build_snr_series([_record("gw9", 46.51)], RX, Scenario.UAV_LOS)

    def test_sizes_sum_to_input_minus_exclusions(self, rng):
        lats = 46.50 + rng.uniform(0.0, 0.01, 60)  # includes some ~0 m records
        records = [_record(rng.choice(["A", "B"]), lat, i)
                   for i, lat in enumerate(lats)]
        built = build_snr_series(records, RX, Scenario.UAV_NLOS)
        total = sum(len(s) for s in built.series)
        assert total + built.n_excluded == len(records)

    def test_distances_match_compute_distance(self):
        rec = _record("A", 46.51, 0)
        built = build_snr_series([rec], RX, Scenario.UAV_LOS)
        expected = compute_distance(rec.tx_position, RX["A"])
        assert built.series[0].distances_m[0] == expected


class TestReceiverConfig:
    def test_json(self, tmp_path):
        path = tmp_path / "receivers.json"
        path.write_text('{"receivers": [{"id": "gw0", "lat": 46.5, '
                        '"lon": 6.6, "alt": 420.0}], '
                        '"field_map": {"snr": "custom:snr"}}')
        cfg = load_receiver_config(path)
        assert cfg.positions["gw0"] == GeoFix(46.5, 6.6, 420.0)
        assert cfg.field_map == {"snr": "custom:snr"}

    def test_toml(self, tmp_path):
        path = tmp_path / "receivers.toml"
        path.write_text('[[receivers]]\nid = "gw1"\nlat = 46.52\n'
                        'lon = 6.57\nalt = 400.0\n')
        cfg = load_receiver_config(path)
        assert cfg.positions["gw1"] == GeoFix(46.52, 6.57, 400.0)
        assert cfg.field_map == {}
