import numpy as np
import pytest

from zpsync import ConfigError, SystemConfig, generate_block, generate_frame, qam_constellation
from zpsync.waveform import read_iq_f64, write_iq_f64


class TestSystemConfig:
    def test_derived_lengths(self):
        cfg = SystemConfig(n_data=512, n_zero=20)
        assert cfg.block_len == 532
        assert cfg.window_len == 10 * 532

    def test_zero_pad_must_cover_channel(self):
        with pytest.raises(ConfigError):
            SystemConfig(n_zero=5, n_taps=10)

    @pytest.mark.parametrize("kwargs", [
        dict(signal_power=0.0),
        dict(signal_power=-1.0),
        dict(mod_order=3),
        dict(mod_order=8),
        dict(n_tx=0),
        dict(n_blocks=0),
        dict(snr_db=float("inf")),
    ])
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            SystemConfig(**kwargs)


class TestConstellation:
    @pytest.mark.parametrize("m", [4, 16, 32, 64, 128, 256])
    def test_size_energy_uniqueness(self, m):
        points = qam_constellation(m)
        assert points.size == m
        assert np.unique(points).size == m
        assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("m", [32, 128])
    def test_cross_shapes_have_symmetric_components(self, m):
        points = qam_constellation(m)
        assert np.mean(points.real**2) == pytest.approx(np.mean(points.imag**2))
        assert np.mean(points) == pytest.approx(0.0, abs=1e-12)


class TestGenerateBlock:
    def test_zero_pad_exact(self, paper_config, rng):
        block = generate_block(paper_config, 0, 0, rng)
        assert block.samples.size == 532
        assert np.all(block.samples[512:] == 0)
        assert np.any(block.samples[:512] != 0)

    def test_antenna_out_of_range(self, paper_config, rng):
        with pytest.raises(ConfigError):
            generate_block(paper_config, 1, 0, rng)

    def test_power_calibration_siso(self, rng):
        # sample-moment oracle: mean |s|^2 over the data region -> signal_power
        cfg = SystemConfig(n_data=512, n_zero=20, signal_power=1.0)
        samples = np.concatenate(
            [generate_block(cfg, 0, i, rng).samples[:512] for i in range(250)]
        )
        assert samples.size >= 100_000
        power = np.mean(np.abs(samples) ** 2)
        assert power == pytest.approx(1.0, rel=0.01)

    def test_power_split_two_antennas(self, rng):
        # total transmit power is held fixed, so each antenna radiates half
        cfg = SystemConfig(n_data=512, n_zero=20, n_tx=2, signal_power=1.0)
        samples = np.concatenate(
            [generate_block(cfg, a, i, rng).samples[:512] for i in range(125) for a in (0, 1)]
        )
        assert np.mean(np.abs(samples) ** 2) == pytest.approx(0.5, rel=0.01)

    def test_gaussian_source_power(self, rng):
        cfg = SystemConfig(gaussian_source=True, signal_power=2.0)
        block = generate_block(cfg, 0, 0, rng)
        assert np.all(block.samples[512:] == 0)
        data = np.concatenate(
            [generate_block(cfg, 0, i, rng).samples[:512] for i in range(250)]
        )
        assert np.mean(np.abs(data) ** 2) == pytest.approx(2.0, rel=0.02)

    def test_whiteness_lag1(self, paper_config, rng):
        data = generate_block(paper_config, 0, 0, rng).samples[:512]
        rho = np.abs(np.vdot(data[:-1], data[1:])) / np.vdot(data, data).real
        assert rho < 4 / np.sqrt(512)


class TestGenerateFrame:
    def test_single_block_matches_generate_block(self, paper_config):
        a = generate_frame(paper_config, 0, 1, np.random.default_rng(3))
        b = generate_block(paper_config, 0, 0, np.random.default_rng(3)).samples
        np.testing.assert_array_equal(a, b)

    def test_length_and_pad_positions(self, paper_config, rng):
        frame = generate_frame(paper_config, 0, 3, rng)
        assert frame.size == 3 * 532
        for start in (512, 1044, 1576):
            assert np.all(frame[start : start + 20] == 0)

    def test_deterministic_under_seed(self, paper_config):
        a = generate_frame(paper_config, 0, 2, np.random.default_rng(99))
        b = generate_frame(paper_config, 0, 2, np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)

    def test_rejects_zero_blocks(self, paper_config, rng):
        with pytest.raises(ConfigError):
            generate_frame(paper_config, 0, 0, rng)


def test_iq_dump_round_trip(tmp_path, rng):
    samples = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    path = tmp_path / "dump.iq"
    write_iq_f64(samples, path)
    assert path.stat().st_size == 64 * 16
    np.testing.assert_array_equal(read_iq_f64(path), samples)
