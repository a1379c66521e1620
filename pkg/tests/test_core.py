import dataclasses

import numpy as np
import pytest

from fsedeclip.core import (
    LOST,
    RECONSTRUCTED,
    SUPPORT,
    AudioSignal,
    ConfigError,
    FseParams,
    ParameterError,
    SampleMask,
    SnrReport,
    SweepRow,
    params_from_config,
    params_to_config,
    validate_params,
)


class TestAudioSignal:
    def test_samples_become_readonly_float64(self):
        sig = AudioSignal(np.array([1, 2, 3], dtype=np.int16), 8000)
        assert sig.samples.dtype == np.float64
        assert not sig.samples.flags.writeable
        assert len(sig) == 3

    def test_source_array_is_copied(self):
        src = np.zeros(4)
        sig = AudioSignal(src, 8000)
        src[0] = 5.0
        assert sig.samples[0] == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            AudioSignal(np.array([0.0, np.nan]), 8000)
        with pytest.raises(ValueError):
            AudioSignal(np.array([np.inf]), 8000)

    def test_rejects_bad_shape_and_rate(self):
        with pytest.raises(ValueError):
            AudioSignal(np.zeros((2, 2)), 8000)
        with pytest.raises(ValueError):
            AudioSignal(np.zeros(4), 0)

    def test_replace_samples_keeps_rate(self):
        sig = AudioSignal(np.zeros(4), 44100)
        out = sig.replace_samples(np.ones(2))
        assert out.sample_rate == 44100
        assert np.array_equal(out.samples, [1.0, 1.0])


class TestSampleMask:
    def test_labels_are_int8_readonly(self):
        m = SampleMask(np.array([SUPPORT, LOST, RECONSTRUCTED]))
        assert m.labels.dtype == np.int8
        assert not m.labels.flags.writeable

    def test_b_indicator(self):
        m = SampleMask(np.array([SUPPORT, LOST, RECONSTRUCTED, LOST]))
        assert np.array_equal(m.b(), [1, 0, 1, 0])

    def test_count(self):
        m = SampleMask(np.array([SUPPORT, LOST, LOST, RECONSTRUCTED]))
        assert m.count(SUPPORT) == 1
        assert m.count(LOST) == 2
        assert m.count(RECONSTRUCTED) == 1

    def test_with_label_returns_new_mask(self):
        m = SampleMask(np.array([LOST, LOST]))
        m2 = m.with_label(0, RECONSTRUCTED)
        assert m.labels[0] == LOST
        assert m2.labels[0] == RECONSTRUCTED

    def test_rejects_out_of_range_labels(self):
        with pytest.raises(ValueError):
            SampleMask(np.array([7], dtype=np.int8))


class TestParams:
    def test_defaults_are_valid(self):
        p = FseParams()
        validate_params(p)
        assert p.gamma == 1.25
        assert p.rho == 0.99
        assert p.delta == 1.0
        assert p.support == 1000
        assert p.fft_size == 2048
        assert p.max_iter == 1500

    def test_window_must_fit_transform(self):
        # 2*1024 + 1 = 2049 samples cannot fit a 2048-point transform
        p = dataclasses.replace(FseParams(), support=1024, fft_size=2048)
        with pytest.raises(ParameterError, match="fft_size"):
            validate_params(p)

    def test_rho_must_be_strictly_below_one(self):
        p = dataclasses.replace(FseParams(), rho=1.0)
        with pytest.raises(ParameterError, match="rho"):
            validate_params(p)

    @pytest.mark.parametrize(
        "field,value",
        [
            ("gamma", 0.0),
            ("gamma", 2.5),
            ("rho", 0.0),
            ("delta", -0.1),
            ("support", 0),
            ("fft_size", 1000),  # not a power of two
            ("max_iter", -1),
            ("residual_tol", -1e-9),
            ("clip_threshold", 0.0),
            ("clip_threshold", 1.5),
            ("peak", 0.0),
        ],
    )
    def test_each_invariant_names_its_field(self, field, value):
        p = dataclasses.replace(FseParams(), **{field: value})
        with pytest.raises(ParameterError, match=field):
            validate_params(p)

    def test_max_iter_zero_is_allowed(self):
        validate_params(dataclasses.replace(FseParams(), max_iter=0))

    def test_config_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            p = FseParams(
                gamma=float(rng.uniform(0.1, 2.0)),
                rho=float(rng.uniform(0.5, 0.999)),
                delta=float(rng.uniform(0.0, 2.0)),
                support=int(rng.integers(1, 400)),
                fft_size=1024,
                max_iter=int(rng.integers(0, 2000)),
                residual_tol=float(rng.uniform(0.0, 1e-3)),
                clip_threshold=float(rng.uniform(0.1, 1.0)),
            )
            assert params_from_config(params_to_config(p)) == p

    def test_config_partial_override_of_base(self):
        base = FseParams(support=300, fft_size=1024)
        p = params_from_config("gamma = 1.0\n# comment\n\nmax_iter = 7\n", base)
        assert p.gamma == 1.0
        assert p.max_iter == 7
        assert p.support == 300
        assert p.fft_size == 1024

    def test_config_errors_carry_line_numbers(self):
        with pytest.raises(ConfigError, match="line 2"):
            params_from_config("gamma = 1.0\nbogus_key = 3\n")
        with pytest.raises(ConfigError, match="line 1"):
            params_from_config("gamma one point two\n")
        with pytest.raises(ConfigError, match="line 3"):
            params_from_config("\n\nsupport = lots\n")

    def test_config_result_is_validated(self):
        with pytest.raises(ParameterError, match="rho"):
            params_from_config("rho = 1.0\n")


class TestSnrReport:
    def test_sorted_orders_by_signal_threshold_engine(self):
        rows = [
            SweepRow("b", 0.5, "spectral", 1.0, 10, 0.0),
            SweepRow("a", 0.9, "spectral", 2.0, 5, 0.0),
            SweepRow("a", 0.5, "spectral", 3.0, 20, 0.0),
            SweepRow("a", 0.5, "clipped", 0.5, 20, 0.0),
        ]
        report = SnrReport(tuple(rows)).sorted()
        key = [(r.signal, r.theta_c, r.engine) for r in report.entries]
        assert key == sorted(key)
        assert report.entries[0] == rows[3]

    def test_failures_preserved(self):
        report = SnrReport((), failures=("bad.wav: truncated",)).sorted()
        assert report.failures == ("bad.wav: truncated",)
