import math

import numpy as np
import pytest

from cv_teleport.errors import DomainError, UsageError
from cv_teleport.metrics import linear_to_db
from cv_teleport.montecarlo import (
    MomentAccumulator,
    SpectrumTrace,
    corrected_levels,
    covariance_tolerance,
    estimate_moments,
    extract_snr,
    floor_db,
    sample,
    sample_joint,
    stream,
    stream_moments,
    synthesize_spectrum,
    variance_tolerance,
    video_window,
)
from cv_teleport.noise import NoiseBasis
from cv_teleport.optics import vacuum_mode
from cv_teleport.teleporter import TeleporterConfig, teleport

from .conftest import PURE_044


class TestStreams:

    def test_same_key_same_draws(self):
        assert np.array_equal(stream(7, 3).standard_normal(16), stream(7, 3).standard_normal(16))

    def test_key_is_seed_xor_index(self):
        assert np.array_equal(stream(12, 5).standard_normal(8), stream(12 ^ 5).standard_normal(8))

    def test_distinct_indices_differ(self):
        assert not np.array_equal(stream(7, 0).standard_normal(8), stream(7, 1).standard_normal(8))

    @pytest.mark.parametrize('seed', [-1, 2 ** 64])
    def test_seed_range(self, seed):
        with pytest.raises(DomainError):
            stream(seed)

    def test_full_u64_seed(self):
        stream(2 ** 64 - 1).standard_normal(2)


class TestSampling:

    def test_deterministic(self, basis):
        f = vacuum_mode(basis).x_plus
        assert np.array_equal(sample(f, basis, 5000, 99).values, sample(f, basis, 5000, 99).values)

    def test_worker_count_invariance(self, basis, small_chunks):
        outcome = teleport(TeleporterConfig(opa1=PURE_044, opa2=PURE_044))
        forms = [outcome.input.x_plus, outcome.output.x_plus]
        one = sample_joint(forms, outcome.basis, 10_500, 42, workers=1)
        many = sample_joint(forms, outcome.basis, 10_500, 42, workers=4)
        for a, b in zip(one, many):
            assert a.n == 10_500
            assert np.array_equal(a.values, b.values)

    def test_offset_is_mean(self, basis):
        f = vacuum_mode(basis).x_plus.shifted(5.8)
        m = estimate_moments(sample(f, basis, 50_000, 1))
        assert m.mean == pytest.approx(5.8, abs=0.05)

    def test_constant_form(self, basis):
        s = sample(basis.zero(3.0), basis, 100, 1)
        m = estimate_moments(s)
        assert m.mean == 3.0
        assert m.variance == 0.0

    def test_variance_within_tolerance(self, basis):
        n = 200_000
        f = 1.5 * vacuum_mode(basis).x_plus
        m = estimate_moments(sample(f, basis, n, 2024))
        assert abs(m.variance - 2.25) <= variance_tolerance(2.25, n, sigmas=4.0)

    def test_joint_covariance(self, basis):
        n = 200_000
        x = vacuum_mode(basis).x_plus
        y = x + vacuum_mode(basis).x_plus
        s_x, s_y = sample_joint([x, y], basis, n, 5)
        m = estimate_moments(s_x, s_y)
        assert abs(m.covariance - 1.0) <= covariance_tolerance(1.0, 2.0, 1.0, n, sigmas=4.0)

    def test_rejects_foreign_basis(self, basis):
        other = NoiseBasis()
        with pytest.raises(UsageError):
            sample(vacuum_mode(other).x_plus, basis, 10, 0)

    def test_rejects_empty_sample(self, basis):
        with pytest.raises(DomainError):
            sample(vacuum_mode(basis).x_plus, basis, 0, 0)


class TestMoments:

    def test_single_sample(self, basis):
        with pytest.raises(DomainError):
            estimate_moments(sample(vacuum_mode(basis).x_plus, basis, 1, 0))

    def test_length_mismatch(self, basis):
        f = vacuum_mode(basis).x_plus
        with pytest.raises(DomainError):
            estimate_moments(sample(f, basis, 10, 0), sample(f, basis, 11, 0))

    def test_merge_matches_single_pass(self, rng):
        values = rng.normal(size=(1000, 2)) @ np.array([[1.0, 0.3], [0.0, 2.0]])
        whole = MomentAccumulator.from_values(values)
        merged = MomentAccumulator.from_values(values[:377]).merge(MomentAccumulator.from_values(values[377:]))
        assert merged.count == 1000
        np.testing.assert_allclose(merged.mean, whole.mean, rtol=1e-12)
        np.testing.assert_allclose(merged.covariance_matrix(), whole.covariance_matrix(), rtol=1e-10)
        np.testing.assert_allclose(whole.covariance_matrix(), np.cov(values.T), rtol=1e-10)

    def test_stream_moments_match_samples(self, basis, small_chunks):
        x = vacuum_mode(basis).x_plus
        y = x + 0.5 * vacuum_mode(basis).x_minus
        acc = stream_moments([x, y], basis, 7_300, 11)
        s_x, s_y = sample_joint([x, y], basis, 7_300, 11)
        m = estimate_moments(s_x, s_y)
        cov = acc.covariance_matrix()
        assert cov[0, 0] == pytest.approx(m.variance, rel=1e-12)
        assert cov[0, 1] == pytest.approx(m.covariance, rel=1e-12)

    def test_stream_moments_worker_invariance(self, basis, small_chunks):
        f = vacuum_mode(basis).x_plus
        a = stream_moments([f], basis, 9_000, 3, workers=1)
        b = stream_moments([f], basis, 9_000, 3, workers=3)
        assert np.array_equal(a.comoment, b.comoment)

    def test_tolerances(self):
        assert variance_tolerance(1.0, 1_000_001) == pytest.approx(3 * math.sqrt(2e-6))
        assert covariance_tolerance(1.0, 2.0, 1.0, 1_000_001) == pytest.approx(3 * math.sqrt(3e-6))


class TestSpectrum:

    def test_video_window(self):
        assert video_window(10e3, 30.0, 401) == 334
        assert video_window(10e3, 20e3, 401) == 1
        assert video_window(10e3, 1.0, 401) == 401

    def test_deterministic(self):
        a = synthesize_spectrum(3.0, 2.0, seed=8)
        b = synthesize_spectrum(3.0, 2.0, seed=8)
        assert np.array_equal(a.power_db, b.power_db)

    def test_grid(self):
        trace = synthesize_spectrum(1.0, 0.0)
        assert trace.frequencies.shape == (401,)
        assert trace.frequencies[0] == pytest.approx(8.35e6)
        assert trace.frequencies[-1] == pytest.approx(8.45e6)
        assert trace.index_of(8.4e6) == 200

    @pytest.mark.parametrize('variance', [1.0, 1.88, 3.0])
    def test_floor(self, variance):
        trace = synthesize_spectrum(variance, 2.0, seed=17)
        assert floor_db(trace) == pytest.approx(linear_to_db(variance), abs=0.1)

    def test_flat_trace_snr(self):
        assert abs(extract_snr(synthesize_spectrum(1.0, 0.0, seed=4)) - 1.0) < 0.2

    def test_snr_round_trip(self):
        # 4 alpha^2 / V = 4
        assert abs(extract_snr(synthesize_spectrum(1.0, 1.0, seed=4)) - 5.0) < 0.3

    def test_corrected_levels(self):
        eta = 0.9
        floor, alpha = corrected_levels(eta * 1.88 + (1 - eta), math.sqrt(eta) * 2.0, eta)
        assert (floor, alpha) == pytest.approx((1.88, 2.0))

    def test_corrected_levels_near_loss_vacuum(self):
        floor, _ = corrected_levels(0.3 * 0.1 + 0.7, 0.0, 0.3)
        assert floor == pytest.approx(0.1)
        assert floor_db(synthesize_spectrum(floor, 0.0, seed=21)) == pytest.approx(-10.0, abs=0.1)

    def test_corrected_levels_without_noise(self):
        with pytest.raises(DomainError):
            corrected_levels(0.5, 1.0, 0.5)

    def test_probe_outside_span(self):
        with pytest.raises(DomainError):
            extract_snr(synthesize_spectrum(1.0, 0.0), offsets=(-80e3, 80e3))

    @pytest.mark.parametrize('kwargs', [
        {'span': 0.0},
        {'rbw': -1.0},
        {'points': 2},
    ])
    def test_rejects_bad_settings(self, kwargs):
        with pytest.raises(DomainError):
            synthesize_spectrum(1.0, 0.0, **kwargs)

    def test_rejects_non_positive_noise(self):
        with pytest.raises(DomainError):
            synthesize_spectrum(0.0, 1.0)

    def test_trace_shape_mismatch(self):
        with pytest.raises(UsageError):
            SpectrumTrace(np.zeros(3), np.zeros(4), 10e3, 30.0, 0.0)
