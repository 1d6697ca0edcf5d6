"""Sampler distribution checks, determinism, and stack serialization."""

import math

import numpy as np
import pytest
from scipy import stats

from lyapinit import jsonio
from lyapinit.analytic import EnsembleSpec
from lyapinit.ensembles import (
    RngStream,
    WeightStack,
    sample_gaussian_matrix,
    sample_haar_orthogonal,
    sample_stack,
    sample_uniform_positive_matrix,
    sample_unit_sphere,
    weight_stack_from_dict,
    weight_stack_to_dict,
)
from lyapinit.errors import DomainError


class TestRngStream:
    def test_replay_is_bit_identical(self):
        a = RngStream(123, 5).generator().standard_normal(16)
        b = RngStream(123, 5).generator().standard_normal(16)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 5).generator().standard_normal(16)
        b = RngStream(123, 6).generator().standard_normal(16)
        assert not np.array_equal(a, b)

    def test_offset_wraps_at_64_bits(self):
        top = RngStream(1, (1 << 64) - 1)
        assert top.offset(1).stream_id == 0

    @pytest.mark.parametrize("seed", [-1, 1 << 64, 1.5])
    def test_validation(self, seed):
        with pytest.raises(DomainError):
            RngStream(seed)


class TestGaussianMatrix:
    def test_replay(self):
        a = sample_gaussian_matrix(4, 1.0, RngStream(9, 3))
        b = sample_gaussian_matrix(4, 1.0, RngStream(9, 3))
        assert np.array_equal(a, b)

    def test_mean_of_many_entries(self):
        gen = RngStream(100).generator()
        entries = np.concatenate([sample_gaussian_matrix(4, 1.0, gen).ravel() for _ in range(62500)])
        assert abs(entries.mean()) < 3e-3  # 3 sigma / sqrt(1e6)

    def test_variance_of_many_entries(self):
        gen = RngStream(101).generator()
        entries = np.concatenate([sample_gaussian_matrix(8, 0.5, gen).ravel() for _ in range(15625)])
        tol = 3 * math.sqrt(2) * 0.25 / 1e3  # sd of the sample variance of 1e6 normals
        assert abs(entries.var() - 0.25) < tol

    def test_rejects_bad_sigma(self):
        with pytest.raises(DomainError):
            sample_gaussian_matrix(2, 0.0, RngStream(1))


class TestHaarOrthogonal:
    @pytest.mark.parametrize("d", [2, 3, 8])
    def test_orthogonality(self, d):
        gen = RngStream(7, d).generator()
        for _ in range(100):
            q = sample_haar_orthogonal(d, 1.0, gen)
            assert np.max(np.abs(q.T @ q - np.eye(d))) < 1e-10

    def test_scale_is_applied(self):
        m = sample_haar_orthogonal(3, 2.5, RngStream(8))
        assert np.max(np.abs(m.T @ m - 6.25 * np.eye(3))) < 1e-9

    def test_determinant_signs_split_evenly(self):
        gen = RngStream(11).generator()
        signs = [np.linalg.det(sample_haar_orthogonal(3, 1.0, gen)) > 0 for _ in range(10_000)]
        assert abs(np.mean(signs) - 0.5) < 0.015

    def test_rotated_fixed_vector_is_isotropic(self):
        d = 3
        x = np.zeros(d)
        x[0] = 1.0
        gen = RngStream(12).generator()
        acc = np.zeros((d, d))
        n = 100_000
        for _ in range(n):
            y = sample_haar_orthogonal(d, 1.0, gen) @ x
            acc += np.outer(y, y)
        assert np.max(np.abs(acc / n - np.eye(d) / d)) < 5e-3

    def test_right_invariance_of_gaussian_law(self):
        # first column of W Q0 should be distributed like the first column of W
        d = 3
        q0 = sample_haar_orthogonal(d, 1.0, RngStream(13))
        gen = RngStream(14).generator()
        plain, rotated = [], []
        for _ in range(10_000):
            w = sample_gaussian_matrix(d, 1.0, gen)
            plain.append(w[:, 0].copy())
            rotated.append((w @ q0)[:, 0])
        statistic = stats.ks_2samp(np.ravel(plain), np.ravel(rotated)).statistic
        critical_1pct = 1.628 * math.sqrt(2.0 / (3 * 10_000))
        assert statistic < critical_1pct

    def test_frobenius_norm_preserved_under_rotation(self):
        gen = RngStream(15).generator()
        q0 = sample_haar_orthogonal(5, 1.0, gen)
        for _ in range(20):
            w = sample_gaussian_matrix(5, 1.0, gen)
            assert abs(np.linalg.norm(w @ q0) - np.linalg.norm(w)) < 1e-10


class TestUnitSphere:
    def test_unit_norm(self):
        gen = RngStream(20).generator()
        for d in (1, 2, 3, 8):
            for _ in range(50):
                assert abs(np.linalg.norm(sample_unit_sphere(d, gen)) - 1.0) < 1e-12

    def test_mean_is_zero(self):
        gen = RngStream(21).generator()
        d, n = 3, 100_000
        total = np.zeros(d)
        for _ in range(n):
            total += sample_unit_sphere(d, gen)
        assert np.max(np.abs(total / n)) < 3.0 / math.sqrt(n * d)

    def test_isotropy(self):
        gen = RngStream(22).generator()
        d, n = 3, 100_000
        acc = np.zeros((d, d))
        for _ in range(n):
            x = sample_unit_sphere(d, gen)
            acc += np.outer(x, x)
        assert np.max(np.abs(acc / n - np.eye(d) / d)) < 5e-3


class TestUniformPositiveMatrix:
    def test_entries_in_range_and_replay(self):
        a = sample_uniform_positive_matrix(5, 2.0, RngStream(30, 1))
        b = sample_uniform_positive_matrix(5, 2.0, RngStream(30, 1))
        assert np.array_equal(a, b)
        assert np.all(a >= 0.0) and np.all(a <= 2.0)

    def test_mean(self):
        gen = RngStream(31).generator()
        entries = np.concatenate(
            [sample_uniform_positive_matrix(10, 1.0, gen).ravel() for _ in range(10_000)]
        )
        assert abs(entries.mean() - 0.5) < 3 * (1.0 / math.sqrt(12)) / 1e3

    def test_rejects_bad_bound(self):
        with pytest.raises(DomainError):
            sample_uniform_positive_matrix(2, -1.0, RngStream(1))


class TestWeightStack:
    def test_orthogonal_stack_invariant(self):
        spec = EnsembleSpec("orthogonal", 4, 1.3)
        stack = sample_stack(spec, 12, RngStream(40))
        target = 1.3**2 * np.eye(4)
        for m in stack.matrices:
            assert np.max(np.abs(m.T @ m - target)) < 1e-9

    def test_shape_validation(self):
        spec = EnsembleSpec("gaussian", 2, 1.0)
        with pytest.raises(DomainError):
            WeightStack(2, 3, np.zeros((2, 2, 2)), spec, RngStream(1))

    def test_json_round_trip_is_exact(self):
        spec = EnsembleSpec("gaussian", 3, 2.262791)
        stack = sample_stack(spec, 5, RngStream(41, 7), diagnostics={"note": 1})
        payload = weight_stack_to_dict(stack)
        text = jsonio.dumps(payload)
        back = weight_stack_from_dict(__import__("json").loads(text))
        assert np.array_equal(back.matrices, stack.matrices)
        assert back.ensemble == stack.ensemble
        assert back.seed_info == stack.seed_info

    def test_serialization_is_deterministic(self):
        spec = EnsembleSpec("orthogonal", 2, 1.0)
        a = jsonio.dumps(weight_stack_to_dict(sample_stack(spec, 4, RngStream(42))))
        b = jsonio.dumps(weight_stack_to_dict(sample_stack(spec, 4, RngStream(42))))
        assert a == b
