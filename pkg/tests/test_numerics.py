import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from vcsra.errors import DimensionError, DomainError, NonPowerOfTwo, SingularMatrix
from vcsra.numerics import (
    RngStream,
    db_to_linear,
    hadamard,
    linear_to_db,
    orthonormal_real_basis,
    pseudo_inverse_left,
    sample_complex_gaussian,
    upper_incomplete_gamma_int,
)

# frozen quadrature oracle: integral of t^2 e^-t over [1, inf)
GAMMA_3_1_QUAD = 1.839397205857219


class TestHadamard:
    def test_order_one(self):
        assert hadamard(1).matrix.tolist() == [[1]]

    def test_order_two(self):
        assert hadamard(2).matrix.tolist() == [[1, 1], [1, -1]]

    def test_order_eight_exact_orthogonality(self):
        s = hadamard(8).matrix
        assert np.array_equal(s.T @ s, 8 * np.eye(8, dtype=np.int64))

    @pytest.mark.parametrize("bad", [0, 3, 6, 12, -4])
    def test_rejects_non_power_of_two(self, bad):
        with pytest.raises(NonPowerOfTwo):
            hadamard(bad)

    @given(st.integers(min_value=0, max_value=7))
    @settings(deadline=None, max_examples=8)
    def test_all_sylvester_orders_exact(self, k):
        n = 2**k
        s = hadamard(n).matrix
        assert np.array_equal(s.T @ s, n * np.eye(n, dtype=np.int64))
        assert set(np.unique(s)) <= {-1, 1}


class TestUpperIncompleteGamma:
    def test_base_cases(self):
        assert upper_incomplete_gamma_int(1, 0.0) == 1.0
        assert upper_incomplete_gamma_int(1, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)

    def test_order_three_vs_quadrature_oracle(self):
        assert upper_incomplete_gamma_int(3, 1.0) == pytest.approx(GAMMA_3_1_QUAD, rel=1e-12)

    def test_at_zero_is_factorial(self):
        for s in range(1, 13):
            assert upper_incomplete_gamma_int(s, 0.0) == math.factorial(s - 1)

    def test_grid_vs_quadrature(self):
        # substitute t = x + u so the integrand is O(1) and the oracle keeps
        # relative accuracy even for tiny tails
        for s in (2, 5, 8, 12):
            for x in (0.3, 1.0, 7.5, 20.0, 50.0):
                scaled = integrate.quad(lambda u: (x + u) ** (s - 1) * math.exp(-u), 0, np.inf, limit=200)[0]
                oracle = math.exp(-x) * scaled
                assert abs(upper_incomplete_gamma_int(s, x) - oracle) / oracle < 1e-10

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            upper_incomplete_gamma_int(0, 1.0)
        with pytest.raises(DomainError):
            upper_incomplete_gamma_int(3, -0.1)


class TestDbConversions:
    @pytest.mark.parametrize("db,lin", [(0.0, 1.0), (10.0, 10.0), (4.0, 10**0.4)])
    def test_known_values(self, db, lin):
        assert db_to_linear(db) == pytest.approx(lin, rel=1e-12)

    @given(st.floats(min_value=-200, max_value=200))
    @settings(deadline=None)
    def test_round_trip(self, v_db):
        assert linear_to_db(db_to_linear(v_db)) == pytest.approx(v_db, abs=1e-10)

    def test_nonpositive_rejected(self):
        for bad in (0.0, -1.0):
            with pytest.raises(DomainError):
                linear_to_db(bad)


class TestComplexGaussian:
    def test_moments(self):
        z = sample_complex_gaussian(RngStream(42, 1), 100_000)
        assert abs(np.mean(z)) < 0.02
        assert 0.98 < np.var(z) < 1.02

    def test_deterministic_across_calls(self):
        stream = RngStream(7, 3)
        a = sample_complex_gaussian(stream, 64)
        b = sample_complex_gaussian(stream, 64)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = sample_complex_gaussian(RngStream(7, 3), 64)
        b = sample_complex_gaussian(RngStream(7, 4), 64)
        assert not np.allclose(a, b)

    def test_real_part_ks(self):
        z = sample_complex_gaussian(RngStream(2024, 0), 100_000)
        stat = stats.kstest(z.real, "norm", args=(0.0, math.sqrt(0.5)))
        assert stat.pvalue > 0.01

    def test_requires_positive_count(self):
        with pytest.raises(DomainError):
            sample_complex_gaussian(RngStream(1, 1), 0)


class TestRngStream:
    def test_rejects_out_of_range_seeds(self):
        with pytest.raises(DomainError):
            RngStream(-1, 0)
        with pytest.raises(DomainError):
            RngStream(0, 2**64)

    def test_child_streams_are_deterministic(self):
        a = RngStream(11, 5).child(9)
        b = RngStream(11, 5).child(9)
        assert a == b
        assert a != RngStream(11, 5).child(10)


class TestOrthonormalBasis:
    def test_square_case(self):
        basis = orthonormal_real_basis(4, 4, RngStream(1, 0))
        assert np.max(np.abs(basis.T @ basis - np.eye(4))) < 1e-10

    def test_projector_trace(self):
        basis = orthonormal_real_basis(100, 50, RngStream(1, 1))
        assert np.trace(basis @ basis.T) == pytest.approx(50.0, abs=1e-8)

    def test_single_column(self):
        basis = orthonormal_real_basis(2, 1, RngStream(1, 2))
        assert np.linalg.norm(basis[:, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_too_many_columns(self):
        with pytest.raises(DimensionError):
            orthonormal_real_basis(3, 4, RngStream(1, 3))

    def test_deterministic(self):
        a = orthonormal_real_basis(16, 8, RngStream(5, 5))
        b = orthonormal_real_basis(16, 8, RngStream(5, 5))
        assert np.array_equal(a, b)


class TestPseudoInverse:
    def test_identity_columns(self):
        h = np.eye(6)[:, :3].astype(complex)
        assert np.max(np.abs(pseudo_inverse_left(h) - np.eye(6)[:3, :])) < 1e-12

    def test_residual_on_random_matrix(self):
        g = RngStream(99, 0).generator()
        h = (g.standard_normal((16, 4)) + 1j * g.standard_normal((16, 4))) / math.sqrt(2)
        pinv = pseudo_inverse_left(h)
        assert np.max(np.abs(pinv @ h - np.eye(4))) < 1e-8

    def test_duplicated_columns_rejected(self):
        g = RngStream(99, 1).generator()
        col = g.standard_normal((8, 1)) + 1j * g.standard_normal((8, 1))
        with pytest.raises(SingularMatrix):
            pseudo_inverse_left(np.hstack([col, col]))

    def test_wide_matrix_rejected(self):
        with pytest.raises(DimensionError):
            pseudo_inverse_left(np.ones((2, 5), dtype=complex))
