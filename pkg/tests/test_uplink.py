import math

import numpy as np
import pytest

from vcsra.beamforming import cb_beamformers, make_beamformers, project_out
from vcsra.channel import PracticalChannelParams, draw_practical_channel
from vcsra.errors import DomainError, SingularMatrix
from vcsra.numerics import RngStream, db_to_linear, standard_complex_gaussian
from vcsra.uplink import (
    UplinkConfig,
    assigned_sinr_cb,
    assigned_sinr_zf,
    instantaneous_rate,
    ra_sinr,
    sinr_values,
)
from vcsra.vcs import sample_admitted_ra_ues

PRACTICAL = PracticalChannelParams(100, 50)


def random_channels(m, n, seed, stream=0):
    return standard_complex_gaussian(RngStream(seed, stream).generator(), (m, n))


def brute_force_cb(h_a, h_r, rho):
    """Loop-based expansion of the post-beamforming powers."""
    m, n_a = h_a.shape
    out = []
    for i in range(n_a):
        b = h_a[:, i].conj()
        sig = rho / m * abs(b @ h_a[:, i]) ** 2
        intra = sum(rho / m * abs(b @ h_a[:, j]) ** 2 for j in range(n_a) if j != i)
        ra = sum(rho / m * abs(b @ h_r[:, k]) ** 2 for k in range(h_r.shape[1]))
        out.append(sig / (1 + intra + ra))
    return np.array(out)


class TestAssignedCb:
    def test_single_user_no_ra(self):
        h = random_channels(64, 1, 1)
        (b,) = assigned_sinr_cb(h, np.zeros((64, 0)), 0.5)
        assert b.sinr == pytest.approx(0.5 * np.linalg.norm(h[:, 0]) ** 4 / 64, rel=1e-12)
        assert b.intra_assigned_interference == 0.0 and b.ra_interference == 0.0

    def test_empty_ra_means_no_ra_term(self):
        h = random_channels(64, 4, 2)
        for b in assigned_sinr_cb(h, np.zeros((64, 0)), 1.0):
            assert b.ra_interference == 0.0

    def test_matches_brute_force(self):
        h_a = random_channels(48, 6, 3)
        h_r = random_channels(48, 4, 4)
        rho = db_to_linear(-7.0)
        mine = sinr_values(assigned_sinr_cb(h_a, h_r, rho))
        oracle = brute_force_cb(h_a, h_r, rho)
        assert np.max(np.abs(mine - oracle) / oracle) < 1e-9

    def test_noise_is_unity(self):
        h = random_channels(16, 2, 5)
        for b in assigned_sinr_cb(h, np.zeros((16, 0)), 1.0):
            assert b.noise == 1.0
            assert b.sinr == pytest.approx(
                b.signal / (1 + b.intra_assigned_interference + b.ra_interference), rel=1e-12
            )


class TestAssignedZf:
    def test_no_ra(self):
        h = random_channels(64, 8, 6)
        pinv = np.linalg.pinv(h)
        inv_norm2 = 1.0 / np.sum(np.abs(pinv) ** 2, axis=1)
        mine = sinr_values(assigned_sinr_zf(h, np.zeros((64, 0)), 0.25))
        assert np.max(np.abs(mine - 0.25 * inv_norm2) / mine) < 1e-10

    def test_intra_numerically_zero(self):
        h_a = random_channels(64, 8, 7)
        h_r = random_channels(64, 5, 8)
        for b in assigned_sinr_zf(h_a, h_r, 1.0):
            assert b.intra_assigned_interference < 1e-12 * b.signal

    def test_scaled_orthonormal_columns(self):
        # ||h_i||^2 = M with orthogonal columns: sinr = rho * M at zero load
        m = 16
        h = np.linalg.qr(random_channels(m, 4, 9))[0][:, :4] * math.sqrt(m)
        mine = sinr_values(assigned_sinr_zf(h, np.zeros((m, 0)), 2.0))
        assert np.max(np.abs(mine - 2.0 * m)) < 1e-8

    def test_rank_deficiency_propagates(self):
        col = random_channels(32, 1, 10)
        with pytest.raises(SingularMatrix):
            assigned_sinr_zf(np.hstack([col, col]), np.zeros((32, 0)), 1.0)


class TestRaSinr:
    def test_projected_nulls_assigned_interference(self):
        h_a = random_channels(64, 8, 11)
        h_r = random_channels(64, 4, 12)
        for b in ra_sinr(h_a, h_r, 1.0, mode="projected", kind="cb"):
            assert b.intra_assigned_interference < 1e-10 * b.signal

    def test_projected_single_ra_matches_single_user_formula(self):
        h_a = random_channels(64, 8, 13)
        h_r = random_channels(64, 1, 14)
        h_hat = project_out(h_a, h_r)
        (b,) = ra_sinr(h_a, h_r, 0.5, mode="projected", kind="cb")
        expected = 0.5 * np.linalg.norm(h_hat[:, 0]) ** 4 / 64
        assert b.sinr == pytest.approx(expected / (1 + b.intra_assigned_interference), rel=1e-9)

    def test_direct_mode_interference_bounded_by_sensing(self):
        # for conjugate rows, assigned-interference per RA UE is rho * Y_k <= rho * lambda
        h_a = draw_practical_channel(PRACTICAL, 8, RngStream(15, 0))
        beams = cb_beamformers(h_a)
        lam_db = 2.0
        sample = sample_admitted_ra_ues(h_a, beams, 6, lam_db, PRACTICAL, RngStream(15, 1))
        rho = 0.8
        for b in ra_sinr(h_a, sample.columns, rho, mode="direct", kind="cb"):
            assert b.intra_assigned_interference <= rho * db_to_linear(lam_db) * (1 + 1e-12)

    def test_empty_ra_returns_empty(self):
        h_a = random_channels(16, 2, 16)
        assert ra_sinr(h_a, np.zeros((16, 0)), 1.0) == []

    def test_projected_zf_needs_room(self):
        h_a = random_channels(12, 8, 17)
        h_r = random_channels(12, 6, 18)  # 6 > 12 - 8 free dimensions
        with pytest.raises(SingularMatrix):
            ra_sinr(h_a, h_r, 1.0, mode="projected", kind="zf")

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            ra_sinr(random_channels(8, 2, 19), random_channels(8, 1, 20), 1.0, mode="mmse")


class TestRateAndConfig:
    @pytest.mark.parametrize("sinr,rate", [(0.0, 0.0), (1.0, 1.0), (3.0, 2.0)])
    def test_known_rates(self, sinr, rate):
        assert instantaneous_rate(sinr) == pytest.approx(rate, abs=1e-12)

    def test_array_input(self):
        out = instantaneous_rate(np.array([0.0, 1.0, 3.0]))
        assert np.allclose(out, [0.0, 1.0, 2.0])

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            instantaneous_rate(-0.5)

    def test_uplink_config_validation(self):
        assert UplinkConfig(-10.0).ra_receiver_mode == "direct"
        with pytest.raises(DomainError):
            UplinkConfig(-10.0, "mmse")


def test_interference_symmetry_cb_direct():
    # total RA->assigned power equals total assigned->RA power per realization
    h_a = random_channels(64, 8, 21)
    h_r = random_channels(64, 5, 22)
    rho = 0.3
    to_assigned = sum(b.ra_interference for b in assigned_sinr_cb(h_a, h_r, rho))
    to_ra = sum(b.intra_assigned_interference for b in ra_sinr(h_a, h_r, rho, mode="direct", kind="cb"))
    assert to_assigned == pytest.approx(to_ra, rel=1e-12)


@pytest.mark.parametrize("kind", ["cb", "zf"])
def test_vcs_suppression_bound_and_average(kind):
    # every realization obeys ra_i <= rho * N_R * lambda_lin; and admitted RA
    # UEs interfere less on average than unfiltered ones at equal count
    lam_db, rho, n_r = 3.0, 0.5, 6
    root = RngStream(23, 0)
    suppressed, unfiltered = [], []
    for b in range(40):
        trial = root.child(b)
        h_a = draw_practical_channel(PRACTICAL, 8, trial.child(0))
        beams = make_beamformers(h_a, kind)
        sample = sample_admitted_ra_ues(h_a, beams, n_r, lam_db, PRACTICAL, trial.child(1))
        h_low = draw_practical_channel(PRACTICAL, n_r, trial.child(2))
        fn = assigned_sinr_cb if kind == "cb" else assigned_sinr_zf
        vcs_terms = [x.ra_interference for x in fn(h_a, sample.columns, rho)]
        low_terms = [x.ra_interference for x in fn(h_a, h_low, rho)]
        bound = rho * n_r * db_to_linear(lam_db) * (1 + 1e-12)
        assert max(vcs_terms) <= bound
        suppressed.append(np.mean(vcs_terms))
        unfiltered.append(np.mean(low_terms))
    assert np.mean(suppressed) < np.mean(unfiltered)
