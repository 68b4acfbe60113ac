import math

import numpy as np
import pytest

from vcsra.beamforming import (
    cb_beamformers,
    make_beamformers,
    orthogonal_complement,
    project_out,
    zf_beamformers,
)
from vcsra.channel import SimplifiedChannelParams, draw_simplified_channel
from vcsra.errors import SingularMatrix
from vcsra.numerics import RngStream, standard_complex_gaussian


def random_channels(m, n, seed, stream=0):
    return standard_complex_gaussian(RngStream(seed, stream).generator(), (m, n))


class TestConjugate:
    def test_unit_column(self):
        h = np.eye(4, dtype=complex)[:, :1]
        beams = cb_beamformers(h)
        assert np.array_equal(beams.rows, h.conj().T)
        assert (beams.rows @ h)[0, 0] == 1.0

    def test_self_product_real_nonnegative(self):
        h = random_channels(32, 6, 1)
        beams = cb_beamformers(h)
        diag = np.diag(beams.rows @ h)
        assert np.max(np.abs(diag.imag)) < 1e-12
        assert np.all(diag.real >= 0)

    def test_does_not_null_interference(self):
        h = random_channels(32, 6, 2)
        beams = cb_beamformers(h)
        off = beams.rows @ h
        np.fill_diagonal(off, 0)
        assert np.max(np.abs(off)) > 1e-3

    def test_fingerprint_tracks_source(self):
        h = random_channels(16, 4, 3)
        assert cb_beamformers(h).source_fingerprint == cb_beamformers(h).source_fingerprint
        assert cb_beamformers(h).source_fingerprint != cb_beamformers(2 * h).source_fingerprint


class TestZeroForcing:
    def test_orthogonal_columns_reduce_to_scaled_conjugates(self):
        # diagonal Gram: pseudo-inverse rows are h_i^H / ||h_i||^2
        m = 16
        h = np.zeros((m, 3), dtype=complex)
        h[0, 0], h[3, 1], h[9, 2] = 2.0, 1.5j, 1.0 + 1.0j
        beams = zf_beamformers(h)
        for i in range(3):
            expected = math.sqrt(m) * h[:, i].conj() / np.linalg.norm(h[:, i])
            assert np.max(np.abs(beams.rows[i] - expected)) < 1e-10

    def test_zero_forcing_residual(self):
        h = random_channels(64, 8, 4)
        beams = zf_beamformers(h)
        prod = beams.rows @ h
        np.fill_diagonal(prod, 0)
        assert np.max(np.abs(prod)) / math.sqrt(64) < 1e-8

    def test_row_norms(self):
        h = random_channels(64, 8, 5)
        norms = np.linalg.norm(zf_beamformers(h).rows, axis=1)
        assert np.max(np.abs(norms - math.sqrt(64))) < 1e-10

    def test_rank_deficient_rejected(self):
        col = random_channels(16, 1, 6)
        with pytest.raises(SingularMatrix):
            zf_beamformers(np.hstack([col, col]))

    def test_make_beamformers_dispatch(self):
        h = random_channels(16, 4, 7)
        assert make_beamformers(h, "cb").kind == "cb"
        assert make_beamformers(h, "zf").kind == "zf"
        with pytest.raises(ValueError):
            make_beamformers(h, "mmse")


class TestOrthogonalComplement:
    def test_empty_subspace(self):
        p = orthogonal_complement(np.zeros((5, 0), dtype=complex))
        assert np.array_equal(p, np.eye(5, dtype=complex))

    def test_identity_columns(self):
        h = np.eye(6, dtype=complex)[:, :2]
        p = orthogonal_complement(h)
        assert np.max(np.abs(p - np.diag([0, 0, 1, 1, 1, 1.0]))) < 1e-12

    def test_projection_residual(self):
        h = random_channels(32, 5, 8)
        p = orthogonal_complement(h)
        for i in range(5):
            col = h[:, i]
            assert np.linalg.norm(p @ col) < 1e-8 * np.linalg.norm(col)

    def test_hermitian_idempotent_trace(self):
        h = random_channels(48, 6, 9)
        p = orthogonal_complement(h)
        assert np.max(np.abs(p - p.conj().T)) < 1e-10
        assert np.max(np.abs(p @ p - p)) < 1e-8
        assert np.trace(p).real == pytest.approx(48 - 6, abs=1e-6)

    def test_spectrum_binary(self):
        h = random_channels(24, 4, 10)
        eig = np.linalg.eigvalsh(orthogonal_complement(h))
        assert np.all((np.abs(eig) < 1e-6) | (np.abs(eig - 1) < 1e-6))
        assert int(np.sum(np.abs(eig) < 1e-6)) == 4

    def test_project_out_matches_projector(self):
        h = random_channels(24, 4, 11)
        x = random_channels(24, 3, 12)
        assert np.max(np.abs(project_out(h, x) - orthogonal_complement(h) @ x)) < 1e-10


def test_zf_inverse_norm_moment():
    # E[||a_i||^-2] = M - (M/Q)(N_A - 1) = 86 under the shared-basis model
    params = SimplifiedChannelParams(100, 50, basis_seed=8)
    total, count = 0.0, 0
    root = RngStream(314, 0)
    for b in range(625):
        h = draw_simplified_channel(params, 8, root.child(b))
        pinv = np.linalg.pinv(h)
        total += float(np.sum(1.0 / np.sum(np.abs(pinv) ** 2, axis=1)))
        count += 8
    assert count >= 5_000
    assert abs(total / count - 86.0) / 86.0 < 0.02
