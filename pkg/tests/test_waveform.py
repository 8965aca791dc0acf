"""Pilot frames: codebook dwells, guard gaps, and measurement operators."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from isac_sim.waveform import (PilotFrameParams, build_measurement_matrices,
                               schedule_pilots)


def _params(**kw):
    base = dict(n_cu=16, n_rf=4, m_ut=8, p_len=200, n_taps=32, p_dl=1000.0)
    base.update(kw)
    return PilotFrameParams(**base)


def test_codebook_counts():
    pr = _params()
    assert pr.q_len == 231
    assert pr.n_cb == 7       # ceil(200 / 30)
    assert pr.m_cb == 8       # ceil(231 / 30)
    assert _params(p_len=30).n_cb == 1


def test_phase_only_codebooks():
    fr = schedule_pilots(_params(), 0)
    assert_allclose(np.abs(fr.f_codebook), 1 / np.sqrt(16), rtol=1e-14)
    assert_allclose(np.abs(fr.w_codebook), 1 / np.sqrt(8), rtol=1e-14)
    assert_allclose(np.abs(fr.precoders), 1 / np.sqrt(16), rtol=1e-14)
    assert_allclose(np.abs(fr.combiners), 1 / np.sqrt(8), rtol=1e-14)


def test_guard_zeros_and_symbol_power():
    # 60 pilots over two 30-sample dwells: 10-sample guard before the switch,
    # final dwell exempt
    fr = schedule_pilots(_params(p_len=60), 1)
    gi = fr.cu_gi_mask
    assert gi.sum() == 10
    assert np.flatnonzero(gi).tolist() == list(range(20, 30))
    assert np.abs(fr.symbols[gi]).max() == 0.0
    assert_allclose(np.abs(fr.symbols[~gi]), np.sqrt(1000.0 / 4), rtol=1e-14)
    assert np.abs(fr.pilots[gi]).max() == 0.0


def test_single_dwell_has_no_guard():
    fr = schedule_pilots(_params(p_len=30), 2)
    assert fr.cu_gi_mask.sum() == 0


def test_receive_guard_mask_and_valid_set():
    # q_len = 29 + 32 - 1 = 60 receive samples, two combiner dwells
    fr = schedule_pilots(_params(p_len=29), 3)
    assert fr.params.q_len == 60
    assert fr.params.n_cb == 1
    assert fr.ut_gi_mask.sum() == 10
    assert len(fr.valid_idx) == 50
    assert np.array_equal(np.flatnonzero(~fr.ut_gi_mask), fr.valid_idx)
    assert np.all(np.diff(fr.valid_idx) > 0)


def test_mean_pilot_power_matches_budget():
    fr = schedule_pilots(_params(), 4)
    live = ~fr.cu_gi_mask
    p_samp = np.sum(np.abs(fr.pilots[live]) ** 2, axis=1)
    assert abs(p_samp.mean() / 1000.0 - 1.0) < 0.1


def test_convolution_operator_small_case():
    pr = PilotFrameParams(n_cu=1, n_rf=1, m_ut=1, p_len=2, n_taps=2,
                          p_dl=1.0, t_gi=0)
    fr = schedule_pilots(pr, 11)
    mm = build_measurement_matrices(fr)
    p0, p1 = fr.pilots[:, 0]
    want = np.array([[p0, p1, 0.0], [0.0, p0, p1]])
    assert_allclose(mm.phi_bar, want, atol=1e-15)


def test_convolution_operator_block_toeplitz():
    fr = schedule_pilots(_params(p_len=40), 5)
    mm = build_measurement_matrices(fr)
    n = 16
    bar = mm.phi_bar.reshape(32, n, fr.params.q_len)
    for l in (0, 7, 18):
        assert_allclose(bar[l + 1, :, 1:], bar[l, :, :-1], atol=1e-15)


def test_valid_rows_combine_pilot_and_combiner():
    fr = schedule_pilots(_params(p_len=29), 6)
    mm = build_measurement_matrices(fr)
    for v in (0, 17, 49):
        q = fr.valid_idx[v]
        row = np.kron(mm.phi_bar[:, q], fr.combiners[q].conj())
        assert_allclose(mm.phi_valid[v], row, atol=1e-15)


def test_combiner_uncertainty_confined_to_guard_gaps():
    pr = _params(p_len=29)
    a = schedule_pilots(pr, 7, uncertainty_seed=1)
    b = schedule_pilots(pr, 7, uncertainty_seed=2)
    assert_allclose(a.pilots, b.pilots, atol=0)
    assert_allclose(a.combiners[a.valid_idx], b.combiners[b.valid_idx], atol=0)
    assert not np.allclose(a.combiners[a.ut_gi_mask], b.combiners[b.ut_gi_mask])
    ma, mb = build_measurement_matrices(a), build_measurement_matrices(b)
    assert_allclose(ma.phi_valid, mb.phi_valid, atol=0)


def test_frame_is_seed_deterministic():
    a = schedule_pilots(_params(), 8)
    b = schedule_pilots(_params(), 8)
    c = schedule_pilots(_params(), 9)
    assert np.array_equal(a.pilots, b.pilots)
    assert np.array_equal(a.combiners, b.combiners)
    assert not np.array_equal(a.pilots, c.pilots)


def test_parameter_validation():
    with pytest.raises(ValueError):
        _params(p_len=0)
    with pytest.raises(ValueError):
        _params(p_len=40, t_rf_cu=9, t_gi=10)   # guard swallows a dwell
    with pytest.raises(ValueError):
        _params(gi_offset=40)
