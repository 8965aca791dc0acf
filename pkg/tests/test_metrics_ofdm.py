"""Error metrics, spectral efficiency, and the data-phase BER model."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import TS, rank1_cir
from isac_sim.array_channel import (ArrayGeometry, ChannelRealization,
                                    CirTensor, LinkKind, PathComponent,
                                    RaisedCosinePulse, steering_vector,
                                    upa_steering)
from isac_sim.metrics import ase, nmse
from isac_sim.ofdm import simulate_ofdm_ber


def test_nmse_reference_points():
    rng = np.random.default_rng(0)
    taps = rng.normal(size=(4, 3, 2)) + 1j * rng.normal(size=(4, 3, 2))
    truth = CirTensor(taps, TS)
    assert nmse(truth, truth) == 0.0
    assert_allclose(nmse(truth, CirTensor(np.zeros_like(taps), TS)), 1.0)
    assert_allclose(nmse(truth, CirTensor(2 * taps, TS)), 1.0, rtol=1e-12)
    assert_allclose(nmse(taps, 0.5 * taps), 0.25, rtol=1e-12)


def test_nmse_input_validation():
    truth = CirTensor(np.ones((2, 2, 2), dtype=complex), TS)
    with pytest.raises(ValueError):
        nmse(truth, CirTensor(np.ones((3, 2, 2), dtype=complex), TS))
    with pytest.raises(ValueError):
        nmse(CirTensor(np.zeros((2, 2, 2), dtype=complex), TS), truth)


def test_ase_single_path_closed_form():
    g0 = 3e-5
    cir = rank1_cir(32, 8, 16, [])
    taps = np.array(cir.taps)
    taps[4] = g0 * np.outer(steering_vector(-0.5, 8),
                            steering_vector(0.25, 16).conj())
    cir = CirTensor(taps, TS)
    sigma2 = 7.96e-13
    got = ase(cir, -0.5, 0.25, 1000.0, sigma2, 256)
    # one tap, matched beams: flat spectrum at the full array gain
    want = np.log2(1 + 1000.0 / (sigma2 * 4) * 8 * 16 * g0 ** 2)
    assert_allclose(got, want, rtol=1e-12)


def test_ase_orthogonal_beam_collapses():
    g0 = 3e-5
    taps = np.zeros((32, 8, 16), dtype=complex)
    taps[4] = g0 * np.outer(steering_vector(-0.5, 8),
                            steering_vector(0.25, 16).conj())
    cir = CirTensor(taps, TS)
    # 2/8 offset lands on an orthogonal receive beam of the 8-element array
    assert ase(cir, -0.5 + 2 / 8, 0.25, 1000.0, 7.96e-13, 256) < 1e-12


def test_ase_needs_enough_subcarriers():
    cir = CirTensor(np.zeros((32, 8, 16), dtype=complex), TS)
    with pytest.raises(ValueError):
        ase(cir, 0.0, 0.0, 1000.0, 7.96e-13, 16)


def _los_channel(f_d, gain=2e-5):
    los = PathComponent(gain, np.pi, np.pi / 6, 0.0, float(np.arcsin(0.25)),
                        2 * TS, f_d)
    return ChannelRealization(LinkKind.COMM_DOWNLINK, ArrayGeometry(8),
                              ArrayGeometry(16), (), los, 20.0, 32, TS)


def _los_beams(ch):
    w = upa_steering(ch.los.aoa_azimuth, ch.los.aoa_elevation, ch.rx_geometry)
    f = upa_steering(ch.los.aod_azimuth, ch.los.aod_elevation, ch.tx_geometry)
    return w, f


def test_ber_zero_without_noise_or_doppler():
    ch = _los_channel(0.0)
    w, f = _los_beams(ch)
    pulse = RaisedCosinePulse(TS)
    res = simulate_ofdm_ber(ch, w, f, pulse, None, 0.0, 1000.0, 3,
                            n_symbols=2, n_d=64)
    assert res.ber == 0.0
    assert res.n_bits == 2 * 64 * 4
    assert res.n_errors == 0


def test_ber_perfect_compensation_beats_none():
    ch = _los_channel(7000.0)
    w, f = _los_beams(ch)
    pulse = RaisedCosinePulse(TS)
    perfect = simulate_ofdm_ber(ch, w, f, pulse, 7000.0, 0.0, 1000.0, 3,
                                n_symbols=8, n_d=256, f_anchor=7000.0)
    none = simulate_ofdm_ber(ch, w, f, pulse, None, 0.0, 1000.0, 3,
                             n_symbols=8, n_d=256)
    assert perfect.ber == 0.0
    assert none.ber > 0.02


def test_ber_requires_los_and_full_prefix():
    ch = _los_channel(0.0)
    w, f = _los_beams(ch)
    pulse = RaisedCosinePulse(TS)
    no_los = ChannelRealization(ch.link_kind, ch.rx_geometry, ch.tx_geometry,
                                (), None, ch.rician_db, ch.n_taps, ch.t_s)
    with pytest.raises(ValueError):
        simulate_ofdm_ber(no_los, w, f, pulse, None, 0.0, 1000.0, 0)
    with pytest.raises(ValueError):
        simulate_ofdm_ber(ch, w, f, pulse, None, 0.0, 1000.0, 0, cp_len=8)


def test_ber_seed_deterministic():
    ch = _los_channel(2000.0)
    w, f = _los_beams(ch)
    pulse = RaisedCosinePulse(TS)
    args = (ch, w, f, pulse, 1800.0, 1e-13, 1000.0)
    a = simulate_ofdm_ber(*args, 5, n_symbols=4, n_d=128)
    b = simulate_ofdm_ber(*args, 5, n_symbols=4, n_d=128)
    assert a.ber == b.ber and a.n_errors == b.n_errors
