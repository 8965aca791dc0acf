"""Shared builders for the test suite.

Most tests want a tiny, fully excited sensing link: every RF chain active,
no guard interval, and a one-sided pulse so that integer-tap delays stay
non-negative.  These helpers keep those instances consistent across modules.
"""
import numpy as np

from isac_sim.array_channel import CirTensor, RaisedCosinePulse, steering_vector
from isac_sim.waveform import (PilotFrameParams, build_measurement_matrices,
                               schedule_pilots)

TS = 5e-9


def delta_pulse():
    # tau_p = t_s keeps the support one tap wide, so tap d <-> delay (d-1)*t_s
    return RaisedCosinePulse(TS, tau_p=TS)


def tiny_radar_frame(n_cu=4, n_wsa=4, p_len=10, n_taps=4, seed=5, p_dl=2.0,
                     n_rf=None, t_rf_cu=30, t_gi=0):
    params = PilotFrameParams(
        n_cu=n_cu, n_rf=n_cu if n_rf is None else n_rf, m_ut=n_wsa,
        p_len=p_len, n_taps=n_taps, p_dl=p_dl, t_rf_cu=t_rf_cu, t_gi=t_gi)
    frame = schedule_pilots(params, seed)
    return frame, build_measurement_matrices(frame)


def rank1_cir(n_taps, n_rx, n_tx, entries):
    """CirTensor with taps[d] = gain * a_rx(mu) a_tx(mu)^H per (d, mu, gain)."""
    taps = np.zeros((n_taps, n_rx, n_tx), dtype=complex)
    for d, mu, gain in entries:
        a_rx = steering_vector(mu, n_rx)
        a_tx = steering_vector(mu, n_tx)
        taps[d] += gain * np.outer(a_rx, a_tx.conj())
    return CirTensor(taps, TS)
