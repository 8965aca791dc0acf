"""Uncoded OFDM data phase over the time-varying beamformed channel.

The Doppler of every path keeps rotating across the whole frame, so an
equalizer built once from the initial LoS response goes stale unless the
receiver counter-rotates by an estimate of the LoS Doppler before the DFT.
Per-cluster taps are static, which turns the time-varying convolution into
one convolution per cluster followed by that cluster's phase ramp.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from isac_sim.array_channel import upa_steering

_QAM16_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
# Gray order per axis: 00 01 11 10 -> levels -3 -1 +1 +3
_QAM16_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]])


@dataclass(frozen=True)
class BerResult:
    ber: float
    n_bits: int
    n_errors: int


_GRAY_TO_LEVEL = np.array([0, 1, 3, 2])   # bit pair value -> level index


def _qam16_mod(bits):
    quads = bits.reshape(-1, 4)
    i_lev = _GRAY_TO_LEVEL[quads[:, 0] * 2 + quads[:, 1]]
    q_lev = _GRAY_TO_LEVEL[quads[:, 2] * 2 + quads[:, 3]]
    return _QAM16_LEVELS[i_lev] + 1j * _QAM16_LEVELS[q_lev]


def _qam16_demod(sym):
    def axis_bits(v):
        edges = np.array([-2.0, 0.0, 2.0]) / np.sqrt(10.0)
        idx = np.searchsorted(edges, v)
        return _QAM16_BITS[idx]

    bi = axis_bits(np.real(sym))
    bq = axis_bits(np.imag(sym))
    return np.concatenate([bi, bq], axis=1).reshape(-1)


def _cluster_taps(ch, w_ut, f_cu, pulse, sample_offset=0.0):
    """Static effective tap profile and Doppler per cluster (LoS counts as
    its own group).  Includes the sqrt(m*n) phase-only beam gain.
    sample_offset shifts the receive sampling clock off the nominal grid."""
    m, n = ch.rx_geometry.n, ch.tx_geometry.n
    scale = np.sqrt(m * n)
    groups = []
    members = [("los", [ch.los])] if ch.los is not None else []
    members += [("c", list(c.paths)) for c in ch.clusters]
    grid = np.arange(ch.n_taps) * ch.t_s + sample_offset
    for _, paths in members:
        taps = np.zeros(ch.n_taps, dtype=complex)
        for p in paths:
            a_m = upa_steering(p.aoa_azimuth, p.aoa_elevation, ch.rx_geometry)
            a_n = upa_steering(p.aod_azimuth, p.aod_elevation, ch.tx_geometry)
            coeff = scale * (w_ut.conj() @ a_m) * (a_n.conj() @ f_cu) * p.gain
            taps += coeff * pulse(grid - p.delay - pulse.tau_p)
        groups.append((paths[0].doppler, taps))
    return groups


def simulate_ofdm_ber(ch, w_ut, f_cu, pulse, f_comp, sigma_n2, p_dl,
                      rng_seed, n_symbols=32, n_d=1024, cp_len=None,
                      n_rf=4, f_anchor=None):
    """BER of uncoded 16-QAM OFDM through the time-varying channel.

    f_comp is the receiver's Doppler estimate (None disables compensation;
    pass the channel's true LoS Doppler for the perfect-compensation bound).
    The receive sampling clock is pilot-synchronized: a sub-sample offset
    puts the LoS peak exactly on the tap grid, so the LoS collapses to a
    single tap (Nyquist zeros elsewhere) and the one-tap equalizer from the
    t=0 LoS response is exact once the LoS rotation is removed.

    Each OFDM symbol is one data frame, and the pilots between frames let
    the receiver re-measure the channel at every frame boundary.  Passing
    f_anchor (the true LoS Doppler) models that ideal re-anchoring: the
    equalizer is rebuilt from the per-cluster response at each symbol start,
    so f_comp only has to hold within a single symbol and the residual error
    is the within-symbol drift of the clusters.  f_anchor=None keeps one
    continuous rotation against the static initial-estimate equalizer.
    """
    if ch.los is None:
        raise ValueError("data phase needs a LoS component")
    if cp_len is None:
        cp_len = ch.n_taps
    if cp_len < ch.n_taps - 1:
        raise ValueError("cyclic prefix shorter than the channel memory")
    rng = np.random.default_rng(rng_seed)

    sym_len = n_d + cp_len
    n_bits = n_symbols * n_d * 4
    bits = rng.integers(0, 2, n_bits)
    syms = _qam16_mod(bits).reshape(n_symbols, n_d)

    bodies = np.fft.ifft(syms, axis=1) * np.sqrt(n_d)
    stream = np.concatenate([bodies[:, -cp_len:], bodies], axis=1).reshape(-1)
    stream = stream * np.sqrt(p_dl / n_rf)

    t_peak = ch.los.delay + pulse.tau_p
    offset = t_peak - np.floor(t_peak / ch.t_s) * ch.t_s
    groups = _cluster_taps(ch, w_ut, f_cu, pulse, sample_offset=offset)
    t = np.arange(stream.size + ch.n_taps - 1) * ch.t_s + offset
    rx = np.zeros(t.size, dtype=complex)
    for f_d, taps in groups:
        conv = fftconvolve(stream, taps)
        rx += conv * np.exp(2j * np.pi * f_d * t)
    rx = rx[:stream.size]
    rx += np.sqrt(sigma_n2 / 2) * (rng.normal(size=rx.size)
                                   + 1j * rng.normal(size=rx.size))

    if f_comp is not None:
        n_samp = np.arange(rx.size)
        if f_anchor is None:
            phase = f_comp * n_samp
        else:
            start = (n_samp // sym_len) * sym_len
            phase = f_anchor * start + f_comp * (n_samp - start)
        rx = rx * np.exp(-2j * np.pi * phase * ch.t_s)

    rx_sym = rx.reshape(n_symbols, sym_len)[:, cp_len:]
    x_hat = np.fft.fft(rx_sym, axis=1) / np.sqrt(n_d)
    if f_anchor is None:
        h_eq = np.fft.fft(groups[0][1], n_d) * np.sqrt(p_dl / n_rf)
        eq = x_hat / h_eq[None, :]
    else:
        # tracked receiver: pilots at each frame boundary re-measure the
        # post-compensation response, so every cluster is equalized at its
        # body-start phase and only within-symbol drift survives
        s_idx = np.arange(n_symbols)
        b0 = s_idx * sym_len + cp_len
        t_b0 = b0 * ch.t_s + offset
        comp_b0 = (f_anchor * s_idx * sym_len + f_comp * cp_len) * ch.t_s
        h_sym = np.zeros((n_symbols, n_d), dtype=complex)
        for f_d, taps in groups:
            ph = np.exp(2j * np.pi * (f_d * t_b0 - comp_b0))
            h_sym += ph[:, None] * np.fft.fft(taps, n_d)[None, :]
        eq = x_hat / (h_sym * np.sqrt(p_dl / n_rf))
    bits_hat = _qam16_demod(eq.reshape(-1))
    n_err = int(np.sum(bits_hat != bits))
    return BerResult(n_err / n_bits, n_bits, n_err)
