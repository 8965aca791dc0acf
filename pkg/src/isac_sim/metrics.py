"""NMSE and spectral-efficiency metrics.

The harness always works in linear scale; dB conversion belongs to plotting.
"""
from __future__ import annotations

import numpy as np

from isac_sim.array_channel import CirTensor, steering_vector


def nmse(truth, estimate):
    """Squared-Frobenius error ratio for one trial."""
    t = truth.taps if isinstance(truth, CirTensor) else np.asarray(truth)
    e = estimate.taps if isinstance(estimate, CirTensor) else np.asarray(estimate)
    if t.shape != e.shape:
        raise ValueError("shape mismatch")
    denom = np.sum(np.abs(t) ** 2)
    if denom == 0.0:
        raise ValueError("zero-energy reference channel")
    return float(np.sum(np.abs(e - t) ** 2) / denom)


def ase(h_sd, mu_ut_hat, mu_cu_hat, p_dl, sigma_n2, n_d, n_rf=4):
    """Mean per-subcarrier rate under LoS beam steering at estimated angles.

    Beams are phase-only (modulus-one entries), so the coherent array gain
    m*n shows up in the signal term while combining leaves the noise at
    sigma_n2; the flat-channel single-path rate is then
    log2(1 + p_dl/(sigma_n2*n_rf) * m * n * |g*p(0)|^2).
    """
    taps = h_sd.taps
    l_taps, m, n = taps.shape
    if n_d < l_taps:
        raise ValueError("need at least as many subcarriers as taps")
    a_ut = steering_vector(mu_ut_hat, m)
    a_cu = steering_vector(mu_cu_hat, n)
    per_tap = np.einsum("m,lmn,n->l", a_ut.conj(), taps, a_cu, optimize=True)
    h_f = np.fft.fft(per_tap, n_d) * np.sqrt(m * n)
    rate = np.log2(1.0 + p_dl / (sigma_n2 * n_rf) * np.abs(h_f) ** 2)
    return float(np.mean(rate))
