"""Hardware-constrained pilot waveform: codebooks, GI schedule, measurement operators.

Phase-shifter precoders can only retune every t_rf_cu samples and need a
guard interval of t_gi samples to settle; pilot symbols are muted while the
transmit network retunes, and receive samples taken while the UT combiner
retunes are dropped from the valid set.  The last dwell on each side needs no
guard because nothing retunes after it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PilotFrameParams:
    n_cu: int
    n_rf: int
    m_ut: int
    p_len: int
    n_taps: int
    p_dl: float          # transmit power, watts
    t_rf_cu: int = 30
    t_rf_ut: int = 30
    t_gi: int = 10
    gi_offset: int = 0   # placement of the guard window inside a dwell

    def __post_init__(self):
        if self.p_len < 1:
            raise ValueError("empty pilot frame")
        if self.t_gi >= min(self.t_rf_cu, self.t_rf_ut):
            raise ValueError("guard interval must be shorter than a dwell")
        if not 0 <= self.gi_offset < min(self.t_rf_cu, self.t_rf_ut):
            raise ValueError("gi_offset outside a dwell")

    @property
    def q_len(self):
        return self.p_len + self.n_taps - 1

    @property
    def n_cb(self):
        return -(-self.p_len // self.t_rf_cu)

    @property
    def m_cb(self):
        return -(-self.q_len // self.t_rf_ut)


@dataclass(frozen=True)
class PilotFrame:
    params: PilotFrameParams
    f_codebook: np.ndarray    # (n_cb, n_cu, n_rf)
    w_codebook: np.ndarray    # (m_cb, m_ut)
    symbols: np.ndarray       # (p_len, n_rf), zeroed during CU guard windows
    precoders: np.ndarray     # (p_len, n_cu, n_rf), draws fresh during guards
    pilots: np.ndarray        # (p_len, n_cu)
    combiners: np.ndarray     # (q_len, m_ut), draws fresh during guards
    cu_gi_mask: np.ndarray    # (p_len,) True where the transmit network retunes
    ut_gi_mask: np.ndarray    # (q_len,) True where the combiner retunes
    valid_idx: np.ndarray     # 0-based receive samples kept for estimation


def _phase_codebook(rng, count, *shape):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, (count, *shape)))


def build_codebooks(params, rng_seed):
    """Random-phase codebooks; precoder entries have modulus 1/sqrt(n_cu),
    combiner entries 1/sqrt(m_ut) so each combiner has unit norm."""
    rng = np.random.default_rng(rng_seed)
    f_cb = _phase_codebook(rng, params.n_cb, params.n_cu, params.n_rf)
    f_cb /= np.sqrt(params.n_cu)
    w_cb = _phase_codebook(rng, params.m_cb, params.m_ut) / np.sqrt(params.m_ut)
    return f_cb, w_cb


def _gi_mask(n_samples, t_rf, t_gi, n_cb, offset):
    """True where the beamforming network is retuning (uncertain response).

    Sample p retunes when its in-dwell position falls in the trailing t_gi
    slots, except in the final dwell which has nothing to prepare for.
    """
    p = np.arange(n_samples)
    in_dwell = np.mod(p - offset, t_rf)
    dwell = p // t_rf + 1
    return (in_dwell >= t_rf - t_gi) & (dwell != n_cb)


def schedule_pilots(params, rng_seed, uncertainty_seed=None):
    """Assemble one pilot frame: codebooks, BPSK symbols, guard handling.

    The retuning-window precoder/combiner responses are physically undefined;
    they are modeled as fresh random phase networks drawn from
    uncertainty_seed, and nothing downstream may depend on them (symbols are
    zero there on the CU side, samples dropped on the UT side).
    """
    if not isinstance(rng_seed, np.random.SeedSequence):
        rng_seed = np.random.SeedSequence(rng_seed)
    cb_seed, sym_seed, unc_default = rng_seed.spawn(3)
    if uncertainty_seed is None:
        uncertainty_seed = unc_default

    f_cb, w_cb = build_codebooks(params, cb_seed)

    rng = np.random.default_rng(sym_seed)
    amp = np.sqrt(params.p_dl / params.n_rf)
    symbols = amp * rng.choice([-1.0, 1.0], (params.p_len, params.n_rf))
    symbols = symbols.astype(complex)

    cu_gi = _gi_mask(params.p_len, params.t_rf_cu, params.t_gi,
                     params.n_cb, params.gi_offset)
    ut_gi = _gi_mask(params.q_len, params.t_rf_ut, params.t_gi,
                     params.m_cb, params.gi_offset)
    symbols[cu_gi] = 0.0

    urng = np.random.default_rng(uncertainty_seed)
    precoders = f_cb[np.arange(params.p_len) // params.t_rf_cu].copy()
    precoders[cu_gi] = _phase_codebook(
        urng, int(cu_gi.sum()), params.n_cu, params.n_rf) / np.sqrt(params.n_cu)
    combiners = w_cb[np.arange(params.q_len) // params.t_rf_ut].copy()
    combiners[ut_gi] = _phase_codebook(
        urng, int(ut_gi.sum()), params.m_ut) / np.sqrt(params.m_ut)

    pilots = np.einsum("pnr,pr->pn", precoders, symbols)
    valid_idx = np.flatnonzero(~ut_gi)

    return PilotFrame(params, f_cb, w_cb, symbols, precoders, pilots,
                      combiners, cu_gi, ut_gi, valid_idx)


def transmit_pilot(frame, p):
    """Antenna-domain pilot vector for sample p (zero while retuning)."""
    return frame.pilots[p]


@dataclass(frozen=True)
class MeasurementMatrices:
    phi_bar: np.ndarray     # (n_taps*n_cu, q_len) block-Toeplitz pilot stack
    phi_valid: np.ndarray   # (n_valid, n_taps*m_ut*n_cu) combined operator rows
    valid_idx: np.ndarray

    @property
    def q_len(self):
        return self.phi_bar.shape[1]


def build_measurement_matrices(frame):
    """Operators linking the spatial-delay channel to the received samples.

    Column q of phi_bar stacks [p_{q-1}; p_{q-2}; ...; p_{q-L}] (1-based q,
    zeros outside the frame), so H_sd @ phi_bar runs the full convolution.
    Row n of the combined operator is kron(phi_bar[:, n], conj(w_n)); only
    rows with a settled combiner are kept.
    """
    pr = frame.params
    l_taps, n_cu, q_len = pr.n_taps, pr.n_cu, pr.q_len
    phi_bar = np.zeros((l_taps, n_cu, q_len), dtype=complex)
    for l in range(l_taps):
        phi_bar[l, :, l:l + pr.p_len] = frame.pilots.T
    phi_bar = phi_bar.reshape(l_taps * n_cu, q_len)

    b_valid = phi_bar[:, frame.valid_idx].T                   # (V, L*N)
    w_valid = frame.combiners[frame.valid_idx].conj()          # (V, M)
    phi_valid = np.einsum("vk,vm->vkm", b_valid, w_valid)
    phi_valid = phi_valid.reshape(len(frame.valid_idx), -1)

    return MeasurementMatrices(phi_bar, phi_valid, frame.valid_idx.copy())
