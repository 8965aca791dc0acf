"""Sparse channel recovery: greedy pursuit with support refinement.

The sensing matrix for the radar receive block factors as
kron(B, A_wsa) with B = phi_bar^T @ kron(I_L, conj(A_cu)), which keeps the
per-iteration correlation a pair of small matrix products instead of an
explicit (Q*Nw) x (L*Gc*Gw) matrix.  Support refinement replaces each
selected column by one rebuilt from the continuous transmit-side angle, with
the wide-array alias resolved against the critically spaced estimate; those
columns live only in the explicit support factorization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from isac_sim.array_channel import CirTensor, steering_vector


def ind2sub(shape, z):
    """1-based linear index z -> (i, j) with i the fast axis of shape (x, y)."""
    x, y = shape
    if not 1 <= z <= x * y:
        raise ValueError("linear index out of range")
    j = -(-z // x)
    return z - (j - 1) * x, j


@dataclass(frozen=True)
class RecoveryResult:
    support: np.ndarray      # 1-based linear atom indices, selection order
    delays: np.ndarray       # seconds
    azimuths: np.ndarray     # virtual angles (refined for omp_sr)
    elevations: np.ndarray
    gains: np.ndarray
    n_iters: int
    cir: CirTensor
    checkpoint_cirs: dict | None = None


@dataclass(frozen=True)
class LosEstimate:
    mu_ut: float
    nu_ut: float
    mu_cu: float
    nu_cu: float
    delay: float


def _vec(y):
    return y.flatten(order="F")


class _IncrementalQr:
    """Grow a thin QR one column at a time (CGS with reorthogonalization)."""

    def __init__(self, dim, capacity):
        self.q = np.empty((dim, capacity), dtype=complex)
        self.r = np.zeros((capacity, capacity), dtype=complex)
        self.k = 0

    def append(self, v, rel_tol=1e-10):
        v = v.astype(complex, copy=True)
        scale = np.linalg.norm(v)
        for _ in range(2):
            proj = self.q[:, :self.k].conj().T @ v
            self.r[:self.k, self.k] += proj
            v -= self.q[:, :self.k] @ proj
        rkk = np.linalg.norm(v)
        if rkk <= rel_tol * scale:
            self.r[:self.k, self.k] = 0.0
            return False
        self.q[:, self.k] = v / rkk
        self.r[self.k, self.k] = rkk
        self.k += 1
        return True

    def solve(self, qty):
        return solve_triangular(self.r[:self.k, :self.k], qty[:self.k])


def _reconstruct(atoms, pulse, l_taps, n_rx, n_tx, t_s, gains):
    """Sum gain * outer(rx, tx^H) * pulse((l - tap)*t_s) over support atoms."""
    taps = np.zeros((l_taps, n_rx, n_tx), dtype=complex)
    if atoms:
        rx = np.stack([a["rx"] for a in atoms], axis=1)
        tx = np.stack([a["tx"] for a in atoms], axis=1)
        tap_idx = np.array([a["tap"] for a in atoms])
        grid = np.arange(l_taps)[None, :] - tap_idx[:, None]
        shape = pulse(grid * t_s)
        taps = np.einsum("rk,tk,k,kl->lrt", rx, tx.conj(), gains, shape,
                         optimize=True)
    return CirTensor(taps, t_s)


def _greedy_pursuit(obs, mm, cu_dict, wsa_dict, pulse, max_iters,
                    refine, checkpoints=None):
    a_cu = cu_dict.matrix
    a_wsa = wsa_dict.matrix
    n_cu = a_cu.shape[0]
    n_wsa, q_len = obs.y.shape
    l_taps = mm.phi_bar.shape[0] // n_cu
    g_cu, g_wsa = a_cu.shape[1], a_wsa.shape[1]
    t_s = pulse.t_s
    spacing = wsa_dict.spacing

    phi_r = mm.phi_bar.reshape(l_taps, n_cu, q_len)
    b_mat = np.einsum("lnq,ng->qlg", phi_r, a_cu.conj(),
                      optimize=True).reshape(q_len, l_taps * g_cu)

    y_vec = _vec(obs.y)
    y_norm = np.linalg.norm(y_vec)
    resid = obs.y.copy()
    qr = _IncrementalQr(q_len * n_wsa, max_iters)
    qty = np.empty(max_iters, dtype=complex)
    taken = np.zeros((g_wsa, l_taps * g_cu), dtype=bool)

    atoms = []
    gains = np.zeros(0, dtype=complex)
    snapshots = {} if checkpoints else None
    checkpoints = set(checkpoints or ())

    while len(atoms) < max_iters:
        if np.linalg.norm(resid) <= 1e-12 * max(y_norm, 1e-300):
            break
        corr = np.abs(a_wsa.conj().T @ resid @ b_mat.conj())
        corr[taken] = -1.0
        flat_corr = corr.flatten(order="F")
        appended = False
        while not appended:
            flat = int(np.argmax(flat_corr))
            if flat_corr[flat] <= 0.0:
                break
            flat_corr[flat] = -1.0
            i_aoa = flat % g_wsa
            i_aux = flat // g_wsa
            taken[i_aoa, i_aux] = True

            i_aod, i_d = i_aux % g_cu, i_aux // g_cu
            aod_ele, aod_azi = i_aod % cu_dict.g_y, i_aod // cu_dict.g_y
            aoa_ele, aoa_azi = i_aoa % wsa_dict.g_y, i_aoa // wsa_dict.g_y

            if refine:
                mu = _resolve_alias(cu_dict.grid_x[aod_azi],
                                    wsa_dict.grid_x[aoa_azi], spacing)
                nu = _resolve_alias(cu_dict.grid_y[aod_ele],
                                    wsa_dict.grid_y[aoa_ele], spacing)
                tx_vec = np.kron(
                    steering_vector(mu, cu_dict.geometry.n_x,
                                    cu_dict.geometry.spacing),
                    steering_vector(nu, cu_dict.geometry.n_y,
                                    cu_dict.geometry.spacing))
            else:
                # grid readout; the wide-array angle keeps its alias ambiguity
                mu = wsa_dict.grid_x[aoa_azi]
                nu = wsa_dict.grid_y[aoa_ele]
                tx_vec = a_cu[:, i_aod]

            rx_vec = a_wsa[:, i_aoa]
            col = np.kron(phi_r[i_d].T @ tx_vec.conj(), rx_vec)
            # distinct grid cells can refine onto one atom; a column already
            # in the span is skipped, not fatal
            appended = qr.append(col)
        if not appended:
            break    # every remaining cell is spanned or uncorrelated
        atoms.append({
            "flat": i_aux * g_wsa + i_aoa + 1,
            "tap": i_d,
            "mu": mu,
            "nu": nu,
            "rx": rx_vec,
            "tx": tx_vec,
        })
        qty[qr.k - 1] = qr.q[:, qr.k - 1].conj() @ y_vec
        gains = qr.solve(qty)
        resid = (y_vec - qr.q[:, :qr.k] @ qty[:qr.k]).reshape(
            (n_wsa, q_len), order="F")

        if len(atoms) in checkpoints:
            snapshots[len(atoms)] = _reconstruct(atoms, pulse, l_taps, n_wsa,
                                                 n_cu, t_s, gains)

    cir = _reconstruct(atoms, pulse, l_taps, n_wsa, n_cu, t_s, gains)
    if snapshots is not None:
        for cp in checkpoints:
            snapshots.setdefault(cp, cir)   # pursuit stopped before cp
    return RecoveryResult(
        support=np.array([a["flat"] for a in atoms], dtype=int),
        delays=np.array([a["tap"] * t_s - pulse.tau_p for a in atoms]),
        azimuths=np.array([a["mu"] for a in atoms]),
        elevations=np.array([a["nu"] for a in atoms]),
        gains=np.asarray(gains),
        n_iters=len(atoms),
        cir=cir,
        checkpoint_cirs=snapshots,
    )


def _resolve_alias(coarse, fine, spacing):
    """Shift the wide-array grid angle by whole alias periods toward the
    critically spaced estimate, keeping the result a physical angle.

    Candidates are the aliases inside [-1, 1); the unshifted rounding can
    land outside that range when the coarse pick sits near endfire, and an
    out-of-range angle would also corrupt the refined transmit column."""
    period = 1.0 / spacing
    k_lo = int(np.ceil((-1.0 - fine) * spacing))
    k_hi = int(np.floor((1.0 - fine) * spacing))
    cands = [fine + k * period for k in range(k_lo, k_hi + 1)]
    cands = [v for v in cands if -1.0 <= v < 1.0]
    return min(cands, key=lambda v: abs(v - coarse))


def omp_sr(obs, mm, cu_dict, wsa_dict, pulse, max_iters, checkpoints=None):
    """Greedy pursuit with per-atom support refinement.

    Each iteration picks the strongest atom of the Kron-factored dictionary,
    reads the coarse transmit-side angle and the fine-but-ambiguous
    wide-array angle, resolves the alias, and swaps the selected column for
    one rebuilt at the refined angle before the joint gain refit.

    checkpoints, if given, is an iterable of iteration counts at which CIR
    snapshots are stored on the result (one pursuit pass, several readouts).
    """
    return _greedy_pursuit(obs, mm, cu_dict, wsa_dict, pulse, max_iters,
                           refine=True, checkpoints=checkpoints)


def omp_plain(obs, mm, cu_dict, wsa_dict, pulse, max_iters, checkpoints=None):
    """Baseline pursuit without refinement: grid-angle readout, original
    dictionary columns, so wide-array alias ghosts survive."""
    return _greedy_pursuit(obs, mm, cu_dict, wsa_dict, pulse, max_iters,
                           refine=False, checkpoints=checkpoints)


def block_omp(obs, mm, n_cu, block_iters, pulse):
    """Delay-domain block baseline: greedily pick whole delay taps by matched
    filter energy, then jointly refit all spatial coefficients of the chosen
    taps.  No angular dictionary, so no sparsity gain inside a tap."""
    n_wsa, q_len = obs.y.shape
    l_taps = mm.phi_bar.shape[0] // n_cu
    phi_r = mm.phi_bar.reshape(l_taps, n_cu, q_len)
    t_s = pulse.t_s

    resid = obs.y.copy()
    chosen = []
    taps = np.zeros((l_taps, n_wsa, n_cu), dtype=complex)
    for _ in range(min(block_iters, l_taps)):
        scores = np.array([np.linalg.norm(resid @ phi_r[l].conj().T)
                           for l in range(l_taps)])
        scores[chosen] = -1.0
        l_new = int(np.argmax(scores))
        if scores[l_new] <= 0.0:
            break
        chosen.append(l_new)
        a = np.concatenate([phi_r[l] for l in chosen], axis=0)   # (kN, Q)
        x, *_ = np.linalg.lstsq(a.T, obs.y.T, rcond=None)
        resid = obs.y - x.T @ a
        taps[:] = 0.0
        for i, l in enumerate(chosen):
            taps[l] = x[i * n_cu:(i + 1) * n_cu].T

    order = np.array(chosen, dtype=int)
    block_amp = np.array([np.linalg.norm(taps[l]) for l in chosen])
    nan = np.full(len(chosen), np.nan)
    return RecoveryResult(
        support=order + 1,
        delays=order * t_s - pulse.tau_p,
        azimuths=nan,
        elevations=nan.copy(),
        gains=block_amp.astype(complex),
        n_iters=len(chosen),
        cir=CirTensor(taps, t_s),
    )


def ce_ut(obs, mm, ut_dict, cu_dict, l_taps, pulse):
    """Single-shot LoS readout at the UT: one correlation over the joint
    (UT angle, CU angle, delay) dictionary, then grid angle/delay readout.

    Correlation order matches the atom indexing: UT angle fastest, then CU
    angle, then delay.
    """
    a_ut, a_cu = ut_dict.matrix, cu_dict.matrix
    m_ut, n_cu = a_ut.shape[0], a_cu.shape[0]
    g_ut, g_cu = a_ut.shape[1], a_cu.shape[1]

    x = mm.phi_valid.conj().T @ obs.y_valid                  # (L*M*N,)
    x = x.reshape(l_taps * n_cu, m_ut).T                     # un-vec, M fast
    x = x.reshape(m_ut, l_taps, n_cu)
    t = np.einsum("mu,mln,ng->lgu", a_ut.conj(), x, a_cu, optimize=True)

    flat = int(np.argmax(np.abs(t).reshape(-1)))
    i_ut = flat % g_ut
    rest = flat // g_ut
    i_cu = rest % g_cu
    i_d = rest // g_cu

    ut_ele, ut_azi = i_ut % ut_dict.g_y, i_ut // ut_dict.g_y
    cu_ele, cu_azi = i_cu % cu_dict.g_y, i_cu // cu_dict.g_y
    return LosEstimate(
        mu_ut=ut_dict.grid_x[ut_azi],
        nu_ut=ut_dict.grid_y[ut_ele],
        mu_cu=cu_dict.grid_x[cu_azi],
        nu_cu=cu_dict.grid_y[cu_ele],
        delay=i_d * pulse.t_s - pulse.tau_p,
    )
