"""Multi-user Doppler estimation over beamformed uplink impulse pilots.

UTs whose LoS beams and delays are separable share the data phase; each
scheduled UT sends periodic impulse pilots through its LoS beam, the
receiver samples its RF chain at the UT's estimated delay, and the LoS
Doppler falls out of the phase progression of the resulting slow-time
series.  Estimation uses weighted autocorrelation phase increments, which
stays unbiased for a single tone and approaches the frequency CRB at
moderate SNR.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from isac_sim.array_channel import steering_vector, upa_steering, virtual_angles
from isac_sim.recovery import LosEstimate


class UnreliableEstimate(Exception):
    """Pilot series failed the energy gate; re-estimation advised."""


def schedule_uts(estimates, n_rf, n_x, tau_p):
    """Greedy admission of UTs into one shared data phase.

    A candidate joins if, against every admitted UT, it is separated by at
    least 2/n_x in CU virtual angle or by at least 2*tau_p in delay
    (thresholds exactly met still admit).  At most n_rf UTs fit.
    """
    selected = []
    for i, est in enumerate(estimates):
        if len(selected) == n_rf:
            break
        ok = True
        for j in selected:
            other = estimates[j]
            angle_sep = abs(est.mu_cu - other.mu_cu)
            delay_sep = abs(est.delay - other.delay)
            if angle_sep < 2.0 / n_x and delay_sep < 2.0 * tau_p:
                ok = False
                break
        if ok:
            selected.append(i)
    return selected


@dataclass(frozen=True)
class DataPhaseBeams:
    ut_beams: np.ndarray   # (u, m_ut) analog combiner per UT
    cu_beams: np.ndarray   # (u, n_cu) RF-chain beam per UT

    @property
    def n_users(self):
        return self.ut_beams.shape[0]


def build_data_beams(estimates, ut_geometry, cu_geometry):
    """LoS beam steering vectors from the per-UT estimates."""
    ut, cu = [], []
    for est in estimates:
        ut.append(np.kron(
            steering_vector(est.mu_ut, ut_geometry.n_x, ut_geometry.spacing),
            steering_vector(est.nu_ut, ut_geometry.n_y, ut_geometry.spacing)))
        cu.append(np.kron(
            steering_vector(est.mu_cu, cu_geometry.n_x, cu_geometry.spacing),
            steering_vector(est.nu_cu, cu_geometry.n_y, cu_geometry.spacing)))
    return DataPhaseBeams(np.stack(ut), np.stack(cu))


@dataclass(frozen=True)
class DopplerSeries:
    y: np.ndarray          # (u, p_d) slow-time samples per scheduled UT
    t_d: float             # slow-time sampling interval, seconds
    sigma_n: float


def simulate_impulse_pilots(channels, beams, tau_hats, p_ut, p_d, t_d,
                            pulse, sigma_n2, rng_seed, t_start=0.0):
    """Uplink impulse pilots from all scheduled UTs, sampled per RF chain.

    Chain u samples the superposed receive signal at the tap where UT u's LoS
    pulse peaks (delay estimate tau_hats[u] plus the pulse's single-sided
    support), so the LoS factor is p(tau_hat - tau) and peaks at 1 for an
    exact estimate.  Every UT's full multipath (through its transmit beam)
    leaks into every chain, which is the residual inter-user interference.
    Channels are the downlink realizations; reciprocity supplies the uplink
    response.

    Each antenna element observes a path at the full path amplitude, so with
    unit-norm steering vectors the physical response carries an extra
    sqrt(m*n): matched unit-norm beams then collect the whole two-sided
    array gain, the same convention as the OFDM downlink simulator.
    """
    n_users = len(channels)
    rng = np.random.default_rng(rng_seed)
    t_n = t_start + np.arange(p_d) * t_d
    y = np.zeros((n_users, p_d), dtype=complex)
    powers = np.broadcast_to(np.asarray(p_ut, dtype=float), (n_users,))

    for u_tx, ch in enumerate(channels):
        w = beams.ut_beams[u_tx]
        scale = np.sqrt(ch.rx_geometry.n * ch.tx_geometry.n)
        amp_tx = scale * np.sqrt(powers[u_tx])
        for path in ch.all_paths():
            a_m = upa_steering(path.aoa_azimuth, path.aoa_elevation,
                               ch.rx_geometry)
            a_n = upa_steering(path.aod_azimuth, path.aod_elevation,
                               ch.tx_geometry)
            g_t = path.gain * np.exp(2j * np.pi * path.doppler * t_n)
            tx_gain = a_m @ w.conj()
            for u_rx in range(n_users):
                shape = pulse(tau_hats[u_rx] - path.delay)
                if shape == 0.0:
                    continue
                rx_gain = beams.cu_beams[u_rx] @ a_n.conj()
                y[u_rx] += amp_tx * tx_gain * rx_gain * shape * g_t

    y += np.sqrt(sigma_n2 / 2) * (rng.normal(size=y.shape)
                                  + 1j * rng.normal(size=y.shape))
    return DopplerSeries(y, t_d, np.sqrt(sigma_n2))


def _wnalp_weights(p_d):
    k = p_d // 2
    m = np.arange(1, k + 1)
    num = 3.0 * ((p_d - m) * (p_d - m + 1) - k * (p_d - k))
    den = k * (4.0 * k ** 2 - 6.0 * k * p_d + 3.0 * p_d ** 2 - 1.0)
    return num / den


def estimate_doppler(series_u, t_d, sigma_n=None):
    """Weighted autocorrelation-phase frequency estimate of one slow-time
    series.  Raises UnreliableEstimate when the energy gate fails."""
    y = np.asarray(series_u)
    p_d = y.size
    if p_d < 2:
        raise ValueError("need at least two slow-time samples")
    if sigma_n is not None and np.linalg.norm(y) < 10.0 * np.sqrt(p_d) * sigma_n:
        raise UnreliableEstimate("pilot energy below the gate")

    k = p_d // 2
    r = np.array([np.mean(y[m:] * y[:p_d - m].conj()) for m in range(k + 1)])
    r[0] = np.abs(r[0])     # zero-lag phase pinned to 0
    incr = np.angle(r[1:] * r[:-1].conj())
    return float(np.sum(_wnalp_weights(p_d) * incr) / (2.0 * np.pi * t_d))


def crb_reference(snr, p_d):
    """Single-tone frequency CRB in units of (2*pi*t_d*df)^2."""
    return 6.0 / (snr * p_d * (p_d ** 2 - 1))


def compensate_doppler(x, f_hat, t_s, t_start=0.0):
    """Counter-rotate a sample stream by the estimated Doppler."""
    n = np.arange(np.asarray(x).shape[-1])
    return x * np.exp(-2j * np.pi * f_hat * (t_start + n * t_s))


def los_estimate_from_channel(ch, tau_hat=None):
    """Perfect-knowledge LosEstimate for a comm channel (test scaffolding
    and no-IUI reference runs)."""
    los = ch.los
    mu_ut, nu_ut = virtual_angles(los.aoa_azimuth, los.aoa_elevation)
    mu_cu, nu_cu = virtual_angles(los.aod_azimuth, los.aod_elevation)
    return LosEstimate(mu_ut=mu_ut, nu_ut=nu_ut, mu_cu=mu_cu, nu_cu=nu_cu,
                       delay=los.delay if tau_hat is None else tau_hat)
