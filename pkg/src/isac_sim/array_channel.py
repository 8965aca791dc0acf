"""Array geometry, steering vectors, and clustered time-varying channels.

Geometry conventions: uniform planar arrays indexed (x, y), element spacing
given in carrier wavelengths.  Virtual angles are mu = cos(azi)*sin(ele) on
the x axis and nu = sin(azi)*sin(ele) on the y axis, both in (-1, 1).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
CRITICAL_SPACING = 0.5


class LinkKind(enum.Enum):
    COMM_DOWNLINK = "comm_downlink"
    RADAR = "radar"


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with n_x * n_y elements, spacing in wavelengths."""

    n_x: int
    n_y: int = 1
    spacing: float = CRITICAL_SPACING

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("antenna counts must be positive")
        if self.spacing < CRITICAL_SPACING:
            raise ValueError("spacing below half a wavelength is not supported")

    @property
    def n(self):
        return self.n_x * self.n_y


def steering_vector(mu, count, spacing=CRITICAL_SPACING):
    """Unit-norm ULA response at virtual angle mu.

    Element k carries exp(-1j * 2*pi * spacing * k * mu) / sqrt(count), so the
    response is periodic in mu with period 1/spacing (spatial aliasing for
    spacing > 0.5).
    """
    k = np.arange(count)
    return np.exp(-2j * np.pi * spacing * k * mu) / np.sqrt(count)


def virtual_angles(azimuth, elevation):
    """(mu, nu) from physical azimuth/elevation."""
    se = np.sin(elevation)
    return np.cos(azimuth) * se, np.sin(azimuth) * se


def upa_steering(azimuth, elevation, geometry):
    """UPA response: azimuth-axis vector kron elevation-axis vector.

    The elevation (y) index varies fastest, matching the column ordering used
    by the angular dictionaries.
    """
    mu, nu = virtual_angles(azimuth, elevation)
    ax = steering_vector(mu, geometry.n_x, geometry.spacing)
    ay = steering_vector(nu, geometry.n_y, geometry.spacing)
    return np.kron(ax, ay)


@dataclass(frozen=True)
class RaisedCosinePulse:
    """Truncated raised-cosine pulse; tau_p is the single-sided support."""

    t_s: float
    rolloff: float = 0.8
    tau_p: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in (0, 1]")
        if self.tau_p <= 0.0:
            object.__setattr__(self, "tau_p", 6.0 * self.t_s)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        x = tau / self.t_s
        den = 1.0 - (2.0 * self.rolloff * x) ** 2
        # limit value at the rolloff singularity |x| = 1/(2*beta)
        sing = np.isclose(np.abs(den), 0.0, atol=1e-12)
        safe_den = np.where(sing, 1.0, den)
        val = np.sinc(x) * np.cos(np.pi * self.rolloff * x) / safe_den
        val = np.where(
            sing, np.pi / 4.0 * np.sinc(1.0 / (2.0 * self.rolloff)), val
        )
        return np.where(np.abs(tau) <= self.tau_p, val, 0.0)


@dataclass(frozen=True)
class PathComponent:
    """One propagation path; angles held for both link ends.

    For radar paths the arrival and departure angles coincide (monostatic
    geometry, co-located arrays).  gain is the complex amplitude at t = 0;
    the time evolution is gain * exp(j*2*pi*doppler*t).
    """

    gain: complex
    aoa_azimuth: float
    aoa_elevation: float
    aod_azimuth: float
    aod_elevation: float
    delay: float
    doppler: float

    def __post_init__(self):
        for azi, ele in ((self.aoa_azimuth, self.aoa_elevation),
                         (self.aod_azimuth, self.aod_elevation)):
            if not 0.0 <= azi < 2.0 * np.pi:
                raise ValueError("azimuth outside [0, 2*pi)")
            if not 0.0 <= ele < np.pi / 2.0:
                raise ValueError("elevation outside [0, pi/2)")
            mu, nu = virtual_angles(azi, ele)
            if not (-1.0 < mu < 1.0 and -1.0 < nu < 1.0):
                raise ValueError("virtual angle outside (-1, 1)")
        if self.delay < 0.0:
            raise ValueError("negative path delay")


@dataclass(frozen=True)
class Cluster:
    central_azimuth: float
    central_elevation: float
    central_delay: float
    doppler: float
    paths: tuple


@dataclass(frozen=True)
class ChannelRealization:
    """Clustered multipath channel between one tx/rx array pair."""

    link_kind: LinkKind
    rx_geometry: ArrayGeometry
    tx_geometry: ArrayGeometry
    clusters: tuple
    los: PathComponent | None
    rician_db: float
    n_taps: int
    t_s: float

    def all_paths(self):
        out = [] if self.los is None else [self.los]
        for c in self.clusters:
            out.extend(c.paths)
        return out


@dataclass(frozen=True)
class CirTensor:
    """Sampled channel impulse response, taps[l] is the rx-by-tx matrix."""

    taps: np.ndarray
    t_s: float

    @property
    def n_taps(self):
        return self.taps.shape[0]

    def spatial_delay(self):
        """Horizontal stack [H_0 H_1 ... H_{L-1}], shape (rx, L*tx)."""
        l, rx, tx = self.taps.shape
        return np.ascontiguousarray(self.taps.transpose(1, 0, 2)).reshape(rx, l * tx)


@dataclass(frozen=True)
class ChannelScenario:
    """Sampling distributions for generate_channel.

    distance_range is the UT distance (comm) or target range (radar) in
    meters; rcs_range only applies to radar links.  Spread fields give the
    total width of the uniform per-path offsets around each cluster center.
    """

    link_kind: LinkKind
    rx_geometry: ArrayGeometry
    tx_geometry: ArrayGeometry
    carrier_hz: float
    t_s: float
    n_taps: int
    pulse: RaisedCosinePulse
    n_clusters: int = 6
    paths_per_cluster: int = 15
    rician_db: float = 20.0
    distance_range: tuple = (10.0, 20.0)
    rcs_range: tuple = (0.5, 5.0)
    doppler_max_hz: float = 7100.0
    angle_spread_deg: float = 7.5
    delay_spread: float = 0.0
    elevation_max: float = np.pi / 3.0

    def __post_init__(self):
        if self.delay_spread == 0.0:
            object.__setattr__(self, "delay_spread", 0.3 * self.t_s)

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def max_central_delay(self):
        return (self.n_taps - 1) * self.t_s - 2.0 * self.pulse.tau_p


def _offset_angles(rng, azi0, ele0, spread_rad, count):
    azi = np.mod(azi0 + rng.uniform(-spread_rad / 2, spread_rad / 2, count), 2 * np.pi)
    ele = np.abs(ele0 + rng.uniform(-spread_rad / 2, spread_rad / 2, count))
    ele = np.minimum(ele, np.pi / 2 - 1e-9)
    return azi, ele


def generate_channel(scenario, rng_seed):
    """Draw one ChannelRealization.

    Comm links get one LoS path plus n_clusters NLoS clusters whose power
    sits 1/K_f below LoS in aggregate.  Radar links have no LoS; each cluster
    is a scattering target whose per-path amplitude follows the two-way range
    equation.  Doppler is drawn per cluster and shared by its paths.
    """
    sc = scenario
    if sc.max_central_delay < 0.0:
        raise ValueError("delay support does not fit the tap window")
    rng = np.random.default_rng(rng_seed)
    lam = sc.wavelength
    spread = np.deg2rad(sc.angle_spread_deg)

    los = None
    g_los_mag = None
    if sc.link_kind is LinkKind.COMM_DOWNLINK:
        d_ut = rng.uniform(*sc.distance_range)
        g_los_mag = lam / (4.0 * np.pi * d_ut)
        los = PathComponent(
            gain=g_los_mag * np.exp(1j * rng.uniform(0, 2 * np.pi)),
            aoa_azimuth=rng.uniform(0, 2 * np.pi),
            aoa_elevation=rng.uniform(0, sc.elevation_max),
            aod_azimuth=rng.uniform(0, 2 * np.pi),
            aod_elevation=rng.uniform(0, sc.elevation_max),
            delay=rng.uniform(0, sc.max_central_delay),
            doppler=rng.uniform(-sc.doppler_max_hz, sc.doppler_max_hz),
        )

    kf = 10.0 ** (sc.rician_db / 10.0)
    clusters = []
    for _ in range(sc.n_clusters):
        f_d = rng.uniform(-sc.doppler_max_hz, sc.doppler_max_hz)
        tau0 = rng.uniform(0, sc.max_central_delay)
        delays = np.clip(
            tau0 + rng.uniform(-sc.delay_spread / 2, sc.delay_spread / 2,
                               sc.paths_per_cluster),
            0.0, None)
        phases = rng.uniform(0, 2 * np.pi, sc.paths_per_cluster)

        if sc.link_kind is LinkKind.COMM_DOWNLINK:
            azi_a0 = rng.uniform(0, 2 * np.pi)
            ele_a0 = rng.uniform(0, sc.elevation_max)
            azi_d0 = rng.uniform(0, 2 * np.pi)
            ele_d0 = rng.uniform(0, sc.elevation_max)
            azi_a, ele_a = _offset_angles(rng, azi_a0, ele_a0, spread,
                                          sc.paths_per_cluster)
            azi_d, ele_d = _offset_angles(rng, azi_d0, ele_d0, spread,
                                          sc.paths_per_cluster)
            amp = g_los_mag / np.sqrt(kf * sc.n_clusters * sc.paths_per_cluster)
            central_azi, central_ele = azi_a0, ele_a0
        else:
            dist = rng.uniform(*sc.distance_range)
            rcs = rng.uniform(*sc.rcs_range)
            azi0 = rng.uniform(0, 2 * np.pi)
            ele0 = rng.uniform(0, sc.elevation_max)
            azi_a, ele_a = _offset_angles(rng, azi0, ele0, spread,
                                          sc.paths_per_cluster)
            azi_d, ele_d = azi_a, ele_a  # one reflection point, same angle both ends
            amp = np.sqrt(rcs * lam ** 2
                          / (sc.paths_per_cluster * (4 * np.pi) ** 3 * dist ** 4))
            central_azi, central_ele = azi0, ele0

        paths = tuple(
            PathComponent(
                gain=amp * np.exp(1j * phases[i]),
                aoa_azimuth=azi_a[i], aoa_elevation=ele_a[i],
                aod_azimuth=azi_d[i], aod_elevation=ele_d[i],
                delay=delays[i], doppler=f_d,
            )
            for i in range(sc.paths_per_cluster)
        )
        clusters.append(Cluster(central_azi, central_ele, tau0, f_d, paths))

    ch = ChannelRealization(
        link_kind=sc.link_kind,
        rx_geometry=sc.rx_geometry,
        tx_geometry=sc.tx_geometry,
        clusters=tuple(clusters),
        los=los,
        rician_db=sc.rician_db,
        n_taps=sc.n_taps,
        t_s=sc.t_s,
    )
    _check_delay_fit(ch, sc.pulse)
    return ch


def _check_delay_fit(ch, pulse):
    delays = [p.delay for p in ch.all_paths()]
    if delays and max(delays) + 2.0 * pulse.tau_p >= ch.n_taps * ch.t_s:
        raise ValueError("path delays exceed the tap window")


def sample_cir(ch, t, pulse):
    """Sample the channel at absolute time t into an L-tap CirTensor.

    Tap l collects every path through the pulse evaluated at
    l*t_s - delay - tau_p, so a path at delay q*t_s - tau_p peaks exactly on
    tap q and (by the Nyquist zeros of the pulse) contributes nowhere else.
    """
    paths = ch.all_paths()
    n_rx, n_tx = ch.rx_geometry.n, ch.tx_geometry.n
    taps = np.zeros((ch.n_taps, n_rx, n_tx), dtype=complex)
    if not paths:
        return CirTensor(taps, ch.t_s)

    rx = np.stack([upa_steering(p.aoa_azimuth, p.aoa_elevation, ch.rx_geometry)
                   for p in paths], axis=1)
    tx = np.stack([upa_steering(p.aod_azimuth, p.aod_elevation, ch.tx_geometry)
                   for p in paths], axis=1)
    gains = np.array([p.gain * np.exp(2j * np.pi * p.doppler * t) for p in paths])
    delays = np.array([p.delay for p in paths])
    grid = np.arange(ch.n_taps) * ch.t_s
    shape = pulse(grid[None, :] - delays[:, None] - pulse.tau_p)  # (P, L)

    taps = np.einsum("rp,tp,p,pl->lrt", rx, tx.conj(), gains, shape, optimize=True)
    return CirTensor(taps, ch.t_s)
