"""Forward link simulation: radar echo with low-resolution ADCs, UT pilot rx.

The sensing receiver quantizes each antenna's I and Q branches with a B-bit
uniform mid-rise ADC whose clip range follows the received RMS (simple AGC).
The UT path applies the scheduled analog combiner per sample and keeps only
samples where the combiner had settled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantizerSpec:
    """bits=None models infinite-resolution converters."""

    bits: int | None
    clip_scale: float = 3.0

    def __post_init__(self):
        if self.bits is not None and self.bits < 1:
            raise ValueError("quantizer needs at least one bit")
        if self.clip_scale <= 0:
            raise ValueError("clip scale must be positive")


def _quantize_real(v, bits, clip):
    if clip <= 0.0:
        # silent branch, e.g. an all-zero component
        return np.zeros_like(v)
    step = 2.0 * clip / (1 << bits)
    q = step * (np.floor(v / step) + 0.5)
    return np.clip(q, -clip + step / 2, clip - step / 2)


def quantize(x, spec, clip_range=None):
    """Per-component uniform mid-rise quantization of a complex array.

    clip_range=None derives the range as clip_scale times the RMS of each
    real component (AGC mode); pass an explicit (clip_re, clip_im) to pin it,
    which is the mode under which quantize is idempotent.
    """
    if spec.bits is None:
        return np.asarray(x, dtype=complex).copy()
    x = np.asarray(x, dtype=complex)
    re, im = x.real, x.imag
    if clip_range is None:
        c_re = spec.clip_scale * np.sqrt(np.mean(re ** 2))
        c_im = spec.clip_scale * np.sqrt(np.mean(im ** 2))
    else:
        c_re, c_im = (clip_range if np.ndim(clip_range) else (clip_range, clip_range))
    return (_quantize_real(re, spec.bits, c_re)
            + 1j * _quantize_real(im, spec.bits, c_im))


@dataclass(frozen=True)
class RadarObservation:
    y: np.ndarray           # (n_wsa, q_len) quantized receive block
    sigma_n: float
    quantizer: QuantizerSpec


@dataclass(frozen=True)
class CommObservation:
    y_valid: np.ndarray
    valid_idx: np.ndarray
    y_full: np.ndarray
    sigma_n: float


def _cn_noise(rng, shape, sigma2):
    scale = np.sqrt(sigma2 / 2.0)
    return rng.normal(0, scale, shape) + 1j * rng.normal(0, scale, shape)


def simulate_radar_rx(cir, mm, sigma_n2, quantizer, rng_seed):
    """Sensing-array receive block: Y = H_sd @ phi_bar + noise, then ADCs."""
    h_sd = cir.spatial_delay()
    rng = np.random.default_rng(rng_seed)
    clean = h_sd @ mm.phi_bar
    noisy = clean + _cn_noise(rng, clean.shape, sigma_n2)
    return RadarObservation(quantize(noisy, quantizer), np.sqrt(sigma_n2),
                            quantizer)


def simulate_ut_rx(cir, frame, mm, sigma_n2, rng_seed):
    """UT receive samples y_n = w_n^H (sum_l H_l p_{n-l} + noise_n)."""
    h_sd = cir.spatial_delay()
    rng = np.random.default_rng(rng_seed)
    s = h_sd @ mm.phi_bar                                   # (m_ut, q_len)
    s = s + _cn_noise(rng, s.shape, sigma_n2)
    y_full = np.einsum("qm,mq->q", frame.combiners.conj(), s)
    return CommObservation(y_full[frame.valid_idx], frame.valid_idx.copy(),
                           y_full, np.sqrt(sigma_n2))
