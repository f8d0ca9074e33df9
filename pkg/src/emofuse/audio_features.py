"""Utterance-level speech features: YIN pitch, time-domain and spectral frame
statistics, and MFCCs, aggregated into one vector per clip.

Frames are 480 samples (30 ms at 16 kHz) with a 240-sample hop.  Spectral
quantities use a Hamming window and a 512-point FFT; the frequency axis is
normalized so bin ``n`` sits at ``n / 256``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.fft import dct

from .errors import TooShortError
from .signal_io import SAMPLE_RATE, AudioClip

FRAME_LEN = 480
HOP = 240
NFFT = 512
N_BINS = NFFT // 2 + 1
N_SUBFRAMES = 10
N_MEL = 26
N_MFCC = 13
LOG_FLOOR = 1e-10
ROLLOFF_FRACTION = 0.90

YIN_THRESHOLD = 0.7
YIN_TMIN = 26
YIN_TMAX = 320
SILENCE_ENERGY = 1e-12

FEATURE_NAMES = (
    ["pitch", "zcr", "energy", "entropy", "centroid", "spread", "flux", "rolloff",
     "spec_entropy"]
    + [f"mfcc{i}" for i in range(N_MFCC)]
)
N_FEATURES = len(FEATURE_NAMES)

HAMMING = np.hamming(FRAME_LEN)
NORM_FREQS = np.arange(N_BINS) / (N_BINS - 1)


@dataclass(frozen=True, eq=False)
class Frame:
    samples: np.ndarray
    index: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.shape != (FRAME_LEN,):
            raise ValueError(f"frame must hold {FRAME_LEN} samples, got {s.shape}")
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True, eq=False)
class Spectrum:
    magnitudes: np.ndarray
    norm_freqs: np.ndarray = field(default_factory=lambda: NORM_FREQS)

    def __post_init__(self):
        m = np.asarray(self.magnitudes, dtype=np.float64)
        if m.shape != (N_BINS,):
            raise ValueError(f"spectrum must hold {N_BINS} bins, got {m.shape}")
        if np.any(m < 0):
            raise ValueError("spectral magnitudes must be non-negative")
        object.__setattr__(self, "magnitudes", m)


@dataclass(frozen=True, eq=False)
class DifferenceFunction:
    """Difference values for lags ``t_min..t_max`` (inclusive)."""

    t_min: int
    t_max: int
    d: np.ndarray
    d_norm: np.ndarray | None = None

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.t_min, self.t_max + 1)


# -- framing and spectra -----------------------------------------------------

def frame_signal(clip: AudioClip) -> List[Frame]:
    x = clip.samples
    if x.size < FRAME_LEN:
        raise TooShortError(f"clip has {x.size} samples, need at least {FRAME_LEN}")
    n_frames = 1 + (x.size - FRAME_LEN) // HOP
    return [Frame(x[i * HOP: i * HOP + FRAME_LEN], i) for i in range(n_frames)]


def magnitude_spectrum(frame: Frame) -> Spectrum:
    return Spectrum(np.abs(np.fft.rfft(frame.samples * HAMMING, NFFT)))


# -- pitch -------------------------------------------------------------------

def yin_difference(signal: Sequence[float], t_min: int, t_max: int) -> DifferenceFunction:
    """Squared-difference function at lags ``t_min..t_max`` over a window of
    ``len(signal) - t_max`` samples starting at the first sample."""
    y = np.asarray(signal, dtype=np.float64)
    if t_min < 0 or t_max < t_min:
        raise ValueError(f"bad lag range {t_min}..{t_max}")
    if y.size < 2 * t_max or y.size <= t_max:
        raise TooShortError(f"signal of {y.size} samples too short for lag {t_max}")
    w = y.size - t_max
    head = y[:w]
    d = np.empty(t_max - t_min + 1)
    for i, lag in enumerate(range(t_min, t_max + 1)):
        diff = head - y[lag: lag + w]
        d[i] = np.dot(diff, diff)
    return DifferenceFunction(t_min, t_max, d)


def yin_normalize(df: DifferenceFunction) -> DifferenceFunction:
    """Divide each difference value by the running mean of the values from
    ``t_min`` up to that lag.  A zero running sum yields 1."""
    d = df.d
    running_mean = np.cumsum(d) / np.arange(1, d.size + 1)
    d_norm = np.ones_like(d)
    nz = running_mean > 0
    d_norm[nz] = d[nz] / running_mean[nz]
    return DifferenceFunction(df.t_min, df.t_max, d, d_norm)


def yin_lag(samples: Sequence[float], t_min: int = YIN_TMIN, t_max: int = YIN_TMAX) -> int:
    """Chosen period in samples, or 0 when the input is silent or too short."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2 * t_max or np.dot(x, x) < SILENCE_ENERGY:
        return 0
    dn = yin_normalize(yin_difference(x, t_min, t_max)).d_norm
    below = np.flatnonzero(dn < YIN_THRESHOLD)
    if below.size:
        i = below[0]
        # slide down to the bottom of the first dip
        while i + 1 < dn.size and dn[i + 1] < dn[i]:
            i += 1
    else:
        i = int(np.argmin(dn))
    return t_min + int(i)


def estimate_pitch(clip: AudioClip) -> float:
    """Fundamental frequency in Hz over the whole clip; 0 means unvoiced."""
    lag = yin_lag(clip.samples)
    return SAMPLE_RATE / lag if lag else 0.0


# -- time-domain frame features ---------------------------------------------

def zcr(frame: Frame) -> float:
    nonneg = frame.samples >= 0
    return np.count_nonzero(nonneg[1:] != nonneg[:-1]) / FRAME_LEN


def energy(frame: Frame) -> float:
    y = frame.samples
    return float(np.dot(y, y)) / FRAME_LEN


def _entropy(parts: np.ndarray) -> float:
    total = parts.sum()
    if total <= 0:
        return 0.0
    g = parts[parts > 0] / total
    return float(-np.sum(g * np.log2(g)))


def energy_entropy(frame: Frame) -> float:
    sub = frame.samples.reshape(N_SUBFRAMES, -1)
    return _entropy(np.einsum("ij,ij->i", sub, sub))


# -- spectral frame features -------------------------------------------------

def spectral_centroid_spread(spec: Spectrum) -> tuple[float, float]:
    y = spec.magnitudes
    f = spec.norm_freqs
    total = y.sum()
    if total == 0:
        return 0.5, 0.0
    centroid = float(np.dot(f, y) / total)
    spread = float(np.dot((f - centroid) ** 2, y) / total)
    return centroid, spread


def _unit_sum(y: np.ndarray) -> np.ndarray:
    total = y.sum()
    return y / total if total > 0 else np.zeros_like(y)


def spectral_flux(cur: Spectrum, prev: Spectrum | None) -> float:
    """Squared distance between sum-normalized spectra; 0 with no predecessor."""
    if prev is None:
        return 0.0
    diff = _unit_sum(cur.magnitudes) - _unit_sum(prev.magnitudes)
    return float(np.dot(diff, diff))


def spectral_rolloff(spec: Spectrum) -> float:
    y = spec.magnitudes
    total = y.sum()
    if total == 0:
        return 0.0
    m = int(np.searchsorted(np.cumsum(y), ROLLOFF_FRACTION * total, side="left"))
    return float(spec.norm_freqs[min(m, y.size - 1)])


def spectral_entropy(spec: Spectrum) -> float:
    groups = np.array_split(spec.magnitudes ** 2, N_SUBFRAMES)
    return _entropy(np.array([g.sum() for g in groups]))


# -- MFCC --------------------------------------------------------------------

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int = N_MEL, nfft: int = NFFT, sr: int = SAMPLE_RATE,
                   fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular filters, shape (n_filters, nfft // 2 + 1), with peaks equally
    spaced on the mel scale and unit height."""
    fmax = sr / 2 if fmax is None else fmax
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2))
    freqs = np.arange(nfft // 2 + 1) * sr / nfft
    lo, center, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (center - lo)
    falling = (hi - freqs) / (hi - center)
    return np.maximum(0.0, np.minimum(rising, falling))


MEL_FB = mel_filterbank()


def log_mel_energies(frame: Frame) -> np.ndarray:
    power = magnitude_spectrum(frame).magnitudes ** 2
    return np.log(np.maximum(MEL_FB @ power, LOG_FLOOR))


def cepstrum(log_energies: np.ndarray, n_coeffs: int = N_MFCC) -> np.ndarray:
    return dct(np.asarray(log_energies, dtype=np.float64), type=2, norm="ortho")[:n_coeffs]


def mfcc(frame: Frame) -> np.ndarray:
    return cepstrum(log_mel_energies(frame))


# -- utterance vector --------------------------------------------------------

def frame_features(frames: Sequence[Frame]) -> np.ndarray:
    """Per-frame matrix of the non-pitch features, shape (n_frames, 21)."""
    rows = []
    prev = None
    for fr in frames:
        spec = magnitude_spectrum(fr)
        centroid, spread = spectral_centroid_spread(spec)
        rows.append(np.concatenate((
            [zcr(fr), energy(fr), energy_entropy(fr), centroid, spread,
             spectral_flux(spec, prev), spectral_rolloff(spec), spectral_entropy(spec)],
            mfcc(fr),
        )))
        prev = spec
    return np.array(rows)


def extract_utterance_features(clip: AudioClip) -> np.ndarray:
    """Pitch of the whole clip followed by frame means of ZCR, energy, energy
    entropy, centroid, spread, flux, rolloff, spectral entropy and MFCC c0..c12
    (22 values, ordered as FEATURE_NAMES)."""
    frames = frame_signal(clip)
    per_frame = frame_features(frames)
    return np.concatenate(([estimate_pitch(clip)], per_frame.mean(axis=0)))
