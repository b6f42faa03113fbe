"""Spectral analysis and filtering on :class:`~eongp.audio.AudioClip`.

Framing convention: a periodic Hann window of ``win`` samples, hop ``hop``,
and ``win - hop`` zeros padded on both sides so every real sample is seen by
the same set of window positions. The FFT length equals the window length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from . import kernels
from .audio import AudioClip

LOG_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Non-negative [frame x bin] grid.

    For ``scale == "linear"`` the grid holds STFT magnitudes; for ``"mel"``
    it holds mel-weighted power. ``n_samples`` remembers the source length
    so inversions can return a clip of the original size.
    """

    magnitudes: np.ndarray
    frame_hop: float
    bin_width: float
    scale: str
    sample_rate: int
    win_length: int
    hop_length: int
    n_samples: int
    window_norm: float
    n_mels: int | None = None
    mel_basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    def energy(self) -> float:
        """Signal energy implied by a linear STFT (Parseval with overlap normalization)."""
        if self.scale != "linear":
            raise ValueError("energy() needs a linear-scale spectrogram")
        power = self.magnitudes**2
        weights = _rfft_weights(self.win_length)
        return float((power * weights).sum() / (self.win_length * self.window_norm))


def frame_params(sample_rate: int, window_s: float, hop_s: float) -> tuple[int, int]:
    if not (window_s > hop_s > 0):
        raise ValueError(f"need window_s > hop_s > 0, got window_s={window_s}, hop_s={hop_s}")
    win = int(round(window_s * sample_rate))
    hop = max(1, int(round(hop_s * sample_rate)))
    if win <= hop:
        raise ValueError("window must be longer than hop after rounding to samples")
    return win, hop


@lru_cache(maxsize=32)
def hann(n: int) -> np.ndarray:
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    w.setflags(write=False)
    return w


def _rfft_weights(n_fft: int) -> np.ndarray:
    # each one-sided bin stands for two full-spectrum bins except DC and Nyquist
    w = np.full(n_fft // 2 + 1, 2.0)
    w[0] = 1.0
    if n_fft % 2 == 0:
        w[-1] = 1.0
    return w


def _layout(n: int, win: int, hop: int) -> tuple[int, int, int]:
    pad = win - hop
    n_frames = (n - 1 + pad) // hop + 1
    total = (n_frames - 1) * hop + win
    return pad, n_frames, total


def complex_stft(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    n = x.size
    if n < win:
        raise ValueError(f"clip of {n} samples is shorter than one {win}-sample window")
    pad, n_frames, total = _layout(n, win, hop)
    padded = np.zeros(total)
    padded[pad : pad + n] = x
    frames = np.lib.stride_tricks.sliding_window_view(padded, win)[::hop][:n_frames]
    return np.fft.rfft(frames * hann(win), axis=1)


def istft(spec: np.ndarray, win: int, hop: int, n: int) -> np.ndarray:
    """Least-squares overlap-add inverse of :func:`complex_stft`."""
    pad, n_frames, total = _layout(n, win, hop)
    if spec.shape[0] != n_frames:
        raise ValueError(f"expected {n_frames} frames for {n} samples, got {spec.shape[0]}")
    w = hann(win)
    frames = np.fft.irfft(spec, n=win, axis=1) * w
    out = np.zeros(total)
    norm = np.zeros(total)
    w2 = w * w
    for m in range(n_frames):
        s = m * hop
        out[s : s + win] += frames[m]
        norm[s : s + win] += w2
    region = slice(pad, pad + n)
    return out[region] / np.maximum(norm[region], 1e-12)


def window_norm(win: int, hop: int) -> float:
    return float(np.sum(hann(win) ** 2) / hop)


def stft(clip: AudioClip, window_s: float = 0.025, hop_s: float = 0.010) -> Spectrogram:
    win, hop = frame_params(clip.sample_rate, window_s, hop_s)
    mags = np.abs(complex_stft(clip.samples, win, hop))
    return Spectrogram(
        magnitudes=mags,
        frame_hop=hop / clip.sample_rate,
        bin_width=clip.sample_rate / win,
        scale="linear",
        sample_rate=clip.sample_rate,
        win_length=win,
        hop_length=hop,
        n_samples=len(clip),
        window_norm=window_norm(win, hop),
    )


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=32)
def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int, fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular filters with unit peak, centers equally spaced in mel. Shape (n_mels, n_fft//2 + 1)."""
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    fmax = sample_rate / 2.0 if fmax is None else fmax
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    fb.setflags(write=False)
    return fb


def mel_spectrogram(clip: AudioClip, n_mels: int = 40, window_s: float = 0.025, hop_s: float = 0.010) -> Spectrogram:
    win, hop = frame_params(clip.sample_rate, window_s, hop_s)
    power = np.abs(complex_stft(clip.samples, win, hop)) ** 2
    fb = mel_filterbank(n_mels, win, clip.sample_rate)
    return Spectrogram(
        magnitudes=power @ fb.T,
        frame_hop=hop / clip.sample_rate,
        bin_width=clip.sample_rate / win,
        scale="mel",
        sample_rate=clip.sample_rate,
        win_length=win,
        hop_length=hop,
        n_samples=len(clip),
        window_norm=window_norm(win, hop),
        n_mels=n_mels,
        mel_basis=fb,
    )


def log_mel_to_mfcc(mel_power: np.ndarray, n_coeffs: int) -> np.ndarray:
    if not 1 <= n_coeffs <= mel_power.shape[1]:
        raise ValueError(f"n_coeffs must be in [1, {mel_power.shape[1]}], got {n_coeffs}")
    return dct(np.log(mel_power + LOG_FLOOR), type=2, norm="ortho", axis=1)[:, :n_coeffs]


def mfcc(
    clip: AudioClip,
    n_coeffs: int = 40,
    n_mels: int = 40,
    window_s: float = 0.025,
    hop_s: float = 0.010,
) -> np.ndarray:
    """[frame x coefficient] MFCC grid: log mel power followed by orthonormal DCT-II."""
    spec = mel_spectrogram(clip, n_mels=n_mels, window_s=window_s, hop_s=hop_s)
    return log_mel_to_mfcc(spec.magnitudes, n_coeffs)


def mfcc_to_mel_power(coeffs: np.ndarray, n_mels: int) -> np.ndarray:
    """Invert truncated MFCCs back to mel power (missing coefficients read as zero)."""
    full = np.zeros((coeffs.shape[0], n_mels))
    full[:, : coeffs.shape[1]] = coeffs
    log_mel = dct(full, type=3, norm="ortho", axis=1)
    return np.maximum(np.exp(log_mel) - LOG_FLOOR, 0.0)


def griffin_lim(
    magnitude: np.ndarray,
    win: int,
    hop: int,
    n_samples: int,
    iterations: int = 32,
    seed: int = 0,
) -> tuple[np.ndarray, list[float]]:
    """Phase reconstruction by alternating projections.

    Returns the signal and the per-iteration spectral distance
    ``|| S - |STFT(x_i)| ||`` (full-spectrum norm), which never increases.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    weights = np.sqrt(_rfft_weights(win))
    phase = np.exp(2j * np.pi * rng.random(magnitude.shape))
    spec = magnitude * phase
    losses = []
    x = np.zeros(n_samples)
    for _ in range(iterations):
        x = istft(spec, win, hop, n_samples)
        rebuilt = complex_stft(x, win, hop)
        mag = np.abs(rebuilt)
        losses.append(float(np.linalg.norm((magnitude - mag) * weights)))
        unit = np.where(mag > 0, rebuilt / np.where(mag > 0, mag, 1.0), 1.0)
        spec = magnitude * unit
    return x, losses


def mel_to_linear_magnitude(spec: Spectrogram) -> np.ndarray:
    if spec.scale != "mel":
        raise ValueError("expected a mel-scale spectrogram")
    basis = spec.mel_basis
    if basis is None:
        basis = mel_filterbank(spec.n_mels, spec.win_length, spec.sample_rate)
    power = spec.magnitudes @ np.linalg.pinv(basis.T)
    return np.sqrt(np.maximum(power, 0.0))


def invert_mel(spec: Spectrogram, iterations: int = 32, seed: int = 0, return_losses: bool = False):
    """Mel pseudo-inverse followed by Griffin-Lim; output has the source clip's length."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    magnitude = mel_to_linear_magnitude(spec)
    x, losses = griffin_lim(magnitude, spec.win_length, spec.hop_length, spec.n_samples, iterations, seed)
    clip = AudioClip.from_unclipped(x, spec.sample_rate)
    return (clip, losses) if return_losses else clip


def notch_coefficients(center: float, half_width: float, sample_rate: int) -> tuple[float, ...]:
    """Normalized second-order band-stop (b0, b1, b2, a1, a2) with -3 dB edges near center +- half_width."""
    w0 = 2.0 * math.pi * center / sample_rate
    q = center / (2.0 * half_width)
    alpha = math.sin(w0) / (2.0 * q)
    a0 = 1.0 + alpha
    c = -2.0 * math.cos(w0)
    return (1.0 / a0, c / a0, 1.0 / a0, c / a0, (1.0 - alpha) / a0)


def _settled_biquad(x: np.ndarray, coeffs: tuple[float, ...]) -> np.ndarray:
    # Choose the initial state that minimizes output energy: this removes the
    # switch-on ringing of the filter's natural mode without touching the
    # steady-state response.
    b0, b1, b2, a1, a2 = coeffs
    y0, _, _ = kernels.biquad(x, b0, b1, b2, a1, a2)
    radius = math.sqrt(abs(a2)) if a2 else 0.0
    if radius <= 0.0 or radius >= 1.0:
        return y0
    span = min(x.size, int(math.ceil(math.log(1e-16) / math.log(radius))) + 1)
    zeros = np.zeros(span)
    r1, _, _ = kernels.biquad(zeros, b0, b1, b2, a1, a2, 1.0, 0.0)
    r2, _, _ = kernels.biquad(zeros, b0, b1, b2, a1, a2, 0.0, 1.0)
    basis = np.stack([r1, r2], axis=1)
    state, *_ = np.linalg.lstsq(basis, -y0[:span], rcond=None)
    y = y0.copy()
    y[:span] += basis @ state
    return y


def notch_filter(clip: AudioClip, center_frequencies, half_width: float = 10.0) -> AudioClip:
    """Cascade one band-stop biquad per center frequency."""
    centers = [float(c) for c in center_frequencies]
    if not centers:
        return clip
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    nyquist = clip.sample_rate / 2.0
    for c in centers:
        if not 0.0 < c < nyquist:
            raise ValueError(f"notch center {c} Hz outside (0, {nyquist})")
    x = clip.samples
    for c in centers:
        x = _settled_biquad(x, notch_coefficients(c, half_width, clip.sample_rate))
    return clip.with_samples(x)


def tone_energy(x, frequency: float, sample_rate: int) -> float:
    """Energy at one frequency, scaled so a tone of amplitude A over N samples gives A**2 * N / 2."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return 2.0 * kernels.goertzel_power(x, frequency, sample_rate) / x.size
