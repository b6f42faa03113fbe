"""Audio clips, tone synthesis, mixing, resampling and WAV I/O.

Every function that returns an :class:`AudioClip` keeps samples inside
[-1, 1] by hard clipping. Nothing is ever renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal
from scipy.io import wavfile

from .errors import DataError


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono float audio in [-1, 1].

    ``clip_id`` names the source recording. It survives :func:`mix`, so a
    perturbed clip can still be traced back to its clean original (the mock
    transcriber relies on this).
    """

    samples: np.ndarray
    sample_rate: int
    clip_id: str | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioClip samples must be one-dimensional")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and (not np.all(np.isfinite(samples)) or np.abs(samples).max() > 1.0):
            raise ValueError("AudioClip samples must be finite and within [-1, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate

    def rms(self) -> float:
        if self.samples.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))

    def with_samples(self, samples: np.ndarray, sample_rate: int | None = None) -> "AudioClip":
        """Copy with new samples (hard-clipped), keeping the clip id."""
        return AudioClip(
            np.clip(samples, -1.0, 1.0),
            self.sample_rate if sample_rate is None else sample_rate,
            self.clip_id,
        )

    @classmethod
    def from_unclipped(cls, samples, sample_rate: int, clip_id: str | None = None) -> "AudioClip":
        return cls(np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0), sample_rate, clip_id)


@dataclass(frozen=True)
class ParamRange:
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError(f"empty range [{self.low}, {self.high}]")

    @property
    def span(self) -> float:
        return self.high - self.low

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class ToneRanges:
    """Configured parameter bounds for each tone field (Hz, peak, s, s)."""

    frequency: ParamRange = field(default_factory=lambda: ParamRange(100.0, 4000.0))
    amplitude: ParamRange = field(default_factory=lambda: ParamRange(0.0067, 0.04))
    offset: ParamRange = field(default_factory=lambda: ParamRange(0.0, 0.5))
    duration: ParamRange = field(default_factory=lambda: ParamRange(2.5, 4.0))

    FIELDS = ("frequency", "amplitude", "offset", "duration")

    def as_list(self) -> list[ParamRange]:
        return [getattr(self, name) for name in self.FIELDS]

    def to_dict(self) -> dict:
        return {name: [r.low, r.high] for name, r in zip(self.FIELDS, self.as_list())}

    @classmethod
    def from_dict(cls, data: dict | None) -> "ToneRanges":
        data = data or {}
        defaults = cls()
        kwargs = {}
        for name in cls.FIELDS:
            if name in data:
                low, high = data[name]
                kwargs[name] = ParamRange(float(low), float(high))
            else:
                kwargs[name] = getattr(defaults, name)
        return cls(**kwargs)


@dataclass(frozen=True)
class Tone:
    frequency: float
    amplitude: float
    offset: float
    duration: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.frequency, self.amplitude, self.offset, self.duration)

    @property
    def end(self) -> float:
        return self.offset + self.duration

    def check(self, ranges: ToneRanges) -> None:
        """Raise ``ValueError`` if a field is outside its range.

        An amplitude of exactly zero is accepted: it mutes the tone and is how
        the silent control perturbation is expressed.
        """
        for name, rng in zip(ToneRanges.FIELDS, ranges.as_list()):
            value = getattr(self, name)
            if name == "amplitude" and value == 0.0:
                continue
            if not rng.contains(value):
                raise ValueError(f"tone {name}={value!r} outside [{rng.low}, {rng.high}]")


def synthesize_tones(
    tones: Sequence[Tone],
    sample_rate: int,
    total_duration: float,
    gain: float = 1.0,
) -> AudioClip:
    """Sum of zero-phase sinusoids, each gated to ``[offset, offset + duration)``.

    Time is measured from playback start, so tone ``k`` contributes
    ``gain * a_k * sin(2 pi f_k n / sr)`` at sample ``n`` inside its window.
    """
    if tones:
        top = max(t.frequency for t in tones)
        if sample_rate <= 2 * top:
            raise ValueError(f"sample_rate {sample_rate} cannot represent a {top} Hz tone")
        longest = max(t.end for t in tones)
        if total_duration < longest - 1e-12:
            raise ValueError(f"total_duration {total_duration} shorter than tone end {longest}")
    n = int(round(total_duration * sample_rate))
    out = np.zeros(n, dtype=np.float64)
    for tone in tones:
        if tone.amplitude == 0.0 or gain == 0.0:
            continue
        start = min(n, max(0, math.ceil(tone.offset * sample_rate - 1e-9)))
        stop = min(n, math.ceil(tone.end * sample_rate - 1e-9))
        idx = np.arange(start, stop, dtype=np.float64)
        out[start:stop] += gain * tone.amplitude * np.sin(2.0 * np.pi * tone.frequency * idx / sample_rate)
    return AudioClip.from_unclipped(out, sample_rate)


def synthesize_eon(genome, sample_rate: int, total_duration: float | None = None, gain: float = 1.0) -> AudioClip:
    """Render a genome's tones after checking them against the genome's ranges.

    ``total_duration`` defaults to the end of the last tone.
    """
    for tone in genome.tones:
        tone.check(genome.ranges)
    if total_duration is None:
        total_duration = max((t.end for t in genome.tones), default=0.0)
    return synthesize_tones(genome.tones, sample_rate, total_duration, gain)


def mix(speech: AudioClip, eon_clip: AudioClip) -> AudioClip:
    """Add ``eon_clip`` onto ``speech`` sample-wise, saturating at +-1.

    The perturbation is truncated or zero-padded to the speech length; the
    result keeps the speech clip's id.
    """
    if speech.sample_rate != eon_clip.sample_rate:
        raise ValueError(
            f"sample rate mismatch: speech {speech.sample_rate} Hz, perturbation {eon_clip.sample_rate} Hz"
        )
    n = len(speech)
    noise = eon_clip.samples[:n]
    if noise.size < n:
        noise = np.pad(noise, (0, n - noise.size))
    return AudioClip(np.clip(speech.samples + noise, -1.0, 1.0), speech.sample_rate, speech.clip_id)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited (Kaiser-windowed sinc, polyphase) rate conversion."""
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate or len(clip) == 0:
        return AudioClip(clip.samples.copy(), target_rate, clip.clip_id)
    ratio = Fraction(target_rate, clip.sample_rate)
    out = signal.resample_poly(clip.samples, ratio.numerator, ratio.denominator)
    return clip.with_samples(out, target_rate)


def read_wav(path, clip_id: str | None = None) -> AudioClip:
    """Load 8/16/32-bit PCM or float WAV as mono float in [-1, 1]."""
    try:
        rate, data = wavfile.read(str(path))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read WAV {path}: {exc}") from exc
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        x = data.astype(np.float64) / float(-np.iinfo(data.dtype).min)
    else:
        x = data.astype(np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioClip.from_unclipped(x, rate, clip_id if clip_id is not None else str(path))


def write_wav(path, clip: AudioClip, subtype: str = "pcm16") -> Path:
    """Write a mono WAV; ``subtype`` is ``"pcm16"`` or ``"float32"``."""
    path = Path(path)
    if subtype == "pcm16":
        data = np.round(clip.samples * 32767.0).astype("<i2")
    elif subtype == "float32":
        data = clip.samples.astype("<f4")
    else:
        raise ValueError(f"unknown WAV subtype {subtype!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), clip.sample_rate, data)
    return path


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x**2))) if x.size else 0.0


def replace_id(clip: AudioClip, clip_id: str | None) -> AudioClip:
    return replace(clip, clip_id=clip_id)
