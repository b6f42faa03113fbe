"""Synthetic emotional-speech corpus.

Each clip is a harmonic voice (pitch contour, syllable envelope) shaped by
three formant resonances. Emotions differ in formant placement, pitch,
spectral tilt and loudness, and each also carries a narrow "cue" resonance
at a fixed, emotion-specific frequency; speakers differ in base pitch and
vocal-tract scale. A "canonical" multi-speaker set is tagged ``pretrain``;
a two-speaker "user" set is left untagged for :func:`~eongp.pipeline.workflow.split`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..audio import AudioClip, write_wav
from .manifest import ManifestEntry, write_manifest

EMOTIONS = ("angry", "happy", "neutral", "sad")

VOICES = {
    "neutral": {"formants": (500.0, 1500.0, 2500.0), "pitch": 1.0, "tilt": 1.0, "loudness": 1.0, "cue": 1300.0},
    "angry": {"formants": (700.0, 1800.0, 3000.0), "pitch": 1.35, "tilt": 0.55, "loudness": 1.25, "cue": 3300.0},
    "happy": {"formants": (620.0, 2200.0, 3300.0), "pitch": 1.2, "tilt": 0.8, "loudness": 1.1, "cue": 2100.0},
    "sad": {"formants": (400.0, 1100.0, 2300.0), "pitch": 0.85, "tilt": 1.4, "loudness": 0.8, "cue": 800.0},
    "fearful": {"formants": (450.0, 2000.0, 2800.0), "pitch": 1.5, "tilt": 1.1, "loudness": 0.9, "cue": 2700.0},
}
FORMANT_BANDWIDTHS = (90.0, 130.0, 180.0)
FORMANT_GAINS = (1.0, 0.6, 0.35)
CUE_BANDWIDTH = 120.0

WORDS = (
    "back bar base bath bean beg bite boat bone book burn cab calm came chain chair chalk "
    "chat check cheek chief choice cool dab date dead death deep dime dip ditch dodge dog "
    "doll door fail fall far fat fit five food gap gas gaze germ get gin goal good goose "
    "gun half hall hash hate have haze hire hit hole home hurl jail jar join judge jug juice"
).split()
SENTENCES = (
    "kids are talking by the door",
    "dogs are sitting by the door",
    "the train leaves at noon",
    "please pass the salt",
    "my phone is on the table",
    "we walked along the river",
    "open the window a little",
    "the coffee is still warm",
    "turn on the light",
    "call me in the morning",
    "the garden needs more water",
    "she bought a red umbrella",
)


@dataclass(frozen=True)
class Speaker:
    speaker_id: str
    pitch: float
    tract_scale: float


def voice_samples(
    rng: np.random.Generator,
    sample_rate: int,
    duration: float,
    pitch: float,
    formants: Sequence[float],
    tilt: float,
    n_syllables: int,
    max_harmonic_hz: float = 5000.0,
    cue: tuple[float, float] | None = None,
) -> np.ndarray:
    """One voiced clip. ``cue`` is an optional extra (frequency, gain) resonance."""
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    contour = 1.0 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.4, 1.0) * t + rng.uniform(0, 2 * np.pi))
    contour += 0.02 * np.sin(2 * np.pi * rng.uniform(4.5, 6.0) * t)
    f0 = pitch * contour
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    x = np.zeros(n)
    for k in range(1, int(max_harmonic_hz / pitch) + 1):
        fk = k * f0
        env = np.full(n, 0.02)
        for fc, bw, g in zip(formants, FORMANT_BANDWIDTHS, FORMANT_GAINS):
            env += g * np.exp(-0.5 * ((fk - fc) / bw) ** 2)
        x_k = env * k ** (-0.5 * tilt)
        if cue is not None:
            # the cue bypasses the tilt so it stays comparably strong in every band
            x_k = x_k + cue[1] * np.exp(-0.5 * ((fk - cue[0]) / CUE_BANDWIDTH) ** 2)
        x += x_k * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
    # syllables: raised-cosine bumps with short gaps
    bounds = np.sort(rng.uniform(0.08, 0.92, size=n_syllables - 1)) if n_syllables > 1 else np.array([])
    edges = np.concatenate([[0.05], bounds, [0.95]]) * duration
    am = np.zeros(n)
    for a, b in zip(edges[:-1], edges[1:]):
        inside = (t >= a) & (t < b)
        am[inside] = 0.25 + 0.75 * np.sin(np.pi * (t[inside] - a) / (b - a)) ** 2
    x *= am
    x += 0.003 * rng.standard_normal(n) * x.std()
    return x


def emotion_voice(emotion: str, separation: float = 1.0) -> dict:
    """Voice parameters moved ``separation`` of the way from neutral toward ``emotion``."""
    base, target = VOICES["neutral"], VOICES[emotion]

    def lerp(a, b):
        return a + separation * (b - a)

    return {
        "formants": tuple(lerp(a, b) for a, b in zip(base["formants"], target["formants"])),
        **{k: lerp(base[k], target[k]) for k in ("pitch", "tilt", "loudness")},
        "cue": target["cue"],
    }


def render_clip(
    rng: np.random.Generator,
    speaker: Speaker,
    emotion: str,
    sample_rate: int,
    target_rms: float,
    n_syllables: int,
    duration: float,
    separation: float = 1.0,
    jitter: float = 0.03,
    cue_gain: float = 0.0,
) -> np.ndarray:
    voice = emotion_voice(emotion, separation)
    shifts = rng.uniform(1 - jitter, 1 + jitter, size=3)
    formants = [f * speaker.tract_scale * j for f, j in zip(voice["formants"], shifts)]
    pitch = speaker.pitch * voice["pitch"] * rng.uniform(1 - 2 * jitter, 1 + 2 * jitter)
    tilt = voice["tilt"] * rng.uniform(1 - 3 * jitter, 1 + 3 * jitter)
    cue = (voice["cue"] * rng.uniform(1 - jitter, 1 + jitter), cue_gain) if cue_gain > 0 else None
    x = voice_samples(rng, sample_rate, duration, pitch, formants, tilt, n_syllables, cue=cue)
    level = target_rms * voice["loudness"] * rng.uniform(1 - 3 * jitter, 1 + 3 * jitter)
    x *= level / np.sqrt(np.mean(x**2))
    return np.clip(x, -1.0, 1.0)


def _speakers(prefix: str, count: int, rng: np.random.Generator, pitch_range, scale_range) -> list[Speaker]:
    return [
        Speaker(f"{prefix}{i + 1:02d}", float(rng.uniform(*pitch_range)), float(rng.uniform(*scale_range)))
        for i in range(count)
    ]


def generate_corpus(
    out_dir,
    seed: int,
    emotions: Sequence[str] = EMOTIONS,
    n_user_speakers: int = 2,
    n_user_utterances: int = 50,
    n_pretrain_speakers: int = 6,
    n_pretrain_utterances: int = 10,
    sample_rate: int = 16000,
    target_rms: float = 0.15,
    duration_range: tuple[float, float] = (1.2, 1.6),
    separation: float = 0.1,
    jitter: float = 0.03,
    cue_gain: float = 0.05,
) -> list[ManifestEntry]:
    """Write WAV clips plus ``manifest.jsonl`` under ``out_dir``; return the entries.

    Every (speaker, utterance) pair is recorded once per emotion, like an
    acted-emotion dataset. ``separation`` scales how far each emotion's
    voice sits from neutral; ``jitter`` is the relative per-clip spread of
    formants (x1), pitch (x2), tilt and level (x3). ``cue_gain`` sets the
    strength of the emotion-specific cue resonance (0 disables it).
    """
    unknown = [e for e in emotions if e not in VOICES]
    if unknown:
        raise ValueError(f"no synthetic voice for emotions {unknown}; available: {sorted(VOICES)}")
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    pretrain = _speakers("canon", n_pretrain_speakers, rng, (110.0, 230.0), (0.93, 1.07))
    users = _speakers("user", n_user_speakers, rng, (180.0, 230.0), (0.97, 1.05))
    entries: list[ManifestEntry] = []

    def emit(speaker: Speaker, utt_id: str, text: str, tag: str | None):
        n_syl = int(rng.integers(2, 6))
        duration = float(rng.uniform(*duration_range))
        for emotion in emotions:
            x = render_clip(rng, speaker, emotion, sample_rate, target_rms, n_syl, duration, separation, jitter, cue_gain)
            rel = f"clips/{speaker.speaker_id}/{utt_id}_{emotion}.wav"
            write_wav(out_dir / rel, AudioClip(x, sample_rate))
            entries.append(ManifestEntry(rel, speaker.speaker_id, emotion, text, utt_id, tag))

    for spk in pretrain:
        for u in range(n_pretrain_utterances):
            emit(spk, f"{spk.speaker_id}_s{u:03d}", SENTENCES[u % len(SENTENCES)], "pretrain")
    for spk in users:
        for u in range(n_user_utterances):
            emit(spk, f"{spk.speaker_id}_u{u:03d}", f"say the word {WORDS[u % len(WORDS)]}", None)
    write_manifest(entries, out_dir / "manifest.jsonl")
    return entries
