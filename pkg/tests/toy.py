"""Four-class corpus where the class lives in one narrow spectral marker.

Every clip is a loud low "carrier" tone plus a faint marker tone at the
class's own MARKERS frequency. A linear surrogate on mean MFCCs learns which
marker band is hotter, so a single additive tone at another class's marker
flips the prediction while barely disturbing the waveform the mock
transcriber compares against. A universal tone that dominates one marker can
at best flip the other three classes (ESR 0.75).
"""

import numpy as np

from eongp.audio import AudioClip
from eongp.data import Sample
from eongp.oracles.mock import MockTranscriber
from eongp.oracles.surrogate import train_surrogate

SR = 16000
MARKERS = {"a": 700.0, "b": 1200.0, "c": 2000.0, "d": 3000.0}


def toy_corpus(n_per_class=20, seconds=0.5, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * SR)) / SR
    out = []
    for label, marker in MARKERS.items():
        for i in range(n_per_class):
            carrier = rng.uniform(0.45, 0.55) * np.sin(2 * np.pi * rng.uniform(180, 260) * t + rng.uniform(0, 6.3))
            mark = rng.uniform(0.008, 0.012) * np.sin(2 * np.pi * marker * rng.uniform(0.99, 1.01) * t)
            floor = 0.001 * rng.standard_normal(t.size)
            clip = AudioClip(np.clip(carrier + mark + floor, -1, 1), SR, f"{label}{i:03d}")
            out.append(Sample(clip, label, "open the door"))
    return out


def toy_oracles(samples, seed=0):
    model = train_surrogate([(s.clip, s.label) for s in samples], epochs=200, seed=seed, hidden=()).model
    mock = MockTranscriber.from_pairs([(s.clip, "open the door") for s in samples])
    return model, mock
