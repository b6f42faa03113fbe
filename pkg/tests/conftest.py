import numpy as np
import pytest

from eongp import kernels
from eongp.audio import AudioClip
from eongp.data import Sample
from eongp.oracles.base import ClassScores, TranscriptResult

SR = 16000


def tone(freq, seconds=1.0, amp=0.5, sr=SR, clip_id=None):
    n = int(round(seconds * sr))
    return AudioClip(amp * np.sin(2 * np.pi * freq * np.arange(n) / sr), sr, clip_id)


@pytest.fixture(params=sorted(kernels.backends()))
def kernel_backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(kernels, "_impl", kernels.backends()[request.param])
    return request.param


class StubClassifier:
    """Scores looked up per clip id; the 'mixed' table is used when samples differ from the registered clean clip."""

    def __init__(self, labels, clean, mixed, clips):
        self.labels = tuple(labels)
        self.clean = clean
        self.mixed = mixed
        self.clips = clips

    def classify(self, clip):
        table = self.clean if np.array_equal(clip.samples, self.clips[clip.clip_id]) else self.mixed
        return ClassScores.from_mapping(table[clip.clip_id], self.labels)


class StubTranscriber:
    def __init__(self, clean, mixed, clips):
        self.clean = clean
        self.mixed = mixed
        self.clips = clips

    def transcribe(self, clip):
        table = self.clean if np.array_equal(clip.samples, self.clips[clip.clip_id]) else self.mixed
        text, conf = table[clip.clip_id]
        return TranscriptResult(text, conf)


def make_sample(i, label="a", text="hello world", seconds=0.5, seed=0):
    rng = np.random.default_rng(seed + i)
    clip = AudioClip(0.1 * rng.standard_normal(int(seconds * SR)).clip(-5, 5) / 5, SR, f"s{i}")
    return Sample(clip, label, text)


@pytest.fixture(scope="session")
def toy():
    """Four-class marker corpus with its trained linear surrogate and mock transcriber."""
    from toy import toy_corpus, toy_oracles

    samples = toy_corpus()
    model, mock = toy_oracles(samples)
    return samples, model, mock


# acceptance criteria report one line each in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
