import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eongp.audio import AudioClip
from eongp.errors import DataError, OracleUnavailable
from eongp.oracles.base import ClassScores, TranscriptResult, normalize_transcript, softmax
from eongp.oracles.mock import CORRUPT_TOKEN, MockSettings, MockTranscriber, snr_confidence
from eongp.oracles.surrogate import SurrogateModel, init_layers, loss_and_grads, train_surrogate, zero_model
from conftest import SR, tone
from oracles import numeric_gradient


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50)))
def test_softmax_is_a_distribution_and_shift_invariant(z):
    p = softmax(z)
    assert p.sum() == pytest.approx(1.0)
    assert np.all(p >= 0)
    np.testing.assert_allclose(softmax(z + 7.0), p, atol=1e-12)


def test_class_scores_validation():
    s = ClassScores.from_mapping({"b": 0.3, "a": 0.3, "c": 0.4}, ["a", "b", "c"])
    assert s.predicted == "c"
    assert s.outranked("a") and not s.outranked("c")
    tie = ClassScores(("x", "w"), np.array([0.5, 0.5]))
    assert tie.predicted == "w"
    assert not tie.outranked("x")
    with pytest.raises(OracleUnavailable):
        ClassScores(("a", "b"), np.array([0.7, 0.7]))
    with pytest.raises(OracleUnavailable):
        ClassScores.from_mapping({"a": 1.0}, ["a", "b"])


def test_transcript_normalization():
    assert normalize_transcript("Say, the WORD: don't!") == ("say", "the", "word", "dont")
    r = TranscriptResult("Hello  world.", 0.9)
    assert r.tokens == ("hello", "world") and r.text == "hello world"
    with pytest.raises(OracleUnavailable):
        TranscriptResult("x", 1.2)
    with pytest.raises(OracleUnavailable):
        TranscriptResult("x", float("nan"))


def test_zero_model_is_uniform():
    m = zero_model(("a", "b", "c", "d"))
    scores = m.classify(tone(440.0, 0.3))
    np.testing.assert_allclose(scores.probs, 0.25)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((12, 6))
    y = rng.integers(0, 3, 12)
    weights, biases = init_layers(6, (5, 4), 3, rng)
    for b in biases:
        b += rng.normal(0, 0.1, b.shape)  # keep ReLUs away from their kink
    _, gw, gb = loss_and_grads(weights, biases, x, y)
    num = numeric_gradient(lambda: loss_and_grads(weights, biases, x, y)[0], weights + biases)
    ana = np.concatenate([g.ravel() for g in gw + gb])
    num = np.concatenate([g.ravel() for g in num])
    rel = np.linalg.norm(ana - num) / (np.linalg.norm(ana) + np.linalg.norm(num))
    assert rel < 1e-4


def _two_tone_corpus(n_per_class, seed=0):
    rng = np.random.default_rng(seed)
    data = []
    for label, base in (("low", 500.0), ("high", 2000.0)):
        for _ in range(n_per_class):
            f = base * (1 + rng.uniform(-0.05, 0.05))
            t = np.arange(int(0.25 * SR)) / SR
            x = rng.uniform(0.2, 0.4) * np.sin(2 * np.pi * f * t) + 0.01 * rng.standard_normal(t.size)
            data.append((AudioClip(np.clip(x, -1, 1), SR), label))
    return data


def test_separable_corpus_trains_quickly():
    data = _two_tone_corpus(40)
    start = time.perf_counter()
    result = train_surrogate(data, epochs=200, seed=1)
    assert time.perf_counter() - start < 60
    assert result.accuracy >= 0.95
    assert all(b <= a for a, b in zip(result.losses, result.losses[1:]))


def test_training_is_deterministic_and_round_trips(tmp_path):
    data = _two_tone_corpus(8, seed=3)
    a = train_surrogate(data, epochs=20, seed=5, hidden=(8,))
    b = train_surrogate(data, epochs=20, seed=5, hidden=(8,))
    assert a.losses == b.losses
    path = a.model.save(tmp_path / "m.json")
    loaded = SurrogateModel.load(path)
    clip = data[0][0]
    np.testing.assert_array_equal(loaded.classify(clip).probs, a.model.classify(clip).probs)


def test_training_input_errors():
    data = _two_tone_corpus(3)
    with pytest.raises(DataError):
        train_surrogate(data, epochs=1)
    with pytest.raises(DataError):
        train_surrogate(_two_tone_corpus(4), epochs=1, labels=("low",))


def test_model_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    with pytest.raises(DataError):
        SurrogateModel.load(bad)
    with pytest.raises(DataError):
        SurrogateModel.load(tmp_path / "missing.json")


def test_feature_rate_mismatch():
    m = zero_model(("a", "b"))
    with pytest.raises(ValueError):
        m.classify(tone(440.0, 0.2, sr=8000))


@pytest.mark.parametrize(
    "ratio,expected",
    [(0.0, 1.0), (0.01, 1.0), (0.02, 0.98), (0.26, 0.5), (0.51, 0.0), (3.0, 0.0)],
)
def test_snr_confidence_is_linear(ratio, expected):
    assert snr_confidence(ratio * 0.2, 0.2, 2.0, 0.01) == pytest.approx(expected)


def test_mock_transcriber_confidence_and_corruption():
    clean = tone(300.0, 0.5, 0.2, clip_id="c1")
    mock = MockTranscriber.from_pairs([(clean, "Say the word dog")])
    assert mock.transcribe(clean).tokens == ("say", "the", "word", "dog")
    assert mock.transcribe(clean).confidence == 1.0

    # noise at 2% of the clean RMS: confidence 1 - 2 * (0.02 - 0.01)
    noise = tone(1700.0, 0.5, 0.2 * 0.02).samples
    slight = clean.with_samples(clean.samples + noise)
    r = mock.transcribe(slight)
    assert r.confidence == pytest.approx(0.98, abs=1e-3)
    assert r.tokens == mock.ground_truth("c1")

    loud = clean.with_samples(clean.samples + tone(1700.0, 0.5, 0.2 * 0.4).samples)
    r1, r2 = mock.transcribe(loud), mock.transcribe(loud)
    assert r1.confidence < MockSettings().drop_threshold
    assert r1 == r2
    assert CORRUPT_TOKEN in r1.tokens and len(r1.tokens) == 4


def test_mock_unknown_clip():
    mock = MockTranscriber()
    with pytest.raises(DataError):
        mock.transcribe(tone(300.0, 0.1, clip_id="nope"))
    with pytest.raises(ValueError):
        mock.register(tone(300.0, 0.1), "x")
