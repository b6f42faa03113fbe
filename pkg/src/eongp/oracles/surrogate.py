"""Built-in surrogate emotion classifier: a dense ReLU network over the
time-averaged MFCC vector of a clip."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..audio import AudioClip
from ..errors import DataError, TrainingError
from ..spectral import mfcc
from .base import ClassScores, softmax

log = logging.getLogger(__name__)

# six hidden layers + softmax head = seven dense layers
DEFAULT_HIDDEN = (64, 64, 48, 48, 32, 32)


@dataclass(frozen=True)
class FeatureConfig:
    sample_rate: int = 16000
    n_coeffs: int = 40
    n_mels: int = 40
    window_s: float = 0.025
    hop_s: float = 0.010

    def extract(self, clip: AudioClip) -> np.ndarray:
        if clip.sample_rate != self.sample_rate:
            raise ValueError(f"model expects {self.sample_rate} Hz audio, got {clip.sample_rate} Hz")
        if len(clip) == 0:
            raise ValueError("cannot classify an empty clip")
        coeffs = mfcc(clip, self.n_coeffs, self.n_mels, self.window_s, self.hop_s)
        return coeffs.mean(axis=0)


@dataclass
class SurrogateModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    labels: tuple[str, ...]
    features: FeatureConfig = field(default_factory=FeatureConfig)
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be non-empty lists of equal length")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: bias shape {b.shape} does not match weight {w.shape}")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i} input width {w.shape[0]} != previous output {self.weights[i - 1].shape[1]}")
        if self.weights[-1].shape[1] != len(self.labels):
            raise ValueError("output layer width must equal the number of classes")

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    def standardize(self, feats: np.ndarray) -> np.ndarray:
        if self.feature_mean is None:
            return feats
        return (feats - self.feature_mean) / self.feature_scale

    def logits(self, feats: np.ndarray) -> np.ndarray:
        return forward(self.weights, self.biases, self.standardize(feats))[0]

    def predict_proba(self, feats: np.ndarray) -> np.ndarray:
        return softmax(self.logits(np.atleast_2d(feats)))

    def classify(self, clip: AudioClip) -> ClassScores:
        probs = self.predict_proba(self.features.extract(clip))[0]
        return ClassScores(self.labels, probs)

    def to_dict(self) -> dict:
        return {
            "format": "eongp-surrogate/1",
            "labels": list(self.labels),
            "features": asdict(self.features),
            "seed": self.seed,
            "feature_mean": None if self.feature_mean is None else self.feature_mean.tolist(),
            "feature_scale": None if self.feature_scale is None else self.feature_scale.tolist(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SurrogateModel":
        try:
            mean = data.get("feature_mean")
            scale = data.get("feature_scale")
            return cls(
                weights=[np.asarray(w, dtype=np.float64) for w in data["weights"]],
                biases=[np.asarray(b, dtype=np.float64) for b in data["biases"]],
                labels=tuple(data["labels"]),
                features=FeatureConfig(**data.get("features", {})),
                feature_mean=None if mean is None else np.asarray(mean, dtype=np.float64),
                feature_scale=None if scale is None else np.asarray(scale, dtype=np.float64),
                seed=data.get("seed"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed surrogate model document: {exc}") from exc

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict()))
        return path

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot load surrogate model {path}: {exc}") from exc


def init_layers(n_in: int, hidden: Sequence[int], n_out: int, rng: np.random.Generator):
    """He-normal weights, zero biases."""
    sizes = [n_in, *hidden, n_out]
    weights = [rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return weights, biases


def forward(weights, biases, x):
    """Return output logits and the per-layer activations needed for backprop."""
    acts = [x]
    h = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if i == len(weights) - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return h, acts


def loss_and_grads(weights, biases, x, y):
    """Mean cross-entropy of integer targets ``y`` and its gradients."""
    logits, acts = forward(weights, biases, x)
    n = x.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(n), y].mean()
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    gw = [None] * len(weights)
    gb = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return float(loss), gw, gb


@dataclass
class TrainingResult:
    model: SurrogateModel
    accuracy: float
    losses: list[float]


def train_surrogate(
    dataset: Sequence[tuple[AudioClip, str]],
    epochs: int = 200,
    learning_rate: float = 0.01,
    seed: int = 0,
    hidden: Sequence[int] = DEFAULT_HIDDEN,
    features: FeatureConfig | None = None,
    labels: Sequence[str] | None = None,
) -> TrainingResult:
    """Full-batch Adam on cross-entropy over standardized mean-MFCC features.

    A step that would raise the loss is retried at half the step size (up to
    20 times, then skipped), so the recorded loss sequence never increases.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if features is None:
        features = FeatureConfig(sample_rate=dataset[0][0].sample_rate) if dataset else FeatureConfig()
    labels = tuple(sorted({lab for _, lab in dataset})) if labels is None else tuple(labels)
    counts = {lab: 0 for lab in labels}
    for _, lab in dataset:
        if lab not in counts:
            raise DataError(f"label {lab!r} not in class list {labels}")
        counts[lab] += 1
    if len(labels) < 2 or min(counts.values()) < 4:
        raise DataError(f"need >= 2 classes with >= 4 samples each, got {counts}")

    feats = np.stack([features.extract(clip) for clip, _ in dataset])
    y = np.array([labels.index(lab) for _, lab in dataset])
    mean = feats.mean(axis=0)
    scale = feats.std(axis=0)
    scale[scale < 1e-8] = 1.0
    x = (feats - mean) / scale

    rng = np.random.default_rng(seed)
    weights, biases = init_layers(x.shape[1], hidden, len(labels), rng)
    params = weights + biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    n_w = len(weights)

    loss, gw, gb = loss_and_grads(weights, biases, x, y)
    losses = [loss]
    for t in range(1, epochs + 1):
        grads = gw + gb
        steps = []
        for i, g in enumerate(grads):
            m[i] = beta1 * m[i] + (1 - beta1) * g
            v[i] = beta2 * v[i] + (1 - beta2) * g * g
            mhat = m[i] / (1 - beta1**t)
            vhat = v[i] / (1 - beta2**t)
            steps.append(mhat / (np.sqrt(vhat) + eps))
        scale_t = learning_rate
        for _ in range(20):
            trial = [p - scale_t * s for p, s in zip(params, steps)]
            new_loss, new_gw, new_gb = loss_and_grads(trial[:n_w], trial[n_w:], x, y)
            if not np.isfinite(new_loss):
                raise TrainingError(f"non-finite loss at epoch {t} (step size {scale_t:g})")
            if new_loss <= loss:
                params, loss, gw, gb = trial, new_loss, new_gw, new_gb
                break
            scale_t *= 0.5
        losses.append(loss)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {t}")

    weights, biases = params[:n_w], params[n_w:]
    model = SurrogateModel(weights, biases, labels, features, mean, scale, seed)
    pred = forward(weights, biases, x)[0].argmax(axis=1)
    acc = float((pred == y).mean())
    log.info("surrogate trained: %d epochs, loss %.4f, accuracy %.3f", epochs, loss, acc)
    return TrainingResult(model, acc, losses)


def zero_model(labels: Sequence[str], n_inputs: int = 40, hidden: Sequence[int] = (8,), features: FeatureConfig | None = None) -> SurrogateModel:
    """All-zero network: every clip gets the uniform distribution."""
    sizes = [n_inputs, *hidden, len(labels)]
    weights = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return SurrogateModel(weights, biases, tuple(labels), features or FeatureConfig())
