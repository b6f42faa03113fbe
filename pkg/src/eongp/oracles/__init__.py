from .base import ClassScores, TranscriptResult, normalize_transcript, softmax
from .mock import MockSettings, MockTranscriber, snr_confidence
from .plugin import PluginClassifier, PluginProcess, PluginTranscriber
from .surrogate import FeatureConfig, SurrogateModel, TrainingResult, train_surrogate, zero_model

__all__ = [
    "ClassScores",
    "FeatureConfig",
    "MockSettings",
    "MockTranscriber",
    "PluginClassifier",
    "PluginProcess",
    "PluginTranscriber",
    "SurrogateModel",
    "TrainingResult",
    "TranscriptResult",
    "normalize_transcript",
    "snr_confidence",
    "softmax",
    "train_surrogate",
    "zero_model",
]
