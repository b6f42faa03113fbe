import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest

from eongp.audio import AudioClip
from eongp.errors import OracleUnavailable, PluginExited, PluginIdMismatch, PluginProtocolError, PluginTimeout
from eongp.oracles.plugin import PluginClassifier, PluginProcess, PluginTranscriber, decode_samples, encode_samples, serve
from eongp.oracles.surrogate import zero_model
from conftest import SR, tone

FAKE = Path(__file__).parent / "plugins" / "fake_plugin.py"
LABELS = ("angry", "happy", "neutral", "sad")


def launch(mode, role="classifier", timeout=10.0):
    return PluginProcess([sys.executable, str(FAKE), mode], role, timeout=timeout)


def test_wire_format_is_float32():
    x = np.array([0.1, -0.5, 1.0])
    back = decode_samples(encode_samples(x))
    np.testing.assert_allclose(back, x, atol=1e-7)
    assert back.dtype == np.float64


def test_uniform_classifier():
    with launch("uniform") as proc:
        clf = PluginClassifier(proc, LABELS)
        scores = clf.classify(tone(440.0, 0.1))
        np.testing.assert_allclose(scores.probs, 0.25)


def test_out_of_order_responses_matched_by_id():
    with launch("reverse") as proc:
        from eongp.oracles.plugin import clip_request

        futs = [proc.submit(clip_request("classify", tone(440.0, 0.05, clip_id=lab))) for lab in LABELS]
        answers = [proc.result(f) for f in futs]
    for lab, msg in zip(LABELS, answers):
        assert msg["scores"][lab] == 1.0


def test_transcriber_echo():
    with launch("echo", role="transcriber") as proc:
        r = PluginTranscriber(proc).transcribe(tone(440.0, 0.05, clip_id="Hello, World"))
    assert r.tokens == ("hello", "world") and r.confidence == 0.9


@pytest.mark.parametrize(
    "mode,error",
    [
        ("crash", PluginExited),
        ("malformed", PluginProtocolError),
        ("badid", PluginIdMismatch),
        ("badscores", PluginProtocolError),
        ("error", OracleUnavailable),
    ],
)
def test_failures_raise_typed_errors(mode, error):
    with launch(mode) as proc:
        clf = PluginClassifier(proc, LABELS)
        with pytest.raises(error):
            clf.classify(tone(440.0, 0.05))


def test_failure_poisons_later_requests():
    with launch("malformed") as proc:
        clf = PluginClassifier(proc, LABELS)
        with pytest.raises(PluginProtocolError):
            clf.classify(tone(440.0, 0.05))
        with pytest.raises(OracleUnavailable):
            clf.classify(tone(440.0, 0.05))


def test_timeout():
    proc = launch("timeout", timeout=0.5)
    try:
        with pytest.raises(PluginTimeout):
            PluginClassifier(proc, LABELS).classify(tone(440.0, 0.05))
    finally:
        proc._proc.kill()
        proc.close()


def test_missing_executable():
    with pytest.raises(PluginExited):
        PluginProcess(["/nonexistent/plugin-binary"], "classifier")


def test_role_checks():
    with pytest.raises(ValueError):
        PluginProcess([sys.executable, "-c", "pass"], "judge")


def test_serve_loop_in_process():
    model = zero_model(LABELS)
    clip = tone(440.0, 0.1, clip_id="c")
    lines = [
        json.dumps({"id": 1, "op": "classify", "sample_rate": SR, "samples_b64": encode_samples(clip.samples), "clip_id": "c"}),
        json.dumps({"id": 2, "op": "transcribe", "sample_rate": SR, "samples_b64": encode_samples(clip.samples)}),
        "",
    ]
    out = io.StringIO()
    serve(classify=lambda c: model.classify(c).as_dict(), stdin=io.StringIO("\n".join(lines)), stdout=out)
    first, second = [json.loads(x) for x in out.getvalue().splitlines()]
    assert first == {"id": 1, "scores": {k: 0.25 for k in LABELS}}
    assert second["id"] == 2 and "unsupported op" in second["error"]


def test_surrogate_served_over_plugin(tmp_path):
    path = zero_model(LABELS).save(tmp_path / "m.json")
    cmd = [sys.executable, "-m", "eongp.oracles.serve_surrogate", str(path)]
    with PluginProcess(cmd, "classifier", timeout=30) as proc:
        scores = PluginClassifier(proc, LABELS).classify(AudioClip(np.zeros(1600), SR))
    np.testing.assert_allclose(scores.probs, 0.25)
