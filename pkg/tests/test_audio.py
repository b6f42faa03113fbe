import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eongp.audio import AudioClip, ParamRange, Tone, ToneRanges, mix, read_wav, resample, synthesize_eon, synthesize_tones, write_wav
from eongp.errors import DataError
from eongp.gp import EonGenome
from eongp.spectral import tone_energy
from conftest import SR, tone
from oracles import spectral_peak_hz


def test_clip_rejects_out_of_range_and_nan():
    with pytest.raises(ValueError):
        AudioClip(np.array([0.0, 1.5]), SR)
    with pytest.raises(ValueError):
        AudioClip(np.array([np.nan]), SR)
    with pytest.raises(ValueError):
        AudioClip(np.zeros((2, 2)), SR)
    with pytest.raises(ValueError):
        AudioClip(np.zeros(4), 0)


def test_clip_samples_read_only():
    clip = AudioClip(np.zeros(4), SR)
    with pytest.raises(ValueError):
        clip.samples[0] = 1.0


def test_tone_range_check_and_muted_amplitude():
    r = ToneRanges()
    Tone(440.0, 0.02, 0.1, 3.0).check(r)
    Tone(440.0, 0.0, 0.1, 3.0).check(r)  # muted
    with pytest.raises(ValueError):
        Tone(50.0, 0.02, 0.1, 3.0).check(r)
    with pytest.raises(ValueError):
        Tone(440.0, 0.05, 0.1, 3.0).check(r)
    with pytest.raises(ValueError):
        ParamRange(1.0, 1.0)


def test_synthesized_tone_energy_within_one_percent():
    # a sinusoid of amplitude A over N samples carries A^2 N / 2 at its own frequency
    tones = [Tone(440.0, 0.03, 0.0, 2.5), Tone(1250.0, 0.02, 0.0, 2.5), Tone(3100.0, 0.01, 0.0, 2.5)]
    clip = synthesize_tones(tones, SR, 2.5)
    n = len(clip)
    for t in tones:
        assert tone_energy(clip.samples, t.frequency, SR) == pytest.approx(t.amplitude**2 * n / 2, rel=0.01)


def test_tone_gating_offsets():
    clip = synthesize_tones([Tone(500.0, 0.04, 0.25, 2.5)], SR, 3.0)
    start = int(np.ceil(0.25 * SR))
    assert not clip.samples[:start].any()
    assert clip.samples[start + 1] != 0.0
    assert not clip.samples[int(np.ceil(2.75 * SR)):].any()


def test_synthesis_rejects_bad_inputs():
    with pytest.raises(ValueError):
        synthesize_tones([Tone(3000.0, 0.01, 0.0, 1.0)], 6000, 1.0)
    with pytest.raises(ValueError):
        synthesize_tones([Tone(300.0, 0.01, 0.0, 2.0)], SR, 1.0)


def test_eon_default_length_is_last_tone_end():
    g = EonGenome((Tone(300.0, 0.01, 0.2, 2.5), Tone(900.0, 0.01, 0.5, 3.0), Tone(2000.0, 0.01, 0.0, 2.5)))
    assert len(synthesize_eon(g, SR)) == round(3.5 * SR)


def test_mix_truncates_pads_and_keeps_id():
    speech = AudioClip(np.full(100, 0.1), SR, "a")
    long_noise = AudioClip(np.full(300, 0.2), SR)
    short_noise = AudioClip(np.full(10, 0.2), SR)
    out = mix(speech, long_noise)
    assert len(out) == 100 and out.clip_id == "a"
    np.testing.assert_allclose(out.samples, 0.3)
    out = mix(speech, short_noise)
    np.testing.assert_allclose(out.samples[:10], 0.3)
    np.testing.assert_allclose(out.samples[10:], 0.1)
    with pytest.raises(ValueError):
        mix(speech, AudioClip(np.zeros(10), 8000))


def test_mix_saturates():
    out = mix(AudioClip(np.full(4, 0.9), SR), AudioClip(np.full(4, 0.5), SR))
    np.testing.assert_allclose(out.samples, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=40), st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=40))
def test_mix_commutes_on_overlap(a, b):
    n = min(len(a), len(b))
    x = AudioClip(np.array(a[:n]), SR)
    y = AudioClip(np.array(b[:n]), SR)
    np.testing.assert_array_equal(mix(x, y).samples, mix(y, x).samples)


def test_resample_round_trip_keeps_440_peak():
    clip = tone(440.0, 1.0, 0.5)
    back = resample(resample(clip, 8000), SR)
    assert len(back) == len(clip)
    bin_width = SR / len(clip)
    assert abs(spectral_peak_hz(back.samples, SR) - 440.0) <= bin_width
    same = resample(clip, SR)
    np.testing.assert_array_equal(same.samples, clip.samples)


def test_wav_round_trip(tmp_path):
    clip = tone(300.0, 0.2, 0.4, clip_id="x")
    p = write_wav(tmp_path / "a.wav", clip)
    back = read_wav(p, clip_id="x")
    assert back.sample_rate == SR and back.clip_id == "x"
    np.testing.assert_allclose(back.samples, clip.samples, atol=2.0 / 32768)
    p = write_wav(tmp_path / "b.wav", clip, subtype="float32")
    np.testing.assert_allclose(read_wav(p).samples, clip.samples, atol=1e-7)


def test_wav_read_errors(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav")
    with pytest.raises(DataError):
        read_wav(bad)
