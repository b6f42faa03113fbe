import numpy as np
import pytest

from eongp.audio import AudioClip
from eongp.spectral import (
    complex_stft,
    griffin_lim,
    hz_to_mel,
    invert_mel,
    istft,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    mfcc,
    notch_filter,
    stft,
)
from conftest import SR, tone
from oracles import spectral_peak_hz


@pytest.mark.parametrize("window_s,hop_s", [(0.032, 0.008), (0.025, 0.010)])
def test_parseval_within_one_percent(window_s, hop_s):
    rng = np.random.default_rng(0)
    clip = AudioClip(0.2 * rng.uniform(-1, 1, SR), SR)
    energy = float(np.sum(clip.samples**2))
    assert stft(clip, window_s, hop_s).energy() == pytest.approx(energy, rel=0.01)


def test_istft_inverts_stft():
    rng = np.random.default_rng(1)
    x = rng.uniform(-0.5, 0.5, 3000)
    np.testing.assert_allclose(istft(complex_stft(x, 400, 160), 400, 160, len(x)), x, atol=1e-10)


def test_stft_needs_one_window():
    with pytest.raises(ValueError):
        complex_stft(np.zeros(10), 400, 160)


def test_mel_scale_round_trip():
    f = np.array([0.0, 100.0, 1000.0, 7999.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-9)
    assert hz_to_mel(1000.0) == pytest.approx(999.99, abs=0.1)


def test_filterbank_triangles_peak_at_one():
    fb = mel_filterbank(40, 400, SR)
    assert fb.shape == (40, 201)
    assert np.all(fb >= 0)
    assert np.all(fb.max(axis=1) <= 1.0 + 1e-12)
    assert np.all(fb.max(axis=1) > 0.5)


def test_mel_argmax_tracks_tone():
    fb = mel_filterbank(40, 400, SR)
    centers = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(SR / 2), 42))[1:-1]
    for f in (300.0, 1000.0, 3000.0):
        spec = mel_spectrogram(tone(f, 0.5), n_mels=40)
        band = int(np.argmax(spec.magnitudes.mean(axis=0)))
        # the loudest band is one of the two whose centers bracket f
        assert abs(centers[band] - f) <= np.max(np.diff(centers)) or band in (np.searchsorted(centers, f) - 1, np.searchsorted(centers, f))
    assert fb.shape[0] == 40


def test_mfcc_gain_moves_only_c0():
    # broadband so every band sits far above the log floor
    noise = np.random.default_rng(5).uniform(-1, 1, SR // 2)
    a = mfcc(AudioClip(0.05 * noise, SR))
    b = mfcc(AudioClip(0.2 * noise, SR))
    diff = (b - a).mean(axis=0)
    # a flat log(16) offset lands only on c0, scaled by sqrt(n_mels) under the orthonormal DCT
    assert diff[0] == pytest.approx(np.log(16.0) * np.sqrt(40), rel=1e-3)
    np.testing.assert_allclose(diff[1:], 0.0, atol=1e-3)


def test_mfcc_of_silence_is_finite():
    coeffs = mfcc(AudioClip(np.zeros(SR // 2), SR))
    assert np.all(np.isfinite(coeffs))
    np.testing.assert_allclose(coeffs[:, 1:], 0.0, atol=1e-9)


def test_mel_inversion_recovers_peak_within_one_mel_bin():
    f = 500.0
    spec = mel_spectrogram(tone(f, 1.0, 0.5), n_mels=40)
    clip, losses = invert_mel(spec, iterations=32, return_losses=True)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(SR / 2), 42))
    k = np.searchsorted(edges, f)
    width = edges[k] - edges[k - 1]
    assert abs(spectral_peak_hz(clip.samples, SR) - f) <= width
    assert len(clip) == SR


def test_griffin_lim_loss_never_increases():
    rng = np.random.default_rng(3)
    x = rng.uniform(-0.3, 0.3, 4000)
    mag = np.abs(complex_stft(x, 400, 100))
    _, losses = griffin_lim(mag, 400, 100, len(x), iterations=25, seed=1)
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_notch_attenuation():
    hw = 10.0
    for f in (150.0, 1000.0, 3500.0):
        centre = tone(f, 1.0, 0.5)
        out = notch_filter(centre, [f], hw)
        in_band_db = 20 * np.log10(out.rms() / centre.rms())
        assert in_band_db <= -30.0
        side = tone(f + 5 * hw, 1.0, 0.5)
        side_db = 20 * np.log10(notch_filter(side, [f], hw).rms() / side.rms())
        assert side_db >= -1.0


def test_notch_edge_cases():
    clip = tone(440.0, 0.1)
    assert notch_filter(clip, []) is clip
    with pytest.raises(ValueError):
        notch_filter(clip, [9000.0])
    with pytest.raises(ValueError):
        notch_filter(clip, [440.0], half_width=0)


def test_notch_cascade_removes_each_tone():
    freqs = (400.0, 1300.0, 2900.0)
    mixed = AudioClip(sum(tone(f, 1.0, 0.2).samples for f in freqs), SR)
    out = notch_filter(mixed, freqs)
    assert 20 * np.log10(out.rms() / mixed.rms()) <= -30.0
