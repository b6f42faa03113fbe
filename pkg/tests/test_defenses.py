import pytest

from eongp.audio import Tone
from eongp.defenses import DEFAULT_DEFENSES, DefenseSpec, apply_defense, audible_frequencies, defense_sweep
from eongp.errors import ConfigError
from eongp.gp import EonGenome
from conftest import SR, tone
from oracles import spectral_peak_hz

# a single tone on class b's marker, which the toy surrogate reads as "b"
EON = EonGenome((Tone(1200.0, 0.03, 0.0, 2.5), Tone(100.0, 0.0, 0.0, 2.5), Tone(100.0, 0.0, 0.0, 2.5)))
IDENTITY = DefenseSpec("resample", target_rate=SR, name="identity")


def test_spec_validation():
    with pytest.raises(ConfigError):
        DefenseSpec("earplugs")
    with pytest.raises(ConfigError):
        DefenseSpec("mel_roundtrip", n_coeffs=41)
    with pytest.raises(ConfigError):
        DefenseSpec.from_mapping({"kind": "resample", "rate": 8000})
    assert DefenseSpec.from_mapping({"kind": "eon_bandpass", "frequencies": [500]}).frequencies == (500.0,)


def test_native_rate_resample_is_identity():
    clip = tone(440.0, 0.3)
    assert apply_defense(IDENTITY, clip) is clip


def test_defenses_keep_length_and_rate():
    clip = tone(440.0, 0.4, 0.3, clip_id="x")
    for spec in DEFAULT_DEFENSES:
        out = apply_defense(spec, clip, [440.0])
        assert len(out) == len(clip) and out.sample_rate == SR and out.clip_id == "x"


def test_downsampling_keeps_low_tone():
    out = apply_defense(DefenseSpec("resample"), tone(440.0, 1.0, 0.3))
    assert abs(spectral_peak_hz(out.samples, SR) - 440.0) <= 1.0


def test_bandpass_uses_eon_frequencies():
    assert audible_frequencies(EON) == (1200.0,)
    assert audible_frequencies(EON, gain=0.0) == ()
    clip = tone(1200.0, 1.0, 0.3)
    out = apply_defense(DefenseSpec("eon_bandpass"), clip, audible_frequencies(EON))
    assert out.rms() < clip.rms() * 10 ** (-30 / 20)


def test_sweep_deltas_recompute_from_records(toy):
    samples, model, mock = toy
    sweep = defense_sweep(EON, samples, model, mock, specs=(*DEFAULT_DEFENSES, IDENTITY))
    assert sweep.baseline.esr >= 0.5
    n = len(samples)
    by_name = {r.spec.label: r for r in sweep.results}
    assert set(by_name) == {"resample", "mel_roundtrip", "eon_bandpass", "identity"}
    for res in sweep.results:
        before = sum(r.undefended_evaded for r in res.records) / n
        after = sum(r.defended_evaded for r in res.records) / n
        assert res.delta == pytest.approx(after - before, abs=1e-12)
        assert res.esr == pytest.approx(after, abs=1e-12)
    assert abs(by_name["identity"].delta) <= 1 / n
    # notching the tone away restores the marker evidence
    assert by_name["eon_bandpass"].esr < sweep.baseline.esr
    row = sweep.table_rows()[0]
    assert row["undefended_esr"] == sweep.baseline.esr
    assert sweep.to_csv().splitlines()[0].startswith("oracle,undefended_esr,resample_esr,resample_delta")


def test_defense_never_touches_transcription(toy):
    samples, model, mock = toy
    sweep = defense_sweep(EON, samples[:12], model, mock, specs=(DefenseSpec("mel_roundtrip"),))
    base_ok = [r.transcript_ok for r in sweep.baseline.records]
    assert [r.transcript_ok for r in sweep.results[0].records] == base_ok


def test_tampered_delta_detected(toy):
    samples, model, mock = toy
    sweep = defense_sweep(EON, samples[:8], model, mock, specs=(IDENTITY,))
    sweep.results[0].delta += 0.125
    with pytest.raises(AssertionError):
        sweep.verify()
