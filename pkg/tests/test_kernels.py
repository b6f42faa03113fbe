import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eongp import kernels
from oracles import brute_force_edit_distance, dft_bin_power, direct_form_filter

finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


def test_backend_reported():
    assert kernels.BACKEND in kernels.backends()
    assert "python" in kernels.backends()


def test_biquad_matches_direct_form(kernel_backend):
    rng = np.random.default_rng(1)
    x = rng.standard_normal(500)
    b = (0.2, -0.3, 0.1)
    a = (1.0, -0.5, 0.25)
    y, _, _ = kernels.biquad(x, *b, *a[1:])
    np.testing.assert_allclose(y, direct_form_filter(b, a, x), rtol=1e-12, atol=1e-12)


def test_biquad_state_carries_across_calls(kernel_backend):
    rng = np.random.default_rng(2)
    x = rng.standard_normal(300)
    coeffs = (0.3, 0.1, -0.2, -0.4, 0.1)
    whole, _, _ = kernels.biquad(x, *coeffs)
    first, z1, z2 = kernels.biquad(x[:120], *coeffs)
    second, _, _ = kernels.biquad(x[120:], *coeffs, z1, z2)
    np.testing.assert_allclose(np.concatenate([first, second]), whole, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(0, 64), elements=finite))
def test_backends_agree_on_biquad(x):
    mods = kernels.backends()
    outs = [m.biquad(np.ascontiguousarray(x), 0.5, 0.2, 0.1, -0.3, 0.2, 0.0, 0.0) for m in mods.values()]
    for out in outs[1:]:
        np.testing.assert_allclose(out[0], outs[0][0], atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=6), st.lists(st.integers(0, 3), max_size=6))
def test_levenshtein_matches_enumeration(ref, hyp):
    want = brute_force_edit_distance(ref, hyp)
    for mod in kernels.backends().values():
        got = mod.levenshtein(np.asarray(ref, dtype=np.int64), np.asarray(hyp, dtype=np.int64))
        assert got == want


def test_levenshtein_wrapper(kernel_backend):
    assert kernels.levenshtein([1, 2, 3], [1, 3]) == 1
    assert kernels.levenshtein([], [4, 4]) == 2
    assert kernels.levenshtein([5], []) == 1


@pytest.mark.parametrize("k", [3, 10, 31])
def test_goertzel_equals_dft_bin(kernel_backend, k):
    rng = np.random.default_rng(k)
    n, sr = 256, 8000.0
    x = rng.standard_normal(n)
    got = kernels.goertzel_power(x, k * sr / n, sr)
    assert got == pytest.approx(dft_bin_power(x, k), rel=1e-9)
