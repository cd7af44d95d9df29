import numpy as np
import pytest

from smsdrift.frames import LocalizationTable, bin_localizations
from smsdrift.spectral import (SpectralError, SpectralStack, binned_spectra, dft2, dft2_stack,
                               evaluate_at, is_conjugate_symmetric, phase_shift, reconstruct_image)


def brute_dft(Z, h):
    N = Z.shape[0]
    j = np.arange(N) / N
    k = np.arange(-h, h + 1)
    E = np.exp(-2j * np.pi * np.outer(k, j))
    return E @ Z @ E.T / N ** 2


def test_constant_frame():
    Y = dft2(np.full((8, 8), 0.7), 5)
    assert Y[2, 2] == pytest.approx(0.7, abs=1e-14)
    Y[2, 2] = 0
    assert np.abs(Y).max() < 1e-12


def test_delta_has_flat_spectrum():
    Z = np.zeros((4, 4))
    Z[0, 0] = 1
    Y = dft2(Z, 3)
    np.testing.assert_allclose(Y, np.full((3, 3), 1 / 16), atol=1e-15)


def test_matches_direct_sum(rng):
    Z = rng.random((4, 4))
    np.testing.assert_allclose(dft2(Z, 3), brute_dft(Z, 1), atol=1e-12)
    Z = rng.random((9, 9))
    np.testing.assert_allclose(dft2(Z, 9), brute_dft(Z, 4), atol=1e-12)


def test_window_error():
    with pytest.raises(SpectralError):
        dft2(np.zeros((4, 4)), 5)


def test_phase_shift_identity_and_inverse(rng):
    Y = dft2(rng.random((8, 8)), 7)
    np.testing.assert_array_equal(phase_shift(Y, (0.0, 0.0)), Y)
    d = rng.uniform(-1, 1, 2)
    np.testing.assert_allclose(phase_shift(phase_shift(Y, d), -d), Y, atol=1e-14)
    np.testing.assert_allclose(np.abs(phase_shift(Y, d)), np.abs(Y), atol=1e-15)


def test_phase_shifts_compose(rng):
    Y = dft2(rng.random((8, 8)), 7)
    a, b = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
    np.testing.assert_allclose(phase_shift(phase_shift(Y, a), b), phase_shift(Y, np.mod(a + b, 1)),
                               atol=1e-12)


@pytest.mark.parametrize("N", [8, 9])
def test_phase_shift_is_circular_shift(N, rng):
    for _ in range(10):
        F = rng.random((N, N))
        m, l = rng.integers(-N, N, 2)
        out = reconstruct_image(phase_shift(dft2(F, N), (m / N, l / N)), N)
        np.testing.assert_allclose(out, np.roll(F, (-m, -l), axis=(0, 1)), atol=1e-12)


def test_reconstruct_constant_and_inverse(rng):
    C = np.zeros((5, 5), complex)
    C[2, 2] = 0.3
    np.testing.assert_allclose(reconstruct_image(C, 8), 0.3, atol=1e-15)
    for N in (8, 11):
        Z = rng.random((N, N))
        np.testing.assert_allclose(reconstruct_image(dft2(Z, N), N), Z, atol=1e-10)


def test_parseval_on_band(rng):
    Z = np.zeros((32, 32))
    Z[8:20, 10:14] = 1.0
    C = dft2(Z, 9)
    img = reconstruct_image(C, 32)
    assert np.sum(img ** 2) / 32 ** 2 == pytest.approx(np.sum(np.abs(C) ** 2), rel=1e-12)
    # full window, odd N
    G = rng.random((15, 15))
    assert np.sum(G ** 2) / 225 == pytest.approx(np.sum(np.abs(dft2(G, 15)) ** 2), rel=1e-12)


def test_truncation_smooths():
    Z = np.zeros((32, 32))
    Z[10:14, 10:14] = 1.0
    img = reconstruct_image(dft2(Z, 7), 32)
    assert np.abs(np.diff(img, axis=0)).max() < np.abs(np.diff(Z, axis=0)).max()


def test_linearity(rng):
    F, G = rng.random((8, 8)), rng.random((8, 8))
    np.testing.assert_allclose(dft2(2.5 * F - 0.7 * G, 7), 2.5 * dft2(F, 7) - 0.7 * dft2(G, 7),
                               atol=1e-12)


def test_conjugate_symmetry_and_error(rng):
    Y = dft2(rng.random((8, 8)), 5)
    assert is_conjugate_symmetric(Y)
    bad = Y.copy()
    bad[0, 1] += 0.3j
    with pytest.raises(SpectralError):
        reconstruct_image(bad, 8)


def test_evaluate_at_matches_grid_synthesis(rng):
    C = dft2(rng.random((16, 16)), 7)
    img = reconstruct_image(C, 16)
    pts = np.array([[3, 4], [0, 15], [9, 9]]) / 16
    np.testing.assert_allclose(evaluate_at(C, pts), img[[3, 0, 9], [4, 15, 9]], atol=1e-12)


def test_stack_and_restrict(rng):
    data = rng.random((3, 16, 16))
    st = SpectralStack.from_frames(data, 9)
    np.testing.assert_allclose(st.coeffs[1], dft2(data[1], 9), atol=1e-15)
    np.testing.assert_allclose(st.restrict(5).coeffs, dft2_stack(data, 5), atol=1e-15)
    with pytest.raises(SpectralError):
        st.restrict(11)


@pytest.mark.parametrize("xi", [5, 16])
def test_binned_spectra_matches_dense(xi, rng):
    n = 3000
    tab = LocalizationTable(rng.random(n), rng.random(n), rng.integers(1, 41, n), 40)
    spec, counts = binned_spectra(tab, 8, 16, xi)
    dense = bin_localizations(tab, 8, 16)
    np.testing.assert_allclose(spec.coeffs, dft2_stack(dense.data, xi), atol=1e-12)
    np.testing.assert_array_equal(counts, dense.counts)
