import numpy as np
import pytest
from scipy import stats

from smsdrift.drift_models import DriftFamily, DriftParams, drift_path, frame_times
from smsdrift.frames import bin_localizations, superimpose
from smsdrift.simulate import (NoiseModel, SimulationSpec, make_test_image, pixel_shifts,
                               random_spectrum, sample_times, simulate_localizations,
                               simulate_spectral, simulate_stack, substream, variance_stabilize)
from smsdrift.spectral import dft2, is_conjugate_symmetric, phase_shift, reconstruct_image

LIN = DriftFamily.parse("linear")


def test_sample_times_basic():
    assert not np.any(sample_times(16, 1, 3))
    np.testing.assert_array_equal(sample_times(32, 7, 9), sample_times(32, 7, 9))
    assert np.any(sample_times(32, 7, 9) != sample_times(32, 7, 10))


def test_sample_times_uniform():
    t = sample_times(256, 20, 2024)
    counts = np.bincount(t.ravel(), minlength=20)
    assert stats.chisquare(counts).pvalue > 0.001


def test_noiseless_static_single_frame(rng):
    f = rng.random((16, 16))
    st = simulate_stack(SimulationSpec(f, DriftParams(LIN, (0, 0)), 1, NoiseModel.gaussian(0.0), 1))
    np.testing.assert_array_equal(st.data[0], f)


def test_noiseless_placement_oracle(rng):
    N = 64
    f = rng.random((N, N)) + 0.1
    th = DriftParams(LIN, (8 / N, 4 / N))
    st = simulate_stack(SimulationSpec(f, th, 2, NoiseModel.gaussian(0.0), 4))
    times = sample_times(N, 2, 4)
    src = np.argwhere(times == 1)
    # δ_{1/2} = (4, 2) pixels
    np.testing.assert_array_equal(st.data[1][(src[:, 0] + 4) % N, (src[:, 1] + 2) % N],
                                  f[src[:, 0], src[:, 1]])


def test_one_contribution_per_pixel(rng):
    N, T = 32, 9
    th = DriftParams(DriftFamily.parse("quadratic"), (0.2, -0.1, 0.3, 0.05))
    st = simulate_stack(SimulationSpec(rng.random((N, N)), th, T, NoiseModel.gaussian(0.1), 2))
    assert st.counts.sum() == N * N
    np.testing.assert_array_equal(st.mask.sum(axis=(1, 2)), st.counts)
    # undo the integer shifts: every source pixel is touched exactly once
    sh = pixel_shifts(th, T, N)
    back = np.stack([np.roll(st.mask[t], tuple(-sh[t]), axis=(0, 1)) for t in range(T)])
    np.testing.assert_array_equal(back.sum(axis=0), 1)


def test_noiseless_realignment_reproduces_image(rng):
    N, T = 16, 5
    f = rng.random((N, N))
    th = DriftParams(LIN, (0.3, -0.45))
    st = simulate_stack(SimulationSpec(f, th, T, NoiseModel.gaussian(0.0), 8))
    sh = pixel_shifts(th, T, N) / N
    total = sum(reconstruct_image(phase_shift(dft2(st.data[t], N), sh[t]), N) for t in range(T))
    np.testing.assert_allclose(total, f, atol=1e-12)


def test_noise_models(rng):
    f = np.full(200000, 0.5)
    g = NoiseModel.poisson().draw(f[:100000], substream(1, 9))
    assert abs(g.mean() - 0.5) < 1e-2
    assert np.all(g == np.round(g))
    z = NoiseModel.gaussian(0.1).draw(f, substream(1, 10)) - 0.5
    assert z.std() == pytest.approx(0.1, rel=0.02)
    t2 = NoiseModel.student_t2(0.1).draw(f, substream(1, 11)) - 0.5
    # scale times a standard t2 deviate
    q = np.quantile(t2, [0.25, 0.75])
    np.testing.assert_allclose(q, 0.1 * stats.t.ppf([0.25, 0.75], 2), rtol=0.03)
    with pytest.raises(ValueError):
        NoiseModel("cauchy")


def test_poisson_stack_values_are_counts():
    f = make_test_image(64)
    st = simulate_stack(SimulationSpec(f, DriftParams(LIN, (0.1, 0.1)), 4, NoiseModel.poisson(), 3))
    assert np.all(st.data == np.round(st.data)) and np.all(st.data >= 0)


def test_variance_stabilize_examples():
    from smsdrift.frames import FrameStack
    data = np.array([[[0.0, 2.0], [6.0, 0.0]]])
    mask = np.array([[[True, True], [True, False]]])
    out = variance_stabilize(FrameStack(data, [3], mask))
    np.testing.assert_allclose(out.data, [[[0.5, 1.5], [2.5, 0.0]]])
    cen = variance_stabilize(FrameStack(data, [3], mask), center=True)
    np.testing.assert_allclose(cen.data, [[[0.0, 1.0], [2.0, 0.0]]])
    with pytest.raises(ValueError):
        variance_stabilize(FrameStack(-data - 1, [3], mask))


def test_determinism(rng):
    spec = SimulationSpec(rng.random((16, 16)), DriftParams(LIN, (0.2, 0.1)), 4,
                          NoiseModel.student_t2(0.1), 77)
    a, b = simulate_stack(spec), simulate_stack(spec)
    np.testing.assert_array_equal(a.data, b.data)


def test_make_test_image():
    f = make_test_image(128)
    assert f.shape == (128, 128)
    assert f.min() >= 0 and f.max() <= 1
    assert f.mean() == pytest.approx(0.045, rel=0.05)
    np.testing.assert_array_equal(f, make_test_image(128))


def test_random_spectrum():
    f = random_spectrum(9, 3)
    assert f.shape == (9, 9) and f[4, 4] == 0
    assert is_conjugate_symmetric(f)
    few = random_spectrum(9, 3, n_modes=4)
    assert np.count_nonzero(few) == 8


def test_simulate_spectral_noiseless(rng):
    f = random_spectrum(7, 1)
    th = DriftParams(LIN, (0.3, 0.2))
    Y = simulate_spectral(f, th, 5, 0.0, 2)
    d = drift_path(th, frame_times(5))
    for t in range(5):
        np.testing.assert_allclose(phase_shift(Y[t], d[t]), f, atol=1e-14)


def test_simulate_localizations():
    f = make_test_image(64)
    th = DriftParams(LIN, (0.2, -0.1))
    tab = simulate_localizations(f, th, 20000, 100, 5)
    assert len(tab) == 20000 and tab.n_frames == 100
    assert tab.x1.min() >= 0 and tab.x1.max() < 1 and tab.x2.max() < 1
    # records of the first raw frame are undrifted, so they sit on the image support
    st = bin_localizations(tab, 100, 64)
    assert np.all(f[st.data[0] > 0] > 0)
    assert superimpose(st).sum() == 20000
