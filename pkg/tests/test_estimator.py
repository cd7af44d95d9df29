import numpy as np
import pytest

from smsdrift.blur import motion_blur_known_direction
from smsdrift.contrast import ContrastConfig, tilde_contrast
from smsdrift.drift_models import DriftFamily, DriftParams, drift_path, frame_times
from smsdrift.estimator import (EstimationError, EstimationResult, OptimizerConfig, estimate,
                                reconstruct, track_fiducial)
from smsdrift.frames import FrameStack
from smsdrift.simulate import NoiseModel, SimulationSpec, make_test_image, simulate_stack
from smsdrift.spectral import SpectralStack, dft2, reconstruct_image

LIN = DriftFamily.parse("linear")


def rolled_stack(F, params, T):
    N = F.shape[0]
    sh = np.floor(drift_path(params, frame_times(T)) * N + 0.5).astype(int)
    data = np.stack([np.roll(F, tuple(s), axis=(0, 1)) for s in sh])
    return FrameStack(data, np.full(T, N * N))


@pytest.fixture(scope="module")
def image64():
    return make_test_image(64)


def test_noiseless_dense_linear(image64):
    th0 = DriftParams(LIN, (8 / 64, 4 / 64))
    res = estimate(rolled_stack(image64, th0, 20), LIN)
    assert res.converged
    assert np.all(np.abs(res.theta_hat.vector - th0.vector) <= 1 / 128)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_noiseless_sparse_matches_grid_search(image64, seed):
    # sparse sampling alone perturbs θ̂ by about a pixel at this size, so the
    # oracle is the exhaustive search over integer-pixel θ
    N = 64
    th0 = DriftParams(LIN, (8 / N, 4 / N))
    st = simulate_stack(SimulationSpec(image64, th0, 20, NoiseModel.gaussian(0.0), seed))
    cfg = ContrastConfig(5)
    res = estimate(st, LIN, cfg)
    spec = SpectralStack.from_frames(st.data, 5)
    grid = [(a, b) for a in range(-16, 17) for b in range(-16, 17)]
    vals = [tilde_contrast(DriftParams(LIN, (a / N, b / N)), spec, cfg) for a, b in grid]
    best = np.array(grid[int(np.argmin(vals))]) / N
    assert np.all(np.abs(res.theta_hat.vector - best) <= 1 / (2 * N))


def test_zero_stack_returns_start():
    res = estimate(FrameStack(np.zeros((4, 8, 8)), np.zeros(4)), LIN)
    assert res.converged and res.contrast_value == 0.0
    np.testing.assert_array_equal(res.theta_hat.vector, [0, 0])


def test_degenerate_stack():
    with pytest.raises(EstimationError):
        estimate(FrameStack(np.ones((1, 8, 8)), [64]), LIN)


def test_contrast_value_consistent_and_improves(rng):
    F = rng.random((16, 16))
    st = rolled_stack(F, DriftParams(LIN, (0.25, -0.125)), 6)
    cfg = ContrastConfig(7)
    res = estimate(st, LIN, cfg)
    spec = SpectralStack.from_frames(st.data, 7)
    assert res.contrast_value == pytest.approx(tilde_contrast(res.theta_hat, spec, cfg), abs=1e-12)
    assert res.contrast_value <= tilde_contrast(DriftParams(LIN, (0, 0)), spec, cfg)


def test_realigned_stack_has_small_drift(rng):
    F = rng.random((32, 32))
    th0 = DriftParams(LIN, (0.3, -0.2))
    st = rolled_stack(F, th0, 8)
    res = estimate(st, LIN, ContrastConfig(9))
    back = np.floor(drift_path(res.theta_hat, frame_times(8)) * 32 + 0.5).astype(int)
    again = FrameStack(np.stack([np.roll(st.data[t], tuple(-back[t]), axis=(0, 1)) for t in range(8)]),
                       st.counts)
    res2 = estimate(again, LIN, ContrastConfig(9))
    sup = np.max(np.abs(drift_path(res2.theta_hat, np.linspace(0, 1, 50)))) * 32
    assert sup < 1.5


def test_jump_search_takes_grid_minimum(rng):
    F = rng.random((16, 16))
    th0 = DriftParams(DriftFamily.jump(), (0.25, 0.25, 0.125, 0.0, 0.25, 0.0, 0.5))
    st = rolled_stack(F, th0, 8)
    grid = (0.3, 0.5, 0.7)
    cfg = ContrastConfig(9)
    res = estimate(st, DriftFamily.jump(), cfg, OptimizerConfig(t0_grid=grid))
    assert res.theta_hat.vector[6] in grid
    per = []
    spec = SpectralStack.from_frames(st.data, 9)
    for t0 in grid:
        r = estimate(st, DriftFamily.jump(), cfg, OptimizerConfig(t0_grid=(t0,)))
        per.append(r.contrast_value)
    assert res.contrast_value == pytest.approx(min(per))
    assert res.contrast_value == pytest.approx(tilde_contrast(res.theta_hat, spec, cfg), abs=1e-12)


def test_reconstruct_static_is_band_limited_mean(rng):
    data = rng.random((5, 16, 16))
    st = FrameStack(data, np.full(5, 256))
    img = reconstruct(st, DriftParams(LIN, (0, 0)), ContrastConfig(7))
    np.testing.assert_allclose(img, reconstruct_image(dft2(data.mean(axis=0), 7), 16), atol=1e-12)


def test_reconstruct_realigns_exactly(rng):
    F = rng.random((16, 16))
    th0 = DriftParams(LIN, (8 / 16, -4 / 16))
    st = rolled_stack(F, th0, 4)  # shifts stay integral at t = k/4
    img = reconstruct(st, th0, ContrastConfig(16))
    assert np.max(np.abs(img - F)) < 1e-9


def test_wrong_theta_is_blurrier(image64):
    th0 = DriftParams(LIN, (0.195, 0.117))
    st = simulate_stack(SimulationSpec(image64, th0, 20, NoiseModel.gaussian(0.1), 5))
    u = th0.vector
    good = motion_blur_known_direction(reconstruct(st, th0, ContrastConfig(64)), u)
    bad = motion_blur_known_direction(reconstruct(st, DriftParams(LIN, (0, 0)), ContrastConfig(64)), u)
    assert bad > good


def test_subdomains(rng):
    F = rng.random((32, 32))
    th0 = DriftParams(LIN, (4 / 32, 2 / 32))
    st = rolled_stack(F, th0, 8)
    res = estimate(st, LIN, ContrastConfig(16), subdomains=2)
    np.testing.assert_allclose(res.theta_hat.vector, th0.vector, atol=1 / 32)


def test_record_roundtrip():
    res = EstimationResult(DriftParams(LIN, (0.1, 0.2)), -1.5, 12, True, 40, 5.0, 20, 64)
    rec = EstimationResult.parse_record(res.to_record())
    assert rec["family"] == "linear" and rec["converged"] == "true"
    assert float(rec["contrast"]) == -1.5 and rec["T"] == "20"
    assert np.allclose([float(v) for v in rec["theta"].split(",")], [0.1, 0.2])


def test_track_fiducial_examples(rng):
    N = 16
    data = np.zeros((4, N, N))
    data[:, 5, 7] = 3.0
    pos = track_fiducial(FrameStack(data, np.ones(4)), (0, N, 0, N))
    np.testing.assert_allclose(pos, np.tile([(5.5) / N, 7.5 / N], (4, 1)))

    moving = np.zeros((4, N, N))
    for t in range(4):
        moving[t, 2 + t, 3] = 1.0
    pos = track_fiducial(FrameStack(moving, np.ones(4)), (0, N, 0, N))
    np.testing.assert_allclose(np.diff(pos[:, 0]), 1 / N)

    blob = rng.random((2, N, N))
    pos = track_fiducial(FrameStack(blob, np.ones(2)), (2, 9, 4, 12))
    sub = blob[0, 2:9, 4:12]
    r = (np.arange(2, 9) + 0.5) / N
    assert pos[0, 0] == pytest.approx((sub.sum(axis=1) * r).sum() / sub.sum())

    empty = np.zeros((2, N, N))
    empty[1, 4, 4] = 1
    pos = track_fiducial(FrameStack(empty, np.ones(2)), (0, 8, 0, 8))
    assert np.all(np.isnan(pos[0])) and np.all(np.isfinite(pos[1]))
