import numpy as np
import pytest

from smsdrift.asymptotics import (CovariancePair, SingularCovarianceError, clt_covariance,
                                  general_covariances, is_directionally_constant,
                                  linear_drift_covariances, sigma_determinant)
from smsdrift.drift_models import DriftFamily, DriftParams
from smsdrift.simulate import random_spectrum


def cos_x1(K=5):
    f = np.zeros((K, K), complex)
    c = K // 2
    f[c + 1, c] = f[c - 1, c] = 0.5
    return f


def two_axis(K=5):
    f = cos_x1(K)
    c = K // 2
    f[c, c + 1] = f[c, c - 1] = 0.5
    return f


def test_cos_example():
    p = linear_drift_covariances(cos_x1(), 1.0)
    np.testing.assert_allclose(p.Sigma, np.diag([1, 0]) / 24, atol=1e-15)
    assert abs(p.determinant) < 1e-14


def test_isotropic_example():
    s = 0.3
    p = linear_drift_covariances(two_axis(), s)
    np.testing.assert_allclose(p.Sigma, np.eye(2) / 24, atol=1e-15)
    assert p.determinant > 0
    C = clt_covariance(p)
    # Σ~ = s Σ here, so the sandwich collapses to s Σ⁻¹ / 4π²
    np.testing.assert_allclose(C, s * np.linalg.inv(p.Sigma) / (4 * np.pi ** 2), rtol=1e-12)


def test_zero_image():
    p = linear_drift_covariances(np.zeros((5, 5)), 1.0)
    assert not np.any(p.Sigma) and not np.any(p.SigmaTilde)


def test_clt_identity_and_singular():
    C = clt_covariance(CovariancePair(np.eye(2), np.eye(2), 1.0))
    np.testing.assert_allclose(C, np.eye(2) / (4 * np.pi ** 2))
    with pytest.raises(SingularCovarianceError):
        clt_covariance(linear_drift_covariances(cos_x1(), 1.0))


def test_psd_and_determinant_formula(rng):
    for seed in range(5):
        f = random_spectrum(9, seed)
        p = linear_drift_covariances(f, 0.5)
        for x in rng.normal(size=(100, 2)):
            assert x @ p.Sigma @ x >= -1e-15
        assert sigma_determinant(f) == pytest.approx(np.linalg.det(p.Sigma), rel=1e-10)
        np.testing.assert_allclose(p.Sigma, p.Sigma.T)
        assert (np.linalg.det(p.SigmaTilde) > 0) == (p.determinant > 0)


def test_general_matches_linear():
    f = random_spectrum(7, 2)
    a = linear_drift_covariances(f, 0.2)
    b = general_covariances(f, DriftParams(DriftFamily.parse("linear"), (0, 0)), 0.2)
    np.testing.assert_allclose(b.Sigma, a.Sigma, rtol=1e-5, atol=1e-12)
    np.testing.assert_allclose(b.SigmaTilde, a.SigmaTilde, rtol=1e-5, atol=1e-12)


def test_directionally_constant():
    np.testing.assert_allclose(is_directionally_constant(cos_x1()), [0, 1], atol=1e-12)
    for seed in range(5):
        assert is_directionally_constant(random_spectrum(9, seed, n_modes=4)) is None
    np.testing.assert_array_equal(is_directionally_constant(np.zeros((3, 3))), [1, 0])


def test_diagonal_direction():
    # f(x) = cos(2π(x1 - x2)) is constant along (1, 1)/√2
    f = np.zeros((5, 5), complex)
    f[3, 1] = f[1, 3] = 0.5
    v = is_directionally_constant(f)
    np.testing.assert_allclose(v, np.array([1, 1]) / np.sqrt(2), atol=1e-12)
