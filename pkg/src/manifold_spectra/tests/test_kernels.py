import numpy as np
import pytest
from scipy import integrate

from manifold_spectra.kernels import PROFILES, make_kernel, unit_ball_volume


@pytest.mark.parametrize("m", [2, 3, 5])
def test_indicator_constants(m):
    kernel = make_kernel("indicator", m)
    assert kernel.sigma == pytest.approx(1 / (m + 2))
    assert kernel.eta0 == pytest.approx(1 / unit_ball_volume(m))
    assert kernel.lipschitz == 0


def test_indicator_surface():
    kernel = make_kernel("indicator", 2)
    assert kernel.eta0 == pytest.approx(1 / np.pi)
    assert kernel.omega == pytest.approx(np.pi)


def test_bump_constants():
    kernel = make_kernel("bump", 2)
    # eta = c (1 - t) with 2 pi c / 6 = 1, sigma = pi c (1/4 - 1/5)
    assert kernel.scale == pytest.approx(3 / np.pi, rel=1e-10)
    assert kernel.sigma == pytest.approx(3 / 20, rel=1e-8)
    assert kernel.lipschitz == pytest.approx(3 / np.pi, rel=1e-10)


@pytest.mark.parametrize("profile", PROFILES)
@pytest.mark.parametrize("m", [2, 3])
def test_normalizations(profile, m):
    kernel = make_kernel(profile, m)
    assert kernel.normalization() == pytest.approx(1, rel=1e-8)
    assert kernel.psi_normalization() == pytest.approx(1, rel=1e-8)
    assert kernel.is_nonincreasing()


@pytest.mark.parametrize("profile", PROFILES)
def test_psi_closed_forms(profile):
    kernel = make_kernel(profile, 2)
    for t in (0.0, 0.25, 0.5, 0.9):
        tail, _ = integrate.quad(
            lambda s: float(kernel.eta(s)) * s,
            t,
            1.0,
            epsabs=0.0,
            epsrel=1e-10,
        )
        assert float(kernel.psi(t)) == pytest.approx(
            tail / kernel.sigma, rel=1e-8
        )


@pytest.mark.parametrize("profile", PROFILES)
def test_compact_support(profile):
    kernel = make_kernel(profile, 2)
    np.testing.assert_array_equal(kernel.eta([1.5, 2.0, 10.0]), 0)
    np.testing.assert_array_equal(kernel.psi([1.0, 1.5]), 0)
    assert kernel.eta(0.3).shape == ()


def test_bad_profile():
    with pytest.raises(ValueError, match="unknown kernel profile 'cosine'"):
        make_kernel("cosine", 2)
    with pytest.raises(ValueError, match="must be at least 2"):
        make_kernel("bump", 1)
