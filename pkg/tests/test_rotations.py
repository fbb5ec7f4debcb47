"""Rotation utilities: Euler/DCM conversions and orthonormalization."""
import math

import numpy as np
import pytest
from scipy.linalg import polar
from scipy.spatial.transform import Rotation

from stepnav.errors import FilterDivergenceError, GimbalLockWarning
from stepnav.rotations import dcm_from_euler, euler_from_dcm, orthonormalize, skew


def test_skew_matches_cross_product():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-15)


def test_dcm_matches_scipy_zyx():
    """3-2-1 builder agrees with scipy's intrinsic ZYX convention."""
    rng = np.random.default_rng(1)
    for _ in range(50):
        roll, pitch, yaw = rng.uniform(-math.pi, math.pi, size=3)
        ours = dcm_from_euler(roll, pitch, yaw)
        ref = Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix()
        np.testing.assert_allclose(ours, ref, atol=1e-14)


def test_identity_extracts_to_zero():
    roll, pitch, yaw = euler_from_dcm(np.eye(3))
    assert (roll, pitch, yaw) == (0.0, 0.0, 0.0)


def test_z_rotation_extraction():
    t = dcm_from_euler(0.0, 0.0, 0.5 * math.pi)
    roll, pitch, yaw = euler_from_dcm(t)
    assert yaw == pytest.approx(0.5 * math.pi, abs=1e-12)
    assert roll == pytest.approx(0.0, abs=1e-12)
    assert pitch == pytest.approx(0.0, abs=1e-12)


def test_euler_round_trip():
    """Build-then-extract is the identity away from gimbal lock."""
    rng = np.random.default_rng(2)
    for _ in range(100):
        roll = float(rng.uniform(-math.pi, math.pi))
        pitch = float(rng.uniform(-1.4, 1.4))
        yaw = float(rng.uniform(-math.pi, math.pi))
        r2, p2, y2 = euler_from_dcm(dcm_from_euler(roll, pitch, yaw))
        assert r2 == pytest.approx(roll, abs=1e-10)
        assert p2 == pytest.approx(pitch, abs=1e-10)
        assert y2 == pytest.approx(yaw, abs=1e-10)


def test_gimbal_lock_flags_and_zeroes_yaw():
    t = dcm_from_euler(0.3, 0.5 * math.pi, 0.7)
    with pytest.warns(GimbalLockWarning):
        roll, pitch, yaw = euler_from_dcm(t)
    assert yaw == 0.0
    assert pitch == pytest.approx(0.5 * math.pi, abs=1e-9)


def test_orthonormalize_near_orthonormal():
    """Small perturbations are cleaned back to the polar factor."""
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = Rotation.random(random_state=np.random.RandomState(rng.integers(1 << 31))).as_matrix()
        t = q + rng.normal(scale=1e-6, size=(3, 3))
        out = orthonormalize(t)
        u, _ = polar(t)
        np.testing.assert_allclose(out, u, atol=1e-9)
        assert np.linalg.norm(out.T @ out - np.eye(3)) <= 1e-9
        assert np.linalg.det(out) == pytest.approx(1.0, abs=1e-9)


def test_orthonormalize_far_input_uses_polar_factor():
    """Inputs far from orthonormal still come back as the polar factor."""
    rng = np.random.default_rng(4)
    for _ in range(20):
        t = rng.normal(scale=3.0, size=(3, 3))
        if np.linalg.det(t) < 0.1:
            continue
        out = orthonormalize(t)
        u, _ = polar(t)
        np.testing.assert_allclose(out, u, atol=1e-8)
        assert np.linalg.norm(out.T @ out - np.eye(3)) <= 1e-9


def test_orthonormalize_identity_unchanged():
    np.testing.assert_array_equal(orthonormalize(np.eye(3)), np.eye(3))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_orthonormalize_rejects_non_finite():
    t = np.eye(3)
    t[1, 1] = math.nan
    with pytest.raises(FilterDivergenceError):
        orthonormalize(t)
    t2 = np.eye(3)
    t2[0, 2] = math.inf
    with pytest.raises(FilterDivergenceError):
        orthonormalize(t2)
