"""Rotation utilities: skew matrices, Euler/DCM conversion, orthonormalization.

Euler angles follow the aerospace 3-2-1 (yaw-pitch-roll) sequence and the
direction cosine matrix T maps body axes to NED axes.
"""
import math
import warnings

import numpy as np

from .errors import FilterDivergenceError, GimbalLockWarning

#: Pitch distance from +/-90 deg below which yaw/roll become degenerate [rad].
GIMBAL_LOCK_TOL = 1e-6


def skew(v):
    """Skew-symmetric cross-product matrix of a 3-vector."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def dcm_from_euler(roll, pitch, yaw):
    """Body-to-NED direction cosine matrix from 3-2-1 Euler angles [rad]."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cp * cy, -cr * sy + sr * sp * cy, sr * sy + cr * sp * cy],
        [cp * sy, cr * cy + sr * sp * sy, -sr * cy + cr * sp * sy],
        [-sp, sr * cp, cr * cp],
    ])


def euler_from_dcm(t):
    """Extract 3-2-1 Euler angles (roll, pitch, yaw) from a body-to-NED DCM.

    Within ``GIMBAL_LOCK_TOL`` of pitch = +/-90 deg only the sum/difference of
    roll and yaw is defined; yaw is set to 0 by convention and a
    ``GimbalLockWarning`` is issued.

    Returns
    -------
    ndarray, shape (3,)
        [roll, pitch, yaw] in radians.
    """
    s = -float(t[2, 0])
    s = min(1.0, max(-1.0, s))
    pitch = math.asin(s)
    if 0.5 * math.pi - abs(pitch) < GIMBAL_LOCK_TOL:
        warnings.warn("pitch at +/-90 deg, yaw set to 0", GimbalLockWarning)
        yaw = 0.0
        # With cos(pitch) ~ 0 the DCM fixes only roll -/+ yaw; fold it into roll.
        roll = math.atan2(-float(t[0, 1]), float(t[1, 1]))
        if pitch > 0:
            roll = -roll
        return np.array([roll, pitch, yaw])
    roll = math.atan2(float(t[2, 1]), float(t[2, 2]))
    yaw = math.atan2(float(t[1, 0]), float(t[0, 0]))
    return np.array([roll, pitch, yaw])


def orthonormalize(t):
    """Symmetric orthogonalization T (T^T T)^(-1/2).

    Uses the Newton iteration T <- T (3 I - T^T T) / 2, which converges
    quadratically to the same orthogonal factor for the nearly orthonormal
    matrices produced by one integration step, with an SVD fallback for
    badly conditioned input.
    """
    out = np.asarray(t, dtype=float)
    err = np.empty((3, 3))
    mag = np.empty((3, 3))
    for _ in range(8):
        np.matmul(out.T, out, out=err)
        err.flat[::4] -= 1.0
        np.abs(err, out=mag)
        worst = mag.max()
        if worst < 1e-14:
            return out
        if not worst < 0.5:
            # Too far from orthonormal for the iteration to contract (or
            # non-finite); take the polar factor directly.
            break
        # out @ (I - err/2), reusing err as the correction factor.
        np.multiply(err, -0.5, out=err)
        err.flat[::4] += 1.0
        out = out @ err
    src = np.asarray(t, dtype=float)
    if not np.isfinite(src).all():
        raise FilterDivergenceError("attitude matrix has non-finite entries")
    u, _, vt = np.linalg.svd(src)
    return u @ vt
