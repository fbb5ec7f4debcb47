"""Earth model: curvature radii, gravity, earth rate, transport rate."""
import math

import numpy as np
import pytest

from stepnav import earth


def test_radii_at_equator():
    """Equator: R_N equals the semi-major axis, R_M its (1 - e^2) multiple."""
    rm, rn = earth.principal_radii(0.0)
    assert rn == pytest.approx(6378137.0, abs=1e-6)
    assert rm == pytest.approx(6335439.33, abs=0.01)


def test_radius_normal_at_pole():
    rm, rn = earth.principal_radii(0.5 * math.pi)
    assert rn == pytest.approx(6399593.63, abs=0.01)


def test_radii_bounds_and_monotonicity():
    """Both radii stay inside [6.3e6, 6.4e6] m and grow with |latitude|."""
    lats = np.linspace(0.0, 0.5 * math.pi, 200)
    rms, rns = zip(*(earth.principal_radii(float(l)) for l in lats))
    for r in rms + rns:
        assert 6.3e6 <= r <= 6.4e6
    assert all(b > a for a, b in zip(rms, rms[1:]))
    assert all(b > a for a, b in zip(rns, rns[1:]))


def test_radii_rejects_out_of_range_latitude():
    with pytest.raises(ValueError):
        earth.principal_radii(1.6)


def test_gravity_reference_values():
    """Somigliana model: published equatorial and polar normal gravity."""
    assert earth.gravity(0.0, 0.0) == pytest.approx(9.7803253359, rel=1e-12)
    assert earth.gravity(0.5 * math.pi, 0.0) == pytest.approx(9.8321849378, rel=1e-12)


def test_gravity_decreases_with_altitude():
    g0 = earth.gravity(0.7, 0.0)
    g1 = earth.gravity(0.7, 1000.0)
    assert g1 < g0
    # Free-air factor is 2h/a to first order.
    assert g1 == pytest.approx(g0 * (1.0 - 2.0 * 1000.0 / 6378137.0), rel=1e-12)


def test_gravity_ned_is_vertical():
    rng = np.random.default_rng(7)
    for _ in range(20):
        lat = float(rng.uniform(-0.5 * math.pi, 0.5 * math.pi))
        alt = float(rng.uniform(-100.0, 5000.0))
        g = earth.gravity_ned(lat, alt)
        assert g[0] == 0.0 and g[1] == 0.0
        assert g[2] > 0.0


def test_earth_rate_components():
    np.testing.assert_allclose(earth.earth_rate_ned(0.0), [7.292115e-5, 0.0, 0.0])
    np.testing.assert_allclose(earth.earth_rate_ned(0.5 * math.pi),
                               [0.0, 0.0, -7.292115e-5], atol=1e-20)


def test_earth_rate_norm_constant():
    """The rate vector is a rotation of a fixed vector; its norm never moves."""
    rng = np.random.default_rng(3)
    for _ in range(50):
        lat = float(rng.uniform(-0.5 * math.pi, 0.5 * math.pi))
        n = np.linalg.norm(earth.earth_rate_ned(lat))
        assert n == pytest.approx(7.292115e-5, rel=1e-15)


def test_transport_rate_zero_velocity():
    np.testing.assert_array_equal(earth.transport_rate_ned(0.3, 10.0, np.zeros(3)),
                                  np.zeros(3))


def test_transport_rate_east_velocity():
    """Pure east velocity at the equator turns only about north."""
    w = earth.transport_rate_ned(0.0, 0.0, np.array([0.0, 10.0, 0.0]))
    np.testing.assert_allclose(w, [10.0 / 6378137.0, 0.0, 0.0], rtol=1e-12)


def test_transport_rate_north_velocity():
    w = earth.transport_rate_ned(0.0, 0.0, np.array([10.0, 0.0, 0.0]))
    rm, _ = earth.principal_radii(0.0)
    np.testing.assert_allclose(w, [0.0, -10.0 / rm, 0.0], rtol=1e-12)


def test_transport_rate_singular_at_pole():
    from stepnav.errors import SingularLatitudeError

    with pytest.raises(SingularLatitudeError):
        earth.transport_rate_ned(0.5 * math.pi, 0.0, np.array([0.0, 1.0, 0.0]))


def test_curvature_mean_radius():
    rm, rn = earth.principal_radii(0.6)
    assert earth.curvature_mean_radius(0.6) == pytest.approx(math.sqrt(rm * rn))
