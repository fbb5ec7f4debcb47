"""WGS-84 Earth model: radii of curvature, gravity and rate vectors.

All angles are in radians, distances in meters and velocities in m/s.
Navigation vectors are expressed in the local NED (north, east, down)
frame; the down gravity component is positive.
"""
import math

import numpy as np

from .errors import SingularLatitudeError

#: Semi-major axis of the WGS-84 ellipsoid [m].
A = 6378137.0
#: Squared first eccentricity of the WGS-84 ellipsoid.
E2 = 6.69437999014e-3
#: Earth rotation rate [rad/s].
RATE = 7.292115e-5
#: Normal gravity at the equator [m/s^2].
GE = 9.7803253359
#: Normal gravity at the poles [m/s^2].
GP = 9.8321849378
#: Somigliana constant k = (1 - e^2)^0.5 * GP / GE - 1.
SOMIGLIANA_K = math.sqrt(1 - E2) * GP / GE - 1

#: Latitude magnitude above which east-channel terms are treated as singular.
POLE_LIMIT = 0.5 * math.pi - 1e-12


def _check_lat(lat):
    if not -0.5 * math.pi <= lat <= 0.5 * math.pi:
        raise ValueError(f"latitude {lat} rad outside [-pi/2, pi/2]")


def principal_radii(lat):
    """Radii of curvature in the meridian (R_M) and prime vertical (R_N).

    Parameters
    ----------
    lat : float
        Geodetic latitude [rad], must lie in [-pi/2, pi/2].

    Returns
    -------
    rm, rn : float
        Meridian and prime-vertical radii of curvature [m].
    """
    _check_lat(lat)
    s2 = math.sin(lat) ** 2
    x = 1 - E2 * s2
    rn = A / math.sqrt(x)
    rm = rn * (1 - E2) / x
    return rm, rn


def gravity(lat, alt):
    """Somigliana normal gravity magnitude with a free-air altitude correction.

    Parameters
    ----------
    lat : float
        Geodetic latitude [rad].
    alt : float
        Altitude above the ellipsoid [m].

    Returns
    -------
    float
        Gravity magnitude [m/s^2], decreasing with altitude.
    """
    _check_lat(lat)
    s2 = math.sin(lat) ** 2
    g0 = GE * (1 + SOMIGLIANA_K * s2) / math.sqrt(1 - E2 * s2)
    return g0 * (1 - 2 * alt / A)


def gravity_ned(lat, alt):
    """Gravity vector in NED axes, down component positive."""
    return np.array([0.0, 0.0, gravity(lat, alt)])


def earth_rate_ned(lat):
    """Earth rotation rate resolved in NED axes [rad/s]."""
    _check_lat(lat)
    return np.array([RATE * math.cos(lat), 0.0, -RATE * math.sin(lat)])


def transport_rate_ned(lat, alt, vel_ned):
    """Transport rate of the NED frame over the ellipsoid [rad/s].

    Parameters
    ----------
    lat, alt : float
        Geodetic latitude [rad] and altitude [m].
    vel_ned : array_like, shape (3,)
        NED velocity [m/s].

    Returns
    -------
    ndarray, shape (3,)
        [v_E / (R_N + h), -v_N / (R_M + h), -v_E tan(lat) / (R_N + h)].

    Raises
    ------
    SingularLatitudeError
        If the latitude is at a pole and the east velocity is nonzero.
    """
    _check_lat(lat)
    vn, ve = float(vel_ned[0]), float(vel_ned[1])
    if abs(lat) > POLE_LIMIT and ve != 0.0:
        raise SingularLatitudeError(f"transport rate undefined at lat {lat} with v_E {ve}")
    rm, rn = principal_radii(lat)
    return np.array([ve / (rn + alt), -vn / (rm + alt), -ve * math.tan(lat) / (rn + alt)])


def curvature_mean_radius(lat):
    """Gaussian mean radius sqrt(R_M * R_N) used by the velocity-error model."""
    rm, rn = principal_radii(lat)
    return math.sqrt(rm * rn)
