"""Analytic rotor aerodynamics: power/thrust coefficient surfaces, torque, thrust.

The power coefficient uses the widely used exponential surface

    C_p(lam, th) = c1*(c2/lam_i - c3*th_deg - c4)*exp(-c5/lam_i) + c6*lam
    1/lam_i      = 1/(lam + 0.08*th_deg) - 0.035/(1 + th_deg^3)

with the pitch angle in degrees inside the formula. c1 and c2 are
calibrated in closed form so that, at zero pitch, the surface peaks at the
turbine's optimal tip speed ratio with the turbine's maximum power
coefficient. The remaining coefficients keep their customary values.
"""

import math

from .exceptions import AeroDomainError
from .params import BETZ_LIMIT, NREL5MW

_C1 = 0.5176
_C3 = 0.4
_C6 = 0.0068
# Dimensional curvature of C_p(lambda) at the zero-pitch peak, matching the
# flat plateau of the reference rotor's published performance curve. The
# customary coefficient set is four times more curved there, which
# overprices any controller that lets the tip speed ratio wander.
PEAK_CURVATURE = -0.015

# Thrust surface constants (feeds the tower proxy load channel only).
CT_PEAK = 0.75
CT_PITCH_DECAY = 6.0  # 1/rad
CT_MAX = 1.2


def calibrate_cp(lambda_star, cp_star, curvature=PEAK_CURVATURE):
    """Solve (c2, c4, c5) so the zero-pitch surface peaks at
    (lambda_star, cp_star) with the prescribed peak curvature.

    At zero pitch 1/lam_i reduces to x = 1/lam - 0.035 and, writing
    g(x) = c1 (c2 x - c4) exp(-c5 x), the three anchor conditions on
    (g, g', g'') reduce to one quadratic in c5 and explicit expressions for
    the rest.
    """
    x = 1.0 / lambda_star - 0.035
    s = 1.0 / lambda_star**2
    v0 = cp_star - _C6 * lambda_star           # g(x*)
    g1 = _C6 / s                               # g'(x*), zero-slope condition
    g2 = (curvature - 2.0 * g1 / lambda_star**3) / s**2
    r1 = g1 / v0
    disc = r1 * r1 - g2 / v0
    if v0 <= 0.0 or disc <= 0.0:
        raise AeroDomainError("cp surface calibration failed for "
                              f"lambda*={lambda_star}, cp*={cp_star}")
    c5 = -r1 + math.sqrt(disc)
    b = v0 / (_C1 * math.exp(-c5 * x))
    c2 = b * (c5 + r1)
    c4 = c2 * x - b
    if min(c2, c4, c5) <= 0.0:
        raise AeroDomainError("cp surface calibration failed for "
                              f"lambda*={lambda_star}, cp*={cp_star}")
    return c2, c4, c5


_CAL_CACHE = {}


def _coeffs(lambda_star, cp_star):
    key = (lambda_star, cp_star)
    try:
        return _CAL_CACHE[key]
    except KeyError:
        _CAL_CACHE[key] = calibrate_cp(lambda_star, cp_star)
        return _CAL_CACHE[key]


def cp_surface(lam, theta, params=NREL5MW):
    """Power coefficient at tip speed ratio lam and pitch theta (rad).

    Clamped below at zero; bounded above by the Betz limit by calibration.
    Slightly negative theta is tolerated (finite-difference probes around a
    zero-pitch equilibrium).
    """
    if lam <= 0.0:
        raise AeroDomainError(f"tip speed ratio must be > 0, got {lam}")
    c2, c4, c5 = _coeffs(params.lambda_star, params.cp_star)
    th = math.degrees(theta)
    inv_li = 1.0 / (lam + 0.08 * th) - 0.035 / (1.0 + th**3)
    val = _C1 * (c2 * inv_li - _C3 * th - c4) * math.exp(-c5 * inv_li) + _C6 * lam
    return val if val > 0.0 else 0.0


def ct_surface(lam, theta, params=NREL5MW):
    """Thrust coefficient: linear in lam, feathering exponentially with pitch."""
    if lam <= 0.0:
        raise AeroDomainError(f"tip speed ratio must be > 0, got {lam}")
    val = CT_PEAK * (lam / params.lambda_star) * math.exp(-CT_PITCH_DECAY * theta)
    return val if val < CT_MAX else CT_MAX


def tip_speed_ratio(omega_r, v_x, params=NREL5MW):
    if v_x <= 0.0:
        raise AeroDomainError(f"wind speed must be > 0, got {v_x}")
    if omega_r <= 0.0:
        raise AeroDomainError(f"rotor speed must be > 0, got {omega_r}")
    return omega_r * params.rotor_radius / v_x


def aero_torque(omega_r, v_x, theta, params=NREL5MW):
    """Aerodynamic rotor torque, N*m.

    Defined so that torque times rotor speed equals C_p times the available
    wind power through the rotor disc.
    """
    lam = tip_speed_ratio(omega_r, v_x, params)
    cp = cp_surface(lam, theta, params)
    r = params.rotor_radius
    return 0.5 * params.air_density * math.pi * r**3 * (cp / lam) * v_x**2


def aero_thrust(omega_r, v_x, theta, params=NREL5MW):
    """Aerodynamic thrust on the rotor disc, N (tower fore-aft forcing)."""
    lam = tip_speed_ratio(omega_r, v_x, params)
    ct = ct_surface(lam, theta, params)
    r = params.rotor_radius
    return 0.5 * params.air_density * math.pi * r**2 * ct * v_x**2


def available_power(v_x, params=NREL5MW):
    """Kinetic power of the air column through the rotor disc, W."""
    r = params.rotor_radius
    return 0.5 * params.air_density * math.pi * r**2 * v_x**3


def betz_power(v_x, params=NREL5MW):
    return BETZ_LIMIT * available_power(v_x, params)
