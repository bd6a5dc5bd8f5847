"""Reduced-order nonlinear turbine plant, equilibria and linearized design models.

The simulation plant carries seven states (rotor speed, shaft torsion,
generator speed, pitch angle and rate, tower fore-aft displacement and
rate). The controller design models are smaller on purpose: a third-order
drive-train model below rated wind and a fifth-order model with the pitch
servo above rated. The tower mode never enters a design model, which
reproduces the usual mismatch between a detailed simulation plant and the
low-order model a controller is synthesized on.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from . import aero
from .exceptions import EquilibriumError, SynthesisError
from .params import NREL5MW

REGION2 = "Region2"
REGION3 = "Region3"


class PlantState(NamedTuple):
    omega_r: float    # rad/s
    phi: float        # rad, drive-train torsion
    omega_g: float    # rad/s, rotor-side normalized generator speed
    theta: float      # rad, blade pitch
    theta_dot: float  # rad/s
    x_t: float        # m, tower-top fore-aft displacement
    x_t_dot: float    # m/s


class ControlInput(NamedTuple):
    m_g: float      # N*m, rotor-side generator torque
    theta_c: float  # rad, pitch command


class Diagnostics:
    """Mutable counters shared by the integrator and the derivative."""

    def __init__(self):
        self.v_rel_clamps = 0

    def as_dict(self):
        return {"v_rel_clamps": self.v_rel_clamps}


V_REL_FLOOR = 0.5  # m/s, guards the tip-speed-ratio singularity


def plant_derivative(s, u, v_x, p=NREL5MW, diag=None):
    """Time derivative of the seven plant states.

    The rotor sees the apparent wind v_x - x_t_dot. Scalar math on tuples is
    deliberate: this is the hot path of the fixed-step integrator.
    """
    omega_r, phi, omega_g, theta, theta_dot, x_t, x_t_dot = s
    v_rel = v_x - x_t_dot
    if v_rel < V_REL_FLOOR:
        v_rel = V_REL_FLOOR
        if diag is not None:
            diag.v_rel_clamps += 1
    m_a = aero.aero_torque(omega_r, v_rel, theta, p)
    f_a = aero.aero_thrust(omega_r, v_rel, theta, p)
    shaft = p.c_d * (omega_r - omega_g) + p.k_d * phi
    om = p.pitch_omega
    return (
        (m_a - shaft) / p.j_r,
        omega_r - omega_g,
        (shaft - u[0]) / p.j_g_eff,
        theta_dot,
        -2.0 * p.pitch_zeta * om * theta_dot + om * om * (u[1] - theta),
        x_t_dot,
        (f_a - p.c_te * x_t_dot - p.k_te * (x_t - p.x_t0)) / p.m_te,
    )


@dataclass
class Equilibrium:
    region: str
    v0: float                 # m/s, mean wind (d*)
    x_star: PlantState
    u_star: ControlInput
    params: object

    @property
    def theta_star(self):
        return self.x_star.theta


def find_equilibrium(v0, p=NREL5MW):
    """Steady operating point for mean wind v0.

    Below rated wind the rotor runs at the optimal tip speed ratio with zero
    pitch; above rated the generator torque is pinned at its rated value and
    the pitch angle solves the rated-torque balance by bracketed root
    finding.
    """
    if not (p.cut_in <= v0 <= p.cut_out):
        raise EquilibriumError(f"v0={v0} outside [{p.cut_in}, {p.cut_out}]")
    if v0 < p.rated_wind:
        region = REGION2
        omega = p.lambda_star * v0 / p.rotor_radius
        theta = 0.0
        m_g = aero.aero_torque(omega, v0, theta, p)
    else:
        region = REGION3
        omega = p.rated_rotor_speed
        m_g = p.rated_gen_torque

        def torque_excess(th):
            return aero.aero_torque(omega, v0, th, p) - p.rated_gen_torque

        lo, hi = 0.0, math.pi / 2
        if torque_excess(lo) < 0.0 or torque_excess(hi) > 0.0:
            raise EquilibriumError(
                f"rated-torque pitch root not bracketed at v0={v0}")
        theta = brentq(torque_excess, lo, hi, xtol=1e-14, rtol=8.9e-16)
    f_a = aero.aero_thrust(omega, v0, theta, p)
    x = PlantState(
        omega_r=omega,
        phi=m_g / p.k_d,
        omega_g=omega,
        theta=theta,
        theta_dot=0.0,
        x_t=p.x_t0 + f_a / p.k_te,
        x_t_dot=0.0,
    )
    return Equilibrium(region=region, v0=v0, x_star=x,
                       u_star=ControlInput(m_g=m_g, theta_c=theta), params=p)


def _central_richardson(f, x0, rel_step=1e-6, floor=1.0):
    """Central difference with one Richardson extrapolation step."""
    h = rel_step * max(abs(x0), floor)

    def d(hh):
        return (f(x0 + hh) - f(x0 - hh)) / (2.0 * hh)

    return (4.0 * d(h / 2.0) - d(h)) / 3.0


def torque_jacobians(omega, v, theta, p=NREL5MW, rel_step=1e-6):
    """(gamma, alpha, beta): aero-torque sensitivities to speed, wind, pitch."""
    gamma = _central_richardson(lambda x: aero.aero_torque(x, v, theta, p), omega, rel_step)
    alpha = _central_richardson(lambda x: aero.aero_torque(omega, x, theta, p), v, rel_step)
    beta = _central_richardson(lambda x: aero.aero_torque(omega, v, x, p), theta, rel_step, floor=0.05)
    return gamma, alpha, beta


@dataclass
class LinearModel:
    """LTI design model in coordinates homogenized to an equilibrium."""

    region: str
    a: np.ndarray
    b: np.ndarray       # n x 1
    h: np.ndarray       # n x 1, wind disturbance input
    c_y: np.ndarray
    c_z: np.ndarray     # 1 x n
    x_star: np.ndarray  # design-model state at the anchor
    u_star: float       # scalar design input at the anchor
    d_star: float       # anchor mean wind
    gamma: float
    alpha: float
    beta: float
    ts: float | None = None  # None: continuous; else sample time, s

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def is_discrete(self):
        return self.ts is not None


def _pbh_ok(a, mat_builder, eigvals, tol=1e-9):
    n = a.shape[0]
    for lam in eigvals:
        m = mat_builder(lam)
        s = np.linalg.svd(m, compute_uv=False)
        if s[n - 1] <= tol * max(s[0], 1.0):
            return False
    return True


def stabilizable(a, b, continuous=True):
    """PBH rank test over the closed-loop-relevant (non-stable) eigenvalues."""
    eig = np.linalg.eigvals(a)
    bad = eig[eig.real >= -1e-12] if continuous else eig[np.abs(eig) >= 1.0 - 1e-12]
    return _pbh_ok(a, lambda lam: np.hstack([a - lam * np.eye(a.shape[0]), b]), bad)


def detectable(a, c, continuous=True):
    return stabilizable(a.T, c.T, continuous)


def linearize(eq, p=None, rel_step=1e-6):
    """Jacobian design model at an equilibrium.

    Region 2 keeps the third-order drive train with generator torque as the
    input; Region 3 keeps five states with the pitch command as the input
    and the generator torque frozen at rated. Tower states are excluded by
    construction.
    """
    p = p or eq.params
    omega, theta, v0 = eq.x_star.omega_r, eq.theta_star, eq.v0
    gamma, alpha, beta = torque_jacobians(omega, v0, theta, p, rel_step)
    jr, jg = p.j_r, p.j_g_eff
    cd, kd = p.c_d, p.k_d
    if eq.region == REGION2:
        a = np.array([
            [(gamma - cd) / jr, -kd / jr, cd / jr],
            [1.0, 0.0, -1.0],
            [cd / jg, kd / jg, -cd / jg],
        ])
        b = np.array([[0.0], [0.0], [-1.0 / jg]])
        h = np.array([[alpha / jr], [0.0], [0.0]])
        c_y = np.array([[1.0, 0.0, 0.0],
                        [0.0, 0.0, 1.0]])
        c_z = np.array([[1.0, 0.0, 0.0]])
        x_star = np.array([omega, eq.x_star.phi, omega])
        u_star = eq.u_star.m_g
    else:
        om, ze = p.pitch_omega, p.pitch_zeta
        a = np.array([
            [(gamma - cd) / jr, -kd / jr, cd / jr, beta / jr, 0.0],
            [1.0, 0.0, -1.0, 0.0, 0.0],
            [cd / jg, kd / jg, -cd / jg, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, -om * om, -2.0 * ze * om],
        ])
        b = np.array([[0.0], [0.0], [0.0], [0.0], [om * om]])
        h = np.array([[alpha / jr], [0.0], [0.0], [0.0], [0.0]])
        c_y = np.array([[1.0, 0.0, 0.0, 0.0, 0.0],
                        [0.0, 0.0, 1.0, 0.0, 0.0],
                        [0.0, 0.0, 0.0, 1.0, 0.0]])
        c_z = np.array([[0.0, 0.0, 0.0, 1.0, 0.0]])
        x_star = np.array([omega, eq.x_star.phi, omega, theta, 0.0])
        u_star = theta
    if not stabilizable(a, b):
        raise SynthesisError(f"({eq.region}, v0={v0}): (A, B) not stabilizable")
    if not detectable(a, c_y):
        raise SynthesisError(f"({eq.region}, v0={v0}): (C_y, A) not detectable")
    return LinearModel(region=eq.region, a=a, b=b, h=h, c_y=c_y, c_z=c_z,
                       x_star=x_star, u_star=u_star, d_star=v0,
                       gamma=gamma, alpha=alpha, beta=beta, ts=None)


def discretize(m, ts):
    """Exact zero-order-hold discretization via the augmented matrix exponential.

    The control and disturbance columns are stacked and treated identically.
    """
    if m.is_discrete:
        raise ValueError("model is already discrete")
    if ts <= 0.0:
        raise ValueError("sample time must be > 0")
    n = m.n
    bh = np.hstack([m.b, m.h])
    aug = np.zeros((n + 2, n + 2))
    aug[:n, :n] = m.a
    aug[:n, n:] = bh
    phi = expm(aug * ts)
    a_d = phi[:n, :n]
    if not np.all(np.isfinite(a_d)):
        raise SynthesisError("matrix exponential overflow in discretization")
    return replace(m, a=a_d, b=phi[:n, n:n + 1], h=phi[:n, n + 1:n + 2], ts=ts)
