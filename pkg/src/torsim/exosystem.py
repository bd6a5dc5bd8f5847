"""Recursive least squares wind-deviation fitting and the companion-form exosystem.

The deviation of the previewed wind from its running mean is fitted with a
low-order autoregressive model. The fitted coefficients populate the first
row of a companion matrix S; together with output rows picking the current
deviation (disturbance) and a region-dependent reference scaling, this is
the autonomous signal generator the feedforward design consumes.
"""

from dataclasses import dataclass

import numpy as np

from .params import NREL5MW
from .turbine import REGION2, REGION3, find_equilibrium

DEFAULT_ORDER = 2
DEFAULT_FORGETTING = 0.90
DEFAULT_P0 = 1e6


class RlsEstimator:
    """Exponentially weighted RLS for the AR coefficients of a scalar signal.

    The regressor is the vector of the last `order` samples. Updates are
    skipped until the history buffer holds enough samples. P is
    re-symmetrized every step and reset if an update goes non-finite.
    """

    def __init__(self, order=DEFAULT_ORDER, forgetting=DEFAULT_FORGETTING, p0=DEFAULT_P0):
        if not 0.0 < forgetting <= 1.0:
            raise ValueError("forgetting factor must lie in (0, 1]")
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.mu = forgetting
        self.p0 = p0
        self.coeffs = np.zeros(order)
        self.p = p0 * np.eye(order)
        self._hist = []          # most recent first
        self.updates = 0
        self.resets = 0

    @property
    def ready(self):
        return len(self._hist) >= self.order

    def update(self, sample):
        """Push one sample; perform an RLS step once the regressor is full."""
        if not self.ready:
            self._hist.insert(0, float(sample))
            return self
        phi = np.array(self._hist[:self.order])
        denom = self.mu + phi @ self.p @ phi
        k = (self.p @ phi) / denom
        innov = float(sample) - phi @ self.coeffs
        new_coeffs = self.coeffs + k * innov
        new_p = (self.p - np.outer(k, phi @ self.p)) / self.mu
        new_p = 0.5 * (new_p + new_p.T)
        # covariance windup guard: with mu < 1 and no excitation P grows as
        # P/mu each step without bound
        trace = np.trace(new_p)
        cap = self.p0 * 1e8
        if trace > cap:
            new_p *= cap / trace
        if not (np.all(np.isfinite(new_coeffs)) and np.all(np.isfinite(new_p))):
            # divergence guard: keep coefficients, restart adaptation
            self.p = self.p0 * np.eye(self.order)
            self.resets += 1
        else:
            min_eig = np.linalg.eigvalsh(new_p)[0]
            if min_eig <= 0.0:
                new_p += (1e-12 - min_eig) * np.eye(self.order)
            self.coeffs = new_coeffs
            self.p = new_p
        self._hist.insert(0, float(sample))
        del self._hist[self.order + 1:]
        self.updates += 1
        return self

    def regressor_state(self):
        """Most recent samples, newest first (length <= order + 1)."""
        return list(self._hist)


@dataclass
class ExoModel:
    """Companion-form signal generator w[n+1] = S w[n]."""

    s: np.ndarray    # (order+1) x (order+1)
    l_d: np.ndarray  # 1 x (order+1), disturbance output
    l_r: np.ndarray  # 1 x (order+1), reference output
    ts: float
    region: str

    @property
    def dim(self):
        return self.s.shape[0]

    def char_poly(self):
        """Coefficients of z^q - a1 z^(q-1) - ... - aq (leading 1 included)."""
        first = self.s[0]
        return np.concatenate([[1.0], -first])


def companion(coeffs, dim=None):
    """Companion matrix with `coeffs` (padded with zeros) as its first row."""
    coeffs = np.asarray(coeffs, dtype=float)
    q = dim if dim is not None else coeffs.size + 1
    if coeffs.size > q:
        raise ValueError("more coefficients than companion dimension")
    s = np.zeros((q, q))
    s[0, :coeffs.size] = coeffs
    s[1:, :-1] += np.eye(q - 1)
    return s


def reference_slope(region, v0, params=NREL5MW, dv=0.1):
    """Scaling from wind deviation to the controlled-output reference.

    Region 2: optimal rotor speed per unit wind. Region 3: local slope of
    the rated-pitch locus, by central difference (one-sided at the ends of
    the admissible range).
    """
    if region == REGION2:
        return params.lambda_star / params.rotor_radius
    lo = max(v0 - dv, params.rated_wind)
    hi = min(v0 + dv, params.cut_out)
    th_lo = find_equilibrium(lo, params).theta_star
    th_hi = find_equilibrium(hi, params).theta_star
    return (th_hi - th_lo) / (hi - lo)


def turbulence_pitch_trim(v0, sigma, params=NREL5MW, nodes=7):
    """Turbulence-averaged rated-pitch trim correction, radians.

    The rated-pitch locus is concave in wind speed, so a pitch trim anchored
    at the mean wind over-pitches for symmetric wind excursions and the
    rotor runs a rectified torque deficit. Averaging the locus over a
    Gaussian wind distribution (Gauss-Hermite quadrature; lulls below rated
    wind contribute zero pitch) gives the trim that balances the schedule in
    the mean. sigma is the standard deviation of the wind component the
    pitch trim is mismatched against. Returns E[theta*(v)] - theta*(v0), <= 0.
    """
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    theta0 = find_equilibrium(v0, params).theta_star
    acc = 0.0
    for xi, wi in zip(x, w):
        v = min(max(v0 + sigma * xi, params.cut_in), params.cut_out)
        acc += wi * find_equilibrium(v, params).theta_star
    return min(acc - theta0, 0.0)


def build_exosystem(coeffs, region, params=NREL5MW, v0=None, ts=0.1):
    """Assemble (S, L_d, L_r) from fitted AR coefficients."""
    if region == REGION3 and v0 is None:
        raise ValueError("Region 3 exosystem needs the anchor wind speed v0")
    coeffs = np.asarray(coeffs, dtype=float)
    q = coeffs.size + 1
    l_d = np.zeros((1, q))
    l_d[0, 0] = 1.0
    l_r = np.zeros((1, q))
    l_r[0, 0] = reference_slope(region, v0, params)
    return ExoModel(s=companion(coeffs, q), l_d=l_d, l_r=l_r, ts=ts, region=region)


def augment_constant_mode(exo, ref_offset):
    """Append a z = 1 mode carrying a constant reference offset.

    The extended state is [w, 1]; the constant mode feeds the reference
    only, so the feedforward solved from the regulator equations tracks
    slope * w_x + ref_offset exactly instead of fighting the offset through
    the feedback loop.
    """
    q = exo.dim
    s = np.zeros((q + 1, q + 1))
    s[:q, :q] = exo.s
    s[q, q] = 1.0
    l_d = np.hstack([exo.l_d, [[0.0]]])
    l_r = np.hstack([exo.l_r, [[ref_offset]]])
    return ExoModel(s=s, l_d=l_d, l_r=l_r, ts=exo.ts, region=exo.region)
