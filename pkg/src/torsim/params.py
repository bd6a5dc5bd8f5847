"""Turbine parameter set and flat key=value config I/O.

All quantities are SI and expressed on the rotor (low speed) side of the
gearbox: generator inertia and rated torque are reflected through the
gearbox ratio so the drive-train equations live in a single coordinate
frame.
"""

import math
from dataclasses import dataclass, fields
from importlib import resources

from .exceptions import ConfigError

BETZ_LIMIT = 0.593


@dataclass
class TurbineParams:
    rated_power: float        # W, mechanical, rotor side
    rated_rotor_speed: float  # rad/s
    rated_wind: float         # m/s
    rated_gen_torque: float   # N*m, rotor-side equivalent
    cut_in: float             # m/s
    cut_out: float            # m/s
    rotor_radius: float       # m
    hub_height: float         # m
    j_r: float                # kg*m^2, rotor inertia
    j_g_eff: float            # kg*m^2, generator inertia reflected to rotor side
    k_d: float                # N*m/rad, drive-train stiffness
    c_d: float                # N*m*s/rad, drive-train damping
    gearbox_ratio: float      # dimensionless
    m_te: float               # kg, tower equivalent modal mass
    c_te: float               # N*s/m, tower structural damping
    k_te: float               # N/m, tower bending stiffness
    x_t0: float               # m, static tower-top displacement without thrust
    pitch_omega: float        # rad/s, pitch actuator natural frequency
    pitch_zeta: float         # pitch actuator damping factor
    lambda_star: float        # optimal tip speed ratio
    cp_star: float            # maximum power coefficient
    air_density: float        # kg/m^3

    def __post_init__(self):
        positive = ("rated_power", "rated_rotor_speed", "rated_wind",
                    "rated_gen_torque", "cut_in", "cut_out", "rotor_radius",
                    "hub_height", "j_r", "j_g_eff", "k_d", "c_d",
                    "gearbox_ratio", "m_te", "c_te", "k_te", "pitch_omega",
                    "pitch_zeta", "lambda_star", "air_density")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"turbine parameter {name} must be > 0")
        if not (0.0 < self.rated_wind < self.cut_out):
            raise ConfigError("rated_wind must lie in (0, cut_out)")
        if not self.cut_in < self.rated_wind:
            raise ConfigError("cut_in must be below rated_wind")
        if not (0.0 < self.cp_star < BETZ_LIMIT):
            raise ConfigError(f"cp_star must lie in (0, {BETZ_LIMIT})")


# NREL 5-MW reference turbine. Generator-side quantities (J_g = 534 kg*m^2,
# M_rated = 43.1 kNm) are reflected to the rotor side with the gearbox ratio
# 97. Rated power is the rotor-side mechanical value M_rated * Omega_rated;
# the 5 MW nameplate is electrical and there is no generator loss model here.
NREL5MW = TurbineParams(
    rated_rotor_speed=12.1 * math.pi / 30.0,
    rated_wind=11.4,
    rated_gen_torque=43.1e3 * 97.0,
    rated_power=43.1e3 * 97.0 * (12.1 * math.pi / 30.0),
    cut_in=3.0,
    cut_out=25.0,
    rotor_radius=63.0,
    hub_height=90.0,
    j_r=1.18e7,
    j_g_eff=534.0 * 97.0**2,
    k_d=8.67e8,
    c_d=6.2e6,
    gearbox_ratio=97.0,
    m_te=4.36e3,
    c_te=17782.0,
    k_te=1.81e6,
    x_t0=-0.0140,
    pitch_omega=2.0 * math.pi,
    pitch_zeta=0.70,
    lambda_star=7.55,
    cp_star=0.482,
    air_density=1.225,
)


def parse_flat_config(text):
    """Parse 'key = value' lines into a dict; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def format_flat_config(mapping, header=None):
    lines = []
    if header:
        lines.extend("# " + h for h in header.splitlines())
    for key, value in mapping.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def turbine_from_mapping(mapping):
    """Build TurbineParams from a flat string mapping, rejecting unknown keys."""
    known = {f.name for f in fields(TurbineParams)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"unknown turbine parameter key: {sorted(unknown)[0]}")
    values = {}
    for f in fields(TurbineParams):
        if f.name not in mapping:
            raise ConfigError(f"missing turbine parameter key: {f.name}")
        try:
            values[f.name] = float(mapping[f.name])
        except ValueError:
            raise ConfigError(
                f"turbine parameter {f.name}: cannot parse {mapping[f.name]!r} as float"
            ) from None
    return TurbineParams(**values)


def load_turbine_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return turbine_from_mapping(parse_flat_config(fh.read()))


def save_turbine_config(params, path, header="NREL 5-MW turbine, SI units, rotor-side quantities"):
    mapping = {f.name: getattr(params, f.name) for f in fields(TurbineParams)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_flat_config(mapping, header=header))


def default_turbine_config_text():
    """Text of the packaged default turbine config."""
    return resources.files("torsim.data").joinpath("nrel5mw.cfg").read_text()


def load_default_turbine():
    return turbine_from_mapping(parse_flat_config(default_turbine_config_text()))
