"""Closed-loop wind turbine control simulation toolkit.

A reduced-order nonlinear NREL 5-MW plant driven by synthesized turbulent
wind, with three controllers (LIDAR-assisted exact output regulation, a
LIDAR-assisted disturbance accommodation controller, and an industry-style
baseline), plus fatigue/performance post-processing for comparing them.
"""

from .params import NREL5MW, TurbineParams, load_turbine_config
from .exceptions import (AeroDomainError, ConfigError, EndOfDataError,
                         EquilibriumError, SynthesisError)
from .aero import aero_thrust, aero_torque, cp_surface, ct_surface
from .turbine import (REGION2, REGION3, ControlInput, Equilibrium, LinearModel,
                      PlantState, discretize, find_equilibrium, linearize,
                      plant_derivative)
from .wind import WeibullSpec, WindSeries, cumulative_mean, synthesize, weibull_weights
from .lidar import LidarConfig, PreviewTrack, measure, preview_window
from .exosystem import (ExoModel, RlsEstimator, build_exosystem,
                        reference_slope, turbulence_pitch_trim)
from .control import (ActuatorLimits, BaselineController, RegulatorSolution,
                      dac_gain, design_pitch_pi, kalman_gain, lqr, saturate,
                      solve_regulator, synthesize_feedback)
from .sim import ControlConfig, MetricsConfig, SimConfig, SimLog, run
from .metrics import (CycleSet, MetricsReport, compute_metrics, ctr,
                      damage_equivalent_load, lifetime_aggregate, pitch_travel,
                      psd_welch, rainflow)

__version__ = "0.1.0"
