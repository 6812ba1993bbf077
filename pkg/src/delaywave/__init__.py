"""Numerical laboratory for a semilinear wave equation with frictional
damping and a time-varying delayed velocity feedback on subdomains.

The package simulates trajectories spectrally, evaluates the energy
functionals that drive the stability analysis, checks the certified
inequalities along computed runs, and assembles an explicit constants
chain (observation time, smallness radius, decay rate) for small data.
"""

from .spectral import SpectralModel, build_model, validate_region
from .delays import (ConfigurationError, HistoryError, DelayFunction,
                     ShiftedDelay, CoefficientFunction, VelocityHistorySeed,
                     HistoryBuffer)
from .stepping import (State, StepperConfig, TrajectoryRecord, Stepper,
                       Forcing, step, run, run_forced, default_dt,
                       DIVERGENCE_NORM)
from .functionals import (NonlinearityParams, psi_value, grad_psi, cbar,
                          fit_decay_rate, compute_diagnostics,
                          check_prop_bound, check_lower_bound, check_envelope)
from .certify import (SemigroupEstimate, estimate_semigroup, check_hypotheses,
                      compute_T_and_rho, certify_initial_data, Certificate,
                      CertificateError, HypothesesFailed, build_certificate)
from .scenario import Scenario, ScenarioError, load as load_scenario

__version__ = "0.1.0"

__all__ = [
    "SpectralModel", "build_model", "validate_region",
    "ConfigurationError", "HistoryError", "DelayFunction", "ShiftedDelay",
    "CoefficientFunction", "VelocityHistorySeed", "HistoryBuffer",
    "State", "StepperConfig", "TrajectoryRecord", "Stepper", "Forcing",
    "step", "run", "run_forced", "default_dt", "DIVERGENCE_NORM",
    "NonlinearityParams", "psi_value", "grad_psi", "cbar", "fit_decay_rate",
    "compute_diagnostics", "check_prop_bound", "check_lower_bound",
    "check_envelope",
    "SemigroupEstimate", "estimate_semigroup", "check_hypotheses",
    "compute_T_and_rho", "certify_initial_data", "Certificate",
    "CertificateError", "HypothesesFailed", "build_certificate",
    "Scenario", "ScenarioError", "load_scenario",
]
