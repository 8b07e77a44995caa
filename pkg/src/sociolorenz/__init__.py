"""Lorenz-type socioepidemiological model: equilibria, stability, bifurcations, chaos."""

from .analysis import (
    bifurcation_scan,
    delta_rh,
    dissipativity_audit,
    hopf_report,
    lyapunov_spectrum,
    max_lyapunov_two_trajectory,
)
from .estimator import LyapunovSpectrumEstimator, SocioLorenzModel
from .integrate import IntegratorOptions, Method, integrate
from .model_core import (
    Branch,
    ParamSet,
    State,
    absorbing_ball,
    equilibria,
    hopf_threshold,
    jacobian,
    vector_field,
)
from .stability import Label, classify_equilibrium, cubic_roots

__version__ = "0.1.0"
