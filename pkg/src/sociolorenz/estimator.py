"""scikit-learn style wrappers around the model.

``SocioLorenzModel`` treats rows of ``X`` as initial conditions: ``transform``
returns the state reached after ``t_end`` and ``predict`` names the
equilibrium each row settles on. ``LyapunovSpectrumEstimator`` estimates the
spectrum from a single initial condition.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analysis
from .integrate import integrate_ensemble
from .model_core import (
    ParamSet,
    absorbing_ball,
    equilibria,
    hopf_threshold,
)
from .stability import classify_equilibrium

__all__ = ["check_states", "SocioLorenzModel", "LyapunovSpectrumEstimator"]


def check_states(X) -> np.ndarray:
    """Validate ``X`` as finite states; a single state may be given as shape (3,)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    arr = check_array(arr, dtype=np.float64, ensure_all_finite=True)
    if arr.shape[1] != 3:
        raise ValueError(f"states have 3 columns (T, I, M), got {arr.shape[1]}")
    return arr


class SocioLorenzModel(TransformerMixin, BaseEstimator):
    """Flow map and equilibrium attribution for a fixed parameter triple.

    Parameters
    ----------
    sigma, r0, beta : float
        Behavioural adjustment rate, infection potential, memory decay rate.
    t_end : float
        Integration horizon used by ``transform`` and ``predict``.
    h : float
        Fixed RK4 step.
    tol : float
        Max-norm distance below which a final state is attributed to an
        equilibrium in ``predict``.
    """

    def __init__(self, sigma=10.0, r0=28.0, beta=8.0 / 3.0, t_end=50.0, h=0.01, tol=1e-3):
        self.sigma = sigma
        self.r0 = r0
        self.beta = beta
        self.t_end = t_end
        self.h = h
        self.tol = tol

    def fit(self, X=None, y=None):
        self.params_ = ParamSet(self.sigma, self.r0, self.beta)
        self.equilibria_ = equilibria(self.params_)
        self.stability_ = [classify_equilibrium(self.params_, e) for e in self.equilibria_]
        self.hopf_threshold_ = hopf_threshold(self.params_)
        self.absorbing_ball_ = absorbing_ball(self.params_)
        if X is not None:
            check_states(X)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_states(X)
        _, states = integrate_ensemble(self.params_, X, self.t_end, h=self.h)
        return states[-1]

    def predict(self, X):
        """Branch name (``P0``, ``PePlus``, ``PeMinus``) or ``Unresolved`` per row."""
        final = self.transform(X)
        labels = np.full(len(final), analysis.UNRESOLVED, dtype=object)
        for e in self.equilibria_:
            close = np.max(np.abs(final - e.point.as_array()), axis=1) <= self.tol
            labels[close & (labels == analysis.UNRESOLVED)] = e.branch.value
        return labels


class LyapunovSpectrumEstimator(BaseEstimator):
    """Tangent-space Lyapunov spectrum started from the first row of ``X``."""

    def __init__(self, sigma=10.0, r0=28.0, beta=8.0 / 3.0, horizon=2000.0,
                 renorm_dt=0.5, transient=50.0, h=0.01):
        self.sigma = sigma
        self.r0 = r0
        self.beta = beta
        self.horizon = horizon
        self.renorm_dt = renorm_dt
        self.transient = transient
        self.h = h

    def fit(self, X, y=None):
        X = check_states(X)
        p = ParamSet(self.sigma, self.r0, self.beta)
        result = analysis.lyapunov_spectrum(
            p, X[0], self.horizon, self.renorm_dt, self.transient, self.h
        )
        self.params_ = p
        self.result_ = result
        self.exponents_ = np.array(result.exponents)
        self.regime_ = analysis.chaos_label(result.exponents[0])
        self.n_features_in_ = 3
        return self
