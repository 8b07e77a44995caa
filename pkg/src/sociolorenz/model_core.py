"""Model equations, closed-form equilibria and the dissipativity certificate.

The system couples social transmission ``T``, perceived infection ``I`` and
social memory ``M``::

    dT/dt = sigma * (I - T)
    dI/dt = T * (r0 - M) - I
    dM/dt = T * I - beta * M

It is the Lorenz system with a socioepidemiological reading of its variables.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "InvalidParameterError",
    "BranchError",
    "ParamSet",
    "State",
    "Branch",
    "Equilibrium",
    "CubicCoeffs",
    "AbsorbingBall",
    "vector_field",
    "jacobian",
    "equilibria",
    "char_coeffs_nontrivial",
    "hopf_threshold",
    "pitchfork_amplitude",
    "lyapunov_v",
    "lyapunov_v_dot",
    "absorbing_ball",
    "symmetry_map",
    "divergence",
]


class InvalidParameterError(ValueError):
    """Raised when a parameter triple or a state violates its invariants."""


class BranchError(ValueError):
    """Raised when a quantity of the nontrivial branch is requested for r0 <= 1."""


def _check_positive(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class ParamSet:
    """Positive parameter triple ``(sigma, r0, beta)``.

    sigma is the behavioural adjustment rate, r0 the infection potential and
    beta the memory decay rate. Non-positive or non-finite values are rejected
    at construction so downstream functions never re-check them.
    """

    sigma: float
    r0: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("sigma", "r0", "beta"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))

    def with_r0(self, r0: float) -> "ParamSet":
        return ParamSet(self.sigma, r0, self.beta)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sigma, self.r0, self.beta)


@dataclass(frozen=True)
class State:
    """A point ``(T, I, M)`` of phase space."""

    t_transmission: float
    i_perception: float
    m_memory: float

    def __post_init__(self) -> None:
        for name in ("t_transmission", "i_perception", "m_memory"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"state component {name} is not finite: {value!r}")
            object.__setattr__(self, name, value)

    def __iter__(self):
        yield self.t_transmission
        yield self.i_perception
        yield self.m_memory

    def as_array(self) -> np.ndarray:
        return np.array(tuple(self), dtype=float)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "State":
        if len(values) != 3:
            raise InvalidParameterError(f"a state has 3 components, got {len(values)}")
        return cls(*(float(v) for v in values))


StateLike = Union[State, Sequence[float], np.ndarray]


def as_state_array(x: StateLike) -> np.ndarray:
    """Return ``x`` as a finite float array of shape (3,)."""
    if isinstance(x, State):
        return x.as_array()
    arr = np.asarray(x, dtype=float)
    if arr.shape != (3,):
        raise InvalidParameterError(f"a state has shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"state has non-finite components: {arr}")
    return arr


class Branch(str, enum.Enum):
    P0 = "P0"
    PePlus = "PePlus"
    PeMinus = "PeMinus"


@dataclass(frozen=True)
class Equilibrium:
    branch: Branch
    point: State


@dataclass(frozen=True)
class CubicCoeffs:
    """Monic cubic ``lambda**3 + a1*lambda**2 + a2*lambda + a3``."""

    a1: float
    a2: float
    a3: float

    def __iter__(self):
        yield self.a1
        yield self.a2
        yield self.a3

    def __call__(self, lam: complex) -> complex:
        return ((lam + self.a1) * lam + self.a2) * lam + self.a3

    def derivative(self, lam: complex) -> complex:
        return (3.0 * lam + 2.0 * self.a1) * lam + self.a2


@dataclass(frozen=True)
class AbsorbingBall:
    """Ball ``{V <= radius_sq}`` around ``(0, 0, center_m)``.

    ``V' <= -decay_m * V + offset_c`` holds everywhere, so the ball of radius
    squared ``offset_c / decay_m`` is positively invariant and absorbing.
    """

    center_m: float
    radius_sq: float
    decay_m: float
    offset_c: float

    @property
    def radius(self) -> float:
        return math.sqrt(self.radius_sq)


def vector_field(p: ParamSet, x: StateLike) -> np.ndarray:
    """Evaluate the right-hand side at ``x``; returns the derivative triple."""
    t, i, m = as_state_array(x)
    return np.array(
        [p.sigma * (i - t), t * (p.r0 - m) - i, t * i - p.beta * m],
        dtype=float,
    )


def jacobian(p: ParamSet, x: StateLike) -> np.ndarray:
    t, i, m = as_state_array(x)
    return np.array(
        [
            [-p.sigma, p.sigma, 0.0],
            [p.r0 - m, -1.0, -t],
            [i, t, -p.beta],
        ],
        dtype=float,
    )


def divergence(p: ParamSet) -> float:
    """Trace of the Jacobian; independent of the state."""
    return -(p.sigma + 1.0 + p.beta)


def pitchfork_amplitude(p: ParamSet) -> float:
    """``alpha = sqrt(beta * (r0 - 1))``, zero when the branch does not exist."""
    if p.r0 <= 1.0:
        return 0.0
    return math.sqrt(p.beta * (p.r0 - 1.0))


def equilibria(p: ParamSet) -> list[Equilibrium]:
    """Fixed points in the order ``[P0, PePlus, PeMinus]``.

    At ``r0 == 1`` the three branches coincide and only ``P0`` is returned.
    """
    out = [Equilibrium(Branch.P0, State(0.0, 0.0, 0.0))]
    if p.r0 > 1.0:
        alpha = pitchfork_amplitude(p)
        m = p.r0 - 1.0
        out.append(Equilibrium(Branch.PePlus, State(alpha, alpha, m)))
        out.append(Equilibrium(Branch.PeMinus, State(-alpha, -alpha, m)))
    return out


def char_coeffs_nontrivial(p: ParamSet) -> CubicCoeffs:
    """Characteristic polynomial of the Jacobian at either nontrivial equilibrium."""
    if p.r0 <= 1.0:
        raise BranchError(
            f"nontrivial branch does not exist for r0={p.r0} (requires r0 > 1)"
        )
    return CubicCoeffs(
        p.sigma + p.beta + 1.0,
        p.beta * (p.sigma + p.r0),
        2.0 * p.beta * p.sigma * (p.r0 - 1.0),
    )


def hopf_threshold(p: ParamSet) -> Optional[float]:
    """Hopf value ``r_H`` of r0, or None when ``sigma <= beta + 1``.

    Only sigma and beta enter; ``p.r0`` is ignored.
    """
    denom = p.sigma - p.beta - 1.0
    if denom <= 0.0:
        return None
    return p.sigma * (p.sigma + p.beta + 3.0) / denom


def lyapunov_v(p: ParamSet, x: StateLike) -> float:
    """``V = T**2 + I**2 + (M - a)**2`` with ``a = sigma + r0``."""
    t, i, m = as_state_array(x)
    a = p.sigma + p.r0
    return float(t * t + i * i + (m - a) ** 2)


def lyapunov_v_dot(p: ParamSet, x) -> np.ndarray | float:
    """Time derivative of V along the flow: ``-2 sigma T^2 - 2 I^2 - 2 beta M (M - a)``.

    Accepts a single state or an ``(n, 3)`` array of states.
    """
    arr = np.asarray(x, dtype=float)
    t, i, m = arr[..., 0], arr[..., 1], arr[..., 2]
    a = p.sigma + p.r0
    out = -2.0 * p.sigma * t * t - 2.0 * i * i - 2.0 * p.beta * m * (m - a)
    return float(out) if out.ndim == 0 else out


def absorbing_ball(p: ParamSet) -> AbsorbingBall:
    a = p.sigma + p.r0
    m = min(2.0 * p.sigma, 2.0, p.beta)
    c = p.beta * a * a
    return AbsorbingBall(center_m=a, radius_sq=c / m, decay_m=m, offset_c=c)


def symmetry_map(x: StateLike) -> np.ndarray:
    """The Z2 symmetry ``(T, I, M) -> (-T, -I, M)``."""
    t, i, m = as_state_array(x)
    return np.array([-t, -i, m], dtype=float)
