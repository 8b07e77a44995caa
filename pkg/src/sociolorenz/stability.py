"""Eigenvalues of 3x3 real matrices, Routh-Hurwitz test and equilibrium labels."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model_core import (
    Branch,
    CubicCoeffs,
    Equilibrium,
    ParamSet,
    jacobian,
)

__all__ = [
    "TOL_MARGINAL",
    "TOL_RH",
    "ConsistencyError",
    "RHVerdict",
    "Label",
    "StabilityReport",
    "cubic_roots",
    "char_coeffs_matrix",
    "eigenvalues_3x3",
    "eigenvalues_p0",
    "routh_hurwitz_cubic",
    "label_from_eigenvalues",
    "classify_equilibrium",
]

TOL_MARGINAL = 1e-9
TOL_RH = 1e-12


class ConsistencyError(RuntimeError):
    """Eigenvalue signs and the Routh-Hurwitz verdict disagree."""


class RHVerdict(str, enum.Enum):
    AllNegative = "AllNegative"
    Unstable = "Unstable"
    Marginal = "Marginal"


class Label(str, enum.Enum):
    HyperbolicSink = "HyperbolicSink"
    Saddle = "Saddle"
    StableFocusNode = "StableFocusNode"
    UnstableFocusNode = "UnstableFocusNode"
    Marginal = "Marginal"

    @property
    def is_stable(self) -> bool:
        return self in (Label.HyperbolicSink, Label.StableFocusNode)


@dataclass(frozen=True)
class StabilityReport:
    branch: Branch
    eigenvalues: tuple[complex, complex, complex]
    rh_verdict: RHVerdict
    label: Label

    @property
    def is_stable(self) -> bool:
        return self.label.is_stable


def _sort_roots(roots) -> tuple[complex, complex, complex]:
    return tuple(sorted((complex(r) for r in roots), key=lambda z: (-z.real, -z.imag)))


def _polish(c: CubicCoeffs, r: complex) -> complex:
    # one Newton step; skipped at (near-)multiple roots where the derivative vanishes
    d = c.derivative(r)
    if abs(d) <= 1e-14 * (1.0 + abs(r) ** 2):
        return r
    step = c(r) / d
    candidate = r - step
    return candidate if abs(c(candidate)) <= abs(c(r)) else r


def cubic_roots(c: CubicCoeffs) -> tuple[complex, complex, complex]:
    """Roots of ``lambda**3 + a1 lambda**2 + a2 lambda + a3``.

    Closed form (Cardano for one real root, trigonometric for three) on the
    depressed cubic, followed by one Newton polishing step per root. Roots
    are sorted by descending real part, then descending imaginary part;
    complex roots come back as exact conjugates.
    """
    a1, a2, a3 = (float(v) for v in c)
    # rescale lambda = scale * mu so the working coefficients are O(1)
    scale = max(abs(a1), math.sqrt(abs(a2)), float(np.cbrt(abs(a3))))
    if scale == 0.0:
        return (0j, 0j, 0j)
    b1, b2, b3 = a1 / scale, a2 / scale / scale, a3 / scale / scale / scale

    shift = b1 / 3.0
    p = b2 - b1 * b1 / 3.0
    q = 2.0 * b1 ** 3 / 27.0 - b1 * b2 / 3.0 + b3
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    if disc > 0.0 or p > 0.0:
        # one real root; pick the sign that avoids cancellation
        big = -math.copysign(1.0, q) * float(np.cbrt(abs(q) / 2.0 + math.sqrt(max(disc, 0.0))))
        small = -p / (3.0 * big) if big != 0.0 else 0.0
        real = scale * (big + small - shift)
        pair = scale * complex(-(big + small) / 2.0 - shift, math.sqrt(3.0) / 2.0 * abs(big - small))
        real = _polish(c, complex(real)).real
        pair = _polish(c, pair)
        if pair.imag == 0.0:
            roots = [real, pair.real, pair.real]
        else:
            roots = [complex(real), pair, pair.conjugate()]
    elif p == 0.0:
        roots = [complex(-scale * shift)] * 3
    else:
        amp = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * q) / (p * amp)
        theta = math.acos(min(1.0, max(-1.0, arg))) / 3.0
        roots = [
            _polish(c, complex(scale * (amp * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift))).real
            for k in range(3)
        ]
    return _sort_roots(roots)


def char_coeffs_matrix(a: np.ndarray) -> CubicCoeffs:
    """Coefficients of ``det(lambda I - A)`` for a real 3x3 matrix."""
    a = np.asarray(a, dtype=float)
    trace = a[0, 0] + a[1, 1] + a[2, 2]
    minors = (
        a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
        + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    )
    det = (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )
    return CubicCoeffs(float(-trace), float(minors), float(-det))


def eigenvalues_3x3(a: np.ndarray) -> tuple[complex, complex, complex]:
    return cubic_roots(char_coeffs_matrix(a))


def eigenvalues_p0(p: ParamSet) -> tuple[complex, complex, complex]:
    """Eigenvalues at the origin from its block-diagonal Jacobian.

    ``-beta`` plus the roots of ``lambda**2 + (sigma + 1) lambda + sigma (1 - r0)``,
    whose discriminant ``(sigma - 1)**2 + 4 sigma r0`` is always positive.
    """
    b = p.sigma + 1.0
    disc = (p.sigma - 1.0) ** 2 + 4.0 * p.sigma * p.r0
    sq = math.sqrt(disc)
    lam_minus = -(b + sq) / 2.0
    # product of roots is sigma (1 - r0); avoids cancellation in the other root
    lam_plus = p.sigma * (1.0 - p.r0) / lam_minus
    return _sort_roots([lam_plus, lam_minus, -p.beta])


def routh_hurwitz_cubic(c: CubicCoeffs, tol: float = TOL_RH) -> RHVerdict:
    """All roots in the open left half-plane iff a1, a2, a3 > 0 and a1 a2 > a3.

    Coefficients or the Hurwitz determinant ``a1 a2 - a3`` within
    ``tol * (1 + |a1 a2|)`` of zero give ``Marginal``.
    """
    a1, a2, a3 = (float(v) for v in c)
    band = tol * (1.0 + abs(a1 * a2))
    if min(abs(a1), abs(a2), abs(a3), abs(a1 * a2 - a3)) <= band:
        return RHVerdict.Marginal
    if a1 > 0.0 and a2 > 0.0 and a3 > 0.0 and a1 * a2 > a3:
        return RHVerdict.AllNegative
    return RHVerdict.Unstable


def label_from_eigenvalues(eigs, tol: float = TOL_MARGINAL) -> Label:
    re = [z.real for z in eigs]
    if any(abs(r) <= tol for r in re):
        return Label.Marginal
    oscillatory = any(abs(z.imag) > tol for z in eigs)
    if all(r < 0.0 for r in re):
        return Label.StableFocusNode if oscillatory else Label.HyperbolicSink
    if all(r > 0.0 for r in re):
        return Label.UnstableFocusNode
    return Label.Saddle


def classify_equilibrium(p: ParamSet, e: Equilibrium) -> StabilityReport:
    """Eigenvalues and Routh-Hurwitz verdict at ``e``, cross-checked.

    Raises ConsistencyError if the two routes disagree outside the marginal bands.
    """
    jac = jacobian(p, e.point)
    coeffs = char_coeffs_matrix(jac)
    eigs = eigenvalues_p0(p) if e.branch is Branch.P0 else cubic_roots(coeffs)
    verdict = routh_hurwitz_cubic(coeffs)
    label = label_from_eigenvalues(eigs)

    if label is not Label.Marginal and verdict is not RHVerdict.Marginal:
        if (verdict is RHVerdict.AllNegative) != label.is_stable:
            raise ConsistencyError(
                f"{e.branch.value}: Routh-Hurwitz says {verdict.value} but eigenvalues "
                f"{eigs} give {label.value}"
            )
    return StabilityReport(e.branch, eigs, verdict, label)
