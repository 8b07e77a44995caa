"""Bifurcation scans, Hopf diagnostics, Lyapunov spectra, dissipativity audit, basins."""

from __future__ import annotations

import bisect
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .integrate import _rhs, _rk4, integrate_ensemble
from .model_core import (
    Branch,
    ParamSet,
    StateLike,
    absorbing_ball,
    as_state_array,
    divergence,
    equilibria,
    hopf_threshold,
    lyapunov_v_dot,
    pitchfork_amplitude,
)
from .stability import Label, classify_equilibrium

__all__ = [
    "Regime",
    "RegimeRecord",
    "HopfReport",
    "LyapunovResult",
    "AuditReport",
    "CHAOS_THRESHOLD",
    "delta_rh",
    "hopf_report",
    "bifurcation_scan",
    "hopf_crossing_bracket",
    "lyapunov_spectrum",
    "max_lyapunov_two_trajectory",
    "chaos_label",
    "dissipativity_audit",
    "basin_grid",
    "basin_sample",
]

CHAOS_THRESHOLD = 0.05


class Regime(str, enum.Enum):
    InactiveStable = "InactiveStable"
    Bistable = "Bistable"
    PostHopf = "PostHopf"
    PitchforkPoint = "PitchforkPoint"
    HopfPoint = "HopfPoint"
    NoHopfBranch = "NoHopfBranch"


@dataclass(frozen=True)
class RegimeRecord:
    r0: float
    equilibria_count: int
    p0_label: Label
    pe_label: Optional[Label]
    delta_rh: float
    regime: Regime
    alpha: float


@dataclass(frozen=True)
class HopfReport:
    r_h: float
    omega: float
    transversality: float


@dataclass(frozen=True)
class LyapunovResult:
    exponents: tuple[float, float, float]
    sum: float
    horizon: float
    renorm_interval: float
    transient_discarded: float
    drift: float = 0.0

    def trace_residual(self, p: ParamSet) -> float:
        """Relative mismatch between the exponent sum and the divergence."""
        div = divergence(p)
        return abs(self.sum - div) / abs(div)


@dataclass(frozen=True)
class AuditReport:
    n_samples: int
    seed: int
    violations: int
    max_slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def delta_rh(p: ParamSet, r0_query: float) -> float:
    """Hurwitz determinant ``a1 a2 - a3`` of the nontrivial branch at ``r0_query``.

    Affine in r0; its root is the Hopf threshold. Uses sigma and beta from
    ``p`` only. Meaningful for ``r0_query > 1`` (where the branch exists).
    """
    s, b = p.sigma, p.beta
    return (s + b + 1.0) * b * (s + r0_query) - 2.0 * b * s * (r0_query - 1.0)


def hopf_report(p: ParamSet) -> Optional[HopfReport]:
    r_h = hopf_threshold(p)
    if r_h is None:
        return None
    omega = math.sqrt(p.beta * (p.sigma + r_h))
    transversality = p.beta * (p.beta + 1.0 - p.sigma)
    if not transversality < 0.0:
        raise AssertionError(f"transversality {transversality} is not negative")
    return HopfReport(r_h=r_h, omega=omega, transversality=transversality)


def _record(p_base: ParamSet, r0: float, regime: Optional[Regime] = None) -> RegimeRecord:
    p = p_base.with_r0(r0)
    eqs = equilibria(p)
    p0_label = classify_equilibrium(p, eqs[0]).label
    pe_label = classify_equilibrium(p, eqs[1]).label if len(eqs) > 1 else None
    if regime is None:
        r_h = hopf_threshold(p)
        if r0 < 1.0:
            regime = Regime.InactiveStable
        elif r0 == 1.0:
            regime = Regime.PitchforkPoint
        elif r_h is None:
            regime = Regime.NoHopfBranch
        elif r0 < r_h:
            regime = Regime.Bistable
        elif r0 > r_h:
            regime = Regime.PostHopf
        else:
            regime = Regime.HopfPoint
    return RegimeRecord(
        r0=float(r0),
        equilibria_count=len(eqs),
        p0_label=p0_label,
        pe_label=pe_label,
        delta_rh=delta_rh(p, r0),
        regime=regime,
        alpha=pitchfork_amplitude(p),
    )


def bifurcation_scan(
    p_base: ParamSet, r0_grid: Sequence[float], n_jobs: Optional[int] = None
) -> list[RegimeRecord]:
    """Classify every grid value of r0 with closed-form tests.

    ``p_base.r0`` is ignored. Synthetic ``PitchforkPoint`` and ``HopfPoint``
    records are inserted at r0 = 1 and r0 = r_H when they fall inside the grid
    span. Records are returned in increasing r0.
    """
    grid = [float(r) for r in r0_grid]
    if not grid:
        return []
    if any(r <= 0 or not math.isfinite(r) for r in grid):
        raise ValueError("r0 grid values must be finite and positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("r0 grid must be strictly increasing")

    points = list(grid)
    special = {1.0: Regime.PitchforkPoint}
    r_h = hopf_threshold(p_base)
    if r_h is not None:
        special[r_h] = Regime.HopfPoint
    for r, _ in special.items():
        if grid[0] <= r <= grid[-1] and r not in points:
            bisect.insort(points, r)

    if n_jobs is None or n_jobs == 1:
        records = [_record(p_base, r, special.get(r)) for r in points]
    else:
        records = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_record)(p_base, r, special.get(r)) for r in points
        )

    if r_h is not None:
        bracket = hopf_crossing_bracket(records)
        if bracket is not None and not bracket[0] <= r_h <= bracket[1]:
            raise AssertionError(f"sign change of delta_rh in {bracket} misses r_H={r_h}")
    return records


def hopf_crossing_bracket(records: Sequence[RegimeRecord]) -> Optional[tuple[float, float]]:
    """Adjacent grid values (r0 > 1) between which ``delta_rh`` changes sign."""
    rows = [rec for rec in records if rec.r0 > 1.0 and rec.regime is not Regime.HopfPoint]
    for lo, hi in zip(rows, rows[1:]):
        if lo.delta_rh > 0.0 >= hi.delta_rh:
            return (lo.r0, hi.r0)
    return None


def _joint_rk4(s, r, b, y, v, h):
    """RK4 step of the state and three tangent vectors (columns of ``v``).

    ``y`` is a 3-tuple; ``v`` a 9-tuple laid out as three 3-vectors.
    """

    def tangent(state, w):
        t, i, m = state
        out = []
        for k in range(3):
            a, c, d = w[3 * k], w[3 * k + 1], w[3 * k + 2]
            out.append(s * (c - a))
            out.append((r - m) * a - c - t * d)
            out.append(i * a + t * c - b * d)
        return out

    def shift(base, k, f):
        return tuple(x + f * dx for x, dx in zip(base, k))

    k1y = _rhs(s, r, b, *y)
    k1v = tangent(y, v)
    y2 = shift(y, k1y, 0.5 * h)
    k2y = _rhs(s, r, b, *y2)
    k2v = tangent(y2, shift(v, k1v, 0.5 * h))
    y3 = shift(y, k2y, 0.5 * h)
    k3y = _rhs(s, r, b, *y3)
    k3v = tangent(y3, shift(v, k2v, 0.5 * h))
    y4 = shift(y, k3y, h)
    k4y = _rhs(s, r, b, *y4)
    k4v = tangent(y4, shift(v, k3v, h))
    h6 = h / 6.0
    y_new = tuple(
        y[j] + h6 * (k1y[j] + 2.0 * k2y[j] + 2.0 * k3y[j] + k4y[j]) for j in range(3)
    )
    v_new = tuple(
        v[j] + h6 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]) for j in range(9)
    )
    return y_new, v_new


def _gram_schmidt(v):
    """Modified Gram-Schmidt on three 3-vectors; returns (orthonormal, norms)."""
    vecs = [list(v[0:3]), list(v[3:6]), list(v[6:9])]
    norms = []
    for k in range(3):
        w = vecs[k]
        for j in range(k):
            q = vecs[j]
            dot = w[0] * q[0] + w[1] * q[1] + w[2] * q[2]
            w = [w[0] - dot * q[0], w[1] - dot * q[1], w[2] - dot * q[2]]
        n = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
        vecs[k] = [w[0] / n, w[1] / n, w[2] / n]
        norms.append(n)
    return tuple(vecs[0] + vecs[1] + vecs[2]), norms


def _substeps(renorm_dt: float, h: float) -> tuple[int, float]:
    n = max(1, int(round(renorm_dt / h)))
    return n, renorm_dt / n


def _spin_up(p: ParamSet, y, transient: float, h: float):
    s, r, b = p.as_tuple()
    n, dt = _substeps(transient, h) if transient > 0 else (0, h)
    for _ in range(n):
        y = _rk4(s, r, b, *y, dt)
    if not all(math.isfinite(c) for c in y):
        raise FloatingPointError("state became non-finite during the transient")
    return y


def _check_horizon(horizon: float, renorm_dt: float, transient: float) -> int:
    if not renorm_dt > 0:
        raise ValueError("renorm_dt must be > 0")
    if transient < 0:
        raise ValueError("transient must be >= 0")
    if horizon < 100 * renorm_dt * (1 - 1e-12):
        raise ValueError("horizon must be at least 100 * renorm_dt")
    return int(round(horizon / renorm_dt))


def _drift(earlier, final) -> float:
    """Largest change of any exponent, relative to the largest exponent magnitude."""
    scale = max(abs(e) for e in final)
    if scale == 0.0:
        return 0.0
    return max(abs(a - b) for a, b in zip(sorted(earlier, reverse=True), final)) / scale


def lyapunov_spectrum(
    p: ParamSet,
    x0: StateLike,
    horizon: float = 2000.0,
    renorm_dt: float = 0.5,
    transient: float = 50.0,
    h: float = 0.01,
) -> LyapunovResult:
    """Full Lyapunov spectrum by the tangent-space (Benettin) method.

    The state and three orthonormal tangent vectors are advanced together
    with RK4 under the variational equation; the tangent frame is
    re-orthonormalised with Gram-Schmidt every ``renorm_dt`` and the
    exponents are the time-averaged log stretch factors. The first
    ``transient`` time units are integrated without accumulating.
    """
    n_renorm = _check_horizon(horizon, renorm_dt, transient)
    s, r, b = p.as_tuple()
    y = _spin_up(p, tuple(as_state_array(x0).tolist()), transient, h)
    v = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
    n_sub, dt = _substeps(renorm_dt, h)

    sums = [0.0, 0.0, 0.0]
    checkpoint = None
    check_at = (3 * n_renorm) // 4
    for k in range(1, n_renorm + 1):
        for _ in range(n_sub):
            y, v = _joint_rk4(s, r, b, y, v, dt)
        v, norms = _gram_schmidt(v)
        for j in range(3):
            sums[j] += math.log(norms[j])
        if k == check_at:
            checkpoint = [x / (k * renorm_dt) for x in sums]
    if not all(math.isfinite(c) for c in y):
        raise FloatingPointError("state became non-finite")

    total = n_renorm * renorm_dt
    exps = sorted((x / total for x in sums), reverse=True)
    drift = _drift(checkpoint, exps) if checkpoint is not None else 0.0
    if drift > 0.05:
        warnings.warn(
            f"Lyapunov estimates drifted by {drift:.1%} over the last quarter; "
            "consider a longer horizon",
            RuntimeWarning,
            stacklevel=2,
        )
    return LyapunovResult(
        exponents=tuple(exps),
        sum=float(sum(exps)),
        horizon=total,
        renorm_interval=renorm_dt,
        transient_discarded=float(transient),
        drift=drift,
    )


def max_lyapunov_two_trajectory(
    p: ParamSet,
    x0: StateLike,
    horizon: float = 2000.0,
    renorm_dt: float = 0.5,
    transient: float = 50.0,
    h: float = 0.01,
    d0: float = 1e-8,
) -> float:
    """Largest exponent from the separation of two nearby trajectories.

    The companion starts ``d0`` away and is pulled back to distance ``d0``
    along the current separation every ``renorm_dt``. The exponent is the
    least-squares slope of the accumulated log separation against time.
    """
    n_renorm = _check_horizon(horizon, renorm_dt, transient)
    s, r, b = p.as_tuple()
    y = _spin_up(p, tuple(as_state_array(x0).tolist()), transient, h)
    u = (1.0, 1.0, 1.0)
    un = math.sqrt(3.0)
    z = tuple(y[j] + d0 * u[j] / un for j in range(3))
    n_sub, dt = _substeps(renorm_dt, h)

    acc = 0.0
    logs = np.empty(n_renorm + 1)
    logs[0] = 0.0
    for k in range(1, n_renorm + 1):
        for _ in range(n_sub):
            y = _rk4(s, r, b, *y, dt)
            z = _rk4(s, r, b, *z, dt)
        diff = [z[j] - y[j] for j in range(3)]
        dist = math.sqrt(sum(d * d for d in diff))
        if dist == 0.0:
            # trajectories merged in floating point (e.g. both collapsed onto a sink)
            diff, dist = list(u), un
            acc += math.log(1e-300)
        else:
            acc += math.log(dist / d0)
        logs[k] = acc
        z = tuple(y[j] + d0 * diff[j] / dist for j in range(3))
    times = np.arange(n_renorm + 1) * renorm_dt
    slope = np.polyfit(times, logs, 1)[0]
    return float(slope)


def chaos_label(lambda_max: float) -> str:
    if lambda_max > CHAOS_THRESHOLD:
        return "chaotic"
    if lambda_max >= -CHAOS_THRESHOLD:
        return "inconclusive"
    return "non-chaotic"


def dissipativity_audit(p: ParamSet, n_samples: int = 100_000, seed: int = 42) -> AuditReport:
    """Check ``V' <= -m V + c`` on random states around the absorbing ball.

    States are uniform in a cube of half-width ``2R`` centred at
    ``(0, 0, sigma + r0)``. The inequality holds for every state, so any
    violation beyond ``1e-9`` points at an implementation error.
    """
    if int(n_samples) < 1:
        raise ValueError("n_samples must be >= 1")
    ball = absorbing_ball(p)
    rng = np.random.default_rng(seed)
    half = 2.0 * ball.radius
    x = rng.uniform(-half, half, size=(int(n_samples), 3))
    x[:, 2] += ball.center_m
    v = x[:, 0] ** 2 + x[:, 1] ** 2 + (x[:, 2] - ball.center_m) ** 2
    v_dot = lyapunov_v_dot(p, x)
    slack = v_dot - (-ball.decay_m * v + ball.offset_c)
    violations = int(np.count_nonzero(slack > 1e-9))
    return AuditReport(
        n_samples=int(n_samples),
        seed=int(seed),
        violations=violations,
        max_slack=float(slack.max()),
    )


def basin_grid(
    t_range: tuple[float, float] = (-10.0, 10.0),
    i_range: tuple[float, float] = (-10.0, 10.0),
    n: int = 21,
    m0: float = 0.0,
) -> np.ndarray:
    """``n x n`` grid of initial conditions in the (T, I) plane at memory ``m0``."""
    ts = np.linspace(*t_range, n)
    is_ = np.linspace(*i_range, n)
    tt, ii = np.meshgrid(ts, is_, indexing="ij")
    return np.column_stack((tt.ravel(), ii.ravel(), np.full(tt.size, float(m0))))


UNRESOLVED = "Unresolved"


def basin_sample(
    p: ParamSet,
    initial_conditions: Iterable[StateLike],
    t_end: float = 200.0,
    tol: float = 1e-3,
    h: float = 0.01,
) -> dict[tuple[float, float, float], str]:
    """Map each initial condition to the nontrivial equilibrium it settles on.

    Only defined in the bistable regime ``1 < r0 < r_H`` (any ``r0 > 1`` when
    there is no Hopf threshold). Labels are ``"PePlus"``, ``"PeMinus"`` or
    ``"Unresolved"`` when the final state is farther than ``tol`` from both.
    """
    r_h = hopf_threshold(p)
    if not (p.r0 > 1.0 and (r_h is None or p.r0 < r_h)):
        raise ValueError(f"r0={p.r0} is outside the bistable regime (1, r_H={r_h})")
    ics = np.array([as_state_array(x) for x in initial_conditions], dtype=float)
    if ics.size == 0:
        return {}
    _, states = integrate_ensemble(p, ics, t_end, h=h)
    final = states[-1]
    eqs = {e.branch: e.point.as_array() for e in equilibria(p)}
    d_plus = np.max(np.abs(final - eqs[Branch.PePlus]), axis=1)
    d_minus = np.max(np.abs(final - eqs[Branch.PeMinus]), axis=1)
    out = {}
    for ic, dp, dm in zip(ics, d_plus, d_minus):
        if dp <= tol:
            label = Branch.PePlus.value
        elif dm <= tol:
            label = Branch.PeMinus.value
        else:
            label = UNRESOLVED
        out[tuple(float(c) for c in ic)] = label
    return out
