"""Fixed-step RK4 and adaptive Dormand-Prince 5(4) integration of the model.

Single trajectories run on Python floats (a 3-vector gains nothing from numpy
per step); ensembles of initial conditions are advanced together with
vectorised RK4 in :func:`integrate_ensemble`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model_core import ParamSet, StateLike, as_state_array

__all__ = [
    "IntegrationError",
    "Method",
    "IntegratorOptions",
    "Trajectory",
    "rk4_step",
    "adaptive_step",
    "integrate",
    "integrate_ensemble",
]


class IntegrationError(RuntimeError):
    """Step-size underflow, step budget exhausted or a non-finite state."""

    def __init__(self, message: str, last_time: float | None = None):
        super().__init__(message)
        self.last_time = last_time


class Method(str, enum.Enum):
    FixedRK4 = "rk4"
    Adaptive54 = "adaptive54"


@dataclass(frozen=True)
class IntegratorOptions:
    t_end: float
    method: Method = Method.FixedRK4
    h_init: float = 0.01
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_steps: int = 10_000_000
    record_stride: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be finite and > 0, got {self.t_end}")
        if not (math.isfinite(self.h_init) and 0 < self.h_init <= self.t_end):
            raise ValueError(f"h_init must satisfy 0 < h_init <= t_end, got {self.h_init}")
        if not (self.abs_tol >= 1e-14 and self.rel_tol >= 1e-14):
            raise ValueError("abs_tol and rel_tol must be >= 1e-14")
        if int(self.max_steps) < 1 or int(self.record_stride) < 1:
            raise ValueError("max_steps and record_stride must be positive integers")


@dataclass
class Trajectory:
    params: ParamSet
    times: np.ndarray
    states: np.ndarray
    method: Method
    n_steps: int = 0
    n_rejected: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


def _rhs(s, r, b, t, i, m):
    return s * (i - t), t * (r - m) - i, t * i - b * m


def _rk4(s, r, b, t, i, m, h):
    k1 = _rhs(s, r, b, t, i, m)
    hh = 0.5 * h
    k2 = _rhs(s, r, b, t + hh * k1[0], i + hh * k1[1], m + hh * k1[2])
    k3 = _rhs(s, r, b, t + hh * k2[0], i + hh * k2[1], m + hh * k2[2])
    k4 = _rhs(s, r, b, t + h * k3[0], i + h * k3[1], m + h * k3[2])
    h6 = h / 6.0
    return (
        t + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        i + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        m + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    )


# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0


def _dp54(s, r, b, y, h, abs_tol, rel_tol):
    ks = []
    for stage in range(7):
        yi = list(y)
        for j, a in enumerate(_A[stage]):
            if a:
                kj = ks[j]
                yi[0] += h * a * kj[0]
                yi[1] += h * a * kj[1]
                yi[2] += h * a * kj[2]
        ks.append(_rhs(s, r, b, *yi))
    y_new = tuple(y[d] + h * sum(bw * k[d] for bw, k in zip(_B5, ks)) for d in range(3))
    acc = 0.0
    for d in range(3):
        e = h * sum(ew * k[d] for ew, k in zip(_E, ks))
        ratio = e / (abs_tol + rel_tol * abs(y[d]))
        acc += ratio * ratio
    err = math.sqrt(acc / 3.0)
    if err == 0.0:
        factor = _FAC_MAX
    else:
        factor = min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err ** -0.2))
    return y_new, err, h * factor, err <= 1.0


def rk4_step(p: ParamSet, x: StateLike, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size ``h``."""
    if not h > 0:
        raise ValueError(f"step size must be > 0, got {h}")
    t, i, m = as_state_array(x).tolist()
    return np.array(_rk4(p.sigma, p.r0, p.beta, t, i, m, float(h)))


def adaptive_step(
    p: ParamSet,
    x: StateLike,
    h: float,
    abs_tol: float = 1e-9,
    rel_tol: float = 1e-9,
) -> tuple[np.ndarray, float, float, bool]:
    """Attempt one Dormand-Prince 5(4) step.

    The error is the RMS of the 5th/4th-order difference scaled component-wise
    by ``abs_tol + rel_tol * |x|``. Returns ``(x_new, err, h_next, accepted)``
    with ``h_next = h * clamp(0.9 * err**(-1/5), 0.2, 5)``; ``x_new`` is only
    meaningful when ``accepted``.
    """
    if not h > 0:
        raise ValueError(f"step size must be > 0, got {h}")
    y = tuple(as_state_array(x).tolist())
    y_new, err, h_next, ok = _dp54(p.sigma, p.r0, p.beta, y, float(h), abs_tol, rel_tol)
    return np.array(y_new), err, h_next, ok


def _finite(y) -> bool:
    return math.isfinite(y[0]) and math.isfinite(y[1]) and math.isfinite(y[2])


def integrate(p: ParamSet, x0: StateLike, opts: IntegratorOptions) -> Trajectory:
    """Integrate from ``t = 0`` to ``opts.t_end``.

    Every ``record_stride``-th accepted step is recorded, plus the final state;
    the last step is shortened to land exactly on ``t_end``.
    """
    s, r, b = p.as_tuple()
    y = tuple(as_state_array(x0).tolist())
    t_end = float(opts.t_end)
    stride = int(opts.record_stride)
    max_steps = int(opts.max_steps)
    times = [0.0]
    states = [y]
    n_steps = n_rejected = 0

    if opts.method is Method.FixedRK4:
        h = opts.h_init
        n_full = int(math.floor(t_end / h + 1e-9))
        if n_full * h > t_end:
            n_full -= 1
        remainder = t_end - n_full * h
        n_total = n_full + (1 if remainder > 1e-12 * t_end else 0)
        if n_total > max_steps:
            raise IntegrationError(f"max_steps={max_steps} exceeded (need {n_total})", 0.0)
        t = 0.0
        for k in range(1, n_total + 1):
            step = h if k <= n_full else remainder
            y_next = _rk4(s, r, b, y[0], y[1], y[2], step)
            if not _finite(y_next):
                raise IntegrationError(f"non-finite state after t={t}", t)
            y = y_next
            t = t_end if k == n_total else k * h
            n_steps += 1
            if k % stride == 0 or k == n_total:
                times.append(t)
                states.append(y)
    else:
        h = opts.h_init
        h_min = 1e-12 * t_end
        t = 0.0
        accepted = 0
        while t < t_end:
            if n_steps + n_rejected >= max_steps:
                raise IntegrationError(f"max_steps={max_steps} exceeded", t)
            last = t + h >= t_end
            step = t_end - t if last else h
            y_next, err, h_next, ok = _dp54(s, r, b, y, step, opts.abs_tol, opts.rel_tol)
            if ok and _finite(y_next):
                y = y_next
                t = t_end if last else t + step
                accepted += 1
                n_steps += 1
                if accepted % stride == 0 or t >= t_end:
                    times.append(t)
                    states.append(y)
                h = h_next if not last else h
            else:
                n_rejected += 1
                h = h_next if ok is False and math.isfinite(err) else step * _FAC_MIN
            if t < t_end and h < h_min:
                raise IntegrationError(
                    f"step size underflow (h={h:.3e}) at t={t}; stiffness or blow-up", t
                )

    return Trajectory(
        params=p,
        times=np.array(times),
        states=np.array(states),
        method=opts.method,
        n_steps=n_steps,
        n_rejected=n_rejected,
    )


def integrate_ensemble(
    p: ParamSet,
    x0: np.ndarray,
    t_end: float,
    h: float = 0.01,
    record_stride: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised fixed-step RK4 for many initial conditions at once.

    ``x0`` has shape ``(n, 3)``. Returns ``(times, states)`` where ``states``
    has shape ``(len(times), n, 3)``; with ``record_stride=None`` only the
    initial and final states are kept. Step layout matches :func:`integrate`
    with ``Method.FixedRK4``.
    """
    y = np.array(x0, dtype=float, copy=True)
    if y.ndim != 2 or y.shape[1] != 3:
        raise ValueError(f"x0 must have shape (n, 3), got {y.shape}")
    s, r, b = p.as_tuple()

    def f(z):
        t, i, m = z[:, 0], z[:, 1], z[:, 2]
        return np.stack((s * (i - t), t * (r - m) - i, t * i - b * m), axis=1)

    n_full = int(math.floor(t_end / h + 1e-9))
    if n_full * h > t_end:
        n_full -= 1
    remainder = t_end - n_full * h
    n_total = n_full + (1 if remainder > 1e-12 * t_end else 0)

    times = [0.0]
    out = [y.copy()]
    for k in range(1, n_total + 1):
        step = h if k <= n_full else remainder
        k1 = f(y)
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state after t={(k - 1) * h}", (k - 1) * h)
        last = k == n_total
        if last or (record_stride is not None and k % record_stride == 0):
            times.append(t_end if last else k * h)
            out.append(y.copy())
    return np.array(times), np.stack(out)
