"""Command-line interface: simulate | equilibria | scan | lyapunov | verify.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from . import analysis
from .integrate import IntegrationError, IntegratorOptions, Method, Trajectory, integrate
from .model_core import (
    CubicCoeffs,
    InvalidParameterError,
    ParamSet,
    State,
    divergence,
    equilibria,
    vector_field,
)
from .stability import (
    ConsistencyError,
    RHVerdict,
    classify_equilibrium,
    cubic_roots,
    routh_hurwitz_cubic,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

TRAJECTORY_HEADER = ("t", "T", "I", "M")
SCAN_HEADER = ("r0", "regime", "delta_rh", "p0_label", "pe_label", "alpha")


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """17 significant digits, enough for an exact double round trip."""
    return format(float(x), ".17g")


def parse_triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected T,I,M got {text!r}")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric component in {text!r}")
    if not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"non-finite component in {text!r}")
    return values


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be finite and > 0: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


# -- serialisation -----------------------------------------------------------

def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_HEADER) + "\n")
    for t, (a, b, c) in zip(traj.times, traj.states):
        buf.write(f"{fmt(t)},{fmt(a)},{fmt(b)},{fmt(c)}\n")
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse the ``t,T,I,M`` CSV back into ``(times, states)``."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != TRAJECTORY_HEADER:
        raise ValueError("missing t,T,I,M header")
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    return data[:, 0], data[:, 1:]


def trajectory_to_json(traj: Trajectory) -> str:
    doc = {
        "params": {"sigma": traj.params.sigma, "r0": traj.params.r0, "beta": traj.params.beta},
        "meta": {
            "method": traj.method.value,
            "steps": traj.n_steps,
            "rejected": traj.n_rejected,
        },
        "columns": list(TRAJECTORY_HEADER),
        "samples": [[float(t), *map(float, x)] for t, x in zip(traj.times, traj.states)],
    }
    return json.dumps(doc) + "\n"


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def equilibria_report(p: ParamSet) -> list[dict]:
    out = []
    for e in equilibria(p):
        rep = classify_equilibrium(p, e)
        out.append(
            {
                "branch": e.branch.value,
                "point": list(e.point),
                "eigenvalues": [_complex_pair(z) for z in rep.eigenvalues],
                "rh_verdict": rep.rh_verdict.value,
                "label": rep.label.value,
            }
        )
    return out


def scan_to_csv(records: Sequence[analysis.RegimeRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(SCAN_HEADER) + "\n")
    for rec in records:
        pe = rec.pe_label.value if rec.pe_label is not None else ""
        buf.write(
            f"{fmt(rec.r0)},{rec.regime.value},{fmt(rec.delta_rh)},"
            f"{rec.p0_label.value},{pe},{fmt(rec.alpha)}\n"
        )
    return buf.getvalue()


# -- commands ----------------------------------------------------------------

def _params(args) -> ParamSet:
    return ParamSet(args.sigma, args.r0, args.beta)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_simulate(args) -> int:
    p = _params(args)
    x0 = State(*args.x0)
    try:
        opts = IntegratorOptions(
            t_end=args.t_end,
            method=Method(args.method),
            h_init=min(args.h, args.t_end),
            abs_tol=args.tol,
            rel_tol=args.tol,
            record_stride=args.stride,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    traj = integrate(p, x0, opts)
    text = trajectory_to_csv(traj) if args.format == "csv" else trajectory_to_json(traj)
    _emit(text, args.out)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    p = _params(args)
    report = equilibria_report(p)
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write("branch,T,I,M,rh_verdict,label,eig1_re,eig1_im,eig2_re,eig2_im,eig3_re,eig3_im\n")
        for row in report:
            eig = [fmt(v) for pair in row["eigenvalues"] for v in pair]
            pt = [fmt(v) for v in row["point"]]
            buf.write(",".join([row["branch"], *pt, row["rh_verdict"], row["label"], *eig]) + "\n")
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.r0_max <= args.r0_min:
        raise UsageError("--r0-max must exceed --r0-min")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    # r0 is irrelevant to the scan base; any positive placeholder works
    p = ParamSet(args.sigma, 1.0, args.beta)
    grid = np.linspace(args.r0_min, args.r0_max, args.steps)
    records = analysis.bifurcation_scan(p, grid, n_jobs=args.threads)
    _emit(scan_to_csv(records), args.out)
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    p = _params(args)
    try:
        analysis._check_horizon(args.horizon, args.renorm_dt, args.transient)
    except ValueError as exc:
        raise UsageError(str(exc))
    res = analysis.lyapunov_spectrum(p, args.x0, args.horizon, args.renorm_dt, args.transient)
    doc = {
        "exponents": list(res.exponents),
        "sum": res.sum,
        "divergence": divergence(p),
        "trace_identity_residual": res.trace_residual(p),
        "regime_label": analysis.chaos_label(res.exponents[0]),
        "horizon": res.horizon,
        "renorm_dt": res.renorm_interval,
        "transient": res.transient_discarded,
    }
    if args.two_trajectory:
        doc["lambda1_two_trajectory"] = analysis.max_lyapunov_two_trajectory(
            p, args.x0, args.horizon, args.renorm_dt, args.transient
        )
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def _rh_row(sigma: float, r0: float, betas) -> tuple[int, int]:
    mismatches = checked = 0
    for beta in betas:
        c = CubicCoeffs(sigma + beta + 1.0, beta * (sigma + r0), 2.0 * beta * sigma * (r0 - 1.0))
        verdict = routh_hurwitz_cubic(c)
        if verdict is RHVerdict.Marginal:
            continue
        re = [z.real for z in cubic_roots(c)]
        if any(abs(x) <= 1e-9 for x in re):
            continue
        checked += 1
        if (verdict is RHVerdict.AllNegative) != all(x < 0 for x in re):
            mismatches += 1
    return checked, mismatches


def rh_grid_agreement(sigma: float, n: int = 50, n_jobs: int = 1) -> tuple[bool, str]:
    """RH verdict vs. root signs on an n x n grid over (r0, beta) in (1, 40] x (0.1, 5]."""
    r0s = np.linspace(1.0, 40.0, n + 1)[1:]
    betas = np.linspace(0.1, 5.0, n + 1)[1:]
    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_rh_row)(sigma, float(r0), betas) for r0 in r0s
    )
    checked = sum(c for c, _ in rows)
    mismatches = sum(m for _, m in rows)
    return mismatches == 0, f"{checked} cells, {mismatches} mismatches"


def verify_checks(p: ParamSet, samples: int, seed: int, n_jobs: int = 1) -> list[tuple[str, bool, str]]:
    rows = []
    audit = analysis.dissipativity_audit(p, samples, seed)
    rows.append(
        (
            "dissipativity",
            audit.passed,
            f"{audit.violations} violations in {audit.n_samples} samples, "
            f"max slack {audit.max_slack:.6e}",
        )
    )
    worst = max(float(np.max(np.abs(vector_field(p, e.point)))) for e in equilibria(p))
    rows.append(("equilibrium_residual", worst < 1e-12, f"max |F| = {worst:.3e}"))
    try:
        labels = [classify_equilibrium(p, e).label.value for e in equilibria(p)]
        rows.append(("rh_eigen_equilibria", True, " ".join(labels)))
    except ConsistencyError as exc:
        rows.append(("rh_eigen_equilibria", False, str(exc)))
    ok, detail = rh_grid_agreement(p.sigma, n_jobs=n_jobs)
    rows.append(("rh_eigen_grid", ok, detail))
    return rows


def cmd_verify(args) -> int:
    p = _params(args)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    rows = verify_checks(p, args.samples, args.seed, args.threads)
    if args.format == "json":
        text = json.dumps(
            [{"check": n, "passed": ok, "detail": d} for n, ok, d in rows], indent=2
        ) + "\n"
    else:
        width = max(len(n) for n, _, _ in rows)
        lines = [f"{n:<{width}}  {'PASS' if ok else 'FAIL'}  {d}" for n, ok, d in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_NUMERIC


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sociolorenz",
        description="Lorenz-type socioepidemiological model: simulation and analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def params(sp, with_r0=True):
        sp.add_argument("--sigma", type=_positive_float, required=True, help="behavioural adjustment rate")
        if with_r0:
            sp.add_argument("--r0", type=_positive_float, required=True, help="infection potential")
        sp.add_argument("--beta", type=_positive_float, required=True, help="memory decay rate")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    sp = sub.add_parser("simulate", help="integrate one trajectory")
    params(sp)
    sp.add_argument("--x0", type=parse_triple, required=True, help="T,I,M")
    sp.add_argument("--t-end", type=_positive_float, required=True, help="final time")
    sp.add_argument("--method", choices=[m.value for m in Method], default=Method.FixedRK4.value)
    sp.add_argument("--h", type=_positive_float, default=0.01, help="RK4 step, or initial step when adaptive")
    sp.add_argument("--tol", type=_positive_float, default=1e-9,
                    help="absolute and relative tolerance for adaptive54")
    sp.add_argument("--stride", type=_positive_int, default=1, help="record every n-th step")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equilibria", help="equilibria with stability reports")
    params(sp)
    sp.add_argument("--format", choices=["csv", "json"], default="json")
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("scan", help="closed-form bifurcation scan over r0")
    params(sp, with_r0=False)
    sp.add_argument("--r0-min", type=_positive_float, required=True)
    sp.add_argument("--r0-max", type=_positive_float, required=True)
    sp.add_argument("--steps", type=_positive_int, required=True, help="number of grid points")
    sp.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                    help="worker threads")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("lyapunov", help="Lyapunov spectrum (tangent-space method)")
    params(sp)
    sp.add_argument("--x0", type=parse_triple, default=(1.0, 1.0, 1.0))
    sp.add_argument("--horizon", type=_positive_float, default=2000.0, help="averaging time")
    sp.add_argument("--renorm-dt", type=_positive_float, default=0.5)
    sp.add_argument("--transient", type=float, default=50.0)
    sp.add_argument("--two-trajectory", action="store_true",
                    help="also report the two-trajectory estimate of the largest exponent")
    sp.set_defaults(func=cmd_lyapunov)

    sp = sub.add_parser("verify", help="invariant checks with a pass/fail table")
    params(sp)
    sp.add_argument("--samples", type=int, default=100_000, help="states in the dissipativity audit")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--format", choices=["table", "json"], default="table")
    sp.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                    help="worker threads")
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (UsageError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, ConsistencyError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
