"""Inverse iteration for the least Rayleigh quotient.

Each step maps the previous iterate through the duality map and solves the
strictly convex subproblem dPhi(u_k) = J_p(u_{k-1}).  Along any solution
sequence the Rayleigh quotient p Phi(u_k)/||u_k||^p and the norm ratio
||u_{k-1}||/||u_k|| are nonincreasing, the ratios converge to
mu = lambda^(1/(p-1)), and mu^k u_k converges to a minimizer (or to zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError
from .inner import SolverOptions, minimize_phi_minus_linear
from .problems import ProblemInstance
from .spaces import CoeffVec, as_array, mu_from_lambda, unit_representative

__all__ = [
    "IterOptions",
    "IterationRow",
    "IterationTrace",
    "StopReason",
    "RunSummary",
    "Violation",
    "SchemeFailure",
    "iterate",
    "check_monotonicity",
    "rough_mu",
]


class SchemeFailure(RuntimeError):
    """An inner solve failed to converge; the partial trace is attached."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class StopReason(Enum):
    RQ_STABLE = "rq_stable"
    DIRECTION_STABLE = "direction_stable"
    MAX_ITERS = "max_iters"
    COLLAPSED_TO_ZERO = "collapsed_to_zero"


@dataclass
class IterOptions:
    """Outer-loop controls.

    ``rtol``/``dtol`` are the Rayleigh- and direction-stability thresholds;
    either may be None to disable that stop (a run with both disabled
    continues to max_iters or norm underflow).  ``rq_patience`` is the
    number of consecutive Rayleigh-stable steps after which a run whose
    direction never settles (non-simple instances) terminates as RQ_STABLE.
    """

    rtol: float | None = 1e-10
    dtol: float | None = 1e-8
    max_iters: int = 500
    solver: SolverOptions = field(default_factory=SolverOptions)
    collapse_norm: float = 1e-300
    tail_window: int = 10
    rq_patience: int = 30
    keep_iterates: bool = False


@dataclass
class IterationRow:
    k: int
    norm: float
    phi: float
    rq: float
    ratio: float
    inner_iters: int
    residual: float


@dataclass
class IterationTrace:
    rows: list[IterationRow] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)  # only if requested

    def __len__(self):
        return len(self.rows)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


@dataclass
class RunSummary:
    lambda_hat: float
    mu_hat: float
    limit_vec: CoeffVec
    iters: int
    converged: bool
    stop_reason: StopReason


class Violation(NamedTuple):
    k: int
    quantity: str
    magnitude: float


def iterate(inst: ProblemInstance, u0, opts: IterOptions | None = None):
    """Run inverse iteration from u0; returns (IterationTrace, RunSummary).

    Stops when the Rayleigh quotient is rtol-stable and the sign-normalized
    direction is dtol-stable; reports CollapsedToZero if the iterate norm
    underflows (the scaled limit is then the zero vector).  Raises
    SchemeFailure if an inner solve does not converge.
    """
    opts = opts or IterOptions()
    space = inst.space
    u = space.check_dim(as_array(u0))
    norm = space.norm(u)
    if norm == 0.0:
        raise DegenerateInputError("u0 must have nonzero norm")
    phi = inst.value(u)
    rq = inst.rayleigh(u)
    trace = IterationTrace()
    trace.rows.append(IterationRow(0, norm, phi, rq, math.nan, 0, math.nan))
    if opts.keep_iterates:
        trace.iterates.append(u.copy())
    u_hat, _ = unit_representative(space, u)

    log_scaled: list[float] = []  # log(mu^k ||u_k||) up to the unknown mu factor
    stop = StopReason.MAX_ITERS
    converged = False
    rq_stable_run = 0

    for k in range(1, opts.max_iters + 1):
        xi = space.duality_map(u)
        warm = u / mu_from_lambda(rq, inst.exponent)
        rep = minimize_phi_minus_linear(inst, xi, replace(opts.solver, init=warm))
        if not rep.converged:
            raise SchemeFailure(f"inner solve failed to converge at outer step {k}", trace)
        u_new = rep.minimizer
        if opts.keep_iterates:
            trace.iterates.append(u_new.copy())
        norm_new = space.norm(u_new)
        phi_new = inst.value(u_new)
        if norm_new < opts.collapse_norm:
            rq_new = inst.rayleigh(u_new) if norm_new > 0.0 else math.nan
            trace.rows.append(
                IterationRow(k, norm_new, phi_new, rq_new, norm / max(norm_new, 5e-324), rep.iters, rep.grad_dual_norm)
            )
            stop = StopReason.COLLAPSED_TO_ZERO
            u, norm = u_new, norm_new
            break
        rq_new = inst.rayleigh(u_new)
        ratio = norm / norm_new
        trace.rows.append(IterationRow(k, norm_new, phi_new, rq_new, ratio, rep.iters, rep.grad_dual_norm))
        u_hat_new, _ = unit_representative(space, u_new)
        dir_dist = space.norm(u_hat_new - u_hat)
        rq_stable = opts.rtol is not None and abs(rq_new - rq) <= opts.rtol * abs(rq_new)
        dir_stable = opts.dtol is not None and dir_dist <= opts.dtol
        u, norm, phi, rq, u_hat = u_new, norm_new, phi_new, rq_new, u_hat_new
        rq_stable_run = rq_stable_run + 1 if rq_stable else 0
        if rq_stable and dir_stable:
            stop = StopReason.DIRECTION_STABLE
            converged = True
            break
        if rq_stable_run >= opts.rq_patience:
            # Rayleigh value settled but the direction keeps moving
            # (non-simple minimizer set); report the value-level convergence.
            stop = StopReason.RQ_STABLE
            converged = True
            break

    iters = len(trace) - 1
    lambda_hat = trace.rows[-1].rq if math.isfinite(trace.rows[-1].rq) else trace.rows[-2].rq
    mu_hat = mu_from_lambda(lambda_hat, inst.exponent)

    if stop is StopReason.COLLAPSED_TO_ZERO:
        limit = CoeffVec(np.zeros(space.dim), space)
    else:
        w = min(opts.tail_window, iters) if iters > 0 else 0
        if w > 0:
            logs = [
                j * math.log(mu_hat) + math.log(trace.rows[j].norm)
                for j in range(iters - w + 1, iters + 1)
            ]
            scale = math.exp(sum(logs) / len(logs))
        else:
            scale = norm
        u_hat_final, _ = unit_representative(space, u)
        limit = CoeffVec(scale * u_hat_final, space)

    return trace, RunSummary(lambda_hat, mu_hat, limit, iters, converged, stop)


def check_monotonicity(trace: IterationTrace, mu_hat: float | None = None, slack: float = 1e-8):
    """All violations of the per-step monotonicity laws in a trace.

    Checks the Rayleigh quotient and the norm ratio with relative ``slack``,
    and, when ``mu_hat`` is given, the scaled-norm contraction
    norm_k <= norm_{k-1}/mu_hat with a 1e-6 relative tolerance (the wider
    slack covers the mu-estimator consistency, which is itself only tight
    to about 1e-6).
    """
    out: list[Violation] = []
    rows = trace.rows
    for k in range(1, len(rows)):
        a, b = rows[k - 1], rows[k]
        if math.isfinite(a.rq) and math.isfinite(b.rq) and b.rq > a.rq * (1.0 + slack):
            out.append(Violation(b.k, "rq", b.rq / a.rq - 1.0))
        if math.isfinite(a.ratio) and math.isfinite(b.ratio) and b.ratio > a.ratio * (1.0 + slack):
            out.append(Violation(b.k, "ratio", b.ratio / a.ratio - 1.0))
        if mu_hat is not None and b.norm > (a.norm / mu_hat) * (1.0 + 1e-6):
            out.append(Violation(b.k, "scaled_norm", b.norm * mu_hat / a.norm - 1.0))
    return out


def rough_mu(inst: ProblemInstance, u0, steps: int = 5) -> float:
    """Crude mu estimate from a few loose inverse-iteration steps."""
    opts = IterOptions(
        rtol=None,
        dtol=None,
        max_iters=steps,
        solver=SolverOptions(grad_tol=1e-6, max_iters=10_000),
    )
    _, summary = iterate(inst, u0, opts)
    return summary.mu_hat
