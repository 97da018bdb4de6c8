"""A-posteriori audits of solver output against the estimate structure.

Every converged solve is checked against computable forms of the a-priori
bounds: the trace-form upper bound on the normalizing constant, the mass
identity that makes it exact on the periodic grid, the pointwise AM-GM gap,
and the second-order ratio.  Families of problems along affine metric paths
and log-affine density paths are solved fiberwise and summarized in a report
with a uniformity statistic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConeExitError, DomainError
from .eigencone import domination_witness
from .grid import complex_hessian
from .solver import SolverOptions, TorusProblem, newton_solve

__all__ = [
    "c_upper_bound",
    "mass_identity_check",
    "amgm_pointwise_audit",
    "c2_ratio",
    "DeclaredBounds",
    "FamilySpec",
    "FiberRow",
    "EstimateReport",
    "family_run",
    "audit_solve",
    "domination_check",
]


def c_upper_bound(problem, result):
    """Trace-form upper bound on the constant and whether it holds.

    The bound is ``(mean(trace Gamma) / (n * mean(f^(1/n))))**n``: integrating
    the pointwise AM-GM inequality ``trace(alpha) >= n (c f)^(1/n)`` and using
    that the Hessian trace integrates to zero on the torus.  Equality holds
    exactly on the flat problem.
    """
    n = problem.n
    trace_gamma = np.trace(problem.gamma, axis1=-2, axis2=-1).mean()
    mass = (problem.f ** (1.0 / n)).mean()
    bound = float((trace_gamma / (n * mass)) ** n)
    satisfied = result.c <= bound + 1e-9 * max(1.0, bound)
    return bound, bool(satisfied)


def mass_identity_check(problem, result, tolerance=1e-10):
    """Grid quadrature of trace(Gamma + H_u) equals that of trace(Gamma).

    The Hessian term integrates to zero for any periodic field, so this is a
    linear identity independent of u being a solution.
    """
    h = complex_hessian(result.u)
    lhs = float((np.trace(problem.gamma, axis1=-2, axis2=-1) + np.trace(h, axis1=-2, axis2=-1)).mean())
    rhs = float(np.trace(problem.gamma, axis1=-2, axis2=-1).mean())
    return abs(lhs - rhs) <= tolerance * max(1.0, abs(rhs))


def amgm_pointwise_audit(problem, result):
    """Minimum over the grid of ``trace(Gamma + H_u) - n (c f)^(1/n)``.

    Nonnegative up to solver tolerance on converged output, with equality
    only where alpha has equal eigenvalues.
    """
    n = problem.n
    h = complex_hessian(result.u)
    trace = np.trace(problem.gamma, axis1=-2, axis2=-1) + np.trace(h, axis1=-2, axis2=-1)
    return float((trace - n * (result.c * problem.f) ** (1.0 / n)).min())


def c2_ratio(result):
    """Second-order diagnostic ``hess_sup / (grad_sup**2 + 1)``."""
    if not np.isfinite(result.grad_sup) or not np.isfinite(result.hess_sup):
        raise DomainError("harness.c2_ratio: result lacks diagnostics")
    return float(result.hess_sup / (result.grad_sup**2 + 1.0))


@dataclass(frozen=True)
class AuditRow:
    """All scalar audits of one converged solve."""

    c: float
    c_upper: float
    c_upper_ok: bool
    mass_ok: bool
    amgm_min_gap: float
    c2_ratio: float
    grad_sup: float
    osc: float

    @property
    def all_ok(self):
        return self.c_upper_ok and self.mass_ok and self.amgm_min_gap >= -1e-9


def audit_solve(problem, result):
    """Run the full scalar audit battery on a converged solve."""
    bound, ok = c_upper_bound(problem, result)
    return AuditRow(
        c=result.c,
        c_upper=bound,
        c_upper_ok=ok,
        mass_ok=mass_identity_check(problem, result),
        amgm_min_gap=amgm_pointwise_audit(problem, result),
        c2_ratio=c2_ratio(result),
        grad_sup=result.grad_sup,
        osc=result.osc,
    )


def domination_check(result_low, result_high, f_low, f_high, kappa):
    """Domination consistency for two solves of the same background.

    With ``f_low <= kappa * f_high`` pointwise (kappa < 1), instantiates the
    domination checker with the determinant fields reconstructed from the
    solved constants and densities.  A ``counterexample`` verdict would
    contradict the domination principle.
    """
    if not 0 < kappa < 1:
        raise DomainError("harness.domination_check: kappa must lie in (0, 1)")
    if np.any(f_low > kappa * f_high * (1 + 1e-12)):
        raise DomainError("harness.domination_check: f_low exceeds kappa * f_high")
    ma_low = result_low.c * np.asarray(f_low)
    ma_high = result_high.c * np.asarray(f_high)
    return domination_witness(
        result_low.u, result_high.u, kappa, ma_low, ma_high, tolerance=1e-9
    )


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeclaredBounds:
    """Declared geometric constants, validated against the family data."""

    c_beta_omega: float = 10.0
    g_beta: float = 1.0
    volume: float = 1.0
    uniformity_budget: float = 100.0

    def __post_init__(self):
        if self.c_beta_omega < 1 or self.g_beta < 1:
            raise DomainError("DeclaredBounds: comparison constants must be >= 1")


@dataclass(frozen=True)
class FamilySpec:
    """Affine metric path and log-affine density path over a parameter grid.

    ``gamma0``/``gamma1`` are endpoint matrix fields (the fiber at t uses
    ``(1-t) gamma0 + t gamma1``); ``f0``/``f1`` are endpoint densities
    combined as ``f0**(1-t) * f1**t``.  Endpoint positivity makes every fiber
    positive.  The declared comparison constant must majorize the eigenvalue
    range of every fiber metric against the identity.
    """

    gamma0: np.ndarray
    gamma1: np.ndarray
    f0: np.ndarray
    f1: np.ndarray
    t_grid: tuple
    bounds: DeclaredBounds = field(default_factory=DeclaredBounds)
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        ts = tuple(float(t) for t in self.t_grid)
        if not ts or min(ts) < 0 or max(ts) > 0.5:
            raise DomainError("FamilySpec: parameters must lie in [0, 1/2]")
        object.__setattr__(self, "t_grid", ts)
        probe = [self.fiber(t) for t in (min(ts), max(ts))]
        for prob in probe:
            lo, hi = prob.gamma_eig_range
            c = self.bounds.c_beta_omega
            if lo < 1.0 / c - 1e-12 or hi > c + 1e-12:
                raise DomainError(
                    "FamilySpec: declared comparison constant "
                    f"{c} does not majorize the metric eigenvalue range [{lo:.4g}, {hi:.4g}]"
                )

    def fiber(self, t):
        gamma = (1 - t) * np.asarray(self.gamma0, dtype=float) + t * np.asarray(
            self.gamma1, dtype=float
        )
        f = np.asarray(self.f0, dtype=float) ** (1 - t) * np.asarray(
            self.f1, dtype=float
        ) ** t
        return TorusProblem(gamma=gamma, f=f, options=self.options)


@dataclass(frozen=True)
class FiberRow:
    t: float
    converged: bool
    failure: str | None
    audit: AuditRow | None


@dataclass(frozen=True)
class EstimateReport:
    rows: tuple
    uniformity: float
    budget: float

    @property
    def within_budget(self):
        return np.isfinite(self.uniformity) and self.uniformity <= self.budget

    @property
    def all_converged(self):
        return all(row.converged for row in self.rows)

    def csv_rows(self):
        header = [
            "t", "c", "c_upper", "mass", "min_gap", "c2_ratio",
            "grad_sup", "osc", "converged",
        ]
        out = [header]
        for row in self.rows:
            if row.audit is None:
                out.append([repr(row.t)] + [""] * 7 + [str(row.converged)])
            else:
                a = row.audit
                out.append([
                    repr(row.t), repr(a.c), repr(a.c_upper), str(a.mass_ok),
                    repr(a.amgm_min_gap), repr(a.c2_ratio), repr(a.grad_sup),
                    repr(a.osc), str(row.converged),
                ])
        return out


def family_run(spec):
    """Solve every fiber and assemble the estimate report.

    Fiber failures are recorded in their row without aborting the run.  The
    uniformity statistic is ``sup_t (c_t + 1/c_t + osc_t)``; infinite when a
    fiber failed.
    """
    rows = []
    stat = 0.0
    for t in spec.t_grid:
        problem = spec.fiber(t)
        try:
            result = newton_solve(problem)
        except ConeExitError:
            rows.append(FiberRow(t, False, "cone-exit", None))
            stat = np.inf
            continue
        if not result.converged:
            rows.append(FiberRow(t, False, result.failure, None))
            stat = np.inf
            continue
        audit = audit_solve(problem, result)
        rows.append(FiberRow(t, True, None, audit))
        stat = max(stat, audit.c + 1.0 / audit.c + audit.osc)
    return EstimateReport(tuple(rows), float(stat), spec.bounds.uniformity_budget)
