"""Damped Newton-Krylov solver for the determinant equation on the flat torus.

Solves ``det(alpha_u) = c * f`` for a scalar field u on [0, 2pi)^n and the
compatibility constant c, where

    alpha_u = Gamma + ((trace H_u) I - H_u) / (n - 1)

and H_u is the complex Hessian of the translation-invariant reduction (one
quarter of the real Hessian).  The equation determines u up to an additive
constant, so iterates are kept mean-zero, log(c) is eliminated each step as
the grid mean of ``log det alpha_u - log f``, and the returned solution is
shifted to ``sup u = 0``.

The Newton correction solves the exact linearization of the log-form residual
with GMRES, preconditioned by the constant-coefficient symbol of the mean
linearization tensor.  A backtracking line search enforces both residual
decrease and an eigenvalue floor on alpha; if the cone cannot be entered from
u = 0 directly, a homotopy from the solvable density det(Gamma) is attempted.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConeExitError, DomainError, PositivityError
from .grid import _validate_shape, _wavenumbers, complex_hessian, grid_coordinates, spectral_gradient

__all__ = [
    "SolverOptions",
    "TorusProblem",
    "SolveResult",
    "alpha_field",
    "residual",
    "linearized_apply",
    "newton_solve",
    "diagnostics",
    "flat_problem",
    "manufactured_problem",
]


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_iterations: int = 50
    max_backtracks: int = 40
    positivity_scale: float = 1e-6  # floor = scale * min eigenvalue of Gamma
    krylov_rtol: float = 1e-10
    krylov_maxiter: int = 200
    homotopy_steps: int = 8

    def __post_init__(self):
        if self.tolerance <= 0 or self.positivity_scale <= 0:
            raise DomainError("SolverOptions: tolerances must be positive")


@dataclass(frozen=True)
class TorusProblem:
    """Discretized problem data: background field Gamma and density f."""

    gamma: np.ndarray  # shape grid + (n, n), symmetric positive definite
    f: np.ndarray      # shape grid, strictly positive
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        f = np.asarray(getattr(self.f, "data", self.f), dtype=float)
        shape = _validate_shape(f.shape)
        n = len(shape)
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.shape == (n, n):
            gamma = np.broadcast_to(gamma, shape + (n, n)).copy()
        if gamma.shape != shape + (n, n):
            raise DomainError(
                f"TorusProblem: gamma shape {gamma.shape}, expected {shape + (n, n)}"
            )
        if not np.allclose(gamma, np.swapaxes(gamma, -1, -2)):
            raise DomainError("TorusProblem: gamma must be symmetric")
        gamma_eigs = np.linalg.eigvalsh(gamma)
        if gamma_eigs[..., 0].min() <= 0:
            raise DomainError("TorusProblem: gamma must be positive definite on the grid")
        if f.min() <= 0:
            raise DomainError("TorusProblem: density must be strictly positive")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "_min_gamma_eig", float(gamma_eigs[..., 0].min()))
        object.__setattr__(self, "_max_gamma_eig", float(gamma_eigs[..., -1].max()))

    @property
    def n(self):
        return self.f.ndim

    @property
    def shape(self):
        return self.f.shape

    @property
    def positivity_floor(self):
        return self.options.positivity_scale * self._min_gamma_eig

    @property
    def gamma_eig_range(self):
        return self._min_gamma_eig, self._max_gamma_eig

    def with_density(self, f):
        return dataclasses.replace(self, f=np.asarray(f, dtype=float))


@dataclass(frozen=True)
class SolveResult:
    """Solution field (sup u = 0), constant and solve diagnostics."""

    u: np.ndarray
    c: float
    residual_history: tuple
    iterations: int
    converged: bool
    failure: str | None = None
    min_alpha_eig: float = np.nan
    grad_sup: float = np.nan
    hess_sup: float = np.nan
    osc: float = np.nan

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else np.inf


def _as_field(u):
    return u.data if hasattr(u, "data") and not isinstance(u, np.ndarray) else np.asarray(u, dtype=float)


def alpha_field(problem, u):
    """The matrix field Gamma + ((trace H) I - H) / (n - 1) for the field u."""
    h = complex_hessian(_as_field(u))
    return _alpha_from_hessian(problem, h)


def _alpha_from_hessian(problem, h):
    n = problem.n
    tr = np.trace(h, axis1=-2, axis2=-1)
    eye = np.eye(n)
    return problem.gamma + (tr[..., None, None] * eye - h) / (n - 1)


def _alpha_state(problem, u):
    """(alpha, eigenvalues, log det) with a positivity check."""
    alpha = alpha_field(problem, u)
    eigs = np.linalg.eigvalsh(alpha)
    min_eig = float(eigs[..., 0].min())
    if min_eig <= 0:
        raise PositivityError(
            f"solver: alpha lost positive definiteness (min eigenvalue {min_eig:.3e})"
        )
    return alpha, eigs, np.log(eigs).sum(axis=-1), min_eig


def residual(problem, u, log_c):
    """Log-form residual ``log det alpha_u - log_c - log f`` on the grid.

    Raises PositivityError when alpha_u is not positive definite somewhere;
    the caller is expected to damp its step.
    """
    _, _, logdet, _ = _alpha_state(problem, u)
    return logdet - log_c - np.log(problem.f)


def _linearization_tensor(problem, alpha):
    """Coefficient tensor of the linearized operator, positive definite."""
    n = problem.n
    ainv = np.linalg.inv(alpha)
    tr = np.trace(ainv, axis1=-2, axis2=-1)
    return (tr[..., None, None] * np.eye(n) - ainv) / (n - 1)


def linearized_apply(problem, u, v):
    """Directional derivative of ``log det alpha_u`` in the direction v."""
    alpha, _, _, _ = _alpha_state(problem, u)
    theta = _linearization_tensor(problem, alpha)
    hv = complex_hessian(_as_field(v))
    return np.einsum("...ij,...ij->...", theta, hv)


def _preconditioner(shape, theta_mean):
    """Inverse of the constant-coefficient symbol of the mean linearization."""
    k, _ = _wavenumbers(shape)
    d = len(shape)
    symbol = np.zeros(np.broadcast_shapes(*(k[i].shape for i in range(d))))
    for i in range(d):
        for j in range(d):
            symbol = symbol - 0.25 * theta_mean[i, j] * k[i] * k[j]
    symbol[(0,) * d] = 1.0

    def apply(vflat):
        v = vflat.reshape(shape)
        vh = np.fft.rfftn(v) / symbol
        vh[(0,) * d] = 0.0
        return np.fft.irfftn(vh, s=shape, axes=range(len(shape))).ravel()

    return apply


def _newton_loop(problem, u0):
    opts = problem.options
    shape = problem.shape
    floor = problem.positivity_floor
    logf = np.log(problem.f)
    size = int(np.prod(shape))

    u = _as_field(u0).copy()
    u -= u.mean()
    history = []

    try:
        alpha, eigs, logdet, min_eig = _alpha_state(problem, u)
    except PositivityError as exc:
        raise ConeExitError(f"solver.newton_solve: {exc}", history) from None
    if min_eig < floor:
        raise ConeExitError(
            f"solver.newton_solve: initial iterate below positivity floor ({min_eig:.3e} < {floor:.3e})",
            history,
        )
    log_c = float((logdet - logf).mean())
    res_field = logdet - log_c - logf
    res = float(np.abs(res_field).max())
    history.append(res)

    for iteration in range(opts.max_iterations):
        if res <= opts.tolerance:
            return u, log_c, history, iteration, True, None

        theta = _linearization_tensor(problem, alpha)
        theta_min = float(np.linalg.eigvalsh(theta)[..., 0].min())
        if theta_min <= 0:
            raise PositivityError(
                f"solver: linearization lost ellipticity (min eigenvalue {theta_min:.3e})"
            )

        def matvec(vflat):
            v = vflat.reshape(shape)
            v = v - v.mean()
            lv = np.einsum("...ij,...ij->...", theta, complex_hessian(v))
            return (lv - lv.mean()).ravel()

        op = LinearOperator((size, size), matvec=matvec, dtype=float)
        precond = LinearOperator(
            (size, size), matvec=_preconditioner(shape, theta.mean(axis=tuple(range(len(shape))))), dtype=float
        )
        rhs = -res_field.ravel()
        delta_flat, _ = gmres(
            op,
            rhs,
            M=precond,
            rtol=opts.krylov_rtol,
            atol=0.0,
            restart=opts.krylov_maxiter,
            maxiter=1,
        )
        # GMRES may report stagnation once the preconditioned residual hits
        # the rounding floor; judge the correction by its true residual.
        lin_res = np.linalg.norm(op.matvec(delta_flat) - rhs) / np.linalg.norm(rhs)
        if lin_res > 1e-3:
            raise PositivityError(
                f"solver: Krylov correction unusable (relative residual {lin_res:.2e})"
            )
        delta = delta_flat.reshape(shape)
        delta -= delta.mean()

        step = 1.0
        accepted = False
        for _ in range(opts.max_backtracks + 1):
            trial = u + step * delta
            try:
                alpha_t, eigs_t, logdet_t, min_eig_t = _alpha_state(problem, trial)
            except PositivityError:
                step *= 0.5
                continue
            if min_eig_t < floor:
                step *= 0.5
                continue
            log_c_t = float((logdet_t - logf).mean())
            res_field_t = logdet_t - log_c_t - logf
            res_t = float(np.abs(res_field_t).max())
            if res_t < res:
                u = trial - trial.mean()
                alpha, eigs, logdet = alpha_t, eigs_t, logdet_t
                log_c, res_field, res = log_c_t, res_field_t, res_t
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise ConeExitError(
                "solver.newton_solve: line search exhausted without an admissible step",
                history,
            )
        history.append(res)

    converged = res <= opts.tolerance
    failure = None if converged else "max-iterations"
    return u, log_c, history, opts.max_iterations, converged, failure


def _package(problem, u, log_c, history, iterations, converged, failure):
    u_out = u - u.max()
    result = SolveResult(
        u=u_out,
        c=float(np.exp(log_c)),
        residual_history=tuple(history),
        iterations=iterations,
        converged=converged,
        failure=failure,
    )
    return diagnostics(problem, result)


def newton_solve(problem, u0=None):
    """Solve the problem; falls back to a density homotopy on cone exit.

    Returns a SolveResult with ``sup u = 0``.  Non-convergence within the
    iteration budget yields a failure result with the residual history;
    an unreachable positivity floor raises ConeExitError.
    """
    start = np.zeros(problem.shape) if u0 is None else _as_field(u0)
    try:
        return _package(problem, *_newton_loop(problem, start))
    except ConeExitError as exc:
        if u0 is not None:
            raise
        first_error = exc

    # Homotopy from the exactly solvable density det(Gamma) (u = 0, c = 1).
    steps = problem.options.homotopy_steps
    log_target = np.log(problem.f)
    log_base = np.log(np.linalg.eigvalsh(problem.gamma)).sum(axis=-1)
    u = np.zeros(problem.shape)
    outcome = None
    for s in np.linspace(1.0 / steps, 1.0, steps):
        stage = problem.with_density(np.exp(s * log_target + (1 - s) * log_base))
        try:
            outcome = _newton_loop(stage, u)
        except ConeExitError:
            raise ConeExitError(
                "solver.newton_solve: homotopy could not reach the target density",
                first_error.history,
            ) from None
        u = outcome[0]
        if not outcome[4]:
            return _package(stage, *outcome)
    return _package(problem, *outcome)


def diagnostics(problem, result):
    """Fill the gradient, Hessian, oscillation and cone-margin diagnostics."""
    u = result.u
    grad = spectral_gradient(u)
    grad_sup = float(np.sqrt((grad**2).sum(axis=-1)).max()) / 2.0
    hess_eigs = np.linalg.eigvalsh(complex_hessian(u))
    hess_sup = float(np.abs(hess_eigs).max())
    alpha_eigs = np.linalg.eigvalsh(alpha_field(problem, u))
    return dataclasses.replace(
        result,
        min_alpha_eig=float(alpha_eigs[..., 0].min()),
        grad_sup=grad_sup,
        hess_sup=hess_sup,
        osc=float(u.max() - u.min()),
    )


# ---------------------------------------------------------------------------
# Reference problems
# ---------------------------------------------------------------------------


def flat_problem(shape=(16, 16, 16), options=None):
    """Identity background and unit density: solved by u = 0, c = 1."""
    shape = _validate_shape(shape)
    n = len(shape)
    return TorusProblem(
        gamma=np.eye(n),
        f=np.ones(shape),
        options=options or SolverOptions(),
    )


def manufactured_problem(amplitude=0.4, shape=(32, 32, 32), options=None):
    """Forward-map fixture: density generated from a known solution.

    Returns ``(problem, u_star)`` where ``u_star = a (cos x1 + cos x2 cos x3)``
    shifted to sup = 0, and the density is ``det alpha_{u_star}`` so that the
    exact solution is (u_star, c = 1).
    """
    shape = _validate_shape(shape)
    if len(shape) != 3:
        raise DomainError("solver.manufactured_problem: fixture is three-dimensional")
    x1, x2, x3 = grid_coordinates(shape)
    u_star = amplitude * (np.cos(x1) + np.cos(x2) * np.cos(x3))
    base = TorusProblem(gamma=np.eye(3), f=np.ones(shape), options=options or SolverOptions())
    alpha = alpha_field(base, u_star)
    eigs = np.linalg.eigvalsh(alpha)
    if eigs[..., 0].min() < 0.2:
        raise DomainError(
            "solver.manufactured_problem: amplitude leaves the 0.2 eigenvalue margin"
        )
    problem = base.with_density(np.prod(eigs, axis=-1))
    return problem, u_star - u_star.max()
