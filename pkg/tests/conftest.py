"""Shared fixtures: the expensive solves are session-scoped and reused."""

import numpy as np
import pytest

from n1ma.grid import grid_coordinates
from n1ma.harness import DeclaredBounds, FamilySpec
from n1ma.solver import (
    SolverOptions,
    TorusProblem,
    flat_problem,
    manufactured_problem,
    newton_solve,
)


@pytest.fixture(scope="session")
def flat_solve():
    problem = flat_problem((16, 16, 16))
    return problem, newton_solve(problem)


@pytest.fixture(scope="session")
def manufactured_solve():
    problem, u_star = manufactured_problem(0.4, (32, 32, 32))
    return problem, u_star, newton_solve(problem)


def _suite_problems():
    """A varied batch of small solvable problems (identity and non-identity
    backgrounds, constant and oscillatory densities)."""
    shape = (16, 16, 16)
    x1, x2, x3 = grid_coordinates(shape)
    eye = np.eye(3)
    problems = [flat_problem(shape)]

    def metric(scalar=None, entries=None):
        gamma = np.broadcast_to(eye, shape + (3, 3)).copy()
        if scalar is not None:
            gamma = scalar[..., None, None] * eye
        if entries:
            for (i, j), value in entries.items():
                gamma[..., i, j] = value
                gamma[..., j, i] = value
        return gamma

    densities = [
        np.exp(0.4 * np.cos(x1)),
        1.0 + 0.5 * np.cos(x2) * np.cos(x3),
        np.exp(0.3 * np.sin(x1) + 0.2 * np.cos(x2)),
        np.full(shape, 2.0),
    ]
    metrics = [
        metric(scalar=1.0 + 0.3 * np.cos(x1)),
        metric(entries={(0, 0): 1.5 + 0.1 * np.cos(x2), (1, 1): np.full(shape, 1.0),
                        (2, 2): np.full(shape, 0.8), (0, 1): 0.05 * np.sin(x3)}),
        metric(scalar=np.full(shape, 1.2)),
    ]
    for f in densities:
        problems.append(TorusProblem(gamma=eye, f=f))
    for gamma in metrics:
        problems.append(TorusProblem(gamma=gamma, f=np.ones(shape)))
    problems.append(
        TorusProblem(gamma=metrics[0], f=densities[0])
    )
    problems.append(
        TorusProblem(gamma=metrics[1], f=densities[2])
    )
    return problems


@pytest.fixture(scope="session")
def solve_suite(manufactured_solve):
    """At least ten converged solves across varied problems."""
    pairs = [(p, newton_solve(p)) for p in _suite_problems()]
    pairs.append((manufactured_solve[0], manufactured_solve[2]))
    return pairs


def acceptance_family(shape=(16, 16, 16)):
    """The committed six-fiber family used for the uniformity regression."""
    x1, x2, x3 = grid_coordinates(shape)
    eye = np.eye(3)
    gamma0 = np.broadcast_to(eye, shape + (3, 3)).copy()
    gamma1 = np.broadcast_to(eye, shape + (3, 3)).copy()
    gamma1[..., 0, 0] = 1.5 + 0.1 * np.cos(x1)
    gamma1[..., 1, 1] = 1.0
    gamma1[..., 2, 2] = 0.8
    gamma1[..., 0, 1] = gamma1[..., 1, 0] = 0.05 * np.sin(x2)
    f0 = np.ones(shape)
    f1 = np.exp(0.3 * np.cos(x2))
    return FamilySpec(
        gamma0=gamma0,
        gamma1=gamma1,
        f0=f0,
        f1=f1,
        t_grid=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
        bounds=DeclaredBounds(c_beta_omega=4.0, uniformity_budget=10.0),
        options=SolverOptions(),
    )


@pytest.fixture(scope="session")
def family_report():
    from n1ma.harness import family_run

    return family_run(acceptance_family())
