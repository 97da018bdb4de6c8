"""Pointwise eigenvalue calculus for the hat-transform cone hierarchy.

A *spectrum* is a 1-D array of n >= 3 real Hessian eigenvalues.  The central
object is the linear hat transform

    hat(lam)_i = sum_k lam_k - lam_i,

which turns the positivity condition "(Delta u) * omega - dd^c u >= 0" into
entrywise inequalities on hat(lam).  The module provides the cone membership
predicates built from it (psh, m-subharmonic, hat-psh and the quasi variant
relative to a background metric), the determinant-type operators, and the two
arithmetic-geometric-mean comparison gaps used by the verification harness.

All functions broadcast over leading axes: an input of shape ``(..., n)`` is
treated as a stack of spectra.  Everything here is a pure function of its
arguments and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import DomainError

__all__ = [
    "hat_transform",
    "sigma_k",
    "elementary_symmetric",
    "is_psh",
    "is_m_subharmonic",
    "is_n1_psh",
    "is_quasi_n1_psh",
    "cone_membership",
    "ma_hat",
    "ConeParams",
    "HermitianPoint",
    "endomorphism_eigenvalues",
    "ma_n1",
    "amgm_trace_gap",
    "psh_product_gap",
    "DominationVerdict",
    "domination_witness",
    "sample_spectra",
    "sample_cone_points",
    "amgm_trace_gap_batch",
]

_PSD_SLACK = 1e-10


def _as_spectra(lam, min_n=3):
    """Validate and return an array of spectra along the last axis."""
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        raise DomainError("eigencone: a spectrum needs at least %d entries" % min_n)
    n = arr.shape[-1]
    if n < min_n:
        raise DomainError(
            f"eigencone: spectrum has {n} entries, need at least {min_n}"
        )
    if not np.all(np.isfinite(arr)):
        raise DomainError("eigencone: spectrum entries must be finite")
    return arr


def hat_transform(lam):
    """Return the hat transform, ``hat(lam)_i = sum(lam) - lam_i``.

    Linear in ``lam``; operates along the last axis.
    """
    arr = _as_spectra(lam)
    return arr.sum(axis=-1, keepdims=True) - arr


def elementary_symmetric(lam):
    """All elementary symmetric polynomials e_0..e_n of the last axis.

    Returns an array of shape ``lam.shape[:-1] + (n+1,)`` with ``[..., k]``
    equal to e_k.  Computed by the stable product recurrence.
    """
    arr = _as_spectra(lam, min_n=1)
    n = arr.shape[-1]
    out = np.zeros(arr.shape[:-1] + (n + 1,), dtype=float)
    out[..., 0] = 1.0
    for i in range(n):
        # multiply prod_{j<=i} (x + lam_j) into the coefficient table
        out[..., 1 : i + 2] += arr[..., i : i + 1] * out[..., 0 : i + 1].copy()
    return out


def sigma_k(lam, k):
    """k-th elementary symmetric polynomial e_k(lam), 1 <= k <= n."""
    arr = _as_spectra(lam)
    n = arr.shape[-1]
    if not 1 <= int(k) <= n:
        raise DomainError(f"eigencone.sigma_k: k={k} outside 1..{n}")
    return elementary_symmetric(arr)[..., int(k)]


def is_psh(lam, tolerance=0.0):
    """Membership in the plurisubharmonic cone: min lam_i >= -tolerance."""
    arr = _as_spectra(lam)
    return arr.min(axis=-1) >= -tolerance


def is_m_subharmonic(lam, m, tolerance=0.0):
    """Membership in the m-subharmonic cone: e_k >= -tolerance for k = 1..m."""
    arr = _as_spectra(lam)
    n = arr.shape[-1]
    if not 1 <= int(m) <= n:
        raise DomainError(f"eigencone.is_m_subharmonic: m={m} outside 1..{n}")
    sig = elementary_symmetric(arr)
    return (sig[..., 1 : int(m) + 1] >= -tolerance).all(axis=-1)


def is_n1_psh(lam, tolerance=0.0):
    """Membership in the hat-positive cone: min hat(lam)_i >= -tolerance."""
    return hat_transform(lam).min(axis=-1) >= -tolerance


def is_quasi_n1_psh(lam, gamma, tolerance=0.0):
    """Quasi membership relative to background eigenvalues ``gamma``.

    Requires ``hat(lam)_i >= -(n-1) * gamma_i - tolerance`` for every i.
    """
    arr = _as_spectra(lam)
    g = np.asarray(gamma, dtype=float)
    if g.shape[-1] != arr.shape[-1]:
        raise DomainError("eigencone.is_quasi_n1_psh: gamma/spectrum size mismatch")
    if np.any(g <= 0):
        raise DomainError("eigencone.is_quasi_n1_psh: gamma entries must be positive")
    n = arr.shape[-1]
    return (hat_transform(arr) >= -(n - 1) * g - tolerance).all(axis=-1)


@dataclass(frozen=True)
class ConeParams:
    """Background eigenvalues and tolerance for the quasi cone test."""

    gamma: np.ndarray
    tolerance: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 1 or np.any(g <= 0) or not np.all(np.isfinite(g)):
            raise DomainError("ConeParams: gamma must be a 1-D positive vector")
        if self.tolerance < 0:
            raise DomainError("ConeParams: tolerance must be nonnegative")
        object.__setattr__(self, "gamma", g)


def cone_membership(lam, cone, tolerance=0.0, *, m=None, params=None):
    """Single entry point for the cone predicates.

    ``cone`` is one of ``"psh"``, ``"sh_m"`` (requires ``m``), ``"n1_psh"``
    or ``"quasi_n1_psh"`` (requires ``params``).  Returns a bool for a single
    spectrum, an array of bools for a stack.
    """
    if cone == "psh":
        out = is_psh(lam, tolerance)
    elif cone == "sh_m":
        if m is None:
            raise DomainError("eigencone.cone_membership: sh_m needs m")
        out = is_m_subharmonic(lam, m, tolerance)
    elif cone == "n1_psh":
        out = is_n1_psh(lam, tolerance)
    elif cone == "quasi_n1_psh":
        if params is None:
            raise DomainError("eigencone.cone_membership: quasi_n1_psh needs params")
        out = is_quasi_n1_psh(lam, params.gamma, max(tolerance, params.tolerance))
    else:
        raise DomainError(f"eigencone.cone_membership: unknown cone {cone!r}")
    return bool(out) if np.ndim(out) == 0 else out


def ma_hat(lam):
    """Determinant of the hat transform: prod_i (sum(lam) - lam_i)."""
    return hat_transform(lam).prod(axis=-1)


def _check_hermitian(name, a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"HermitianPoint: {name} must be a square matrix")
    if not np.allclose(a, a.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise DomainError(f"HermitianPoint: {name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class HermitianPoint:
    """Pointwise data (beta, omega, hess) for the determinant operator.

    ``beta`` and ``omega`` are Hermitian positive definite n x n matrices,
    ``hess`` is the Hermitian matrix of second derivatives at the point.
    """

    beta: np.ndarray
    omega: np.ndarray
    hess: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        beta = _check_hermitian("beta", self.beta)
        omega = _check_hermitian("omega", self.omega)
        hess = _check_hermitian("hess", self.hess)
        if not beta.shape == omega.shape == hess.shape:
            raise DomainError("HermitianPoint: matrix shapes differ")
        n = beta.shape[0]
        if n < 3:
            raise DomainError("HermitianPoint: dimension must be at least 3")
        for name, a in (("beta", beta), ("omega", omega)):
            if np.linalg.eigvalsh(a).min() <= 0:
                raise DomainError(f"HermitianPoint: {name} is not positive definite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "hess", hess)
        object.__setattr__(self, "n", n)


def _alpha_matrix(point):
    """alpha = beta + ((tr_omega hess) * omega - hess) / (n - 1)."""
    tr = np.trace(np.linalg.solve(point.omega, point.hess)).real
    return point.beta + (tr * point.omega - point.hess) / (point.n - 1)


def endomorphism_eigenvalues(point):
    """Eigenvalues of the endomorphism omega^{-1} alpha, ascending.

    Reduces the pencil (alpha, omega) by a Cholesky congruence
    ``A = L^{-1} alpha L^{-H}`` with ``omega = L L^H``; the eigenvalues of the
    Hermitian matrix A are those of omega^{-1} alpha.  Avoids forming the
    (generally non-Hermitian) product explicitly.
    """
    try:
        L = cholesky(point.omega, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by type
        raise DomainError(f"eigencone.ma_n1: omega is singular ({exc})")
    alpha = _alpha_matrix(point)
    y = solve_triangular(L, alpha, lower=True)
    a = solve_triangular(L, y.conj().T, lower=True).conj().T
    return np.linalg.eigvalsh(a)


def ma_n1(point):
    """Determinant of omega^{-1} alpha at a HermitianPoint.

    Scales like ``C**(-n)`` when omega is replaced by ``C * omega``.
    """
    return float(np.prod(endomorphism_eigenvalues(point)))


def amgm_trace_gap(point):
    """Trace-form arithmetic/geometric mean gap at a cone point.

    Returns ``tr_omega(beta + hess) - n * ma_n1(point)**(1/n)``, which is
    nonnegative whenever the form alpha is positive semidefinite because
    ``tr_omega(beta + hess) = tr_omega(alpha)`` and the gap is then AM-GM on
    the eigenvalues of omega^{-1} alpha.

    Raises DomainError when alpha fails positive semidefiniteness.
    """
    eigs = endomorphism_eigenvalues(point)
    scale = max(1.0, float(np.abs(eigs).max()))
    if eigs.min() < -_PSD_SLACK * scale:
        raise DomainError("eigencone.amgm_trace_gap: alpha is not positive semidefinite")
    eigs = np.clip(eigs, 0.0, None)
    trace = float(eigs.sum())
    return trace - point.n * float(np.prod(eigs)) ** (1.0 / point.n)


def psh_product_gap(lam):
    """Product comparison gap for an omega-psh spectrum.

    For ``1 + lam_i >= 0`` returns
    ``prod(1 + hat(lam)_i/(n-1)) - prod(1 + lam_i)``, which is nonnegative:
    each shifted hat entry is the arithmetic mean of the other ``1 + lam_j``.
    """
    arr = _as_spectra(lam)
    n = arr.shape[-1]
    if np.any(arr < -1 - 1e-15):
        raise DomainError("eigencone.psh_product_gap: needs 1 + lam_i >= 0")
    lhs = (1.0 + hat_transform(arr) / (n - 1)).prod(axis=-1)
    rhs = (1.0 + arr).prod(axis=-1)
    return lhs - rhs


@dataclass(frozen=True)
class DominationVerdict:
    """Outcome of the domination consistency check."""

    status: str  # "hypothesis-void" | "consistent" | "counterexample"
    index: tuple | None = None

    def __str__(self):
        if self.status == "counterexample":
            return f"counterexample@{self.index}"
        return self.status


def domination_witness(u, v, c, ma_u, ma_v, tolerance=1e-12):
    """Consistency check for the domination principle on grid data.

    The principle states: if ``ma_u <= c * ma_v`` holds on ``{u < v}`` for
    some ``c in [0, 1)``, then ``u >= v`` everywhere.  Given sampled fields,
    the checker looks at ``S = {u < v - tolerance}``:

    * S empty: the premise is vacuous, returns ``hypothesis-void``;
    * S nonempty but the pointwise hypothesis fails somewhere on S: the
      principle does not apply, returns ``consistent``;
    * S nonempty and the hypothesis holds throughout S: the conclusion is
      violated by the data, returns a ``counterexample`` with the first
      offending grid index.
    """
    if not 0 <= c < 1:
        raise DomainError("eigencone.domination_witness: c must lie in [0, 1)")
    u, v, ma_u, ma_v = (
        np.asarray(getattr(x, "data", x), dtype=float) for x in (u, v, ma_u, ma_v)
    )
    if not u.shape == v.shape == ma_u.shape == ma_v.shape:
        raise DomainError("eigencone.domination_witness: fields on mismatched grids")
    below = u < v - tolerance
    if not below.any():
        return DominationVerdict("hypothesis-void")
    hypothesis = ma_u <= c * ma_v + tolerance
    if not hypothesis[below].all():
        return DominationVerdict("consistent")
    first = tuple(int(i) for i in np.argwhere(below & hypothesis)[0])
    return DominationVerdict("counterexample", first)


# ---------------------------------------------------------------------------
# Randomized sampling helpers used by the property suites and the CLI audits.
# ---------------------------------------------------------------------------


def sample_spectra(rng, count, n, low=-3.0, high=3.0):
    """Uniform random spectra of shape (count, n)."""
    return rng.uniform(low, high, size=(count, n))


def _random_hermitian(rng, count, n, scale=1.0):
    a = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    return scale * 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _random_hpd(rng, count, n, ridge=0.2):
    a = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    return a @ np.conj(np.swapaxes(a, -1, -2)) / n + ridge * np.eye(n)


def sample_cone_points(rng, count, n):
    """Random (beta, omega, hess) batches whose alpha form is PSD.

    Draws positive definite beta and omega and a PSD target alpha, then
    inverts the linear hat map to find the Hessian realizing that alpha:
    with ``S = alpha - beta`` and ``s = tr(omega^{-1} S)``, the matrix
    ``hess = s * omega - (n - 1) * S`` reproduces alpha exactly.
    Returns a dict with keys beta, omega, hess, alpha.
    """
    beta = _random_hpd(rng, count, n)
    omega = _random_hpd(rng, count, n)
    a = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    alpha = a @ np.conj(np.swapaxes(a, -1, -2)) / n  # PSD, occasionally near-singular
    s_mat = alpha - beta
    s = np.trace(np.linalg.solve(omega, s_mat), axis1=-2, axis2=-1).real
    hess = s[:, None, None] * omega - (n - 1) * s_mat
    return {"beta": beta, "omega": omega, "hess": hess, "alpha": alpha}


def _batched_endomorphism_eigs(alpha, omega):
    L = np.linalg.cholesky(omega)
    y = np.linalg.solve(L, alpha)
    a = np.conj(np.swapaxes(np.linalg.solve(L, np.conj(np.swapaxes(y, -1, -2))), -1, -2))
    return np.linalg.eigvalsh(a)


def amgm_trace_gap_batch(beta, omega, hess):
    """Vectorized trace-form AM-GM gap over stacked Hermitian triples."""
    n = beta.shape[-1]
    tr = np.trace(np.linalg.solve(omega, hess), axis1=-2, axis2=-1).real
    alpha = beta + (tr[..., None, None] * omega - hess) / (n - 1)
    eigs = np.clip(_batched_endomorphism_eigs(alpha, omega), 0.0, None)
    return eigs.sum(axis=-1) - n * np.prod(eigs, axis=-1) ** (1.0 / n)
