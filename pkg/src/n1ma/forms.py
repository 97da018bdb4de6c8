"""Constant-coefficient (p,q)-form algebra on C^n with a Hodge star.

Forms are stored densely on ordered multi-indices: a (p,q)-form is the sum of
``coeffs[I, J] * dz^I wedge dzbar^J`` over strictly increasing index tuples.
The metric form of a Hermitian positive matrix G is ``i * sum G_jk dz^j wedge
dzbar^k``; its top power divided by n! is the volume form.  The star operator
follows the conventions

    phi wedge star(conj(psi)) = <phi, psi> * vol,
    conj(star(psi)) = star(conj(psi)),
    star(star(psi)) = (-1)^(p+q) * psi,

with the inner product on 1-forms dual to the metric (no extra factor of 2).
Dimensions are capped at n <= 6: all index sets stay tiny, so dense storage
and cached sign tables beat any sparse cleverness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DomainError

__all__ = [
    "PQForm",
    "one_one_form",
    "euclidean_metric",
    "volume_coefficient",
    "hodge_star",
    "inner_product",
    "hat_identity_residual",
    "frame_value",
    "weak_positivity_margin",
    "EquivalenceReport",
    "equivalence_suite",
]

_MAX_N = 6


@lru_cache(maxsize=None)
def _combos(n, p):
    return tuple(combinations(range(n), p))


@lru_cache(maxsize=None)
def _combo_rank(n, p):
    return {c: i for i, c in enumerate(_combos(n, p))}


def _merge(a, b):
    """Sign and sorted union of two disjoint increasing tuples (0 if overlap)."""
    if set(a) & set(b):
        return 0, None
    inversions = sum(1 for x in a for y in b if y < x)
    return (-1) ** inversions, tuple(sorted(a + b))


@lru_cache(maxsize=None)
def _merge_table(n, p1, p2):
    """Index/sign tables for merging p1- and p2-combos into (p1+p2)-combos."""
    c1, c2 = _combos(n, p1), _combos(n, p2)
    rank = _combo_rank(n, p1 + p2)
    idx = np.full((len(c1), len(c2)), -1, dtype=np.intp)
    sgn = np.zeros((len(c1), len(c2)), dtype=np.int8)
    for a, left in enumerate(c1):
        for b, right in enumerate(c2):
            s, merged = _merge(left, right)
            if s:
                idx[a, b] = rank[merged]
                sgn[a, b] = s
    return idx, sgn


@lru_cache(maxsize=None)
def _complement_table(n, p):
    """For each p-combo: rank of its complement among (n-p)-combos and the
    sign of dz^I wedge dz^comp(I) relative to dz^(1..n)."""
    rank = _combo_rank(n, n - p)
    full = set(range(n))
    comp_idx = np.empty(len(_combos(n, p)), dtype=np.intp)
    comp_sgn = np.empty(len(_combos(n, p)), dtype=np.int8)
    for a, left in enumerate(_combos(n, p)):
        right = tuple(sorted(full - set(left)))
        s, _ = _merge(left, right)
        comp_idx[a] = rank[right]
        comp_sgn[a] = s
    return comp_idx, comp_sgn


@dataclass(frozen=True)
class PQForm:
    """A (p,q)-form with constant complex coefficients on ordered indices."""

    n: int
    p: int
    q: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 2 <= self.n <= _MAX_N:
            raise DomainError(f"PQForm: n={self.n} outside 2..{_MAX_N}")
        if not (0 <= self.p <= self.n and 0 <= self.q <= self.n):
            raise DomainError(f"PQForm: bidegree ({self.p},{self.q}) out of range")
        want = (len(_combos(self.n, self.p)), len(_combos(self.n, self.q)))
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != want:
            raise DomainError(f"PQForm: coefficient shape {arr.shape}, expected {want}")
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls, n, p, q):
        shape = (len(_combos(n, p)), len(_combos(n, q)))
        return cls(n, p, q, np.zeros(shape, dtype=complex))

    @classmethod
    def basis(cls, n, holo, anti):
        """The basis form dz^holo wedge dzbar^anti (indices 0-based, increasing)."""
        holo, anti = tuple(holo), tuple(anti)
        form = cls.zero(n, len(holo), len(anti))
        form.coeffs[_combo_rank(n, len(holo))[holo], _combo_rank(n, len(anti))[anti]] = 1.0
        return form

    # -- linear structure ---------------------------------------------------

    def __add__(self, other):
        self._check_same_space(other)
        return PQForm(self.n, self.p, self.q, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_same_space(other)
        return PQForm(self.n, self.p, self.q, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return PQForm(self.n, self.p, self.q, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def _check_same_space(self, other):
        if (self.n, self.p, self.q) != (other.n, other.p, other.q):
            raise DomainError("PQForm: mixed bidegrees in a linear combination")

    # -- algebra ------------------------------------------------------------

    def wedge(self, other):
        """Graded-commutative exterior product."""
        if self.n != other.n:
            raise DomainError("PQForm.wedge: mismatched ambient dimension")
        p, q = self.p + other.p, self.q + other.q
        if p > self.n or q > self.n:
            raise DomainError("PQForm.wedge: degree overflow")
        idx_h, sgn_h = _merge_table(self.n, self.p, other.p)
        idx_a, sgn_a = _merge_table(self.n, self.q, other.q)
        # term products with the sign from moving other's dz block past our dzbar block
        t = np.einsum("ab,cd->acbd", self.coeffs, other.coeffs)
        t *= sgn_h[:, :, None, None] * sgn_a[None, None, :, :]
        t *= (-1) ** (self.q * other.p)
        out = np.zeros((len(_combos(self.n, p)) + 1, len(_combos(self.n, q)) + 1), dtype=complex)
        np.add.at(
            out,
            (
                np.broadcast_to(idx_h[:, :, None, None], t.shape),
                np.broadcast_to(idx_a[None, None, :, :], t.shape),
            ),
            t,
        )
        return PQForm(self.n, p, q, out[:-1, :-1])  # drop the overlap bin at -1

    def conjugate(self):
        """Complex conjugate form, of bidegree (q, p)."""
        sign = (-1) ** (self.p * self.q)
        return PQForm(self.n, self.q, self.p, sign * self.coeffs.conj().T)

    def is_real(self, tol=1e-12):
        if self.p != self.q:
            return False
        scale = max(1.0, self.max_norm())
        return bool(np.abs(self.conjugate().coeffs - self.coeffs).max() <= tol * scale)

    def max_norm(self):
        return float(np.abs(self.coeffs).max())


def one_one_form(matrix):
    """The (1,1)-form ``i * sum matrix[j,k] dz^j wedge dzbar^k``."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("forms.one_one_form: need a square matrix")
    return PQForm(m.shape[0], 1, 1, 1j * m)


def euclidean_metric(n):
    return one_one_form(np.eye(n))


@lru_cache(maxsize=None)
def _euclidean_power(n, k):
    """omega^k for the euclidean metric, computed by the wedge chain."""
    omega = euclidean_metric(n)
    out = PQForm.basis(n, (), ())
    for _ in range(k):
        out = out.wedge(omega)
    return out


@lru_cache(maxsize=None)
def _euclidean_volume_coefficient(n):
    """Coefficient of omega^n/n! on dz^(1..n) wedge dzbar^(1..n), euclidean."""
    top = _euclidean_power(n, n)
    return complex(top.coeffs[0, 0]) / math.factorial(n)


def _metric_inverse(metric):
    g = np.asarray(metric, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DomainError("forms: metric must be a square matrix")
    if not np.allclose(g, g.conj().T):
        raise DomainError("forms: metric must be Hermitian")
    eigs = np.linalg.eigvalsh(g)
    if eigs.min() <= 0:
        raise DomainError("forms: metric is not positive definite")
    return np.linalg.inv(g)


def volume_coefficient(metric):
    """Coefficient of the volume form omega^n/n! on the full top basis form."""
    g = np.asarray(metric, dtype=complex)
    _metric_inverse(g)  # validation
    return complex(np.linalg.det(g)) * _euclidean_volume_coefficient(g.shape[0])


def _gram(n, size, m1):
    """Gram matrix of size-combos under a 1-form Gram matrix m1."""
    cs = _combos(n, size)
    if size == 0:
        return np.ones((1, 1), dtype=complex)
    out = np.empty((len(cs), len(cs)), dtype=complex)
    for a, left in enumerate(cs):
        for b, right in enumerate(cs):
            out[a, b] = np.linalg.det(m1[np.ix_(left, right)])
    return out


def inner_product(a, b, metric):
    """Hermitian inner product of two (p,q)-forms under the metric."""
    a._check_same_space(b)
    u = _metric_inverse(metric)
    g_h = _gram(a.n, a.p, u.T)   # <dz^j, dz^k> = inv(G)[k, j]
    g_a = _gram(a.n, a.q, u)     # <dzbar^j, dzbar^k> = inv(G)[j, k]
    return complex(np.sum(a.coeffs * (g_h @ b.coeffs.conj() @ g_a.T)))


def hodge_star(a, metric):
    """Hodge star of a (p,q)-form, a (n-q, n-p)-form.

    Determined by ``phi wedge star(a) = <phi, conj(a)> vol`` over all
    (q,p)-forms phi; since basis forms pair with exactly one complementary
    basis form, the solve reduces to a signed permutation.
    """
    u = _metric_inverse(metric)
    n, p, q = a.n, a.p, a.q
    vol = volume_coefficient(metric)
    conj_a = a.conjugate()  # (q, p)
    g_h = _gram(n, q, u.T)
    g_a = _gram(n, p, u)
    rhs = (g_h @ conj_a.coeffs.conj() @ g_a.T) * vol  # <e_(I,J), conj(a)> * vol
    comp_h, sgn_h = _complement_table(n, q)
    comp_a, sgn_a = _complement_table(n, p)
    # wedge coefficient of e_(I,J) with its complementary basis form
    w = (
        sgn_h[:, None].astype(float)
        * sgn_a[None, :].astype(float)
        * (-1) ** (p * (n - q))
    )
    out = PQForm.zero(n, n - q, n - p)
    out.coeffs[np.ix_(comp_h, comp_a)] = rhs / w
    return out


def hat_identity_residual(h, n):
    """Max-norm residual of the star identity linking the hat operator to
    the wedge with omega^(n-2).

    For the constant (1,1)-form with Hermitian coefficient matrix ``h`` and
    the euclidean metric, compares

        star(form wedge omega^(n-2)) / (n-2)!... normalised as
        (1/(n-1)!) star(form wedge omega^(n-2))

    against ``((trace h) * omega - form) / (n-1)``.
    """
    h = np.asarray(h, dtype=complex)
    if n < 3:
        raise DomainError("forms.hat_identity_residual: need n >= 3")
    if h.shape != (n, n) or not np.allclose(h, h.conj().T):
        raise DomainError("forms.hat_identity_residual: h must be n x n Hermitian")
    form = one_one_form(h)
    omega = euclidean_metric(n)
    lhs = hodge_star(form.wedge(_euclidean_power(n, n - 2)), np.eye(n)) * (
        1.0 / math.factorial(n - 1)
    )
    rhs = (np.trace(h).real * omega - form) * (1.0 / (n - 1))
    return (lhs - rhs).max_norm()


# ---------------------------------------------------------------------------
# Weak positivity by frame sampling
# ---------------------------------------------------------------------------


def _frame_multivector(vectors):
    """The (k,k) multivector prod_k i v^k wedge conj(v^k) in the dual algebra.

    Multivectors obey the same exterior algebra as forms, so PQForm is reused
    with coefficients over the coordinate vector basis.
    """
    n = len(vectors[0])
    out = PQForm.basis(n, (), ())
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        out = out.wedge(PQForm(n, 1, 1, 1j * np.outer(v, v.conj())))
    return out


def frame_value(psi, vectors):
    """Evaluate a real (n-1,n-1)-form on a decomposable frame of n-1 vectors,
    normalized by the product of the squared vector norms."""
    n = psi.n
    if (psi.p, psi.q) != (n - 1, n - 1):
        raise DomainError("forms.frame_value: form must have bidegree (n-1, n-1)")
    if len(vectors) != n - 1:
        raise DomainError(f"forms.frame_value: need {n - 1} frame vectors")
    norm2 = 1.0
    for v in vectors:
        norm2 *= float(np.vdot(v, v).real)
    if norm2 == 0.0:
        return 0.0
    mu = _frame_multivector(vectors)
    # the raw index pairing differs from the positively oriented wedge
    # pairing by i^(2(n-1)) from the i-factors on both sides
    sign = (-1) ** (n - 1)
    return sign * float(np.sum(psi.coeffs * mu.coeffs).real) / norm2


def weak_positivity_margin(psi, samples=200, rng=None, extra_frames=(), refine_steps=80):
    """Sampled lower bound witness for weak positivity of an (n-1,n-1)-form.

    Minimizes the normalized frame evaluation over ``samples`` random frames
    (plus any caller-supplied frames) followed by a local random-perturbation
    refinement of the best candidate.  A nonnegative margin is evidence of
    weak positivity at sampling confidence; a negative margin is a certificate
    against it.
    """
    n = psi.n
    if (psi.p, psi.q) != (n - 1, n - 1):
        raise DomainError("forms.weak_positivity_margin: wrong bidegree")
    if not psi.is_real(1e-9):
        raise DomainError("forms.weak_positivity_margin: form must be real")
    rng = np.random.default_rng(rng)

    def random_frame():
        f = rng.standard_normal((n - 1, n)) + 1j * rng.standard_normal((n - 1, n))
        return [v / np.linalg.norm(v) for v in f]

    best_val, best_frame = np.inf, None
    for frame in list(extra_frames) + [random_frame() for _ in range(samples)]:
        val = frame_value(psi, frame)
        if val < best_val:
            best_val, best_frame = val, [np.asarray(v, dtype=complex) for v in frame]

    sigma = 0.5
    for _ in range(refine_steps):
        k = rng.integers(n - 1)
        trial = [v.copy() for v in best_frame]
        bump = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        trial[k] = trial[k] + sigma * bump
        trial[k] /= np.linalg.norm(trial[k])
        val = frame_value(psi, trial)
        if val < best_val:
            best_val, best_frame = val, trial
        else:
            sigma = max(sigma * 0.85, 1e-3)
    return float(best_val)


# ---------------------------------------------------------------------------
# Agreement suite for the three positivity characterizations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    """Verdicts of the eigenvalue, hyperplane and weak-positivity tests."""

    lambda_hat_min: float
    hyperplane_min_analytic: float
    hyperplane_min_sampled: float
    weak_margin: float
    eigenvalue_ok: bool
    hyperplane_ok: bool
    weak_ok: bool

    @property
    def agree(self):
        return self.eigenvalue_ok == self.hyperplane_ok == self.weak_ok


def equivalence_suite(h, n, tolerance=1e-9, samples=32, rng=None):
    """Cross-check the three characterizations of hat-positivity for the
    quadratic with Hessian ``h``.

    (1) min of the hat transform of the eigenvalues; (2) minimal trace of the
    compression to a complex hyperplane, whose analytic value is the sum of
    the n-1 smallest eigenvalues; (3) the sampled weak-positivity margin of
    ``form wedge omega^(n-2)``, normalized by (n-2)! so that coordinate
    frames of eigenvectors reproduce the hat eigenvalues exactly.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (n, n) or not np.allclose(h, h.conj().T):
        raise DomainError("forms.equivalence_suite: h must be n x n Hermitian")
    rng = np.random.default_rng(rng)
    lam, vecs = np.linalg.eigh(h)

    lam_hat_min = float((lam.sum() - lam).min())
    analytic = float(lam.sum() - lam.max())

    sampled = np.inf
    for _ in range(samples):
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w /= np.linalg.norm(w)
        sampled = min(sampled, float((np.trace(h) - w.conj() @ h @ w).real))

    psi = one_one_form(h).wedge(_euclidean_power(n, n - 2))
    # the frame pairing sums H[j,k] v_j conj(v_k), i.e. the quadratic form of
    # the transpose, so the extremal frames are the conjugated eigenvectors
    eigen_frames = [
        [vecs[:, j].conj() for j in range(n) if j != i] for i in range(n)
    ]
    margin = weak_positivity_margin(
        psi, samples=samples, rng=rng, extra_frames=eigen_frames, refine_steps=0
    ) / math.factorial(n - 2)

    return EquivalenceReport(
        lambda_hat_min=lam_hat_min,
        hyperplane_min_analytic=analytic,
        hyperplane_min_sampled=float(sampled),
        weak_margin=margin,
        eigenvalue_ok=lam_hat_min >= -tolerance,
        hyperplane_ok=analytic >= -tolerance,
        weak_ok=margin >= -tolerance,
    )
