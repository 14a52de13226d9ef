"""Small dense matrix numerics for O(n) and so(n), 2 <= n <= 8.

Matrices are plain ``numpy`` arrays. The ``as_*`` helpers validate the
invariants of the corresponding element type and return a float copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg

from .errors import BranchError, DimensionError, OrthogonalityError, SingularMatrixError, SkewnessError

SKEW_TOL = 1e-12
ORTHO_TOL = 1e-8
RANK_TOL = 1e-9
MAX_DIM = 8


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_square(m, n=None) -> np.ndarray:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise DimensionError(f"expected {n}x{n}, got {m.shape[0]}x{m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def skew_defect(a) -> float:
    a = np.asarray(a, dtype=float)
    return max_abs(a + a.T)


def orthogonality_defect(q) -> float:
    q = np.asarray(q, dtype=float)
    return max_abs(q.T @ q - np.eye(q.shape[0]))


def as_skew(a, tol=SKEW_TOL, n=None) -> np.ndarray:
    a = as_square(a, n)
    d = skew_defect(a)
    if d > tol:
        raise SkewnessError(d, tol)
    return a


def as_orthogonal(q, tol=ORTHO_TOL, n=None) -> np.ndarray:
    q = as_square(q, n)
    d = orthogonality_defect(q)
    if d > tol:
        raise OrthogonalityError(d, tol)
    return q


def exp_skew(a, tol=SKEW_TOL) -> np.ndarray:
    """Matrix exponential of a skew matrix by scaling and squaring.

    The scaled matrix has norm <= 1/2 and its Taylor series is summed until
    the terms fall below double precision.
    """
    a = as_skew(a, tol)
    n = a.shape[0]
    norm = np.linalg.norm(a, 2) if a.any() else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    b = a / (2.0 ** s)
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, 40):
        term = term @ b / k
        result = result + term
        if max_abs(term) < 1e-18:
            break
    for _ in range(s):
        result = result @ result
    return result


def polar_retract(m, min_singular=1e-10) -> np.ndarray:
    """Orthogonal factor of the polar decomposition ``m = Q S``."""
    m = as_square(m)
    u, sv, vt = np.linalg.svd(m)
    if sv[-1] <= min_singular:
        cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
        raise SingularMatrixError(float(sv[-1]), float(cond))
    return u @ vt


def log_orthogonal(q, tol=ORTHO_TOL, branch_tol=1e-6) -> np.ndarray:
    """Principal logarithm of an orthogonal matrix, returned as a skew matrix."""
    q = as_orthogonal(q, tol)
    eig = np.linalg.eigvals(q)
    gap = float(np.min(np.abs(eig + 1.0)))
    if gap < branch_tol:
        raise BranchError(f"eigenvalue within {gap:.2e} of -1; logarithm branch is ambiguous")
    if max_abs(q - np.eye(q.shape[0])) == 0.0:
        return np.zeros_like(q)
    a = np.real(scipy.linalg.logm(q))
    return 0.5 * (a - a.T)


def bracket(a, b) -> np.ndarray:
    return a @ b - b @ a


def _orthonormal_span(mats, tol=RANK_TOL):
    """Orthonormal basis (Frobenius inner product) of the span of ``mats``."""
    if not mats:
        return []
    n = mats[0].shape[0]
    rows = np.array([np.asarray(m, dtype=float).ravel() for m in mats])
    _, sv, vt = np.linalg.svd(rows, full_matrices=False)
    if sv.size == 0 or sv[0] < 1e-14:
        return []
    r = int(np.sum(sv > tol * sv[0]))
    return [vt[i].reshape(n, n) for i in range(r)]


def bracket_closure(gens, tol=RANK_TOL):
    """Orthonormal basis of the Lie algebra generated by ``gens``."""
    gens = [np.asarray(g, dtype=float) for g in gens]
    if not gens:
        return []
    n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n):
            raise DimensionError("generators must share the same dimension")
    basis = _orthonormal_span(gens, tol)
    # so(n) has dimension n(n-1)/2, so this terminates after few rounds
    while True:
        brackets = [bracket(a, b) for a, b in combinations(basis, 2)]
        new = _orthonormal_span(basis + brackets, tol)
        if len(new) == len(basis):
            return new
        basis = new


def bracket_closure_rank(gens, tol=RANK_TOL) -> int:
    return len(bracket_closure(gens, tol))


def span_contains(basis, mats, tol=RANK_TOL) -> float:
    """Largest relative residual of projecting ``mats`` onto the span of ``basis``."""
    worst = 0.0
    ortho = _orthonormal_span(list(basis), tol)
    for m in mats:
        m = np.asarray(m, dtype=float)
        norm = np.linalg.norm(m)
        if norm == 0:
            continue
        r = m.copy()
        for e in ortho:
            r = r - np.sum(r * e) * e
        worst = max(worst, float(np.linalg.norm(r) / norm))
    return worst


@dataclass(frozen=True)
class LieSubalgebra:
    """Subalgebra of so(n) given by generators; ``rank`` is its dimension."""

    n: int
    generators: tuple = ()
    rank: int = field(init=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DIM:
            raise DimensionError(f"dimension {self.n} outside 1..{MAX_DIM}")
        gens = tuple(as_skew(g, n=self.n) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "rank", bracket_closure_rank(list(gens)))
        if self.rank > self.n * (self.n - 1) // 2:
            raise DimensionError("rank exceeds dim so(n)")

    def basis(self):
        return bracket_closure(list(self.generators))

    def conjugate(self, phi) -> "LieSubalgebra":
        phi = as_orthogonal(phi, n=self.n)
        return LieSubalgebra(self.n, tuple(phi @ g @ phi.T for g in self.generators))


def random_skew(n, rng, scale=1.0) -> np.ndarray:
    m = rng.normal(size=(n, n)) * scale
    return 0.5 * (m - m.T)


def random_orthogonal(n, rng, special=False) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if special and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotation2(theta) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def block_diag(*blocks) -> np.ndarray:
    return scipy.linalg.block_diag(*blocks)


def element_order(g, max_order=64, tol=1e-6):
    """Smallest k <= max_order with g^k = I within ``tol``, else None."""
    g = np.asarray(g, dtype=float)
    p = np.eye(g.shape[0])
    for k in range(1, max_order + 1):
        p = p @ g
        if max_abs(p - np.eye(g.shape[0])) <= tol:
            return k
    return None
