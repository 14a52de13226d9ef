"""Fiber foliations, linearized vector fields and the K0 machinery."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import liecore
from .base import BasePath
from .bundle import ConnectionField, parallel_transport
from .errors import ConditionViolation, ConfigError, ConvergenceError, DomainError, OrthogonalityError
from .expr import Expr, base_vars, fiber_vars

INVARIANT_TOL = 1e-6


def _sample_vectors(n, count=32, seed=20240607):
    rng = np.random.default_rng(seed)
    vs = rng.normal(size=(count, n))
    return vs / np.linalg.norm(vs, axis=1, keepdims=True) * rng.uniform(0.3, 1.5, size=(count, 1))


@dataclass(frozen=True)
class GroupClosureSpec:
    """Declared closure of K0: an algebra containing the K0 algebra."""

    algebra: liecore.LieSubalgebra
    rational: tuple = ()


class FiberFoliation:
    """Infinitesimal foliation on a fiber given as the orbits of K0.

    ``invariants`` are scalar functions of a fiber vector that are constant
    on the leaves; they are how leaf membership is tested.
    """

    def __init__(self, algebra, invariants, finite_part=(), closure=None, check=True):
        self.algebra = algebra
        self.n = algebra.n
        self.invariants = list(invariants)
        self.finite_part = [liecore.as_orthogonal(q, n=self.n) for q in finite_part]
        self.closure = closure or GroupClosureSpec(algebra)
        if self.closure.algebra.n != self.n:
            raise ConfigError("closure algebra has the wrong fiber dimension")
        residual = liecore.span_contains(self.closure.algebra.basis(), algebra.generators)
        if residual > 1e-9:
            raise ConfigError(f"closure algebra does not contain the K0 algebra (residual {residual:.2e})")
        self._vectors = _sample_vectors(self.n)
        self._reference = [self.invariant_values(v) for v in self._vectors]
        if check:
            defect = self.leaf_fixing_defect()
            if defect > 1e-9:
                raise ConfigError(f"a K0 generator moves an invariant level set (defect {defect:.2e})")

    @classmethod
    def from_expressions(cls, algebra, sources, **kw):
        names = fiber_vars(algebra.n)
        exprs = [Expr(s, names) for s in sources]
        return cls(algebra, [lambda v, e=e: e(*v) for e in exprs], **kw)

    @property
    def generators(self):
        return list(self.algebra.generators)

    def invariant_values(self, v) -> np.ndarray:
        return np.array([f(v) for f in self.invariants])

    def invariant_defect(self, k, vectors=None) -> float:
        """Max change of any invariant under ``k`` on the sample vectors (or the first ``vectors`` of them)."""
        if vectors is None:
            vs, ref = self._vectors, self._reference
        elif isinstance(vectors, int):
            vs, ref = self._vectors[:vectors], self._reference[:vectors]
        else:
            vs = vectors
            ref = [self.invariant_values(v) for v in vs]
        worst = 0.0
        for v, r in zip(vs, ref):
            worst = max(worst, float(np.max(np.abs(self.invariant_values(k @ v) - r), initial=0.0)))
        return worst

    def leaf_fixing_defect(self, times=(0.37, 1.3, -2.1)) -> float:
        worst = 0.0
        gens = list(self.algebra.generators) + list(self.closure.algebra.generators)
        for g in gens:
            for t in times:
                worst = max(worst, self.invariant_defect(liecore.exp_skew(t * g)))
        for q in self.finite_part:
            worst = max(worst, self.invariant_defect(q))
        return worst


def _frequencies(g):
    ev = np.linalg.eigvals(g)
    return sorted({round(abs(float(w.imag)), 12) for w in ev if abs(w.imag) > 1e-12})


def rationality_warnings(fib: FiberFoliation, max_denominator=10 ** 6):
    """Continued-fraction test of rotation-frequency ratios against the declared closure."""
    out = []
    irrational = False
    for g in fib.algebra.generators:
        fr = _frequencies(g)
        for f in fr[1:]:
            r = f / fr[0]
            approx = Fraction(r).limit_denominator(max_denominator)
            if abs(r - approx.numerator / approx.denominator) > 1e-13:
                irrational = True
    grows = fib.closure.algebra.rank > fib.algebra.rank
    if irrational and not grows:
        out.append("a generator has irrational frequency ratios but the declared closure equals the algebra")
    if not irrational and grows and fib.algebra.rank == 1:
        out.append("generator frequencies look rational but the declared closure is larger than the algebra")
    for msg in out:
        warnings.warn(msg, stacklevel=2)
    return out


class GroupBundle:
    """The bundle of groups K: fibers generated by K0 (and finite parts) moved along the base.

    Generators at ``b`` are those at ``b0`` conjugated by transport along the
    straight covering-coordinate segment ``b0 -> b``.
    """

    def __init__(self, fib: FiberFoliation, conn: ConnectionField, b0, step=1e-2, closure=False):
        self.fib = fib
        self.conn = conn
        self.b0 = np.asarray(b0, dtype=float)
        self.step = step
        self.closure = closure
        self._cache = {}

    @property
    def base_generators(self):
        return list(self.fib.closure.algebra.generators if self.closure else self.fib.algebra.generators)

    def transport_from_b0(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        key = tuple(np.round(b, 9))
        if key not in self._cache:
            path = BasePath.line(self.conn.bundle.base, self.b0, b)
            if path.leafwise or self.conn.scope == "full":
                self._cache[key] = parallel_transport(path, self.conn.restricted("full"), self.step)
            else:
                self._cache[key] = np.eye(self.fib.n)
        return self._cache[key]

    def generators_at(self, b):
        p = self.transport_from_b0(b)
        return conjugate_group(p, self.base_generators)

    def element(self, b, coefficients) -> np.ndarray:
        gens = self.generators_at(b)
        a = sum((c * g for c, g in zip(coefficients, gens)), np.zeros((self.fib.n, self.fib.n)))
        return liecore.exp_skew(a)

    def random_element(self, b, rng, scale=1.5) -> np.ndarray:
        k = self.element(b, rng.uniform(-scale, scale, size=len(self.base_generators)))
        if self.fib.finite_part and rng.random() < 0.5:
            q = self.fib.finite_part[rng.integers(len(self.fib.finite_part))]
            p = self.transport_from_b0(b)
            k = k @ (p @ q @ p.T)
        return k

    def membership_defect(self, k) -> float:
        return self.fib.invariant_defect(k)


def conjugate_group(phi, gens):
    """Move algebra generators along a fiber isometry: ``A -> phi A phi^-1``."""
    phi = np.asarray(phi, dtype=float)
    d = liecore.orthogonality_defect(phi)
    if d > liecore.ORTHO_TOL:
        raise OrthogonalityError(d, liecore.ORTHO_TOL)
    return [phi @ np.asarray(g) @ phi.T for g in gens]


def homothety(lam, point):
    """Fiber scaling ``(b, v) -> (b, lam v)``."""
    if not lam > 0:
        raise DomainError(f"homothety factor must be positive, got {lam}")
    b, v = point
    return np.asarray(b, dtype=float), lam * np.asarray(v, dtype=float)


class TotalVectorField:
    """Vector field on the total space, given by expressions in ``x*`` (base) and ``v*`` (fiber)."""

    def __init__(self, base_dim, n, base_part, fiber_part, name=""):
        names = base_vars(base_dim) + fiber_vars(n)
        if len(base_part) != base_dim or len(fiber_part) != n:
            raise ConfigError(f"field {name!r} needs {base_dim} base and {n} fiber components")
        self.base_dim = base_dim
        self.n = n
        self.name = name
        self._base = [Expr(s, names) for s in base_part]
        self._fiber = [Expr(s, names) for s in fiber_part]
        xs = set(base_vars(base_dim))
        self.base_free = not any(e.used & xs for e in self._base + self._fiber)

    def base(self, b, v) -> np.ndarray:
        args = (*b, *v)
        return np.array([e(*args) for e in self._base])

    def fiber(self, b, v) -> np.ndarray:
        args = (*b, *v)
        return np.array([e(*args) for e in self._fiber])


class LinearizedField:
    """Linear-in-the-fiber vector field: base velocity at the zero section and a fiber matrix per base point."""

    def __init__(self, base_part, matrix_at, residual=0.0):
        self._base_part = base_part
        self._matrix_at = matrix_at
        self.residual = residual
        self._cache = {}

    def base_velocity(self, b) -> np.ndarray:
        return np.asarray(self._base_part(np.asarray(b, dtype=float)), dtype=float)

    def fiber_matrix(self, b) -> np.ndarray:
        key = tuple(np.round(np.asarray(b, dtype=float), 12))
        if key not in self._cache:
            self._cache[key] = self._matrix_at(np.asarray(b, dtype=float))
        return self._cache[key]

    # duck-typed like TotalVectorField so linearization can be re-applied
    def base(self, b, v):
        return self.base_velocity(b)

    def fiber(self, b, v):
        return self.fiber_matrix(b) @ np.asarray(v, dtype=float)

    @classmethod
    def constant(cls, base_velocity, matrix):
        bv = np.asarray(base_velocity, dtype=float)
        m = np.asarray(matrix, dtype=float)
        out = cls(lambda b: bv, lambda b: m)
        out.base_point = np.zeros(len(bv))
        out.base_dim = len(bv)
        out.n = m.shape[0]
        return out


def _richardson(lams, values):
    """Neville extrapolation to lambda = 0; returns the estimate and successive corrections."""
    table = [np.asarray(v, dtype=float) for v in values]
    diag = [table[0]]
    m = len(lams)
    cur = list(table)
    for j in range(1, m):
        nxt = []
        for i in range(m - j):
            xi, xj = lams[i], lams[i + j]
            nxt.append((-xj * cur[i] + xi * cur[i + 1]) / (xi - xj))
        cur = nxt
        diag.append(cur[0])
    corrections = [liecore.max_abs(diag[k] - diag[k - 1]) for k in range(1, len(diag))]
    return diag[-1], corrections


def linearize_field(field, lambdas=(1.0, 0.5, 0.25, 0.125), n=None, base_point=None, probe_seed=7):
    """Linearization ``lim_{lambda->0} (h_lambda^-1)_* X`` of a total-space field.

    For each base point the pullbacks ``X_fiber(b, lambda v) / lambda`` are
    Richardson-extrapolated to ``lambda = 0`` on a fiber frame plus probe
    vectors, and the fiber-linear matrix is fitted by least squares.
    """
    lams = [float(x) for x in lambdas]
    if len(lams) < 3 or any(not 0 < x <= 1 for x in lams) or any(a <= b for a, b in zip(lams, lams[1:])):
        raise ConfigError("lambda list must be >= 3 strictly decreasing values in (0, 1]")
    n = n or field.n
    rng = np.random.default_rng(probe_seed)
    probes = rng.normal(size=(2, n))
    inputs = np.vstack([np.eye(n), -np.eye(n), probes / np.linalg.norm(probes, axis=1, keepdims=True)]).T
    residuals = []

    def matrix_at(b):
        outs = []
        for col in inputs.T:
            vals = [field.fiber(b, lam * col) / lam for lam in lams]
            est, corr = _richardson(lams, vals)
            if len(corr) >= 2 and corr[-1] > 1e-12 and corr[-1] > corr[-2] * (1 + 1e-9):
                raise ConvergenceError("Richardson corrections are growing", corr)
            outs.append(est)
        y = np.array(outs).T
        m = y @ np.linalg.pinv(inputs)
        residuals.append(liecore.max_abs(y - m @ inputs))
        return m

    def base_part(b):
        return field.base(b, np.zeros(n))

    if getattr(field, "base_free", False):
        # nothing depends on the base point: extrapolate once
        here = np.zeros(field.base_dim) if base_point is None else np.asarray(base_point, float)
        m0, u0 = matrix_at(here), base_part(here)
        lin = LinearizedField(lambda b: u0, lambda b: m0)
    else:
        lin = LinearizedField(base_part, matrix_at)
    lin.residuals = residuals
    lin.base_point = np.zeros(getattr(field, "base_dim", 0)) if base_point is None else np.asarray(base_point, float)
    lin.base_dim = len(lin.base_point)
    lin.n = n
    return lin


def linearization_residual(lin: LinearizedField) -> float:
    return max(getattr(lin, "residuals", [0.0]) or [0.0])


def killing_check(lin, samples=2000, rng=None, base_point=None, n=None) -> float:
    """Max of ``|<M v, v>|`` over sampled unit vectors ``v``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if isinstance(lin, LinearizedField):
        if base_point is None:
            base_point = getattr(lin, "base_point", None)
        if base_point is None:
            raise ValueError("killing_check needs a base point for a base-dependent field")
        m = lin.fiber_matrix(base_point)
    else:
        m = np.asarray(lin, dtype=float)
    vs = rng.normal(size=(samples, m.shape[0]))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    return float(np.max(np.abs(np.einsum("ij,jk,ik->i", vs, m, vs))))


def symmetric_part_norm(m) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + m.T)))))


def flow_isometries(lin: LinearizedField, b0, times, step=1e-2):
    """Integrate the flow of a linearized field from ``b0``.

    Returns ``[(t, b_t, phi_t)]`` where ``phi_t : E_b0 -> E_b_t`` solves
    ``phi' = M(b_t) phi`` with ``b' = base velocity``.
    """
    b = np.asarray(b0, dtype=float).copy()
    n = None
    t = 0.0
    out = []
    phi = None
    for target in times:
        if phi is None:
            m0 = lin.fiber_matrix(b)
            n = m0.shape[0]
            phi = np.eye(n)
        while t < target - 1e-15:
            h = min(step, target - t)

            def rhs(bb, pp):
                return lin.base_velocity(bb), lin.fiber_matrix(bb) @ pp

            k1b, k1p = rhs(b, phi)
            k2b, k2p = rhs(b + 0.5 * h * k1b, phi + 0.5 * h * k1p)
            k3b, k3p = rhs(b + 0.5 * h * k2b, phi + 0.5 * h * k2p)
            k4b, k4p = rhs(b + h * k3b, phi + h * k3p)
            b = b + (h / 6) * (k1b + 2 * k2b + 2 * k3b + k4b)
            phi = phi + (h / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)
            t += h
        out.append((float(target), b.copy(), phi.copy()))
    return out


def factor_flow(flow, conn: ConnectionField, fib: FiberFoliation, step=1e-3, tol=INVARIANT_TOL):
    """Split a linearized flow as ``k_t = P_(b_t -> b0) o phi_t``.

    ``flow`` is a list of ``(t, b_t, phi_t)`` starting at ``t = 0``. Returns
    a list of dicts with ``k``, orthogonality and invariant defects.
    Raises :class:`ConditionViolation` if some ``k_t`` leaves K0.
    """
    base = conn.bundle.base
    b0 = np.asarray(flow[0][1], dtype=float)
    out = []
    for t, bt, phi in flow:
        d = liecore.orthogonality_defect(phi)
        if d > 1e-7:
            raise OrthogonalityError(d, 1e-7)
        back = parallel_transport(BasePath.line(base, bt, b0), conn, step)
        k = back @ phi
        inv = fib.invariant_defect(k)
        if inv > tol:
            raise ConditionViolation(f"k_t leaves K0 at t={t:.4g}: invariant defect {inv:.2e}", inv)
        out.append({"t": t, "k": k, "orthogonality": liecore.orthogonality_defect(k), "invariant": inv})
    return out


def _lifted_tangents(conn, gens_at, b, frame, h, leaf_dim, step):
    base = conn.bundle.base
    n = frame.shape[0]
    vecs = []
    for i in range(leaf_dim):
        e = np.zeros(base.dim)
        e[i] = h
        plus = parallel_transport(BasePath.line(base, b, b + e), conn, step) @ frame
        minus = parallel_transport(BasePath.line(base, b, b - e), conn, step) @ frame
        vecs.append(np.concatenate([e / h, ((plus - minus) / (2 * h)).ravel()]))
    for g in gens_at(b):
        d = (liecore.exp_skew(h * g) @ frame - liecore.exp_skew(-h * g) @ frame) / (2 * h)
        vecs.append(np.concatenate([np.zeros(base.dim), d.ravel()]))
    return np.array(vecs) if vecs else np.zeros((0, base.dim + n * n))


def _numerical_rank(rows, tol):
    if rows.size == 0:
        return 0
    sv = np.linalg.svd(rows, compute_uv=False)
    if sv[0] < 1e-14:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def lifted_leaf_dim_check(conn, gens_at, points, frames, leaf_dim, h=1e-4, tol=1e-6, step=0.1):
    """Rank of the lifted leaf tangent space at sampled frames of O(E).

    Tangents are central differences of the lifted horizontal flows (one per
    leaf coordinate) and of the lifted K0 one-parameter subgroups. The
    expected rank is ``leaf_dim + dim K0``.
    """
    expected = leaf_dim + liecore.bracket_closure_rank(gens_at(points[0]))
    ranks = []
    refined = False
    for b, frame in zip(points, frames):
        b = np.asarray(b, dtype=float)
        r = _numerical_rank(_lifted_tangents(conn, gens_at, b, frame, h, leaf_dim, step), tol)
        if r != expected and not refined:
            refined = True
            h = h / 10
            r = _numerical_rank(_lifted_tangents(conn, gens_at, b, frame, h, leaf_dim, step), tol)
        ranks.append(r)
    return {
        "expected": expected,
        "ranks": ranks,
        "constant": len(set(ranks)) <= 1,
        "ok": all(r == expected for r in ranks),
        "refined": refined,
    }
