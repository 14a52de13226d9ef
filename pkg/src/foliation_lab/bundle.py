"""Euclidean vector bundles with metric (partial) connections.

The bundle is trivialized in an orthonormal gauge over covering
coordinates, so a fiber isometry is an orthogonal matrix. A connection is
given by skew coefficient matrices ``A_i(p)`` (one per base coordinate) and
``A(p, v) = sum_i v_i A_i(p)``. Sections are parallel when
``d/dt s = -A(alpha, alpha') s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liecore
from .base import BasePath, BaseSpace, square_loop
from .errors import (
    BranchError,
    ConfigError,
    DimensionError,
    NotBasedError,
    OrthogonalityError,
    ScopeError,
)
from .expr import Expr, base_vars

RETRACT_EVERY = 16
EXACT = "exact"


@dataclass(frozen=True)
class EuclideanBundle:
    base: BaseSpace
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= liecore.MAX_DIM:
            raise DimensionError(f"fiber dimension {self.n} outside 1..{liecore.MAX_DIM}")


class ConnectionField:
    """Metric connection coefficients ``A_i(p) = sum_j f_ij(p) S_ij``.

    ``terms[i]`` lists ``(expression, skew matrix)`` pairs for base
    coordinate ``i``. ``scope`` is ``"leafwise"`` (a partial connection, only
    defined along the leaves) or ``"full"``.
    """

    def __init__(self, bundle: EuclideanBundle, terms, scope="leafwise"):
        if scope not in ("leafwise", "full"):
            raise ConfigError(f"unknown connection scope {scope!r}")
        base = bundle.base
        if len(terms) > base.dim:
            raise ConfigError("more coefficient blocks than base coordinates")
        names = base_vars(base.dim)
        compiled = []
        for i in range(base.dim):
            block = terms[i] if i < len(terms) else []
            row = []
            for f, s in block:
                e = f if isinstance(f, Expr) else Expr(f, names)
                row.append((e, liecore.as_skew(s, n=bundle.n)))
            compiled.append(row)
        self.bundle = bundle
        self.scope = scope
        self.terms = compiled
        self.n = bundle.n
        self._constant = [
            (sum((e(0.0) * s for e, s in row), np.zeros((self.n, self.n))) if all(e.is_constant for e, _ in row) else None)
            for row in compiled
        ]

    @classmethod
    def flat(cls, bundle, scope="leafwise"):
        return cls(bundle, [], scope)

    @classmethod
    def constant(cls, bundle, matrices, scope="leafwise"):
        return cls(bundle, [[("1", m)] for m in matrices], scope)

    @property
    def is_flat(self) -> bool:
        return all(not row for row in self.terms)

    def component(self, i, p) -> np.ndarray:
        if self._constant[i] is not None:
            return self._constant[i]
        out = np.zeros((self.n, self.n))
        for e, s in self.terms[i]:
            out = out + e(*p) * s
        return out

    def coefficient(self, p, v) -> np.ndarray:
        """``A(p, v)``, linear in the tangent vector ``v``."""
        p = np.asarray(p, dtype=float)
        out = np.zeros((self.n, self.n))
        for i, vi in enumerate(np.asarray(v, dtype=float)):
            if vi != 0.0 and self.terms[i]:
                out = out + vi * self.component(i, p)
        return out

    def frozen_along(self, vel) -> bool:
        """True when ``A(p, .)`` is constant along a segment with velocity ``vel``."""
        moving = {f"x{j}" for j, vj in enumerate(vel) if vj != 0.0}
        return all(
            not (e.used & moving)
            for i, vi in enumerate(vel) if vi != 0.0
            for e, _ in self.terms[i]
        )

    def restricted(self, scope) -> "ConnectionField":
        c = object.__new__(ConnectionField)
        c.__dict__.update(self.__dict__)
        c.scope = scope
        return c


def _check_step(step):
    if not 0.0 < step <= 0.1:
        raise ConfigError(f"transport step must lie in (0, 0.1], got {step}")


def parallel_transport(path: BasePath, conn: ConnectionField, step=1e-3, retract=True) -> np.ndarray:
    """Parallel transport ``P_alpha : E_alpha(0) -> E_alpha(1)``.

    Classical RK4 on ``P' = -A(alpha(t), alpha'(t)) P`` with a polar
    retraction every 16 steps and at the end. On segments where the
    coefficient is constant the steps are applied as a matrix power.
    """
    _check_step(step)
    if conn.scope == "leafwise" and not path.leafwise:
        raise ScopeError("path leaves the leaf but the connection is only defined along leaves")
    n = conn.n
    p = np.eye(n)
    if conn.is_flat:
        return p
    count = 0
    for t0, t1, p0, vel in path.segments():
        if not np.any(vel):
            continue
        k = max(1, int(np.ceil((t1 - t0) / step - 1e-9)))
        h = (t1 - t0) / k
        if conn.frozen_along(vel):
            f = -conn.coefficient(p0, vel)
            f_stage = None
        else:
            f_stage = lambda s, p0=p0, vel=vel, t0=t0: -conn.coefficient(p0 + (s - t0) * vel, vel)  # noqa: E731
        if f_stage is None:
            # one RK4 step of a constant linear system is the degree-4 Taylor polynomial
            hf = h * f
            step_matrix = np.eye(n) + hf @ (np.eye(n) + hf @ (np.eye(n) / 2 + hf @ (np.eye(n) / 6 + hf / 24)))
            p = np.linalg.matrix_power(step_matrix, k) @ p
            count += k
            if retract:
                p = liecore.polar_retract(p)
            continue
        for j in range(k):
            s = t0 + j * h
            fa, fm, fb = f_stage(s), f_stage(s + 0.5 * h), f_stage(s + h)
            k1 = fa @ p
            k2 = fm @ (p + 0.5 * h * k1)
            k3 = fm @ (p + 0.5 * h * k2)
            k4 = fb @ (p + h * k3)
            p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            count += 1
            if retract and count % RETRACT_EVERY == 0:
                p = liecore.polar_retract(p)
    if count == 0:
        return np.eye(n)
    return liecore.polar_retract(p) if retract else p


def transport_convergence_order(path, conn, step=0.1, floor=1e-13):
    """Observed order ``log2(e_h / e_{h/2})`` against an ``h/16`` reference.

    Returns :data:`EXACT` when the coarse error is below ``floor``.
    """
    ref = parallel_transport(path, conn, step / 16)
    errs = [liecore.max_abs(parallel_transport(path, conn, step / d) - ref) for d in (1, 2, 4)]
    if errs[0] < floor or errs[1] < floor:
        return EXACT
    return float(np.log2(errs[0] / errs[1]))


def holonomy_sample(b, loops, conn, step=1e-3, tol=1e-7):
    """Transports around each loop based at ``b``."""
    base = conn.bundle.base
    out = []
    for loop in loops:
        mismatch = max(base.object_distance(loop.start, b), base.object_distance(loop.end, b))
        if mismatch > tol:
            raise NotBasedError(mismatch)
        out.append(parallel_transport(loop, conn, step))
    return out


def holonomy_algebra_dim(samples, small_loops, conn, step=1e-3, tol=liecore.RANK_TOL):
    """Estimated dimension of the holonomy algebra at a point.

    Logarithms of the sampled holonomy elements and of the transports around
    small loops are fed to the bracket-closure rank.
    """
    logs = []
    for g in samples:
        logs.append(liecore.log_orthogonal(g))
    for loop in small_loops:
        if loop.length > 4 * 0.1 + 1e-12:
            raise BranchError("small loops must have diameter <= 0.1")
        try:
            logs.append(liecore.log_orthogonal(parallel_transport(loop, conn, step)))
        except BranchError as exc:
            raise BranchError(f"{exc}; use smaller loops") from None
    return liecore.bracket_closure_rank(logs, tol)


def default_small_loops(base, point, side=0.05):
    if base.leaf_dim < 2:
        return []
    out = []
    for i in range(base.leaf_dim):
        for j in range(i + 1, base.leaf_dim):
            out.append(square_loop(base, point, (i, j), side))
    return out


@dataclass(frozen=True)
class FrameElement:
    """Orthonormal frame of ``E_b``: columns are the frame vectors in gauge coordinates."""

    point: tuple
    frame: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(c) for c in self.point))
        object.__setattr__(self, "frame", liecore.as_orthogonal(self.frame))

    def act(self, q) -> "FrameElement":
        """Right action of ``q`` in O(n)."""
        return FrameElement(self.point, self.frame @ q)


def frame_lift(isometry, frame: FrameElement, new_point=None, tol=1e-7) -> FrameElement:
    """Push a frame forward by a fiber isometry (left action)."""
    isometry = np.asarray(isometry, dtype=float)
    d = liecore.orthogonality_defect(isometry)
    if d > tol:
        raise OrthogonalityError(d, tol)
    point = frame.point if new_point is None else new_point
    return FrameElement(point, isometry @ frame.frame)


def right_action_free_check(frames, rng, trials=100, rotations=None):
    """Minimum displacement ``||xi Q - xi||_2`` over sampled ``Q != I``.

    The operator norm is frame independent: it equals ``||Q - I||_2``.
    """
    worst = np.inf
    qs = list(rotations) if rotations is not None else []
    for i in range(trials):
        xi = frames[i % len(frames)]
        n = xi.frame.shape[0]
        q = qs[i % len(qs)] if qs else liecore.random_orthogonal(n, rng)
        if liecore.max_abs(q - np.eye(n)) == 0.0:
            continue
        worst = min(worst, float(np.linalg.norm(xi.act(q).frame - xi.frame, 2)))
    return {"min_displacement": float(worst), "trials": trials, "free": bool(worst > 1e-6)}
