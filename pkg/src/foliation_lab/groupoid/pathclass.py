"""The path-class groupoid of a partial connection and a bundle of groups.

Arrows are classes ``[alpha, k]`` of a leafwise path and a group element
over its start. Two representatives are identified when their endpoints and
winding keys agree and ``P_alpha k_alpha == P_beta k_beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import liecore
from ..base import TWO_PI, BasePath
from ..bundle import parallel_transport
from ..errors import ConditionViolation, DomainError
from ..foliation import INVARIANT_TOL
from .constructions import TransformationGroupoid
from .core import Groupoid

MUTATIONS = ("drop_conjugation",)


@dataclass(frozen=True, eq=False)
class PathClassArrow:
    path: BasePath
    k: np.ndarray
    transport: np.ndarray

    @property
    def key(self):
        return self.path.homotopy_key

    @property
    def effective(self) -> np.ndarray:
        """``P_alpha k``: the fiber isometry from ``E_{alpha(0)}`` to ``E_{alpha(1)}``."""
        return self.transport @ self.k


class PathClassGroupoid(Groupoid):
    """Path classes over a finite set of objects on one leaf of the base.

    Random arrows run along straight leafwise segments between objects,
    shifted by a random deck transformation so several winding classes
    appear. Transports of those segments are cached.
    """

    name = "path_class"

    def __init__(self, conn, group_bundle, objects, step=1e-2, max_winding=1, mutation=None,
                 check_membership=True, object_tol=1e-9):
        if mutation is not None and mutation not in MUTATIONS:
            raise ValueError(f"unknown path-class mutation {mutation!r}")
        self.conn = conn
        self.base = conn.bundle.base
        self.gb = group_bundle
        self.objects = [np.asarray(p, dtype=float) for p in objects]
        for p in self.objects:
            if not self.base.is_leafwise(p - self.objects[0]):
                raise DomainError("path-class objects must lie on one leaf")
        self.step = step
        self.max_winding = max_winding
        self.mutation = mutation
        self.check_membership = check_membership
        self.object_tol = object_tol
        self.n = conn.n
        self._transports = {}

    def transport(self, path: BasePath) -> np.ndarray:
        key = (tuple(np.round(self.base.wrap(path.start), 12)),) + tuple(
            tuple(np.round(d, 12)) for d in np.diff(path.vertices, axis=0))
        if key not in self._transports:
            self._transports[key] = parallel_transport(path, self.conn, self.step)
        return self._transports[key]

    def arrow(self, path, k=None, transport=None) -> PathClassArrow:
        k = np.eye(self.n) if k is None else np.asarray(k, dtype=float)
        p = self.transport(path) if transport is None else transport
        return PathClassArrow(path, k, p)

    def membership_defect(self, b, k) -> float:
        """Invariant defect of ``k`` moved back to the reference fiber."""
        t = self.gb.transport_from_b0(self.base.wrap(b))
        return self.gb.fib.invariant_defect(t.T @ k @ t, vectors=8)

    def source(self, a):
        return a.path.start

    def target(self, a):
        return a.path.end

    def conjugate_along(self, beta: PathClassArrow, k) -> np.ndarray:
        """``C_beta(k) = P_beta^-1 k P_beta``."""
        if self.mutation == "drop_conjugation":
            return k
        return beta.transport.T @ k @ beta.transport

    def compose(self, a, b):
        """``[alpha, k_a][beta, k_b] = [alpha * beta, C_beta(k_a) k_b]``."""
        self.require_composable(a, b)
        k = self.conjugate_along(b, a.k) @ b.k
        if self.check_membership:
            d = self.membership_defect(b.path.start, k)
            if d > INVARIANT_TOL:
                raise ConditionViolation("conjugated group element leaves the group over the source", d)
        return PathClassArrow(a.path * b.path, k, a.transport @ b.transport)

    def unit(self, x):
        return PathClassArrow(BasePath.constant(self.base, x), np.eye(self.n), np.eye(self.n))

    def inverse(self, a):
        """``[alpha^-1, C_{alpha^-1}(k^-1)]`` with ``C_{alpha^-1}(k^-1) = P_alpha k^-1 P_alpha^-1``."""
        p = a.transport
        return PathClassArrow(a.path.reversed(), p @ a.k.T @ p.T, p.T)

    def object_distance(self, x, y):
        return self.base.object_distance(x, y)

    def arrow_distance(self, a, b):
        if self.object_distance(a.path.start, b.path.start) > self.object_tol:
            return np.inf
        if self.object_distance(a.path.end, b.path.end) > self.object_tol:
            return np.inf
        if a.key != b.key:
            return np.inf
        return liecore.max_abs(a.effective - b.effective)

    def _segment_to(self, x, rng):
        y = self.objects[rng.integers(len(self.objects))].copy()
        m = rng.integers(-self.max_winding, self.max_winding + 1, size=len(self.base.periodic_axes))
        x = np.asarray(x, dtype=float)
        # put y in the same sheet as x before shifting
        for j, i in enumerate(self.base.periodic_axes):
            y[i] += TWO_PI * (np.floor(x[i] / TWO_PI) + m[j])
        return BasePath.line(self.base, x, y)

    def random_arrow_from(self, x, rng):
        path = self._segment_to(x, rng)
        return self.arrow(path, self.gb.random_element(self.base.wrap(x), rng))

    def random_arrow(self, rng):
        return self.random_arrow_from(self.objects[rng.integers(len(self.objects))], rng)

    def act(self, a, v):
        """Representation on the bundle: ``[alpha, k] v = P_alpha k v``."""
        return a.effective @ v


def pathclass_transformation_groupoid(G: PathClassGroupoid, radius=1.0) -> TransformationGroupoid:
    """``G x E`` for the transport representation of a path-class groupoid."""

    def sample(x, rng):
        v = rng.normal(size=G.n)
        return radius * v / np.linalg.norm(v)

    return TransformationGroupoid(G, G.act, sample, object_tol=1e-9)


def leafwise_moves(G: PathClassGroupoid, h, delta, gens_at):
    """Generators of an s-fiber of ``G x E``: lattice steps along leaf axes and group steps.

    Returns ``moves(e)`` listing arrows ``(a, e)`` with source ``e``.
    """
    base = G.base
    steps = {}

    def group_steps(b):
        key = tuple(np.round(base.wrap(b), 9))
        if key not in steps:
            steps[key] = [liecore.exp_skew(sign * delta * g) for g in gens_at(b) for sign in (1.0, -1.0)]
        return steps[key]

    def moves(e):
        b, v = e
        out = []
        for i in range(base.leaf_dim):
            for sign in (1.0, -1.0):
                q = b.copy()
                q[i] += sign * h[i]
                if base.periodic[i] or base.box[i][0] - 1e-9 <= q[i] <= base.box[i][1] + 1e-9:
                    out.append((G.arrow(BasePath.line(base, b, q)), e))
        here = BasePath.constant(base, b)
        for k in group_steps(b):
            out.append((G.arrow(here, k, np.eye(G.n)), e))
        return out

    return moves
