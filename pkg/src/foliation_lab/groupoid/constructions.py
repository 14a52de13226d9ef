"""Pair groupoids, bundles of groups, transformation groupoids and quotients."""

from __future__ import annotations

import numpy as np

from .. import liecore
from ..errors import ComposabilityError, FreenessError
from .core import Groupoid


class PairGroupoid(Groupoid):
    """Exactly one arrow ``(y, x)`` from ``x`` to ``y`` for every pair of objects."""

    name = "pair"

    def __init__(self, objects):
        self.objects = list(objects)

    def source(self, g):
        return g[1]

    def target(self, g):
        return g[0]

    def compose(self, g, h):
        self.require_composable(g, h)
        return (g[0], h[1])

    def unit(self, x):
        return (x, x)

    def inverse(self, g):
        return (g[1], g[0])

    def object_distance(self, x, y):
        return 0.0 if x == y else 1.0

    def arrow_distance(self, g, h):
        return max(self.object_distance(g[0], h[0]), self.object_distance(g[1], h[1]))

    def random_arrow(self, rng):
        i, j = rng.integers(len(self.objects), size=2)
        return (self.objects[i], self.objects[j])

    def random_arrow_from(self, x, rng):
        return (self.objects[rng.integers(len(self.objects))], x)


class BundleOfGroups(Groupoid):
    """Arrows ``(p, k)`` with ``s = t = p``; composition multiplies in the group over ``p``.

    ``sampler(p, rng)`` draws an element of the group over ``p``;
    ``point_distance`` compares base points.
    """

    name = "bundle_of_groups"

    def __init__(self, points, sampler, point_distance=None, n=None):
        self.points = [np.asarray(p, dtype=float) for p in points]
        self.sampler = sampler
        self._distance = point_distance or (lambda p, q: float(np.max(np.abs(np.asarray(p) - np.asarray(q)), initial=0.0)))
        self.n = n if n is not None else sampler(self.points[0], np.random.default_rng(0)).shape[0]

    @classmethod
    def from_group_bundle(cls, group_bundle, points):
        base = group_bundle.conn.bundle.base
        return cls(points, group_bundle.random_element, base.object_distance, group_bundle.fib.n)

    def source(self, g):
        return g[0]

    def target(self, g):
        return g[0]

    def compose(self, g, h):
        self.require_composable(g, h)
        return (h[0], g[1] @ h[1])

    def unit(self, x):
        return (x, np.eye(self.n))

    def inverse(self, g):
        return (g[0], g[1].T)

    def object_distance(self, x, y):
        return self._distance(x, y)

    def arrow_distance(self, g, h):
        if self.object_distance(g[0], h[0]) > self.object_tol:
            return np.inf
        return liecore.max_abs(g[1] - h[1])

    def random_arrow(self, rng):
        p = self.points[rng.integers(len(self.points))]
        return (p, self.sampler(p, rng))

    def random_arrow_from(self, x, rng):
        return (x, self.sampler(x, rng))


class TransformationGroupoid(Groupoid):
    """``G x_{G0} E`` for a representation of ``G`` on a vector bundle ``E``.

    Objects are pairs ``e = (x, v)``. ``act(g, v)`` carries ``v`` over
    ``s(g)`` to a vector over ``t(g)``; ``fiber_sampler(x, rng)`` draws a
    vector over ``x``. Arrow ``(g, e)`` goes from ``e`` to ``g e``.
    """

    def __init__(self, G: Groupoid, act, fiber_sampler, object_tol=1e-9):
        self.G = G
        self.act_vector = act
        self.fiber_sampler = fiber_sampler
        self.object_tol = object_tol
        self.name = f"transformation[{G.name}]"

    def act(self, g, e):
        return (self.G.target(g), self.act_vector(g, e[1]))

    def source(self, a):
        return a[1]

    def target(self, a):
        return self.act(a[0], a[1])

    def compose(self, a, b):
        """``(g, h e)(h, e) = (g h, e)``."""
        g, he = a
        h, e = b
        if not self.G.composable(g, h):
            raise ComposabilityError(f"{self.name}: underlying arrows are not composable")
        d = self.object_distance(he, self.act(h, e))
        if d > self.object_tol:
            raise ComposabilityError(f"{self.name}: first slot is not h e (mismatch {d:.3e})")
        return (self.G.compose(g, h), e)

    def unit(self, e):
        """``1_e = (1_{pi(e)}, e)``."""
        return (self.G.unit(e[0]), e)

    def inverse(self, a):
        """``(g, e)^-1 = (g^-1, g e)``."""
        g, e = a
        return (self.G.inverse(g), self.act(g, e))

    def object_distance(self, e, f):
        return max(self.G.object_distance(e[0], f[0]), liecore.max_abs(np.asarray(e[1]) - np.asarray(f[1])))

    def arrow_distance(self, a, b):
        return max(self.G.arrow_distance(a[0], b[0]), self.object_distance(a[1], b[1]))

    def random_arrow(self, rng):
        g = self.G.random_arrow(rng)
        x = self.G.source(g)
        return (g, (x, self.fiber_sampler(x, rng)))

    def random_arrow_from(self, e, rng):
        return (self.G.random_arrow_from(e[0], rng), e)


class QuotientGroupoid(Groupoid):
    """Quotient of a groupoid by a free right action of a group on its arrows.

    ``act_arrow(g, a)`` is the right action, ``solve(x, y)`` lists the group
    elements ``a`` with ``x = y a`` on objects, ``normal_form`` picks the
    canonical representative of an orbit, ``project``/``lift`` move between
    upstairs objects and quotient objects. Arrows are stored as arbitrary
    representatives; every comparison goes through the normal form.
    """

    def __init__(self, upstairs, act_arrow, solve, normal_form, project, lift, quotient_distance,
                 group_sample, invert, name="quotient", mutation=None):
        self.U = upstairs
        self.act_arrow = act_arrow
        self.solve = solve
        self.normal_form = normal_form
        self.project = project
        self.lift = lift
        self._qdist = quotient_distance
        self.group_sample = group_sample
        self.invert = invert
        self.name = name
        self.mutation = mutation

    def source(self, g):
        return self.project(self.U.source(g))

    def target(self, g):
        return self.project(self.U.target(g))

    def solving_element(self, g, h):
        """The unique ``a`` with ``s(g) = t(h) a``."""
        sols = self.solve(self.U.source(g), self.U.target(h))
        if not sols:
            raise ComposabilityError(f"{self.name}: no group element carries t(h) to s(g)")
        if len(sols) > 1:
            raise FreenessError(f"{self.name}: {len(sols)} group elements solve s(g) = t(h) a")
        a = sols[0]
        return self.invert(a) if self.mutation == "wrong_quotient_solve" else a

    def compose(self, g, h):
        """``[g][h] = [g (h a)]``."""
        a = self.solving_element(g, h)
        return self.normal_form(self.U.compose(g, self.act_arrow(h, a)))

    def unit(self, x):
        return self.normal_form(self.U.unit(self.lift(x)))

    def inverse(self, g):
        return self.normal_form(self.U.inverse(g))

    def object_distance(self, x, y):
        return self._qdist(x, y)

    def arrow_distance(self, g, h):
        return self.U.arrow_distance(self.normal_form(g), self.normal_form(h))

    def random_arrow(self, rng):
        return self.U.random_arrow(rng)

    def random_arrow_from(self, x, rng):
        g = self.U.random_arrow_from(self.lift(x), rng)
        return self.act_arrow(g, self.group_sample(rng))


class FramePairGroupoid(Groupoid):
    """Pair groupoid of orthonormal frames over finitely many base points.

    Objects ``(i, Q)``: point index and frame matrix. Arrows
    ``(i, Q, j, R)`` go from ``(j, R)`` to ``(i, Q)``.
    """

    name = "frame_pair"

    def __init__(self, count, n):
        self.count = count
        self.n = n

    def source(self, g):
        return (g[2], g[3])

    def target(self, g):
        return (g[0], g[1])

    def compose(self, g, h):
        self.require_composable(g, h)
        return (g[0], g[1], h[2], h[3])

    def unit(self, x):
        return (x[0], x[1], x[0], x[1])

    def inverse(self, g):
        return (g[2], g[3], g[0], g[1])

    def object_distance(self, x, y):
        if x[0] != y[0]:
            return np.inf
        return liecore.max_abs(x[1] - y[1])

    def arrow_distance(self, g, h):
        return max(self.object_distance(self.target(g), self.target(h)),
                   self.object_distance(self.source(g), self.source(h)))

    def random_arrow(self, rng):
        i, j = (int(c) for c in rng.integers(self.count, size=2))
        return (i, liecore.random_orthogonal(self.n, rng), j, liecore.random_orthogonal(self.n, rng))

    def random_arrow_from(self, x, rng):
        return (int(rng.integers(self.count)), liecore.random_orthogonal(self.n, rng), x[0], x[1])


def frame_gauge_quotient(count, n, mutation=None) -> QuotientGroupoid:
    """``O(n)`` acting diagonally on the right of the frame pair groupoid.

    The quotient is the groupoid of linear isometries between the fibers;
    the normal form has source frame ``I`` and target frame ``Q R^T``.
    """
    U = FramePairGroupoid(count, n)

    def act_arrow(g, a):
        return (g[0], g[1] @ a, g[2], g[3] @ a)

    def solve(x, y):
        if x[0] != y[0]:
            return []
        a = y[1].T @ x[1]
        return [a] if liecore.orthogonality_defect(a) <= liecore.ORTHO_TOL else []

    def normal_form(g):
        return (g[0], g[1] @ g[3].T, g[2], np.eye(n))

    return QuotientGroupoid(
        U, act_arrow, solve, normal_form,
        project=lambda x: x[0],
        lift=lambda i: (i, np.eye(n)),
        quotient_distance=lambda i, j: 0.0 if i == j else 1.0,
        group_sample=lambda rng: liecore.random_orthogonal(n, rng),
        invert=lambda a: a.T,
        name="frame_gauge_quotient",
        mutation=mutation,
    )


def antipodal_quotient(mutation=None) -> QuotientGroupoid:
    """``Z/2`` acting by ``x -> -x`` on the pair groupoid of ``{1, -1, 2, -2}``."""
    U = PairGroupoid([1, -1, 2, -2])

    def solve(x, y):
        return [a for a in (1, -1) if a * y == x]

    def normal_form(g):
        y, x = g
        sign = 1 if x > 0 else -1
        return (sign * y, sign * x)

    return QuotientGroupoid(
        U,
        act_arrow=lambda g, a: (a * g[0], a * g[1]),
        solve=solve,
        normal_form=normal_form,
        project=abs,
        lift=lambda x: x,
        quotient_distance=lambda x, y: 0.0 if x == y else 1.0,
        group_sample=lambda rng: (1, -1)[rng.integers(2)],
        invert=lambda a: a,
        name="antipodal_quotient",
        mutation=mutation,
    )
