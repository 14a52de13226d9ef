"""Charts of the path-class groupoid built from simple neighborhoods of the base foliation.

A chart is attached to a leafwise path ``alpha`` and box charts ``U0, U1``
around its endpoints. Chart coordinates of an arrow are
``(k, (x0, y0), x1)`` with ``k`` in the group over ``alpha(0)``.

All paths live in covering coordinates, where base leaves are the slabs
``y = const``; sliding a slice point along ``alpha`` is then a translation
in the slice direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liecore
from .base import BaseChart, BasePath
from .bundle import parallel_transport
from .errors import ConditionViolation, DomainError, NotInDomainError
from .foliation import INVARIANT_TOL
from .groupoid.pathclass import PathClassArrow

COORD_TOL = 1e-9


def simple_neighborhood(base, marked, plaque_halfwidth, slice_halfwidth) -> BaseChart:
    """Box chart ``[-a, a)^l x [-c, c)^k`` around ``marked``."""
    box = [(-plaque_halfwidth, plaque_halfwidth)] * base.leaf_dim + [(-slice_halfwidth, slice_halfwidth)] * base.slice_dim
    return BaseChart(base.leaf_dim, base.slice_dim, tuple(box), tuple(float(c) for c in marked))


def chart_coordinates(base, chart: BaseChart, p):
    """Coordinates of the base point ``p`` in ``chart``, searching over deck translates."""
    p = np.asarray(p, dtype=float)
    axes = base.periodic_axes
    shifts = [()] if not axes else [tuple(m) for m in np.ndindex(*(5,) * len(axes))]
    for m in shifts:
        q = base.deck(p, [c - 2 for c in m]) if axes else p
        c = q - np.asarray(chart.marked)
        if chart.contains(c):
            return c
    raise NotInDomainError(f"point {p.tolist()} is outside the chart at {list(chart.marked)}")


@dataclass(frozen=True)
class ChartDatum:
    """Chart data: leafwise ``alpha`` and simple neighborhoods at its endpoints.

    ``U0.marked`` must equal ``alpha(0)``; ``U1.marked`` may be any covering
    representative of ``alpha(1)``.
    """

    alpha: BasePath
    U0: BaseChart
    U1: BaseChart

    def __post_init__(self):
        if not self.alpha.leafwise:
            raise DomainError("chart path must be leafwise")
        if np.max(np.abs(self.alpha.start - np.asarray(self.U0.marked))) > COORD_TOL:
            raise DomainError("U0 must be centered at alpha(0)")
        base = self.alpha.base
        if base.object_distance(self.alpha.end, self.U1.marked) > COORD_TOL:
            raise DomainError("U1 must be centered at alpha(1)")

    @property
    def base(self):
        return self.alpha.base

    @property
    def leaf_dim(self):
        return self.base.leaf_dim


def split(base, xy):
    xy = np.asarray(xy, dtype=float)
    return xy[: base.leaf_dim], xy[base.leaf_dim:]


def _join(x, y):
    return np.concatenate([np.atleast_1d(x), np.atleast_1d(y)]).astype(float)


def base_holonomy_map(D: ChartDatum, y0, t=1.0) -> np.ndarray:
    """Slice holonomy of the base foliation along ``alpha|[0, t]``: ``S0 -> S1`` in U1 slice coordinates.

    For ``t < 1`` the result is the covering point ``alpha_(0,y0)(t)`` itself.
    """
    base = D.base
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if not D.U0.contains(_join(np.zeros(base.leaf_dim), y0)):
        raise NotInDomainError("slice point is outside U0")
    p = D.alpha.point_at(t) + _join(np.zeros(base.leaf_dim), y0)
    if t < 1.0:
        return p
    return split(base, chart_coordinates(base, D.U1, p))[1]


def slid_path(D: ChartDatum, y0) -> BasePath:
    """``alpha_(0,y0)``: ``alpha`` pushed along the slice to start at ``(0, y0)``."""
    shift = _join(np.zeros(D.leaf_dim), y0)
    return BasePath(D.base, D.alpha.vertices + shift, D.alpha.times)


def canonical_path(D: ChartDatum, x0, y0, x1) -> BasePath:
    """``line((0,phi(y0)) -> (x1,phi(y0))) * alpha_(0,y0) * line((x0,y0) -> (0,y0))``."""
    base = D.base
    x0, y0, x1 = (np.atleast_1d(np.asarray(c, dtype=float)) for c in (x0, y0, x1))
    if not D.U0.contains(_join(x0, y0)):
        raise DomainError("(x0, y0) is outside U0")
    if not D.U1.contains(_join(x1, np.zeros(base.slice_dim))):
        raise DomainError("x1 is outside the plaque of U1")
    m0 = np.asarray(D.U0.marked)
    slid = slid_path(D, y0)
    first = BasePath.line(base, m0 + _join(x0, y0), slid.start)
    end = slid.end + _join(x1, np.zeros(base.slice_dim))
    last = BasePath.line(base, slid.end, end)
    phi = base_holonomy_map(D, y0)
    if not D.U1.contains(_join(x1, phi)):
        raise DomainError("(x1, phi(y0)) is outside U1")
    return last * slid * first


class Atlas:
    """Chart maps over a connection and bundle of groups, with transport caching.

    ``conn`` must be a full connection (the slice legs of the gauge maps
    leave the leaves). ``group_bundle`` decides group membership.
    """

    def __init__(self, conn, group_bundle, step=2e-3):
        if conn.scope != "full":
            conn = conn.restricted("full")
        self.conn = conn
        self.gb = group_bundle
        self.step = step
        self.base = conn.bundle.base
        self.n = conn.n
        self._cache = {}

    def transport(self, path: BasePath) -> np.ndarray:
        key = tuple(np.round(self.base.wrap(path.start), 12)) + tuple(np.round(np.diff(path.vertices, axis=0), 12).ravel())
        if key not in self._cache:
            self._cache[key] = parallel_transport(path, self.conn, self.step)
        return self._cache[key]

    def gauge(self, D: ChartDatum, x0, y0) -> np.ndarray:
        """Fiber isometry ``E_(x0,y0) -> E_alpha(0)``: along the plaque to the slice, then down the slice."""
        base = D.base
        m0 = np.asarray(D.U0.marked)
        a = m0 + _join(x0, y0)
        b = m0 + _join(np.zeros(base.leaf_dim), y0)
        p1 = self.transport(BasePath.line(base, a, b))
        p2 = self.transport(BasePath.line(base, b, m0))
        return p2 @ p1

    def psi_hat(self, D, x0, y0, m) -> np.ndarray:
        """Group isomorphism ``K_(x0,y0) -> K_alpha(0)``: conjugation by the gauge map."""
        q = self.gauge(D, x0, y0)
        return q @ m @ q.T

    def psi_hat_inverse(self, D, x0, y0, k) -> np.ndarray:
        q = self.gauge(D, x0, y0)
        return q.T @ k @ q

    def membership_defect(self, b, k) -> float:
        t = self.gb.transport_from_b0(self.base.wrap(b))
        return self.gb.fib.invariant_defect(t.T @ k @ t)

    def locate(self, D: ChartDatum, start, end):
        """``((x0, y0), x1)`` of the canonical path from ``start`` to ``end``, or not-in-domain.

        ``end`` must be reachable from ``start`` by a path homotopic to the
        canonical one: after aligning starts, the covering endpoints agree.
        """
        base = D.base
        xy0 = chart_coordinates(base, D.U0, start)
        x0, y0 = split(base, xy0)
        shift = base.deck_between(np.asarray(start, dtype=float), np.asarray(D.U0.marked) + xy0)
        if shift is None:
            raise NotInDomainError("start point does not project into U0")
        end = base.deck(np.asarray(end, dtype=float), shift) if base.periodic_axes else np.asarray(end, dtype=float)
        slid_end = slid_path(D, y0).end
        x1, dy = split(base, end - slid_end)
        if np.max(np.abs(dy), initial=0.0) > COORD_TOL:
            raise NotInDomainError("arrow target is not on the plaque reached by sliding along alpha")
        if not D.U1.contains(_join(x1, np.zeros(base.slice_dim))):
            raise NotInDomainError("arrow target is outside the chart: winding class differs or x1 leaves P1")
        return (x0, y0), x1

    def forward(self, D: ChartDatum, arrow: PathClassArrow, check=True):
        """``Phi_alpha([P_beta k_beta]) = (psi_hat(P_canon^-1 P_beta k_beta), (x0, y0), x1)``."""
        (x0, y0), x1 = self.locate(D, arrow.path.start, arrow.path.end)
        canon = canonical_path(D, x0, y0, x1)
        m = self.transport(canon).T @ arrow.effective
        k = self.psi_hat(D, x0, y0, m)
        if check:
            d = self.membership_defect(D.alpha.start, k)
            if d > INVARIANT_TOL:
                raise ConditionViolation("chart value left the group over alpha(0)", d)
        return k, (x0, y0), x1

    def inverse(self, D: ChartDatum, k, xy0, x1) -> PathClassArrow:
        """``Phi_alpha^-1(k, (x0, y0), x1) = [alpha_{x0,y0,x1}, psi_hat^-1(k)]``."""
        x0, y0 = xy0
        canon = canonical_path(D, x0, y0, x1)
        return PathClassArrow(canon, self.psi_hat_inverse(D, x0, y0, k), self.transport(canon))

    def transition(self, D: ChartDatum, Dt: ChartDatum, k, xy0, x1):
        """Chart change ``Phi_Dt o Phi_D^-1`` written out with transports and gauge maps.

        ``F = psi_hat_t(P_canon^-1 P_canon_t psi_hat^-1(k))``; the new
        coordinates come from matching canonical-path endpoints in ``Dt``.
        """
        x0, y0 = xy0
        canon = canonical_path(D, x0, y0, x1)
        (tx0, ty0), tx1 = self.locate(Dt, canon.start, canon.end)
        canon_t = canonical_path(Dt, tx0, ty0, tx1)
        inner = self.transport(canon).T @ self.transport(canon_t) @ self.psi_hat_inverse(D, x0, y0, k)
        return self.psi_hat(Dt, tx0, ty0, inner), (tx0, ty0), tx1

    def transition_oracle(self, D, Dt, k, xy0, x1):
        """The same chart change by composing the implemented chart maps."""
        return self.forward(Dt, self.inverse(D, k, xy0, x1), check=False)


def coordinate_defect(a, b) -> float:
    """Max-norm distance between two chart values ``(k, (x0, y0), x1)``."""
    ka, (xa, ya), x1a = a
    kb, (xb, yb), x1b = b
    parts = [liecore.max_abs(ka - kb), liecore.max_abs(xa - xb), liecore.max_abs(x1a - x1b)]
    if np.size(ya):
        parts.append(liecore.max_abs(ya - yb))
    return max(parts)


def random_chart_point(D: ChartDatum, group_bundle, rng, shrink=0.7):
    """Random ``(k, (x0, y0), x1)`` with coordinates in the central part of the boxes."""
    base = D.base
    lo0 = np.array([lo for lo, _ in D.U0.box]) * shrink
    hi0 = np.array([hi for _, hi in D.U0.box]) * shrink
    xy0 = rng.uniform(lo0, hi0)
    lo1 = np.array([lo for lo, _ in D.U1.box[: base.leaf_dim]]) * shrink
    hi1 = np.array([hi for _, hi in D.U1.box[: base.leaf_dim]]) * shrink
    x1 = rng.uniform(lo1, hi1)
    k = group_bundle.random_element(base.wrap(D.alpha.start), rng)
    x0, y0 = split(base, xy0)
    return k, (x0, y0), x1


def dependency_defects(atlas: Atlas, D, Dt, xy0, x1, h=1e-5) -> dict:
    """Finite-difference partials of the new coordinates in variables they should not depend on.

    New ``x0`` may depend on ``(x0, y0)``, new ``y0`` only on ``y0``, new
    ``x1`` only on ``(x1, y0)``.
    """
    k = np.eye(atlas.n)
    x0, y0 = (np.array(c, dtype=float) for c in xy0)
    x1 = np.array(x1, dtype=float)

    def coords(a, b, c):
        _, (tx0, ty0), tx1 = atlas.transition(D, Dt, k, (a, b), c)
        return tx0, ty0, tx1

    worst = {"x0_in_x1": 0.0, "y0_in_x0": 0.0, "y0_in_x1": 0.0, "x1_in_x0": 0.0}
    for i in range(len(x0)):
        e = np.zeros_like(x0)
        e[i] = h
        p, m = coords(x0 + e, y0, x1), coords(x0 - e, y0, x1)
        if len(y0):
            worst["y0_in_x0"] = max(worst["y0_in_x0"], liecore.max_abs(p[1] - m[1]) / (2 * h))
        worst["x1_in_x0"] = max(worst["x1_in_x0"], liecore.max_abs(p[2] - m[2]) / (2 * h))
    for i in range(len(x1)):
        e = np.zeros_like(x1)
        e[i] = h
        p, m = coords(x0, y0, x1 + e), coords(x0, y0, x1 - e)
        worst["x0_in_x1"] = max(worst["x0_in_x1"], liecore.max_abs(p[0] - m[0]) / (2 * h))
        if len(y0):
            worst["y0_in_x1"] = max(worst["y0_in_x1"], liecore.max_abs(p[1] - m[1]) / (2 * h))
    return worst


def smoothness_ratio(atlas: Atlas, D, Dt, k, xy0, x1, h=1e-3) -> dict:
    """Central-difference derivatives of the transition at ``h`` and ``h/2``.

    For a C^1 map the two estimates agree to ``O(h)``; returns the largest
    derivative estimate and the discrepancy between the two step sizes.
    """
    x0, y0 = (np.array(c, dtype=float) for c in xy0)
    x1 = np.array(x1, dtype=float)
    flat = np.concatenate([x0, y0, x1])
    nl, ns = len(x0), len(y0)

    def value(z):
        kk, (a, b), c = atlas.transition(D, Dt, k, (z[:nl], z[nl:nl + ns]), z[nl + ns:])
        return np.concatenate([kk.ravel(), a, b, c])

    biggest = 0.0
    gap = 0.0
    for i in range(len(flat)):
        est = []
        for step in (h, h / 2):
            e = np.zeros_like(flat)
            e[i] = step
            est.append((value(flat + e) - value(flat - e)) / (2 * step))
        biggest = max(biggest, float(np.max(np.abs(est[1]))))
        gap = max(gap, float(np.max(np.abs(est[0] - est[1]))))
    return {"max_derivative": biggest, "refinement_gap": gap, "h": h}
