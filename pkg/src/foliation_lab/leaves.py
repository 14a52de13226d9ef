"""Leaf samplers for F_tau, F_ell, F_hat and F, and Hausdorff comparison.

A leaf sample is an epsilon-net built by breadth-first closure under a set
of small moves. Points are merged by snapping to a grid of size eps/4, so
the result does not depend on the order in which moves are explored.
"""

from __future__ import annotations

import itertools
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import liecore
from .base import TWO_PI, BasePath, coordinate_loop
from .bundle import parallel_transport
from .foliation import flow_isometries

KINDS = ("F_tau", "F_ell", "F_hat", "F")


@dataclass
class Budget:
    """Resolution and size limits for a leaf sample.

    ``eps`` is the target net resolution. ``max_points`` caps the sample
    (0 yields only the seed and a partial flag). ``spread_base`` moves the
    fiber sample over a lattice of the leaf of the base foliation; when off
    only the fiber over the seed's base point is sampled.
    """

    eps: float = 0.1
    max_points: int = 200_000
    spread_base: bool = True
    group_steps: int | None = None
    walk_steps: int = 2000
    step: float = 1e-2
    seed: int = 0


@dataclass
class LeafSample:
    kind: str
    seed_point: tuple
    points: np.ndarray
    eps: float
    periods: tuple
    generation: dict = field(default_factory=dict)
    partial: bool = False

    def __len__(self):
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "seed_point": [list(map(float, self.seed_point[0])), list(map(float, self.seed_point[1]))],
            "eps": self.eps,
            "periods": list(self.periods),
            "partial": self.partial,
            "generation": self.generation,
            "points": np.round(self.points, 12).tolist(),
        }

    @classmethod
    def from_json(cls, data) -> "LeafSample":
        return cls(
            kind=data["kind"],
            seed_point=(np.array(data["seed_point"][0]), np.array(data["seed_point"][1])),
            points=np.array(data["points"], dtype=float).reshape(
                len(data["points"]), len(data["seed_point"][0]) + len(data["seed_point"][1])),
            eps=float(data["eps"]),
            periods=tuple(data["periods"]),
            generation=data.get("generation", {}),
            partial=bool(data.get("partial", False)),
        )


def snap_key(x, cell):
    return tuple(np.floor(np.asarray(x) / cell).astype(np.int64).tolist())


def total_periods(base, n):
    return tuple(TWO_PI if per else 0.0 for per in base.periodic) + (0.0,) * n


def total_point(base, b, v):
    return np.concatenate([base.wrap(b), v])


def hausdorff(a, b, periods=()):
    """Symmetric Hausdorff distance between point sets, periodic in the axes with positive period."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return max(directed_hausdorff(a, b, periods), directed_hausdorff(b, a, periods))


def directed_hausdorff(a, b, periods=()):
    """``max_{x in a} min_{y in b} |x - y|``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if len(a) == 0:
        return 0.0
    if len(b) == 0:
        return np.inf
    axes = [i for i, p in enumerate(periods) if p]
    copies = [b]
    for shift in itertools.product((-1, 0, 1), repeat=len(axes)):
        if any(shift):
            c = b.copy()
            for s, i in zip(shift, axes):
                c[:, i] += s * periods[i]
            copies.append(c)
    tree = cKDTree(np.vstack(copies))
    d, _ = tree.query(a)
    return float(np.max(d))


def _closure(starts, moves, cell, limit):
    """Breadth-first closure of fiber vectors under matrix moves."""
    seen = {}
    queue = deque()
    for v in starts:
        k = snap_key(v, cell)
        if k not in seen and len(seen) < max(limit, 1):
            seen[k] = v
            queue.append(v)
    partial = False
    while queue:
        v = queue.popleft()
        for m in moves:
            w = m @ v
            k = snap_key(w, cell)
            if k in seen:
                continue
            if len(seen) >= limit:
                partial = True
                continue
            seen[k] = w
            queue.append(w)
    ordered = [seen[k] for k in sorted(seen)]
    return ordered, partial


def group_step(gen, radius, eps):
    """Subgroup step ``delta`` with ``|gen| * radius * delta <= eps / sqrt2``, dividing 2 pi in 12ths."""
    speed = np.linalg.norm(gen, 2) * radius
    if speed == 0:
        return None
    m = int(np.ceil(TWO_PI * speed * np.sqrt(2) / eps))
    m = 12 * int(np.ceil(m / 12))
    return TWO_PI / m


def base_lattice(base, b0, eps, spread=True):
    """Offsets along the leaf of ``b0`` on a lattice with spacing <= eps / sqrt2."""
    if not spread:
        return [np.zeros(base.dim)], []
    steps = []
    ranges = []
    for i, (h, count) in enumerate(base.leaf_step(eps / np.sqrt(2))):
        steps.append(h)
        if base.periodic[i]:
            ranges.append(range(count))
        else:
            lo, hi = base.box[i]
            ranges.append(range(int(np.ceil((lo - b0[i]) / h - 1e-9)), int(np.floor((hi - b0[i]) / h + 1e-9)) + 1))
    offsets = []
    for idx in itertools.product(*ranges):
        off = np.zeros(base.dim)
        off[: base.leaf_dim] = np.array(idx) * np.array(steps)
        offsets.append(off)
    return offsets, steps


def _lattice_transports(base, conn, b0, offsets, steps, step):
    """Transport from ``b0`` to each lattice point along the coordinate staircase."""
    out = {}
    cache = {}

    def seg(p, q):
        key = (tuple(np.round(base.wrap(p), 9)), tuple(np.round(q - p, 12)))
        if key not in cache:
            cache[key] = parallel_transport(BasePath.line(base, p, q), conn, step)
        return cache[key]

    for off in offsets:
        p = b0.copy()
        mat = np.eye(conn.n)
        for i in range(base.leaf_dim):
            count = int(round(off[i] / steps[i])) if steps else 0
            direction = np.sign(count)
            for _ in range(abs(count)):
                q = p.copy()
                q[i] += direction * steps[i]
                mat = seg(p, q) @ mat
                p = q
        out[tuple(off)] = mat
    return out


def holonomy_loops(base, b0):
    return [coordinate_loop(base, b0, i) for i in range(base.leaf_dim) if base.periodic[i]]


def _level_set_walk(fib, v0, steps, size, rng):
    """Projected random walk on the invariant level set through ``v0``."""
    target = fib.invariant_values(v0)
    n = len(v0)
    out = [v0.copy()]
    v = v0.copy()
    h = 1e-6

    def grads(x):
        g = []
        for j in range(len(target)):
            row = np.zeros(n)
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                row[i] = (fib.invariants[j](x + e) - fib.invariants[j](x - e)) / (2 * h)
            g.append(row)
        return np.array(g)

    for _ in range(steps):
        g = grads(v)
        d = rng.normal(size=n)
        if len(g):
            q, _ = np.linalg.qr(g.T)
            d = d - q @ (q.T @ d)
        nd = np.linalg.norm(d)
        if nd == 0:
            break
        w = v + size * d / nd
        for _ in range(20):
            r = fib.invariant_values(w) - target
            if liecore.max_abs(r) < 1e-13:
                break
            gw = grads(w)
            w = w - np.linalg.lstsq(gw, r, rcond=None)[0]
        if liecore.max_abs(fib.invariant_values(w) - target) < 1e-10:
            v = w
            out.append(v.copy())
    return out


def fiber_moves(kind, group_bundle, b0, v0, eps, loops_transports):
    moves = []
    for p in loops_transports:
        moves += [p, p.T]
    if kind in ("F_ell", "F_hat", "F"):
        fib = group_bundle.fib
        gens = fib.closure.algebra.generators if kind in ("F_hat", "F") else fib.algebra.generators
        p0 = group_bundle.transport_from_b0(b0)
        for g in gens:
            g = p0 @ g @ p0.T
            d = group_step(g, np.linalg.norm(v0), eps)
            if d is not None:
                e = liecore.exp_skew(d * g)
                moves += [e, e.T]
        moves += list(fib.finite_part)
    return moves


def leaf_sample(kind, xi, conn, group_bundle, budget: Budget, loops=None) -> LeafSample:
    """Epsilon-net of the leaf through ``xi = (b0, v0)`` of the foliation ``kind``.

    The fiber part over ``b0`` is the closure of ``v0`` under holonomy loops
    and fiber moves (none for F_tau, K0 steps for F_ell, closure steps for
    F_hat, a level-set walk plus closure steps for F). It is then carried
    over a lattice on the base leaf by parallel transport.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown leaf kind {kind!r}")
    base = conn.bundle.base
    b0 = np.asarray(xi[0], dtype=float)
    v0 = np.asarray(xi[1], dtype=float)
    eps = budget.eps
    cell = eps / 4
    periods = total_periods(base, conn.n)
    if budget.max_points <= 0:
        warnings.warn("leaf sample budget is zero; returning the seed only", stacklevel=2)
        return LeafSample(kind, (b0, v0), total_point(base, b0, v0)[None, :], eps, periods,
                          {"moves": 0}, partial=True)
    loops = holonomy_loops(base, b0) if loops is None else loops
    loop_ps = [parallel_transport(lp, conn, budget.step) for lp in loops]
    moves = fiber_moves(kind, group_bundle, b0, v0, eps, loop_ps)
    offsets, steps = base_lattice(base, b0, eps, budget.spread_base)
    fiber_limit = max(1, budget.max_points // max(1, len(offsets)))
    if budget.group_steps is not None:
        fiber_limit = min(fiber_limit, budget.group_steps)
    starts = [v0]
    if kind == "F":
        rng = np.random.default_rng(budget.seed)
        starts = _level_set_walk(group_bundle.fib, v0, budget.walk_steps, eps / 2, rng)
    fiber, partial = _closure(starts, moves, cell, fiber_limit)
    transports = _lattice_transports(base, conn, b0, offsets, steps, budget.step) if steps else {
        tuple(offsets[0]): np.eye(conn.n)}
    seen = {}
    for off in offsets:
        p = transports[tuple(off)]
        b = b0 + off
        for w in fiber:
            x = total_point(base, b, p @ w)
            seen.setdefault(snap_key(x, cell), x)
    pts = np.array([seen[k] for k in sorted(seen)])
    if partial:
        warnings.warn(f"{kind} leaf sample hit its budget before closing", stacklevel=2)
    gen = {"fiber_points": len(fiber), "base_points": len(offsets), "moves": len(moves), "seed": budget.seed}
    return LeafSample(kind, (b0, v0), pts, eps, periods, gen, partial)


def _flow_time(lin, b0, v0, eps, base_steps):
    u = lin.base_velocity(b0)
    if np.any(np.abs(u) > 1e-12):
        i = int(np.argmax(np.abs(u)))
        h = base_steps[i] if i < len(base_steps) else eps / np.sqrt(2)
        return h / abs(u[i])
    return group_step(lin.fiber_matrix(b0), np.linalg.norm(v0), eps)


def leaf_sample_via_flows(xi, fields, conn, budget: Budget, kind="F_ell") -> LeafSample:
    """Leaf of the pseudogroup generated by flows of linearized fields.

    Breadth-first over words in the time-``tau`` flows (and their inverses);
    flow maps are linear in the fiber and cached per base point.
    """
    base = conn.bundle.base
    b0 = np.asarray(xi[0], dtype=float)
    v0 = np.asarray(xi[1], dtype=float)
    eps = budget.eps
    cell = eps / 4
    periods = total_periods(base, conn.n)
    _, steps = base_lattice(base, b0, eps, True)
    taus = []
    for lin in fields:
        t = _flow_time(lin, b0, v0, eps, steps)
        if t is not None:
            taus += [(lin, t), (lin, -t)]
    cache = {}

    def flow(idx, b):
        key = (idx, tuple(np.round(base.wrap(b), 8)))
        if key not in cache:
            lin, tau = taus[idx]
            if tau > 0:
                _, bt, phi = flow_isometries(lin, b, [tau], step=min(budget.step, tau))[0]
            else:
                bt, phi = _backward_flow(lin, b, -tau, budget.step)
            cache[key] = (bt - b, phi)
        return cache[key]

    start = total_point(base, b0, v0)
    seen = {snap_key(start, cell): start}
    queue = deque([(b0, v0)])
    partial = False
    limit = max(1, budget.max_points)
    while queue:
        b, v = queue.popleft()
        for idx in range(len(taus)):
            disp, phi = flow(idx, b)
            nb, nv = b + disp, phi @ v
            x = total_point(base, nb, nv)
            k = snap_key(x, cell)
            if k in seen:
                continue
            if len(seen) >= limit:
                partial = True
                continue
            seen[k] = x
            queue.append((base.wrap(nb) if not base.slice_dim else nb, nv))
    pts = np.array([seen[k] for k in sorted(seen)])
    if partial:
        warnings.warn("flow leaf sample hit its budget before closing", stacklevel=2)
    return LeafSample(kind, (b0, v0), pts, eps, periods, {"flows": len(taus), "seed": budget.seed}, partial)


def _backward_flow(lin, b, tau, step):
    """Flow for negative time: integrate the reversed field."""
    from .foliation import LinearizedField

    rev = LinearizedField(lambda bb: -lin.base_velocity(bb), lambda bb: -lin.fiber_matrix(bb))
    _, bt, phi = flow_isometries(rev, b, [tau], step=min(step, tau))[0]
    return bt, phi


def invariant_spread(sample: LeafSample, fib, base_dim) -> float:
    """Max deviation of the invariant values over the sample from those of the seed."""
    ref = fib.invariant_values(sample.seed_point[1])
    worst = 0.0
    for x in sample.points:
        worst = max(worst, liecore.max_abs(fib.invariant_values(x[base_dim:]) - ref))
    return worst
