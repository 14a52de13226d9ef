"""Foliated base spaces, charts and piecewise-linear leafwise paths.

Points are stored in *covering* coordinates: periodic coordinates are not
reduced, so a path that winds around a circle ends at ``theta + 2*pi*w``.
The first ``leaf_dim`` coordinates are tangent to the leaves (plaque
directions); the remaining ``slice_dim`` coordinates are constant along
leaves in covering coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

TWO_PI = 2.0 * np.pi
KINDS = ("circle", "torus2", "product_box", "mapping_torus")
LEAFWISE_TOL = 1e-10


@dataclass(frozen=True)
class BaseChart:
    """Box chart ``(x, y) -> marked + (x, y)`` around a marked point.

    Plaques are the slabs ``y = const``; the slice is ``x = 0``. Intervals
    are half-open ``[lo, hi)`` so overlaps at seams are unambiguous.
    """

    plaque_dim: int
    slice_dim: int
    box: tuple
    marked: tuple = ()

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.plaque_dim + self.slice_dim:
            raise ConfigError("chart box has wrong number of intervals")
        if any(not lo < hi for lo, hi in box):
            raise ConfigError("chart box is empty")
        object.__setattr__(self, "box", box)
        marked = tuple(float(c) for c in self.marked) or (0.0,) * len(box)
        object.__setattr__(self, "marked", marked)

    def contains(self, xy) -> bool:
        return all(lo <= c < hi for c, (lo, hi) in zip(xy, self.box))

    def to_base(self, x, y) -> np.ndarray:
        return np.asarray(self.marked) + np.concatenate([np.atleast_1d(x), np.atleast_1d(y)]).astype(float)


@dataclass(frozen=True)
class BaseSpace:
    """A foliated base B together with its covering-coordinate conventions.

    ``circle``        one periodic leaf coordinate, no slice.
    ``torus2``        two periodic leaf coordinates, no slice.
    ``product_box``   box in R^l x R^k, leaves ``y = const``.
    ``mapping_torus`` periodic leaf coordinate theta and slice y, with
                      ``(theta + 2 pi, y) ~ (theta, M y)``.
    """

    kind: str
    leaf_dim: int
    slice_dim: int = 0
    box: tuple = ()
    monodromy: np.ndarray | None = None
    periodic: tuple = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown base kind {self.kind!r}")
        expected = {"circle": (1, 0), "torus2": (2, 0)}
        if self.kind in expected and (self.leaf_dim, self.slice_dim) != expected[self.kind]:
            raise ConfigError(f"{self.kind} base must have leaf/slice dims {expected[self.kind]}")
        if self.kind == "mapping_torus" and self.leaf_dim != 1:
            raise ConfigError("mapping_torus base has exactly one leaf coordinate")
        if self.leaf_dim < 1 or self.slice_dim < 0:
            raise ConfigError("need leaf_dim >= 1 and slice_dim >= 0")
        periodic = {
            "circle": (True,),
            "torus2": (True, True),
            "mapping_torus": (True,) + (False,) * self.slice_dim,
            "product_box": (False,) * self.dim,
        }[self.kind]
        object.__setattr__(self, "periodic", periodic)
        box = list(self.box) if self.box else [(-1.0, 1.0)] * self.dim
        if len(box) != self.dim:
            raise ConfigError("base box needs one interval per coordinate")
        box = tuple((0.0, TWO_PI) if per else (float(lo), float(hi)) for per, (lo, hi) in zip(periodic, box))
        object.__setattr__(self, "box", box)
        if self.kind == "mapping_torus":
            m = np.eye(self.slice_dim) if self.monodromy is None else np.array(self.monodromy, dtype=float)
            if m.shape != (self.slice_dim, self.slice_dim) or np.max(np.abs(m.T @ m - np.eye(self.slice_dim))) > 1e-10:
                raise ConfigError("mapping torus monodromy must be an orthogonal slice_dim matrix")
            object.__setattr__(self, "monodromy", m)
        else:
            object.__setattr__(self, "monodromy", None)

    @property
    def dim(self) -> int:
        return self.leaf_dim + self.slice_dim

    @property
    def periodic_axes(self):
        return [i for i, p in enumerate(self.periodic) if p]

    def _rotate_slice(self, p, power):
        if self.monodromy is None or power == 0 or self.slice_dim == 0:
            return p
        m = np.linalg.matrix_power(self.monodromy, int(power)) if power > 0 else np.linalg.matrix_power(
            self.monodromy.T, int(-power))
        q = p.copy()
        q[self.leaf_dim:] = m @ p[self.leaf_dim:]
        return q

    def wrap(self, p) -> np.ndarray:
        """Reduce covering coordinates to the fundamental domain."""
        p = np.array(p, dtype=float)
        windings = 0
        for i in self.periodic_axes:
            m = np.floor(p[i] / TWO_PI)
            p[i] -= TWO_PI * m
            if p[i] >= TWO_PI:  # floor rounding at the seam
                p[i] -= TWO_PI
                m += 1
            windings = int(m) if i == 0 else windings
        if self.kind == "mapping_torus":
            p = self._rotate_slice(p, windings)
        return p

    def deck(self, p, m) -> np.ndarray:
        """Apply the deck transformation with winding vector ``m``."""
        p = np.array(p, dtype=float)
        m = np.atleast_1d(np.asarray(m, dtype=int))
        for j, i in enumerate(self.periodic_axes):
            p[i] += TWO_PI * m[j]
        if self.kind == "mapping_torus":
            p = self._rotate_slice(p, -int(m[0]))
        return p

    def winding(self, start, end) -> tuple:
        """Integer winding vector of any path from ``start`` to ``end`` (covering coords)."""
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        out = []
        for i in self.periodic_axes:
            w = (np.floor(end[i] / TWO_PI) - np.floor(start[i] / TWO_PI))
            out.append(int(w))
        return tuple(out)

    def deck_between(self, p, q, tol=1e-7):
        """Winding vector m with deck(p, m) == q, or None if p, q are different points of B."""
        axes = self.periodic_axes
        m = [int(np.round((q[i] - p[i]) / TWO_PI)) for i in axes]
        if np.max(np.abs(self.deck(p, m) - np.asarray(q, dtype=float)), initial=0.0) <= tol:
            return m
        return None

    def object_distance(self, p, q) -> float:
        """Max-norm distance between the points of B represented by ``p`` and ``q``."""
        wp, wq = self.wrap(p), self.wrap(q)
        axes = self.periodic_axes
        best = float(np.max(np.abs(wp - wq))) if wp.size else 0.0
        for m in itertools.product((-1, 0, 1), repeat=len(axes)):
            if any(m):
                best = min(best, float(np.max(np.abs(self.deck(wp, m) - wq))))
        return best

    def is_leafwise(self, vector, tol=LEAFWISE_TOL) -> bool:
        v = np.asarray(vector, dtype=float)
        return bool(np.all(np.abs(v[self.leaf_dim:]) <= tol))

    def contains(self, p) -> bool:
        w = self.wrap(p)
        return all(per or lo <= c <= hi for c, per, (lo, hi) in zip(w, self.periodic, self.box))

    def leaf_step(self, eps):
        """Per leaf coordinate: (step, count) with step <= eps dividing the period or box."""
        out = []
        for i in range(self.leaf_dim):
            lo, hi = self.box[i]
            length = hi - lo
            count = max(1, int(np.ceil(length / eps)))
            out.append((length / count, count))
        return out


class BasePath:
    """Piecewise-linear path in covering coordinates, parameterized on [0, 1].

    Breakpoint times are proportional to arclength. ``alpha * beta`` traverses
    ``beta`` first (right-to-left concatenation).
    """

    __slots__ = ("base", "vertices", "times", "_key")

    def __init__(self, base: BaseSpace, vertices, times=None):
        v = np.array(vertices, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.shape[1] != base.dim:
            raise DomainError(f"path vertices have dimension {v.shape[1]}, base has {base.dim}")
        if v.shape[0] == 1:
            v = np.vstack([v, v])
        if times is None:
            lengths = np.linalg.norm(np.diff(v, axis=0), axis=1)
            total = lengths.sum()
            if total > 0:
                times = np.concatenate([[0.0], np.cumsum(lengths) / total])
            else:
                times = np.linspace(0.0, 1.0, len(v))
        times = np.array(times, dtype=float)
        times[0], times[-1] = 0.0, 1.0
        if len(times) != len(v) or np.any(np.diff(times) < 0):
            raise DomainError("path times must be non-decreasing and match the vertices")
        self.base = base
        self.vertices = v
        self.times = times
        self._key = None

    @classmethod
    def constant(cls, base, point):
        return cls(base, [point, point])

    @classmethod
    def line(cls, base, start, end):
        return cls(base, [start, end])

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0].copy()

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1].copy()

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())

    @property
    def homotopy_key(self) -> tuple:
        if self._key is None:
            self._key = self.base.winding(self.start, self.end)
        return self._key

    def segments(self):
        """Yield ``(t0, t1, p0, velocity)`` for each segment of positive duration."""
        for i in range(len(self.vertices) - 1):
            t0, t1 = self.times[i], self.times[i + 1]
            if t1 > t0:
                yield t0, t1, self.vertices[i], (self.vertices[i + 1] - self.vertices[i]) / (t1 - t0)

    def samples(self):
        """List of ``(t, point, velocity)`` at the breakpoints (right-sided velocity)."""
        out = []
        segs = list(self.segments())
        for t0, _t1, p0, vel in segs:
            out.append((float(t0), p0.copy(), vel.copy()))
        zero = np.zeros(self.base.dim)
        out.append((1.0, self.end, segs[-1][3].copy() if segs else zero))
        return out

    @property
    def leafwise(self) -> bool:
        return all(self.base.is_leafwise(vel) for *_, vel in self.segments())

    def point_at(self, t) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.vertices[:, j]) for j in range(self.base.dim)])

    def reversed(self) -> "BasePath":
        return BasePath(self.base, self.vertices[::-1], 1.0 - self.times[::-1])

    def translated(self, m) -> "BasePath":
        return BasePath(self.base, [self.base.deck(p, m) for p in self.vertices], self.times)

    def restricted(self, t) -> "BasePath":
        """The path on [0, t], reparameterized to [0, 1]."""
        keep = self.times < t
        verts = list(self.vertices[keep]) + [self.point_at(t)]
        return BasePath(self.base, verts)

    def __mul__(self, other: "BasePath") -> "BasePath":
        """``self * other``: run ``other`` first, then ``self`` (translated to match)."""
        m = self.base.deck_between(self.start, other.end)
        if m is None:
            raise DomainError(
                f"cannot concatenate: path starts at {self.start} but the previous one ends at {other.end}")
        first = self.translated(m) if any(m) else self
        verts = np.vstack([other.vertices, first.vertices[1:]])
        return BasePath(self.base, verts)

    def __repr__(self):
        return f"BasePath({self.start.tolist()} -> {self.end.tolist()}, {len(self.vertices) - 1} segments)"


def coordinate_loop(base: BaseSpace, point, axis, turns=1) -> BasePath:
    """Loop winding ``turns`` times along periodic leaf coordinate ``axis``."""
    if not base.periodic[axis] or axis >= base.leaf_dim:
        raise DomainError(f"coordinate {axis} is not a periodic leaf coordinate")
    p = np.array(point, dtype=float)
    q = p.copy()
    q[axis] += TWO_PI * turns
    return BasePath(base, [p, q])


def square_loop(base: BaseSpace, point, axes=(0, 1), side=0.05) -> BasePath:
    """Small counterclockwise square loop in the plane of two leaf coordinates."""
    i, j = axes
    p = np.array(point, dtype=float)
    e_i = np.zeros(base.dim)
    e_j = np.zeros(base.dim)
    e_i[i] = side
    e_j[j] = side
    return BasePath(base, [p, p + e_i, p + e_i + e_j, p + e_j, p])
