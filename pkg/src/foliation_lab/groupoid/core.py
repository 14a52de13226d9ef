"""Groupoid contract, axiom harness, representations and orbits.

Composition follows the convention ``compose(g, h) = g h``, defined when
``source(g) == target(h)``: ``h`` is applied first.
"""

from __future__ import annotations

import abc
from collections import deque

import numpy as np

from ..errors import ComposabilityError, FoliationLabError, SamplerError

ARROW_TOL = 1e-7
AXIOMS = (
    "source_of_product",
    "target_of_product",
    "associativity",
    "left_unit",
    "right_unit",
    "left_inverse",
    "right_inverse",
    "source_of_inverse",
    "target_of_inverse",
)


class Groupoid(abc.ABC):
    """Arrows over objects with partial multiplication.

    Subclasses supply the structure maps plus distances, which are how
    equality is decided: two arrows are equal when their distance is below
    tolerance. Samplers produce random arrows, optionally with a given source.
    """

    name = "groupoid"
    object_tol = 1e-9

    @abc.abstractmethod
    def source(self, g): ...

    @abc.abstractmethod
    def target(self, g): ...

    @abc.abstractmethod
    def compose(self, g, h): ...

    @abc.abstractmethod
    def unit(self, x): ...

    @abc.abstractmethod
    def inverse(self, g): ...

    @abc.abstractmethod
    def arrow_distance(self, g, h) -> float: ...

    @abc.abstractmethod
    def object_distance(self, x, y) -> float: ...

    @abc.abstractmethod
    def random_arrow(self, rng): ...

    def random_arrow_from(self, x, rng):
        """Random arrow with source ``x``; default rejection-samples."""
        for _ in range(1000):
            g = self.random_arrow(rng)
            if self.object_distance(self.source(g), x) <= self.object_tol:
                return g
        raise SamplerError(f"{self.name}: could not sample an arrow with the requested source")

    def composable(self, g, h) -> bool:
        return self.object_distance(self.source(g), self.target(h)) <= self.object_tol

    def require_composable(self, g, h):
        d = self.object_distance(self.source(g), self.target(h))
        if not d <= self.object_tol:
            raise ComposabilityError(f"{self.name}: s(g) and t(h) differ by {d:.3e}")


def _draw_chain(G, rng, length):
    """Arrows ``g_1 ... g_length`` with each consecutive pair composable."""
    chain = [G.random_arrow(rng)]
    for _ in range(length - 1):
        chain.insert(0, G.random_arrow_from(G.target(chain[0]), rng))
    for a, b in zip(chain, chain[1:]):
        if not G.composable(a, b):
            raise SamplerError(f"{G.name}: sampler returned a non-composable pair")
    return chain


def _measure(fn):
    try:
        return float(fn())
    except FoliationLabError:
        return np.inf


def axiom_suite(G: Groupoid, rng, pairs=1000, triples=300, tol=1e-9) -> dict:
    """Max defect of every groupoid axiom over random composable pairs and triples.

    A law that raises (e.g. a claimed-composable pair is rejected) scores an
    infinite defect rather than aborting the suite.
    """
    worst = dict.fromkeys(AXIOMS, 0.0)

    def record(axiom, value):
        worst[axiom] = max(worst[axiom], value)

    for _ in range(pairs):
        g, h = _draw_chain(G, rng, 2)
        gh = None
        try:
            gh = G.compose(g, h)
        except FoliationLabError:
            record("source_of_product", np.inf)
            record("target_of_product", np.inf)
        if gh is not None:
            record("source_of_product", _measure(lambda: G.object_distance(G.source(gh), G.source(h))))
            record("target_of_product", _measure(lambda: G.object_distance(G.target(gh), G.target(g))))
        record("left_unit", _measure(lambda: G.arrow_distance(G.compose(G.unit(G.target(h)), h), h)))
        record("right_unit", _measure(lambda: G.arrow_distance(G.compose(g, G.unit(G.source(g))), g)))
        inv = G.inverse(g)
        record("left_inverse", _measure(lambda: G.arrow_distance(G.compose(inv, g), G.unit(G.source(g)))))
        record("right_inverse", _measure(lambda: G.arrow_distance(G.compose(g, inv), G.unit(G.target(g)))))
        record("source_of_inverse", _measure(lambda: G.object_distance(G.source(inv), G.target(g))))
        record("target_of_inverse", _measure(lambda: G.object_distance(G.target(inv), G.source(g))))
    for _ in range(triples):
        f, g, h = _draw_chain(G, rng, 3)
        record(
            "associativity",
            _measure(lambda: G.arrow_distance(G.compose(G.compose(f, g), h), G.compose(f, G.compose(g, h)))),
        )
    return {
        "groupoid": G.name,
        "pairs": pairs,
        "triples": triples,
        "tol": tol,
        "defects": worst,
        "max_defect": max(worst.values()),
        "passed": all(v <= tol for v in worst.values()),
    }


def representation_check(G: Groupoid, act, fiber_sampler, rng, trials=200) -> dict:
    """Defects of a groupoid action on a vector bundle.

    ``act(g, v)`` maps a vector over ``source(g)`` to one over ``target(g)``;
    ``fiber_sampler(x, rng)`` draws a vector over ``x``.
    """
    worst = {"linearity": 0.0, "isometry": 0.0, "unit": 0.0, "mixed_associativity": 0.0}
    for _ in range(trials):
        g, h = _draw_chain(G, rng, 2)
        x = G.source(g)
        u, w = fiber_sampler(x, rng), fiber_sampler(x, rng)
        a, b = rng.normal(size=2)
        lin = np.max(np.abs(act(g, a * u + b * w) - a * act(g, u) - b * act(g, w)))
        worst["linearity"] = max(worst["linearity"], float(lin))
        iso = abs(np.linalg.norm(act(g, u)) - np.linalg.norm(u))
        worst["isometry"] = max(worst["isometry"], float(iso))
        unit = np.max(np.abs(act(G.unit(x), u) - u))
        worst["unit"] = max(worst["unit"], float(unit))
        v = fiber_sampler(G.source(h), rng)
        mixed = np.max(np.abs(act(g, act(h, v)) - act(G.compose(g, h), v)))
        worst["mixed_associativity"] = max(worst["mixed_associativity"], float(mixed))
    return {"trials": trials, "defects": worst, "max_defect": max(worst.values())}


def snap(x, cell):
    return tuple(np.floor(np.asarray(x, dtype=float) / cell).astype(np.int64).tolist())


def orbit(G: Groupoid, x, moves, embed, cell, budget=100_000) -> tuple[np.ndarray, bool]:
    """Breadth-first target closure ``t(s^-1(x))``.

    ``moves(y)`` lists arrows with source ``y`` (a generating set of the
    s-fiber); ``embed`` maps objects to coordinates used for snapping to a
    grid of size ``cell``. Returns the embedded orbit points (sorted by grid
    key) and whether the budget ran out first.
    """
    seen = {snap(embed(x), cell): x}
    queue = deque([x])
    partial = False
    while queue:
        y = queue.popleft()
        for g in moves(y):
            z = G.target(g)
            k = snap(embed(z), cell)
            if k in seen:
                continue
            if len(seen) >= budget:
                partial = True
                continue
            seen[k] = z
            queue.append(z)
    return np.array([embed(seen[k]) for k in sorted(seen)]), partial
