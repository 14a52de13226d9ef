import numpy as np
import pytest

from foliation_lab import liecore
from foliation_lab.base import BasePath, coordinate_loop
from foliation_lab.errors import ComposabilityError, ConditionViolation
from foliation_lab.foliation import FiberFoliation, GroupBundle
from foliation_lab.groupoid import (
    BundleOfGroups,
    PairGroupoid,
    PathClassGroupoid,
    TransformationGroupoid,
    antipodal_quotient,
    axiom_suite,
    frame_gauge_quotient,
    orbit,
    pathclass_transformation_groupoid,
    representation_check,
)
from foliation_lab.liecore import LieSubalgebra, rotation2
from foliation_lab.suites import antipodal_table_defect


def so2_point_bundle():
    return BundleOfGroups([np.zeros(1)], lambda p, r: rotation2(r.uniform(0, 2 * np.pi)), n=2)


def so2_action():
    return TransformationGroupoid(so2_point_bundle(), lambda g, v: g[1] @ v, lambda x, r: r.normal(size=2))


def test_pair_groupoid_is_exact(rng):
    assert axiom_suite(PairGroupoid(range(5)), rng)["max_defect"] == 0.0


def test_so2_transformation_groupoid(rng):
    rep = axiom_suite(so2_action(), rng, pairs=1000, triples=300)
    assert rep["max_defect"] <= 1e-12


def test_transformation_composition_adds_angles():
    T = so2_action()
    p, e = np.zeros(1), (np.zeros(1), np.array([1.0, 0.0]))
    g, h = (p, rotation2(np.pi / 3)), (p, rotation2(np.pi / 6))
    prod = T.compose((g, T.act(h, e)), (h, e))
    assert liecore.max_abs(prod[0][1] - rotation2(np.pi / 2)) < 1e-15
    one = T.unit(e)
    assert T.arrow_distance(T.compose(one, one), one) == 0.0
    with pytest.raises(ComposabilityError):
        T.compose((g, e), (h, e))


def test_representation_defects(rng):
    G = so2_point_bundle()
    sample = lambda x, r: r.normal(size=2)  # noqa: E731
    assert representation_check(G, lambda g, v: v, sample, rng)["max_defect"] <= 1e-12
    bent = representation_check(G, lambda g, v: g[1] @ v + 0.1 * v * v, sample, rng)
    assert bent["defects"]["linearity"] > 1e-3


def test_frame_quotient_axioms(rng):
    assert axiom_suite(frame_gauge_quotient(3, 3), rng)["max_defect"] <= 1e-9


def test_quotient_product_is_independent_of_representatives(rng):
    Q = frame_gauge_quotient(3, 3)
    for _ in range(50):
        h = Q.random_arrow(rng)
        g = Q.random_arrow_from(Q.target(h), rng)
        a0, a1 = liecore.random_orthogonal(3, rng), liecore.random_orthogonal(3, rng)
        assert Q.arrow_distance(Q.compose(g, h), Q.compose(Q.act_arrow(g, a0), Q.act_arrow(h, a1))) <= 1e-12


def test_wrong_quotient_solve_is_detected(rng):
    rep = axiom_suite(frame_gauge_quotient(3, 3, "wrong_quotient_solve"), rng, 200, 50)
    assert rep["max_defect"] > 1e-3


def test_antipodal_quotient_table():
    Q = antipodal_quotient()
    table = antipodal_table_defect(Q)
    assert table["table_mismatches"] == 0
    # two objects, but each has Z/2 isotropy: the quotient is not a pair groupoid
    assert (table["objects"], table["arrows"], table["isotropy_at_1"]) == (2, 8, 2)


def test_orbits_of_simple_groupoids():
    P = PairGroupoid(range(4))
    pts, partial = orbit(P, 0, lambda y: [(z, y) for z in range(4)], lambda y: np.array([float(y)]), 0.5)
    assert sorted(pts[:, 0]) == [0, 1, 2, 3] and not partial
    B = so2_point_bundle()
    T = TransformationGroupoid(B, lambda g, v: g[1] @ v, None)
    step = rotation2(2 * np.pi / 24)
    moves = lambda e: [((e[0], step), e), ((e[0], step.T), e)]  # noqa: E731
    # shift off the grid so no orbit point sits on a cell boundary
    pts, _ = orbit(T, (np.zeros(1), np.array([1.0, 0.0])), moves, lambda e: e[1] + 0.003, 0.01)
    assert len(pts) == 24 and np.allclose(np.linalg.norm(pts - 0.003, axis=1), 1.0)


@pytest.fixture(scope="module")
def pathclass(quarter):
    return PathClassGroupoid(quarter.conn, quarter.gb, quarter.objects)


def test_pathclass_constant_paths_multiply(pathclass):
    G = pathclass
    c = BasePath.constant(G.base, [0.0])
    a, b = G.arrow(c, rotation2(0.3)), G.arrow(c, rotation2(0.5))
    assert liecore.max_abs(G.compose(a, b).k - rotation2(0.8)) < 1e-15
    inv = G.inverse(a)
    assert liecore.max_abs(inv.k - rotation2(-0.3)) < 1e-15


def test_pathclass_loop_products(pathclass):
    G = pathclass
    loop = G.arrow(coordinate_loop(G.base, [0.0], 0))
    assert liecore.max_abs(G.compose(loop, loop).effective - rotation2(-np.pi)) <= 1e-6
    assert liecore.max_abs(G.inverse(loop).effective - rotation2(np.pi / 2)) <= 1e-6
    assert G.arrow_distance(G.inverse(G.inverse(loop)), loop) <= 1e-12
    one = G.unit(loop.path.end)
    assert G.arrow_distance(G.compose(one, loop), loop) <= 1e-9


def test_pathclass_source_target(pathclass, rng):
    a = pathclass.random_arrow(rng)
    assert np.array_equal(pathclass.source(a), a.path.start)
    assert np.array_equal(pathclass.target(a), a.path.end)


def test_pathclass_respects_rewiring(pathclass, rng):
    G = pathclass
    k = G.gb.random_element(np.zeros(1), rng)
    direct = G.arrow(BasePath.line(G.base, [0.0], [2.5]), k)
    detour = G.arrow(BasePath(G.base, [[0.0], [3.0], [1.0], [2.5]]), k)
    assert direct.key == detour.key
    b = G.arrow(BasePath.line(G.base, [2.5], [4.0]))
    assert G.arrow_distance(G.compose(b, direct), G.compose(b, detour)) <= 1e-9


def test_pathclass_rejects_escaping_group_element(quarter):
    trivial = FiberFoliation.from_expressions(LieSubalgebra(2, ()), ["v0", "v1"])
    G = PathClassGroupoid(quarter.conn, GroupBundle(trivial, quarter.conn, np.zeros(1)), quarter.objects)
    c = BasePath.constant(G.base, [0.0])
    with pytest.raises(ConditionViolation) as err:
        G.compose(G.arrow(c, rotation2(0.3)), G.arrow(c))
    assert err.value.defect > 1e-6


def test_dropped_conjugation_is_detected(so3_circle, rng):
    sc = so3_circle
    G = PathClassGroupoid(sc.conn, sc.gb, sc.objects, mutation="drop_conjugation")
    rep = axiom_suite(G, rng, 200, 60)
    assert rep["max_defect"] > 1e-3
    action = axiom_suite(pathclass_transformation_groupoid(G), rng, 200, 60)
    assert action["defects"]["associativity"] > 1e-3
    honest = PathClassGroupoid(sc.conn, sc.gb, sc.objects)
    assert axiom_suite(honest, rng, 200, 60)["max_defect"] <= 1e-9
