import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foliation_lab import liecore
from foliation_lab.base import BasePath
from foliation_lab.charts import (
    Atlas,
    ChartDatum,
    base_holonomy_map,
    chart_coordinates,
    coordinate_defect,
    dependency_defects,
    random_chart_point,
    simple_neighborhood,
)
from foliation_lab.errors import DomainError, NotInDomainError
from foliation_lab.groupoid.pathclass import PathClassArrow
from foliation_lab.suites import reversed_chart


@pytest.fixture(scope="module")
def atlas(charts_scenario):
    return Atlas(charts_scenario.conn, charts_scenario.gb, step=2e-3)


def test_round_trip(charts_scenario, atlas, rng):
    D = charts_scenario.charts[0]
    for _ in range(20):
        point = random_chart_point(D, charts_scenario.gb, rng)
        arrow = atlas.inverse(D, *point)
        assert coordinate_defect(atlas.forward(D, arrow), point) <= 1e-8


def test_canonical_arrow_with_identity_has_identity_coordinates(charts_scenario, atlas):
    D = charts_scenario.charts[0]
    n = charts_scenario.n
    zero = (np.zeros(1), np.zeros(2))
    k, (x0, y0), x1 = atlas.forward(D, atlas.inverse(D, np.eye(n), zero, np.zeros(1)))
    assert liecore.max_abs(k - np.eye(n)) <= 1e-12
    assert np.allclose(x0, 0) and np.allclose(y0, 0) and np.allclose(x1, 0)


def test_extra_turn_is_outside_the_chart(charts_scenario, atlas):
    D = charts_scenario.charts[0]
    base = charts_scenario.base
    canon = atlas.inverse(D, np.eye(charts_scenario.n), (np.zeros(1), np.zeros(2)), np.zeros(1)).path
    longer = BasePath.line(base, canon.end, canon.end + np.array([2 * np.pi, 0.0, 0.0])) * canon
    arrow = PathClassArrow(longer, np.eye(charts_scenario.n), atlas.transport(longer))
    with pytest.raises(NotInDomainError):
        atlas.forward(D, arrow)


def test_transition_to_itself_is_identity(charts_scenario, atlas, rng):
    D = charts_scenario.charts[0]
    for _ in range(5):
        point = random_chart_point(D, charts_scenario.gb, rng, shrink=0.4)
        assert coordinate_defect(atlas.transition(D, D, *point), point) <= 1e-9


def test_transition_matches_oracle_and_cocycle(charts_scenario, atlas, rng):
    D, Dt, Dh = charts_scenario.charts[:3]
    done = 0
    for _ in range(40):
        point = random_chart_point(D, charts_scenario.gb, rng, shrink=0.4)
        try:
            direct = atlas.transition(D, Dh, *point)
            via = atlas.transition(Dt, Dh, *atlas.transition(D, Dt, *point))
        except NotInDomainError:
            continue
        assert coordinate_defect(atlas.transition(D, Dt, *point), atlas.transition_oracle(D, Dt, *point)) <= 1e-7
        assert coordinate_defect(via, direct) <= 1e-7
        done += 1
    assert done >= 5


def test_dependency_pattern(charts_scenario, atlas):
    D, Dt = charts_scenario.charts[:2]
    worst = dependency_defects(atlas, D, Dt, (np.array([0.1]), np.array([0.05, -0.02])), np.array([0.2]))
    assert max(worst.values()) <= 1e-7


@settings(max_examples=20)
@given(st.floats(-0.15, 0.15), st.floats(-0.15, 0.15))
def test_base_holonomy_is_the_monodromy_and_reverses(charts_scenario, a, b):
    D = charts_scenario.charts[0]
    base = charts_scenario.base
    y = np.array([a, b])
    there = base_holonomy_map(D, y)
    assert np.allclose(there, base.monodromy @ y, atol=1e-9)
    assert np.allclose(base_holonomy_map(reversed_chart(D), there), y, atol=1e-9)


def test_chart_datum_validation(charts_scenario):
    base = charts_scenario.base
    D = charts_scenario.charts[0]
    off = BasePath.line(base, [0.0, 0.0, 0.0], [1.0, 0.1, 0.0])
    with pytest.raises(DomainError):
        ChartDatum(off, D.U0, D.U1)
    moved = simple_neighborhood(base, [0.5, 0.0, 0.0], 1.0, 0.4)
    with pytest.raises(DomainError):
        ChartDatum(D.alpha, moved, D.U1)


def test_chart_coordinates_use_deck_translates(charts_scenario):
    base = charts_scenario.base
    U = simple_neighborhood(base, [0.0, 0.0, 0.0], 1.0, 0.4)
    p = base.deck(np.array([0.2, 0.1, 0.0]), [1])
    assert np.allclose(chart_coordinates(base, U, p), [0.2, 0.1, 0.0])
    with pytest.raises(NotInDomainError):
        chart_coordinates(base, U, [3.0, 0.0, 0.0])
