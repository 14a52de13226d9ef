import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foliation_lab.base import TWO_PI, BasePath, BaseSpace, coordinate_loop
from foliation_lab.errors import ConfigError, DomainError
from foliation_lab.expr import Expr
from foliation_lab.liecore import rotation2

angles = st.floats(-20, 20, allow_nan=False)


def test_expression_grammar():
    assert Expr("2*sin(x0) + v1", ["x0", "v1"])(0.0, 3.0) == 3.0
    assert Expr("exp(0) - cos(0) + pi/pi", [])() == 1.0
    assert Expr("3", ["x0"]).is_constant


@pytest.mark.parametrize("src", ["__import__('os')", "x0 ** 2", "open('f')", "y7 + 1", "lambda: 1", "x0 +"])
def test_expression_grammar_rejects(src):
    with pytest.raises(ConfigError):
        Expr(src, ["x0"], "/here")


def test_expression_error_keeps_pointer():
    with pytest.raises(ConfigError) as err:
        Expr("q", ["x0"], "/connection/terms/0/0/f")
    assert err.value.pointer == "/connection/terms/0/0/f"


@given(angles)
def test_circle_wrap_lands_in_fundamental_domain(t):
    base = BaseSpace("circle", 1)
    w = base.wrap([t])
    assert 0.0 <= w[0] < TWO_PI
    assert base.object_distance([t], w) < 1e-9


@given(angles, st.floats(-1, 1), st.floats(-1, 1))
def test_mapping_torus_identification(t, y1, y2):
    m = rotation2(0.7)
    base = BaseSpace("mapping_torus", 1, 2, ((0, TWO_PI), (-1, 1), (-1, 1)), m)
    p = np.array([t, y1, y2])
    q = base.deck(p, [1])
    assert q[0] == pytest.approx(t + TWO_PI)
    # (theta + 2 pi, y) ~ (theta, M y)
    assert np.allclose(base.deck(np.array([t + TWO_PI, y1, y2]), [-1])[1:], m @ [y1, y2])
    assert base.object_distance(p, q) < 1e-9


def test_monodromy_must_be_orthogonal():
    with pytest.raises(ConfigError):
        BaseSpace("mapping_torus", 1, 1, (), np.array([[2.0]]))


def test_concatenation_runs_right_factor_first():
    base = BaseSpace("circle", 1)
    a = BasePath.line(base, [1.0], [2.0])
    b = BasePath.line(base, [0.0], [1.0])
    ab = a * b
    assert ab.start[0] == 0.0 and ab.end[0] == 2.0
    with pytest.raises(DomainError):
        b * BasePath.line(base, [0.0], [0.5])


def test_concatenation_across_the_seam_uses_deck_translation():
    base = BaseSpace("circle", 1)
    loop = coordinate_loop(base, [0.5], 0)
    twice = loop * loop
    assert twice.end[0] == pytest.approx(0.5 + 2 * TWO_PI)
    assert twice.homotopy_key != loop.homotopy_key


def test_reversal_swaps_endpoints():
    base = BaseSpace("torus2", 2)
    p = BasePath(base, [[0, 0], [1, 0], [1, 2]])
    r = p.reversed()
    assert np.array_equal(r.start, p.end) and np.array_equal(r.end, p.start)
