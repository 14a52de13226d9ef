import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foliation_lab import liecore
from foliation_lab.base import BasePath, BaseSpace, coordinate_loop
from foliation_lab.bundle import (
    EXACT,
    ConnectionField,
    EuclideanBundle,
    FrameElement,
    frame_lift,
    holonomy_algebra_dim,
    holonomy_sample,
    parallel_transport,
    right_action_free_check,
    transport_convergence_order,
)
from foliation_lab.errors import ConfigError, NotBasedError, OrthogonalityError, ScopeError
from foliation_lab.liecore import J2, rotation2

CIRCLE = BaseSpace("circle", 1)


def constant_circle(c):
    return ConnectionField.constant(EuclideanBundle(CIRCLE, 2), [c * J2])


def test_constant_path_transport_is_identity():
    p = parallel_transport(BasePath.constant(CIRCLE, [0.3]), constant_circle(0.25))
    assert np.array_equal(p, np.eye(2))


@pytest.mark.parametrize("c", [0.25, 1 / 3])
def test_loop_matches_closed_form(c):
    p = parallel_transport(coordinate_loop(CIRCLE, [0.0], 0), constant_circle(c), 1e-3)
    assert liecore.max_abs(p - liecore.exp_skew(-2 * np.pi * c * J2)) <= 1e-6


def test_quarter_loop_is_rotation_by_minus_half_pi():
    p = parallel_transport(coordinate_loop(CIRCLE, [0.0], 0), constant_circle(0.25), 1e-3)
    assert liecore.max_abs(p - rotation2(-np.pi / 2)) <= 1e-6


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_reversed_path_inverts_transport(a, b):
    conn = ConnectionField(EuclideanBundle(CIRCLE, 2), [[("0.2*sin(x0) + 0.1", J2)]])
    path = BasePath.line(CIRCLE, [a], [b])
    fwd = parallel_transport(path, conn, 1e-2)
    back = parallel_transport(path.reversed(), conn, 1e-2)
    assert liecore.max_abs(back @ fwd - np.eye(2)) <= 1e-8


def test_step_range_is_enforced():
    with pytest.raises(ConfigError):
        parallel_transport(coordinate_loop(CIRCLE, [0.0], 0), constant_circle(0.25), step=0.5)


def test_leafwise_connection_refuses_transverse_paths():
    base = BaseSpace("product_box", 1, 1)
    conn = ConnectionField.flat(EuclideanBundle(base, 2))
    with pytest.raises(ScopeError):
        parallel_transport(BasePath.line(base, [0, 0], [0, 0.5]), conn)
    full = ConnectionField.flat(EuclideanBundle(base, 2), scope="full")
    assert np.array_equal(parallel_transport(BasePath.line(base, [0, 0], [0, 0.5]), full), np.eye(2))


def test_convergence_order_oracles():
    loop = coordinate_loop(CIRCLE, [0.0], 0)
    assert transport_convergence_order(loop, ConnectionField.flat(EuclideanBundle(CIRCLE, 2))) == EXACT
    varying = ConnectionField(EuclideanBundle(CIRCLE, 2), [[("0.2*sin(x0)", J2)]])
    assert 3.5 <= transport_convergence_order(BasePath.line(CIRCLE, [0.0], [2.5]), varying) <= 4.5


def test_holonomy_of_third_turn_has_order_three():
    g, = holonomy_sample(np.zeros(1), [coordinate_loop(CIRCLE, [0.0], 0)], constant_circle(1 / 3))
    assert liecore.max_abs(np.linalg.matrix_power(g, 3) - np.eye(2)) <= 1e-6
    assert liecore.max_abs(g - np.eye(2)) > 0.5


def test_holonomy_needs_based_loops():
    with pytest.raises(NotBasedError):
        holonomy_sample(np.array([1.0]), [coordinate_loop(CIRCLE, [0.0], 0)], constant_circle(0.1))


def test_commuting_torus_holonomy():
    torus = BaseSpace("torus2", 2)
    conn = ConnectionField.constant(EuclideanBundle(torus, 2), [0.25 * J2, 0.125 * J2])
    a, b = holonomy_sample(np.zeros(2), [coordinate_loop(torus, [0, 0], i) for i in (0, 1)], conn)
    assert liecore.max_abs(a @ b @ a.T @ b.T - np.eye(2)) <= 1e-8


def test_holonomy_algebra_dimension_oracles():
    loop = coordinate_loop(CIRCLE, [0.0], 0)
    flat = ConnectionField.flat(EuclideanBundle(CIRCLE, 2))
    assert holonomy_algebra_dim(holonomy_sample(np.zeros(1), [loop], flat), [], flat) == 0
    rot = constant_circle(0.25)
    assert holonomy_algebra_dim(holonomy_sample(np.zeros(1), [loop], rot), [], rot) == 1


def test_frame_lift_is_left_multiplication(rng):
    xi = FrameElement((0.0,), np.eye(2))
    assert np.array_equal(frame_lift(np.eye(2), xi).frame, np.eye(2))
    assert np.array_equal(frame_lift(rotation2(0.4), xi).frame, rotation2(0.4))
    q = liecore.random_orthogonal(3, rng)
    f = FrameElement((0.0,), liecore.random_orthogonal(3, rng))
    g = liecore.random_orthogonal(3, rng)
    assert np.array_equal(frame_lift(g, f).act(q).frame, (g @ f.frame) @ q)
    with pytest.raises(OrthogonalityError):
        frame_lift(2 * np.eye(2), xi)


def test_right_action_is_free(rng):
    frames = [FrameElement((0.0,), liecore.random_orthogonal(3, rng)) for _ in range(5)]
    quarter = liecore.block_diag(rotation2(np.pi / 2), np.eye(1))
    assert right_action_free_check(frames, rng, 5, [quarter])["min_displacement"] >= 1.0
    assert right_action_free_check(frames, rng, 100)["free"]
    assert right_action_free_check(frames, rng, 3, [np.eye(3)])["min_displacement"] == np.inf
