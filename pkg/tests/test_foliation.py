import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foliation_lab import liecore
from foliation_lab.base import BasePath, BaseSpace
from foliation_lab.bundle import ConnectionField, EuclideanBundle, parallel_transport
from foliation_lab.errors import ConditionViolation, ConfigError, ConvergenceError, DomainError, OrthogonalityError
from foliation_lab.foliation import (
    FiberFoliation,
    GroupBundle,
    GroupClosureSpec,
    LinearizedField,
    TotalVectorField,
    conjugate_group,
    factor_flow,
    flow_isometries,
    homothety,
    killing_check,
    lifted_leaf_dim_check,
    linearize_field,
    rationality_warnings,
)
from foliation_lab.liecore import J2, LieSubalgebra, rotation2

CIRCLE = BaseSpace("circle", 1)
SO2 = LieSubalgebra(2, (J2,))
RADIUS = ["v0*v0 + v1*v1"]


def so2_circles():
    return FiberFoliation.from_expressions(SO2, RADIUS)


def field(fiber, base="0"):
    return TotalVectorField(1, 2, [base], fiber)


def test_generator_must_fix_invariants():
    with pytest.raises(ConfigError):
        FiberFoliation.from_expressions(SO2, ["v0"])


def test_closure_must_contain_algebra():
    other = LieSubalgebra(4, (liecore.block_diag(np.zeros((2, 2)), J2),))
    line = LieSubalgebra(4, (liecore.block_diag(J2, np.sqrt(2) * J2),))
    with pytest.raises(ConfigError):
        FiberFoliation.from_expressions(line, ["v0*v0 + v1*v1", "v2*v2 + v3*v3"], closure=GroupClosureSpec(other))


def test_rationality_self_check():
    line = LieSubalgebra(4, (liecore.block_diag(J2, np.sqrt(2) * J2),))
    torus = GroupClosureSpec(LieSubalgebra(4, (liecore.block_diag(J2, 0 * J2), liecore.block_diag(0 * J2, J2))))
    inv = ["v0*v0 + v1*v1", "v2*v2 + v3*v3"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert rationality_warnings(FiberFoliation.from_expressions(line, inv, closure=torus)) == []
        assert len(rationality_warnings(FiberFoliation.from_expressions(line, inv))) == 1
        rational = LieSubalgebra(4, (liecore.block_diag(J2, 2 * J2),))
        assert len(rationality_warnings(FiberFoliation.from_expressions(rational, inv, closure=torus))) == 1


def test_homothety_oracles():
    b, v = homothety(0.5, (np.zeros(1), np.array([2.0, 0.0])))
    assert np.array_equal(v, [1.0, 0.0])
    p = (np.zeros(1), np.array([0.3, -0.4]))
    assert np.array_equal(homothety(1.0, p)[1], p[1])
    with pytest.raises(DomainError):
        homothety(0.0, p)


@given(st.floats(0.01, 10), st.floats(-3, 3), st.floats(-3, 3))
def test_homothety_scales_radius(lam, x, y):
    v = np.array([x, y])
    assert np.linalg.norm(homothety(lam, (np.zeros(1), v))[1]) == pytest.approx(lam * np.linalg.norm(v), abs=1e-12)


def test_linearization_of_linear_field_is_exact():
    lin = linearize_field(field(["-v1", "v0"]))
    assert liecore.max_abs(lin.fiber_matrix(np.zeros(1)) - J2) <= 1e-12


def test_linearization_drops_quadratic_term():
    lin = linearize_field(field(["-v1 + v0*v0 + v1*v1", "v0"]))
    assert liecore.max_abs(lin.fiber_matrix(np.zeros(1)) - J2) <= 1e-6


def test_linearization_keeps_symmetric_matrix():
    lin = linearize_field(field(["2*v0 + v1", "v0 - v1"]))
    assert liecore.max_abs(lin.fiber_matrix(np.zeros(1)) - np.array([[2, 1], [1, -1]])) <= 1e-12


def test_linearization_rejects_divergent_sequences():
    with pytest.raises(ConvergenceError) as err:
        linearize_field(field(["v0*v0*v0*v0*v0*1e6 + exp(1/(v0*v0 + 0.0001))", "0"])).fiber_matrix(np.zeros(1))
    assert err.value.residuals


@given(st.integers(0, 2**32 - 1))
def test_linearization_is_idempotent(seed):
    m = np.random.default_rng(seed).normal(size=(2, 2))
    lin = LinearizedField.constant([0.0], m)
    again = linearize_field(lin, n=2, base_point=np.zeros(1))
    assert liecore.max_abs(again.fiber_matrix(np.zeros(1)) - m) <= 1e-12


def test_killing_oracles(rng):
    assert killing_check(J2, rng=rng) <= 1e-12
    assert killing_check(np.diag([1.0, -1.0]), samples=4000, rng=rng) == pytest.approx(1.0, abs=1e-3)
    assert killing_check(J2 + 1e-5 * np.eye(2), rng=rng) == pytest.approx(1e-5, rel=1e-6)


def test_conjugate_group_oracles(rng):
    assert np.array_equal(conjugate_group(np.eye(2), [J2])[0], J2)
    assert liecore.max_abs(conjugate_group(rotation2(0.8), [J2])[0] - J2) < 1e-15
    gens = [liecore.random_skew(3, rng), liecore.random_skew(3, rng)]
    q = liecore.random_orthogonal(3, rng)
    assert liecore.bracket_closure_rank(conjugate_group(q, gens)) == liecore.bracket_closure_rank(gens)
    with pytest.raises(OrthogonalityError):
        conjugate_group(2 * np.eye(2), [J2])


def _quarter_conn():
    return ConnectionField.constant(EuclideanBundle(CIRCLE, 2), [0.25 * J2])


def test_factor_flow_recovers_fiber_rotation():
    conn, fib = _quarter_conn(), so2_circles()
    omega = 0.9
    flow = []
    for t in np.linspace(0, 1, 5):
        p = parallel_transport(BasePath.line(CIRCLE, [0.0], [t]), conn, 1e-3)
        flow.append((t, np.array([t]), p @ rotation2(omega * t)))
    rows = factor_flow(flow, conn, fib)
    assert np.array_equal(rows[0]["k"], np.eye(2))
    for row in rows:
        assert liecore.max_abs(row["k"] - rotation2(omega * row["t"])) <= 1e-6


def test_factor_flow_of_horizontal_flow_is_identity():
    conn, fib = _quarter_conn(), so2_circles()
    horizontal = linearize_field(field(["0.25*v1", "-0.25*v0"], base="1"))
    rows = factor_flow(flow_isometries(horizontal, np.zeros(1), [0, 0.5, 1.0]), conn, fib)
    assert max(liecore.max_abs(r["k"] - np.eye(2)) for r in rows) <= 1e-6


def test_factor_flow_flags_group_escape():
    conn = _quarter_conn()
    fib = FiberFoliation.from_expressions(LieSubalgebra(2, ()), ["v0", "v1"])
    flow = [(0.0, np.zeros(1), np.eye(2)), (1.0, np.zeros(1), rotation2(0.5))]
    with pytest.raises(ConditionViolation) as err:
        factor_flow(flow, conn, fib)
    assert err.value.defect > 1e-6


def test_lifted_leaf_dimension(rng):
    conn = _quarter_conn()
    gb = GroupBundle(so2_circles(), conn, np.zeros(1))
    frames = [liecore.random_orthogonal(2, rng) for _ in range(4)]
    pts = [np.array([t]) for t in (0.0, 1.0, 2.0, 3.0)]
    rep = lifted_leaf_dim_check(conn, gb.generators_at, pts, frames, 1)
    assert rep["ranks"] == [2, 2, 2, 2] and rep["constant"]
    flat = ConnectionField.flat(EuclideanBundle(CIRCLE, 2))
    assert lifted_leaf_dim_check(flat, lambda b: [], pts, frames, 1)["ranks"] == [1, 1, 1, 1]
