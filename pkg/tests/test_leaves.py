import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foliation_lab.base import BaseSpace
from foliation_lab.bundle import ConnectionField, EuclideanBundle
from foliation_lab.foliation import FiberFoliation, GroupBundle, LinearizedField
from foliation_lab.leaves import (
    Budget,
    LeafSample,
    directed_hausdorff,
    group_step,
    hausdorff,
    invariant_spread,
    leaf_sample,
    leaf_sample_via_flows,
)
from foliation_lab.liecore import J2, LieSubalgebra

CIRCLE = BaseSpace("circle", 1)
XI = (np.zeros(1), np.array([1.0, 0.0]))


def _setup(c, group=True):
    conn = ConnectionField.constant(EuclideanBundle(CIRCLE, 2), [c * J2]) if c else \
        ConnectionField.flat(EuclideanBundle(CIRCLE, 2))
    alg = LieSubalgebra(2, (J2,) if group else ())
    fib = FiberFoliation.from_expressions(alg, ["v0*v0 + v1*v1"] if group else ["v0", "v1"])
    return conn, GroupBundle(fib, conn, np.zeros(1))


def test_hausdorff_respects_periods():
    a = np.array([[0.01, 0.0]])
    b = np.array([[2 * np.pi - 0.01, 0.0]])
    assert hausdorff(a, b, [2 * np.pi, 0.0]) == pytest.approx(0.02)
    assert hausdorff(a, b) == pytest.approx(2 * np.pi - 0.02)


@given(st.integers(0, 2**32 - 1))
def test_hausdorff_is_symmetric_and_bounds_directed(seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=(20, 3)), r.normal(size=(15, 3))
    h = hausdorff(a, b)
    assert h == pytest.approx(hausdorff(b, a))
    assert directed_hausdorff(a, b) <= h + 1e-15 and directed_hausdorff(b, a) <= h + 1e-15
    assert hausdorff(a, a) == 0.0


def test_group_step_divides_full_turn_in_twelfths():
    d = group_step(J2, 1.0, 0.1)
    m = round(2 * np.pi / d)
    assert m % 12 == 0 and d * np.sqrt(2) <= 0.1 + 1e-12
    assert group_step(0 * J2, 1.0, 0.1) is None


def test_flat_trivial_group_tau_leaf_is_one_point_per_base_point():
    conn, gb = _setup(0.0, group=False)
    s = leaf_sample("F_tau", XI, conn, gb, Budget())
    assert np.allclose(s.points[:, 1:], [1.0, 0.0])
    assert len(s) == s.generation["base_points"]


def test_radius_is_invariant_on_linearized_leaf():
    conn, gb = _setup(0.25)
    s = leaf_sample("F_ell", (np.zeros(1), np.array([0.6, 0.8])), conn, gb, Budget())
    assert not s.partial
    assert np.max(np.abs(np.linalg.norm(s.points[:, 1:], axis=1) - 1.0)) <= 1e-6
    assert invariant_spread(s, gb.fib, 1) <= 1e-6


def test_subfoliation_nesting():
    conn, gb = _setup(0.25)
    samples = {k: leaf_sample(k, XI, conn, gb, Budget()) for k in ("F_tau", "F_ell", "F")}
    assert len(samples["F_tau"]) < len(samples["F_ell"])
    for small, big in (("F_tau", "F_ell"), ("F_ell", "F")):
        assert directed_hausdorff(samples[small].points, samples[big].points, samples[big].periods) <= 0.2
        assert invariant_spread(samples[small], gb.fib, 1) <= 1e-6


def test_zero_budget_returns_seed_and_warns():
    conn, gb = _setup(0.25)
    with pytest.warns(UserWarning, match="budget"):
        s = leaf_sample("F_ell", XI, conn, gb, Budget(max_points=0))
    assert s.partial and len(s) == 1


def test_flow_samples():
    conn, _ = _setup(0.0)
    rot = LinearizedField.constant([0.0], J2)
    s = leaf_sample_via_flows(XI, [rot], conn, Budget())
    assert np.allclose(s.points[:, 0], 0.0)
    assert np.max(np.abs(np.linalg.norm(s.points[:, 1:], axis=1) - 1.0)) <= 1e-9
    zero = LinearizedField.constant([0.0], np.zeros((2, 2)))
    assert len(leaf_sample_via_flows(XI, [zero], conn, Budget())) == 1


def test_flows_match_linearized_leaf():
    conn, gb = _setup(0.25)
    horizontal = LinearizedField.constant([1.0], -0.25 * J2)
    rot = LinearizedField.constant([0.0], J2)
    a = leaf_sample("F_ell", XI, conn, gb, Budget())
    b = leaf_sample_via_flows(XI, [horizontal, rot], conn, Budget())
    assert hausdorff(a.points, b.points, a.periods) <= 0.2


def test_sample_json_round_trip():
    conn, gb = _setup(0.25)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = leaf_sample("F_tau", XI, conn, gb, Budget())
    back = LeafSample.from_json(s.to_json())
    assert back.kind == s.kind and np.allclose(back.points, s.points, atol=1e-12)
    empty = LeafSample.from_json({**s.to_json(), "points": []})
    assert empty.points.shape == (0, 3)
