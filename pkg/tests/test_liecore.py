import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foliation_lab import liecore
from foliation_lab.errors import BranchError, DimensionError, SingularMatrixError, SkewnessError
from foliation_lab.liecore import J2, rotation2

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 8)


def test_exp_of_zero_is_identity_exactly():
    assert np.array_equal(liecore.exp_skew(np.zeros((3, 3))), np.eye(3))


def test_exp_quarter_turn():
    assert liecore.max_abs(liecore.exp_skew(np.pi / 2 * J2) - np.array([[0, -1], [1, 0]])) < 1e-15


def test_exp_rejects_non_skew_with_defect():
    with pytest.raises(SkewnessError) as err:
        liecore.exp_skew(np.eye(2))
    assert err.value.defect == pytest.approx(2.0)


@given(seeds, dims)
def test_exp_of_skew_is_orthogonal(seed, n):
    a = liecore.random_skew(n, np.random.default_rng(seed), scale=3.0)
    assert liecore.orthogonality_defect(liecore.exp_skew(a)) <= 1e-10


@given(seeds)
def test_exp_matches_scipy(seed):
    import scipy.linalg

    a = liecore.random_skew(4, np.random.default_rng(seed), scale=2.0)
    assert liecore.max_abs(liecore.exp_skew(a) - scipy.linalg.expm(a)) < 1e-12


def test_polar_oracles():
    assert liecore.max_abs(liecore.polar_retract(np.diag([2.0, 0.5])) - np.eye(2)) < 1e-15
    r = rotation2(0.83)
    assert liecore.max_abs(liecore.polar_retract(1.001 * r) - r) < 1e-12


@given(seeds, dims)
def test_polar_is_idempotent_on_orthogonal(seed, n):
    q = liecore.random_orthogonal(n, np.random.default_rng(seed))
    assert liecore.max_abs(liecore.polar_retract(q) - q) < 1e-12


def test_polar_rejects_singular():
    with pytest.raises(SingularMatrixError) as err:
        liecore.polar_retract(np.diag([1.0, 0.0]))
    assert err.value.condition == np.inf


def test_log_oracles():
    assert np.array_equal(liecore.log_orthogonal(np.eye(3)), np.zeros((3, 3)))
    assert liecore.max_abs(liecore.log_orthogonal(rotation2(np.pi / 3)) - np.pi / 3 * J2) < 1e-12


def test_log_refuses_half_turn():
    with pytest.raises(BranchError):
        liecore.log_orthogonal(rotation2(np.pi))


@given(seeds, st.integers(2, 6))
def test_log_inverts_exp_near_identity(seed, n):
    a = liecore.random_skew(n, np.random.default_rng(seed))
    a *= 0.9 / max(np.linalg.norm(a, 2), 1e-12)
    assert liecore.max_abs(liecore.log_orthogonal(liecore.exp_skew(a)) - a) < 1e-10


def test_bracket_closure_rank_oracles(rng):
    assert liecore.bracket_closure_rank([]) == 0
    assert liecore.bracket_closure_rank([J2]) == 1
    a, b = liecore.random_skew(3, rng), liecore.random_skew(3, rng)
    assert liecore.bracket_closure_rank([a, b]) == 3


def test_bracket_closure_of_torus_pair_stays_abelian():
    t1 = liecore.block_diag(J2, np.zeros((2, 2)))
    t2 = liecore.block_diag(np.zeros((2, 2)), J2)
    assert liecore.bracket_closure_rank([t1, t2]) == 2


@given(seeds)
def test_rank_is_conjugation_invariant(seed):
    r = np.random.default_rng(seed)
    gens = [liecore.random_skew(4, r) for _ in range(2)]
    q = liecore.random_orthogonal(4, r)
    assert liecore.bracket_closure_rank(gens) == liecore.bracket_closure_rank([q @ g @ q.T for g in gens])


def test_subalgebra_dimension_limits():
    with pytest.raises(DimensionError):
        liecore.LieSubalgebra(9, ())
    assert liecore.LieSubalgebra(3, (np.zeros((3, 3)),)).rank == 0


def test_element_order():
    assert liecore.element_order(rotation2(2 * np.pi / 3)) == 3
    assert liecore.element_order(np.eye(2)) == 1
    assert liecore.element_order(rotation2(1.0), max_order=50) is None
