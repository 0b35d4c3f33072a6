import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import emd_vertex_oracle, sinkhorn_oracle
from posot.errors import ConvergenceError, DegenerateInputError
from posot.ot import (
    AdaptationModel,
    DiscreteDistribution,
    TransportPlan,
    barycentric_map,
    cost_matrix,
    fit_adaptation,
    fit_barycentric,
    fit_gaussian_mapping,
    normalize_weights,
    solve_emd,
    solve_sinkhorn,
    transport_cost,
)

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


# ---------------------------------------------------------------- cost matrix

def test_cost_matrix_1d():
    np.testing.assert_array_equal(cost_matrix([[0.0], [1.0]], [[0.0], [1.0]]).values, SWAP)


def test_cost_matrix_345():
    assert cost_matrix([[0.0, 0.0]], [[3.0, 4.0]]).values.tolist() == [[25.0]]


def test_cost_matrix_errors():
    with pytest.raises(ValueError):
        cost_matrix([[np.nan]], [[0.0]])
    with pytest.raises(ValueError):
        cost_matrix([[0.0, 1.0]], [[0.0]])


coords = st.integers(-50, 50).map(lambda v: v / 10)


@given(arrays(float, (4, 3), elements=coords), arrays(float, (3, 3), elements=coords))
def test_cost_nonnegative_and_zero_iff_equal(X, Y):
    C = cost_matrix(X, Y).values
    assert np.all(C >= 0)
    for i in range(4):
        for j in range(3):
            assert (C[i, j] == 0) == bool(np.all(X[i] == Y[j]))


def test_distribution_normalizes_and_validates():
    d = DiscreteDistribution(np.zeros((2, 1)), [1.0, 3.0])
    np.testing.assert_allclose(d.weights, [0.25, 0.75])
    with pytest.raises(DegenerateInputError):
        normalize_weights([0.0, 0.0])
    with pytest.raises(ValueError):
        DiscreteDistribution([[np.inf]], [1.0])


# ---------------------------------------------------------------- EMD

def test_emd_forced_coupling():
    plan = solve_emd([1.0], [1.0], [[4.0]])
    assert plan.coupling.tolist() == [[1.0]]
    assert plan.objective_value == 4.0
    assert plan.solver == "EMD"


def test_emd_identity_optimum():
    plan = solve_emd([0.5, 0.5], [0.5, 0.5], SWAP)
    np.testing.assert_allclose(plan.coupling, np.diag([0.5, 0.5]))
    assert plan.objective_value == 0.0


def test_emd_two_by_two_oracle_example():
    plan = solve_emd([0.3, 0.7], [0.7, 0.3], SWAP)
    np.testing.assert_allclose(plan.coupling, [[0.3, 0.0], [0.4, 0.3]], atol=1e-12)
    assert plan.objective_value == pytest.approx(0.4, abs=1e-12)
    cost, oracle_plan = emd_vertex_oracle([0.3, 0.7], [0.7, 0.3], SWAP)
    assert cost == pytest.approx(0.4, abs=1e-12)
    np.testing.assert_allclose(oracle_plan, plan.coupling, atol=1e-12)


def test_emd_zero_weight_atoms_restored_as_zero_rows():
    plan = solve_emd([0.5, 0.0, 0.5], [1.0], [[1.0], [5.0], [3.0]])
    assert plan.coupling[:, 0].tolist() == [0.5, 0.0, 0.5]
    assert plan.objective_value == pytest.approx(2.0)


def test_emd_all_zero_weights():
    with pytest.raises(DegenerateInputError):
        solve_emd([0.0, 0.0], [1.0], [[1.0], [1.0]])


def test_emd_iteration_ceiling():
    rng = np.random.default_rng(0)
    with pytest.raises(ConvergenceError) as err:
        solve_emd(None, None, rng.random((30, 30)), max_iter=1)
    assert err.value.iterations is not None


weights = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4)


@settings(max_examples=200, deadline=None)
@given(weights, weights, st.integers(0, 2**32 - 1))
def test_emd_matches_vertex_oracle(a, b, seed):
    M = np.random.default_rng(seed).random((len(a), len(b)))
    a = np.array(a) / sum(a)
    b = np.array(b) / sum(b)
    plan = solve_emd(a, b, M)
    assert plan.objective_value == pytest.approx(emd_vertex_oracle(a, b, M)[0], abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_emd_symmetry(n, m, seed):
    rng = np.random.default_rng(seed)
    X, Y = rng.normal(size=(n, 3)), rng.normal(size=(m, 3))
    a, b = rng.random(n) + 0.1, rng.random(m) + 0.1
    fwd = solve_emd(a, b, cost_matrix(X, Y)).objective_value
    bwd = solve_emd(b, a, cost_matrix(Y, X)).objective_value
    assert fwd == pytest.approx(bwd, abs=1e-9)


def test_emd_identity_cost_zero_and_map_identity():
    X = np.random.default_rng(3).random((12, 8))
    model = fit_barycentric(X, X, "emd")
    assert model.objective_value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(barycentric_map(model, X, in_sample=True), X, atol=1e-9)


# ---------------------------------------------------------------- Sinkhorn

def test_sinkhorn_large_reg_is_near_independent_coupling():
    plan = solve_sinkhorn([0.5, 0.5], [0.5, 0.5], SWAP, reg=100)
    # closed form: diagonal entries 0.5 / (1 + exp(-1/100)), 1.25e-3 above a (x) b
    diag = 0.5 / (1 + np.exp(-0.01))
    np.testing.assert_allclose(plan.coupling, [[diag, 0.5 - diag], [0.5 - diag, diag]], atol=1e-9)
    np.testing.assert_allclose(plan.coupling, 0.25, atol=1.5e-3)
    assert plan.solver == "EMD-R"
    assert plan.regularization == 100


def test_sinkhorn_small_reg_approaches_emd():
    plan = solve_sinkhorn([0.5, 0.5], [0.5, 0.5], SWAP, reg=1e-3)
    assert plan.objective_value == pytest.approx(0.0, abs=1e-3)


@pytest.mark.parametrize("reg", [0.0, -1.0])
def test_sinkhorn_rejects_nonpositive_reg(reg):
    with pytest.raises(ValueError):
        solve_sinkhorn([1.0], [1.0], [[0.0]], reg=reg)


def test_sinkhorn_ceiling_carries_residual():
    rng = np.random.default_rng(1)
    M = rng.random((15, 15))
    with pytest.raises(ConvergenceError) as err:
        solve_sinkhorn(None, None, M, reg=1e-3, max_iter=3)
    assert err.value.residual > 1e-6
    assert err.value.iterations <= 3


@pytest.mark.parametrize("reg", [0.05, 0.3, 3.0])
def test_sinkhorn_matches_scaling_oracle(reg):
    rng = np.random.default_rng(7)
    a = normalize_weights(rng.random(6) + 0.1)
    b = normalize_weights(rng.random(5) + 0.1)
    M = rng.random((6, 5))
    plan = solve_sinkhorn(a, b, M, reg=reg, tol=1e-11)
    np.testing.assert_allclose(plan.coupling, sinkhorn_oracle(a, b, M, reg), atol=1e-9)


def test_sinkhorn_records_settings():
    plan = solve_sinkhorn(None, None, np.ones((3, 3)), reg=3, cost_normalization="max")
    assert plan.settings["cost_normalization"] == "max"
    assert plan.settings["max_iter"] == 10_000
    assert plan.settings["tol"] == 1e-6


def test_sinkhorn_transport_part_monotone_in_reg():
    rng = np.random.default_rng(11)
    for _ in range(5):
        M = rng.random((7, 7))
        costs = [solve_sinkhorn(None, None, M, reg=r).objective_value for r in (0.01, 0.1, 1, 10)]
        assert all(x <= y + 1e-9 for x, y in zip(costs, costs[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1),
       st.sampled_from([0.01, 0.1, 1.0, 3.0]))
def test_solver_outputs_conserve_marginals(n, m, seed, reg):
    rng = np.random.default_rng(seed)
    a, b = rng.random(n) + 0.05, rng.random(m) + 0.05
    M = rng.random((n, m))
    for plan, tol in ((solve_emd(a, b, M), 1e-8), (solve_sinkhorn(a, b, M, reg=reg), 1e-6)):
        assert np.all(plan.coupling >= 0)
        assert max(plan.marginal_errors()) < tol
        assert plan.objective_value == pytest.approx(transport_cost(plan, M), abs=1e-12)


# ---------------------------------------------------------------- transport cost

def test_transport_cost_examples():
    assert transport_cost(np.array([[1.0]]), [[4.0]]) == 4.0
    assert transport_cost(np.diag([0.5, 0.5]), SWAP) == 0.0
    assert transport_cost(np.array([[0.3, 0.0], [0.4, 0.3]]), SWAP) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        transport_cost(np.ones((2, 2)), np.ones((2, 3)))


def test_plan_json_round_trip_is_lossless():
    rng = np.random.default_rng(5)
    plan = solve_sinkhorn(None, None, rng.random((4, 3)), reg=0.1)
    back = TransportPlan.from_dict(json.loads(json.dumps(plan.to_dict())))
    np.testing.assert_array_equal(back.coupling, plan.coupling)
    assert back.objective_value == plan.objective_value
    assert back.settings == plan.settings


# ---------------------------------------------------------------- mapping

def _two_point_model():
    plan = TransportPlan(np.array([[0.3, 0.0], [0.4, 0.3]]), np.array([0.3, 0.7]),
                         np.array([0.7, 0.3]), 0.4, "EMD")
    return AdaptationModel("BarycentricEMD", np.array([[0.0], [1.0]]), np.array([[0.0], [1.0]]),
                           plan=plan)


def test_barycentric_hand_example():
    model = _two_point_model()
    assert barycentric_map(model, np.array([1.0]), in_sample=True)[0] == pytest.approx(3 / 7)
    assert barycentric_map(model, np.array([0.0]))[0] == 0.0


def test_barycentric_identity_plan():
    X = np.arange(10.0).reshape(5, 2)
    plan = TransportPlan(np.eye(5) / 5, np.full(5, 0.2), np.full(5, 0.2), 0.0, "EMD")
    model = AdaptationModel("BarycentricEMD", X, X, plan=plan)
    np.testing.assert_allclose(barycentric_map(model, X, in_sample=True), X, atol=1e-12)


def test_out_of_sample_training_point_gets_in_sample_image():
    rng = np.random.default_rng(2)
    Xs, Xt = rng.random((20, 8)), rng.random((25, 8)) + 0.3
    model = fit_barycentric(Xs, Xt, "emd")
    np.testing.assert_array_equal(barycentric_map(model, Xs[3]), model.source_images()[3])


def test_out_of_sample_nearest_displacement():
    model = _two_point_model()
    # nearest training source to 0.9 is 1.0, whose displacement is 3/7 - 1
    assert barycentric_map(model, np.array([[0.9]]))[0, 0] == pytest.approx(0.9 + 3 / 7 - 1)


def test_in_sample_rejects_unknown_point():
    with pytest.raises(ValueError):
        barycentric_map(_two_point_model(), np.array([0.5]), in_sample=True)


def test_zero_mass_row_is_an_error():
    plan = TransportPlan(np.array([[1.0], [0.0]]), np.array([1.0, 0.0]), np.array([1.0]), 0.0, "EMD")
    model = AdaptationModel("BarycentricEMD", np.array([[0.0], [1.0]]), np.array([[0.5]]), plan=plan)
    with pytest.raises(DegenerateInputError):
        barycentric_map(model, np.array([1.0]), in_sample=True)


def test_map_rejects_wrong_dimension_and_nan():
    model = _two_point_model()
    with pytest.raises(ValueError):
        barycentric_map(model, np.zeros((1, 2)))
    with pytest.raises(ValueError):
        barycentric_map(model, np.array([[np.nan]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), arrays(float, 8, elements=st.floats(-2, 2)))
def test_barycentric_emd_translation_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    Xs, Xt = rng.random((9, 8)), rng.random((7, 8))
    Q = rng.random((4, 8))
    base = fit_barycentric(Xs, Xt, "emd")
    moved = fit_barycentric(Xs, Xt + c, "emd")
    # translating the target only adds a constant to every column of the cost
    np.testing.assert_allclose(moved.plan.coupling, base.plan.coupling, atol=1e-12)
    np.testing.assert_allclose(barycentric_map(moved, Q), barycentric_map(base, Q) + c, atol=1e-9)


def test_gaussian_identity_target():
    X = np.random.default_rng(4).random((30, 8))
    model = fit_gaussian_mapping(X, X)
    assert np.abs(model.source_images() - X).max() < 1e-3
    assert model.plan.solver == "Gaussian"


def test_gaussian_translation():
    rng = np.random.default_rng(9)
    Xs = rng.random((50, 8))
    c = np.full(8, 0.25)
    model = fit_gaussian_mapping(Xs, Xs + c)
    assert np.abs(barycentric_map(model, Xs) - (Xs + c)).max() < 1e-2
    assert model.settings["iterations"] <= 20


def test_gaussian_empty_source():
    with pytest.raises(DegenerateInputError):
        fit_gaussian_mapping(np.zeros((0, 8)), np.zeros((3, 8)))


def test_gaussian_singular_kernel():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(np.linalg.LinAlgError, match="ridge"):
        fit_gaussian_mapping(X, X, ridge=0.0)


@pytest.mark.parametrize("method", ["emd", "sinkhorn", "gaussian"])
def test_model_json_round_trip(method):
    rng = np.random.default_rng(6)
    Xs, Xt = rng.random((10, 8)), rng.random((12, 8))
    model = fit_adaptation(Xs, Xt, method)
    back = AdaptationModel.from_dict(json.loads(json.dumps(model.to_dict())))
    Q = rng.random((5, 8))
    np.testing.assert_array_equal(barycentric_map(back, Q), barycentric_map(model, Q))
    assert back.variant == model.variant


def test_fit_adaptation_records_sinkhorn_reg():
    rng = np.random.default_rng(8)
    model = fit_adaptation(rng.random((5, 8)), rng.random((5, 8)), "sinkhorn", reg=3)
    assert model.plan.regularization == 3
    assert model.variant == "BarycentricSinkhorn"
    with pytest.raises(ValueError):
        fit_adaptation(rng.random((5, 8)), rng.random((5, 8)), "wasserstein")


@pytest.mark.parametrize("method", ["emd", "sinkhorn", "gaussian"])
def test_identity_corpus_no_spurious_shift(method):
    # two independent draws of one distribution: the average displacement is ~0
    rng = np.random.default_rng(10)
    mean = np.array([0.2, 0.2, 0.03, 0.06, 0.08, 0.04, 0.1, 0.12])
    Xs = mean + 0.02 * rng.standard_normal((300, 8))
    Xt = mean + 0.02 * rng.standard_normal((300, 8))
    model = fit_adaptation(Xs, Xt, method)
    shift = (barycentric_map(model, Xs) - Xs).mean(axis=0)
    assert np.linalg.norm(shift) < 1e-2
