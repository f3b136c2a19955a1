import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchrec.errors import ContractError, FormatError
from sketchrec.net import FeatureVector
from sketchrec.svm import (
    augment_bias,
    decode_model,
    dual_objective,
    encode_model,
    l2_normalize,
    load_model,
    predict,
    primal_objective,
    save_model,
    solve_binary,
    train_ovr,
)


def blobs(rng, per=30):
    centers = np.array([[10, 0], [0, 10], [-10, 0], [0, -10]], dtype=float)
    x = np.concatenate([c + rng.normal(size=(per, 2)) for c in centers])
    y = np.repeat(["east", "north", "west", "south"], per)
    return x, list(y)


def test_two_point_problem_has_analytic_boundary():
    model = train_ovr(np.array([[1.0], [-1.0]]), ["A", "B"], C=1e6, tol=1e-10, normalize=False)
    w, b = model.weights[0]
    assert w == pytest.approx(1.0, abs=1e-3)
    assert b == pytest.approx(0.0, abs=1e-3)
    assert abs(-b / w) <= 1e-3
    assert model.predict_many([[1.0], [-1.0]]) == ["A", "B"]


def test_separable_blobs_are_fit_exactly(rng):
    x, y = blobs(rng)
    model = train_ovr(x, y, C=1.0)
    assert model.classes == sorted(set(y))
    assert model.predict_many(x) == y
    assert all(model.converged)


def test_duplicating_points_with_half_c_changes_nothing(rng):
    x = rng.normal(size=(10, 3))
    y = ["a" if v > 0 else "b" for v in rng.normal(size=10)]
    test = rng.normal(size=(50, 3))
    once = train_ovr(x, y, C=1.0, tol=1e-9, max_sweeps=100000)
    twice = train_ovr(np.concatenate([x, x]), y + y, C=0.5, tol=1e-9, max_sweeps=100000)
    np.testing.assert_allclose(once.weights, twice.weights, atol=1e-6)
    assert once.predict_many(test) == twice.predict_many(test)


def check_solution(x, y, c, seed, tol=1e-6, max_sweeps=5000):
    """Monotone dual trace always; duality gap bound whenever the solver reports convergence."""
    xa = augment_bias(l2_normalize(x))
    res = solve_binary(xa, y, c, tol=tol, max_sweeps=max_sweeps, seed=seed)
    assert np.all(np.diff(res.dual_trace) >= -1e-10 * (1 + abs(res.dual_trace[-1])))
    assert res.dual_trace[-1] == pytest.approx(dual_objective(res.alpha, xa, y))
    primal = primal_objective(res.w, xa, y, c)
    assert primal - res.dual_trace[-1] >= -1e-9 * (1 + abs(primal))
    if res.converged:
        assert primal - res.dual_trace[-1] <= 1e-3 * (1 + abs(primal))
    return res.converged


@given(st.integers(0, 2**32 - 1), st.integers(4, 40), st.integers(1, 6), st.floats(0.01, 100))
def test_dual_is_monotone_and_gap_closes(seed, n, d, c):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, d))
    y = np.where(r.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    check_solution(x, y, c, seed)


@pytest.mark.parametrize("seed", range(10))
def test_toy_sets_converge_with_small_gap(seed):
    r = np.random.default_rng(seed)
    x = np.concatenate([r.normal(1.0, 1.0, size=(15, 3)), r.normal(-1.0, 1.0, size=(15, 3))])
    y = np.repeat([1.0, -1.0], 15)
    assert check_solution(x, y, 1.0, seed)


def test_box_constraints_hold(rng):
    x, y = blobs(rng)
    model = train_ovr(x, y, C=0.3, keep_duals=True)
    assert np.all(model.alphas >= 0) and np.all(model.alphas <= 0.3 + 1e-12)


def test_unconverged_problem_is_flagged(rng):
    x = rng.normal(size=(200, 5))
    y = list(rng.integers(0, 3, size=200))
    model = train_ovr(x, y, C=100.0, tol=1e-12, max_sweeps=2)
    assert model.converged == [False, False, False]
    assert model.sweeps == [2, 2, 2]


def test_threads_do_not_change_result(rng):
    x, y = blobs(rng)
    a = train_ovr(x, y, seed=5, threads=1)
    b = train_ovr(x, y, seed=5, threads=3)
    np.testing.assert_array_equal(a.weights, b.weights)


def test_feature_vector_inputs_and_single_predict(rng):
    x, y = blobs(rng, per=10)
    vectors = [FeatureVector("net", "ip1", v) for v in x]
    model = train_ovr(vectors, y)
    assert predict(model, vectors[0]) == y[0]
    with pytest.raises(ContractError, match="dimension"):
        predict(model, np.zeros(3))


def test_contract_errors():
    with pytest.raises(ContractError):
        train_ovr(np.zeros((3, 2)), ["a", "a", "a"])
    with pytest.raises(ContractError):
        train_ovr(np.zeros((3, 2)), ["a", "b"])
    with pytest.raises(ContractError):
        train_ovr(np.zeros((2, 2)), ["a", "b"], C=0)


def test_model_file_round_trip(tmp_path, rng):
    x, y = blobs(rng, per=8)
    model = train_ovr(x, y)
    save_model(model, tmp_path / "m.sklm")
    loaded = load_model(tmp_path / "m.sklm")
    assert loaded.classes == model.classes
    np.testing.assert_allclose(loaded.weights, model.weights, rtol=1e-6, atol=1e-7)
    assert loaded.predict_many(x) == model.predict_many(x)
    int_model = train_ovr(x, [len(v) for v in y])
    assert decode_model(encode_model(int_model)).classes == int_model.classes
    with pytest.raises(FormatError, match="truncated"):
        decode_model(encode_model(model)[:30])
