import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import GridSearchCV

from tropadel.conical import ConicalApproximator, euclidean_oracle
from tropadel.heights import DynamicRangeError, SlopeRegressor
from tropadel.lattice import product_of_lines


def test_conical_params_and_clone():
    est = ConicalApproximator(reference=product_of_lines(2), depth=2, n_samples=500)
    params = est.get_params()
    assert params["depth"] == 2 and params["n_samples"] == 500
    est.set_params(depth=3)
    twin = clone(est)
    assert twin.depth == 3 and twin is not est and not hasattr(twin, "function_")


def test_conical_fit_predict():
    est = ConicalApproximator(reference=product_of_lines(2), depth=3, n_samples=2000)
    with pytest.raises(NotFittedError):
        est.predict(np.ones((1, 2)))
    assert est.fit(euclidean_oracle(2)) is est
    X = np.array([[3.0, 4.0], [1.0, 0.0], [-2.0, 0.5]])
    pred = est.predict(X)
    norms = np.linalg.norm(X, axis=1)
    assert pred.shape == (3,)
    assert np.all(pred >= norms - 1e-12)
    # the deviation is measured on the L1 unit sphere
    assert np.all(pred - norms <= est.deviation_ * np.abs(X).sum(axis=1) + 1e-12)
    with pytest.raises(ValueError):
        est.predict(np.ones((2, 3)))


def test_conical_accepts_plain_callable():
    est = ConicalApproximator(reference=product_of_lines(2), depth=0, n_samples=200)
    est.fit(lambda a: abs(a[0]) + abs(a[1]))
    assert est.deviation_ == pytest.approx(0.0, abs=1e-12)


def _depth_data(slope=1.25, n=30, noise=0.0, seed=0):
    x = np.logspace(-1, 2.8, n)
    rng = np.random.default_rng(seed)
    return x.reshape(-1, 1), slope * x + 2.0 + noise * rng.uniform(-1, 1, n)


def test_slope_regressor_params_and_clone():
    est = SlopeRegressor(input="modulus", check_range=False)
    assert est.get_params() == {"input": "modulus", "check_range": False}
    twin = clone(est.set_params(check_range=True))
    assert twin.get_params() == {"input": "modulus", "check_range": True}


def test_slope_regressor_fit_predict_score():
    X, y = _depth_data()
    est = SlopeRegressor().fit(X, y)
    assert est.slope_ == pytest.approx(1.25) and est.intercept_ == pytest.approx(2.0)
    assert est.o1_bound_ < 1e-9
    assert est.predict(X) == pytest.approx(y)
    assert est.score(X, y) == pytest.approx(1.0)


def test_slope_regressor_modulus_input_matches():
    X, y = _depth_data(noise=0.1)
    a = SlopeRegressor().fit(X, y)
    b = SlopeRegressor(input="modulus").fit(np.exp(-X), y)
    assert a.slope_ == pytest.approx(b.slope_, rel=1e-12)


def test_slope_regressor_errors():
    X, y = _depth_data(n=5)
    with pytest.raises(DynamicRangeError):
        SlopeRegressor().fit(X, y)
    SlopeRegressor(check_range=False).fit(X, y)
    with pytest.raises(ValueError):
        SlopeRegressor(input="bogus").fit(*_depth_data())
    with pytest.raises(NotFittedError):
        SlopeRegressor().predict(X)


def test_slope_regressor_in_grid_search():
    X, y = _depth_data(noise=0.05)
    grid = GridSearchCV(SlopeRegressor(check_range=False), {"check_range": [False]}, cv=3)
    grid.fit(X, y)
    assert grid.best_estimator_.slope_ == pytest.approx(1.25, rel=0.02)
