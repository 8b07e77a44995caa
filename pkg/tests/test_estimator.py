import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from sociolorenz.estimator import LyapunovSpectrumEstimator, SocioLorenzModel, check_states
from sociolorenz.model_core import InvalidParameterError
from sociolorenz.stability import Label


def test_get_set_params_and_clone():
    model = SocioLorenzModel(sigma=10, r0=20, beta=2.7)
    params = model.get_params()
    assert params["sigma"] == 10 and params["r0"] == 20 and params["beta"] == 2.7
    model.set_params(r0=28)
    assert clone(model).r0 == 28


def test_fit_exposes_analysis():
    model = SocioLorenzModel(sigma=10, r0=20, beta=2.7).fit()
    assert len(model.equilibria_) == 3
    assert [r.label for r in model.stability_] == [Label.Saddle, Label.StableFocusNode, Label.StableFocusNode]
    assert model.hopf_threshold_ == pytest.approx(157 / 6.3)


def test_fit_validates_params():
    with pytest.raises(InvalidParameterError):
        SocioLorenzModel(beta=-1).fit()


def test_transform_requires_fit():
    with pytest.raises(NotFittedError):
        SocioLorenzModel().transform([[1, 1, 1]])


def test_transform_sink():
    X = np.random.default_rng(0).uniform(-5, 5, size=(10, 3))
    out = SocioLorenzModel(sigma=2, r0=0.5, beta=1, t_end=50).fit_transform(X)
    assert out.shape == (10, 3) and np.max(np.abs(out)) < 1e-5


def test_predict_basins():
    model = SocioLorenzModel(sigma=10, r0=20, beta=2.7, t_end=200).fit()
    X = np.array([[7.16, 7.16, 19.0], [-7.16, -7.16, 19.0], [0.0, 0.0, 0.0]])
    # origin is a fixed point, so it stays there
    assert list(model.predict(X)) == ["PePlus", "PeMinus", "P0"]


def test_single_state_and_validation():
    assert check_states([1, 2, 3]).shape == (1, 3)
    with pytest.raises(ValueError):
        check_states([[1, 2]])
    with pytest.raises(ValueError):
        check_states([[1, np.nan, 2]])


def test_pipeline_composition():
    pipe = make_pipeline(
        FunctionTransformer(lambda X: np.asarray(X) * [1, 1, 0]),
        SocioLorenzModel(sigma=2, r0=0.5, beta=1, t_end=5),
    )
    out = pipe.fit_transform(np.ones((3, 3)))
    assert out.shape == (3, 3)


def test_lyapunov_estimator():
    est = LyapunovSpectrumEstimator(sigma=2, r0=0.5, beta=1, horizon=200, transient=10).fit([1, 1, 1])
    assert est.exponents_.shape == (3,)
    assert est.regime_ == "non-chaotic"
    assert est.exponents_[0] == pytest.approx(-0.382, abs=0.02)
