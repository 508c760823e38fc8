import json

import numpy as np
import pytest

from defiscan.models import fit_elastic_net, fit_logistic, load_model, model_from_dict, save_model


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] + rng.normal(size=40) > 0).astype(int)
    return X, y


def test_linear_models_round_trip(tmp_path, data):
    X, y = data
    for model in (fit_logistic(X, y), fit_elastic_net(X, y.astype(float), 0.5, 0.01)):
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert type(back) is type(model)
        Q = np.random.default_rng(1).normal(size=(100, 3)) * 3
        assert np.array_equal(model.predict(Q), back.predict(Q))
        doc = json.loads((tmp_path / "m.json").read_text())
        assert doc["format"] == "defiscan-model" and doc["version"] == 1


def test_rejects_unknown_versions():
    with pytest.raises(ValueError):
        model_from_dict({"format": "defiscan-model", "version": 99})
    with pytest.raises(ValueError):
        model_from_dict({"format": "other"})
