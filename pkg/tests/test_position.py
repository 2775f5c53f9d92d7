import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hdgesture import datagen
from hdgesture.errors import ContractViolation
from hdgesture.position import (LinearPositionModel, PositionConfig, parameter_bits,
                                predict_position, stored_vector_bits, train_position)


def two_clusters(n=200, sigma=0.05, seed=0):
    rng = np.random.default_rng(seed)
    X = np.concatenate([rng.normal([0, 0, 1], sigma, (n, 3)), rng.normal([0, 0, -1], sigma, (n, 3))])
    y = np.array(["up"] * n + ["down"] * n)
    return X, y


def test_separable_clusters_fit_perfectly():
    X, y = two_clusters()
    m = train_position(X, y)
    assert np.all(m.predict(X) == y)
    assert predict_position(m, np.array([0.0, 0.0, 1.0])) == "up"
    assert predict_position(m, np.array([0.0, 0.0, -1.0])) == "down"


def test_training_is_deterministic():
    X, y = two_clusters(seed=3)
    a, b = train_position(X, y), train_position(X.copy(), y.copy())
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.biases, b.biases)


def test_single_label_rejected():
    with pytest.raises(ContractViolation):
        train_position(np.zeros((5, 3)), [1] * 5)


def test_zero_model_predicts_first_label():
    m = LinearPositionModel(np.zeros((3, 3)), np.zeros(3), [4, 5, 6])
    assert predict_position(m, np.array([0.3, -1.0, 2.0])) == 4


@given(st.floats(1e-3, 1e3))
def test_positive_rescaling_keeps_predictions(scale):
    X, y = two_clusters(n=20)
    m = train_position(X, y, PositionConfig(epochs=5))
    scaled = LinearPositionModel(m.weights * scale, m.biases * scale, m.position_ids)
    assert np.array_equal(m.predict(X), scaled.predict(X))


def test_eight_positions_held_out():
    ds = datagen.generate(datagen.GenConfig(windows_per_rep=20, seed=4))
    train = ds.repetition < 2
    m = train_position(ds.accel[train], ds.position[train])
    acc = np.mean(m.predict(ds.accel[~train]) == ds.position[~train])
    assert acc >= 0.99


def test_parameter_bits_conventions():
    assert parameter_bits() == 4800
    assert stored_vector_bits(0) == 0
    assert stored_vector_bits(287, 320, 32) == 2_938_880
    m = LinearPositionModel(np.zeros((8, 3)), np.zeros(8), list(range(8)))
    assert parameter_bits(m, "primal") == 8 * 4 * 32
    with pytest.raises(ContractViolation):
        parameter_bits(m, "dual")


def test_invalid_model_rejected():
    with pytest.raises(ContractViolation):
        LinearPositionModel(np.zeros((2, 3)), np.zeros(3), [0, 1])
    with pytest.raises(ContractViolation):
        LinearPositionModel(np.full((2, 3), np.nan), np.zeros(2), [0, 1])
