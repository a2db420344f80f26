import numpy as np
import pytest

from pwlpolicy import neural
from pwlpolicy.errors import TrainingDivergedError, ValidationError


def line_samples(m=64, seed=0):
    rng = np.random.default_rng(seed)
    th = rng.uniform(-1, 1, size=(m, 1))
    return th, 3.0 * th + 0.5


def test_config_validation():
    with pytest.raises(ValidationError):
        neural.TrainConfig(epochs=0)
    with pytest.raises(ValidationError):
        neural.TrainConfig(batch_size=-1)
    with pytest.raises(ValidationError):
        neural.TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValidationError):
        neural.TrainConfig(hidden=(8, 0))
    # no hidden layer is a valid degenerate case (affine model)
    assert neural.TrainConfig(hidden=()).hidden == ()


def test_training_is_bit_deterministic():
    cfg = neural.TrainConfig(epochs=30, batch_size=16, hidden=(8,), seed=5)
    a = neural.train(line_samples(), cfg)
    b = neural.train(line_samples(), cfg)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    assert a.train_meta["final_train_loss"] == b.train_meta["final_train_loss"]


def test_forward_hand_built_relu_net():
    # one hidden unit computing relu(x), output passes it through:
    # f(x) = relu(x), so f(-1) = 0 and f(2) = 2
    model = neural.MlpModel(
        layer_dims=(1, 1, 1),
        weights=[np.array([[1.0]]), np.array([[1.0]])],
        biases=[np.zeros(1), np.zeros(1)],
        train_meta={})
    assert neural.forward(model, np.array([-1.0]))[0] == 0.0
    assert neural.forward(model, np.array([2.0]))[0] == 2.0
    batch = neural.forward(model, np.array([[-1.0], [2.0], [0.5]]))
    assert np.array_equal(batch[:, 0], [0.0, 2.0, 0.5])


def test_fits_affine_map():
    th, xs = line_samples(m=128, seed=1)
    cfg = neural.TrainConfig(epochs=2000, batch_size=32, hidden=(16,), seed=0)
    model = neural.train((th, xs), cfg)
    pred = neural.forward(model, th)
    assert float(((pred - xs) ** 2).mean()) < 1e-4


def test_divergence_guard_raises():
    th, xs = line_samples()
    cfg = neural.TrainConfig(epochs=200, batch_size=16, hidden=(8,),
                             learning_rate=1e3, seed=0)
    with pytest.raises(TrainingDivergedError):
        neural.train((th, xs * 1e3), cfg)


def test_norms_inf_norm_oracle():
    # ||W||_inf for the map a @ W is max over output rows of W^T:
    # W^T = [[1, 3], [-2, 4]] -> row sums 4 and 6 -> 7? no: |1|+|3| = 4,
    # |-2|+|4| = 6 -> max 6.  With W stored (fan_in, fan_out) the operator
    # takes columns: [[1,-2],[3,4]] columns (1,3) and (-2,4) -> sums 4, 6.
    model = neural.MlpModel(
        layer_dims=(2, 2),
        weights=[np.array([[1.0, -2.0], [3.0, 4.0]])],
        biases=[np.zeros(2)],
        train_meta={})
    inf_norms, spec = neural.norms(model)
    assert inf_norms == [6.0]
    # spectral norm agrees with SVD
    assert spec == pytest.approx(np.linalg.svd(model.weights[0].T)[1][0], rel=1e-8)


def test_spectral_norm_power_iteration_matches_svd():
    rng = np.random.default_rng(2)
    for _ in range(5):
        W = rng.standard_normal((6, 4))
        model = neural.MlpModel(layer_dims=(6, 4), weights=[W],
                                biases=[np.zeros(4)], train_meta={})
        _, spec = neural.norms(model)
        assert spec == pytest.approx(np.linalg.svd(W)[1].max(), rel=1e-8)


def test_gradient_check_passes_on_trained_model():
    th, xs = line_samples(m=48, seed=3)
    cfg = neural.TrainConfig(epochs=100, batch_size=16, hidden=(6,), seed=1)
    model = neural.train((th, xs), cfg)
    assert neural.gradient_check(model, (th[:16], xs[:16]), tolerance=1e-5)


def test_gradient_check_fails_at_absurd_tolerance():
    th, xs = line_samples(m=32, seed=4)
    cfg = neural.TrainConfig(epochs=50, batch_size=16, hidden=(6,), seed=2)
    model = neural.train((th, xs), cfg)
    assert not neural.gradient_check(model, (th[:16], xs[:16]), tolerance=1e-13)


def test_train_meta_contents():
    th, xs = line_samples()
    cfg = neural.TrainConfig(epochs=20, batch_size=16, hidden=(8, 8), seed=7)
    model = neural.train((th, xs), cfg)
    meta = model.train_meta
    assert meta["seed"] == 7
    assert meta["optimizer"] == "adam"
    assert meta["loss"] == "squared_error"
    assert meta["num_samples"] == th.shape[0]
    assert len(meta["layer_inf_norms"]) == 3      # two hidden + output
    assert meta["layer1_spectral_norm"] > 0
    assert model.num_parameters == 1 * 8 + 8 + 8 * 8 + 8 + 8 * 1 + 1


def test_sgd_optimizer_also_trains():
    th, xs = line_samples(m=64, seed=5)
    cfg = neural.TrainConfig(epochs=600, batch_size=16, hidden=(8,), seed=0,
                             optimizer="sgd", learning_rate=1e-2)
    model = neural.train((th, xs), cfg)
    pred = neural.forward(model, th)
    assert float(((pred - xs) ** 2).mean()) < 1e-2


def test_json_round_trip(tmp_path):
    th, xs = line_samples()
    model = neural.train((th, xs), neural.TrainConfig(epochs=10, hidden=(4,),
                                                      batch_size=16, seed=0))
    path = tmp_path / "model.json"
    neural.save_model(model, path)
    loaded = neural.load_model(path)
    assert loaded.layer_dims == model.layer_dims
    for wa, wb in zip(loaded.weights, model.weights):
        assert np.array_equal(wa, wb)
    grid = np.linspace(-1, 1, 17).reshape(-1, 1)
    assert np.array_equal(neural.forward(loaded, grid), neural.forward(model, grid))
