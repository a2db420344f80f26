"""From-scratch ReLU feed-forward regressor for (theta, x*) samples.

The network is  h^0 = theta,  h^l = ReLU(W^l h^{l-1} + b^l)  for hidden
layers, affine output (no ReLU, so negative solution components are
representable).  Training minimizes the mean over samples of the squared
error ||h(theta) - x*||^2 by minibatch SGD or Adam; every random draw
(initialization, shuffles) comes from one seeded generator, so identical
configs reproduce identical weights.

Weights are stored transposed, shape (fan_in, fan_out), so a batch forward
is ``a @ W + b``; the infinity norm of the mathematical weight matrix is
therefore the max column-wise absolute sum of the stored array.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .accel import NUMBA_ENABLED, maybe_njit
from .errors import DimensionMismatchError, TrainingDivergedError, ValidationError

logger = logging.getLogger(__name__)

OPTIMIZER_SGD = "sgd"
OPTIMIZER_ADAM = "adam"

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
#: Mean training loss above this (or non-finite) aborts training.
DIVERGENCE_LIMIT = 1e6

_SPECTRAL_ITERS = 50
_SPECTRAL_TOL = 1e-10
#: gradient_check skips parameters feeding a unit whose preactivation sits
#: within this band of the ReLU kink for some sample.
KINK_BAND = 1e-6


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    hidden: tuple = (32, 32)
    optimizer: str = OPTIMIZER_ADAM

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValidationError("epochs, batch size and learning rate must be positive")
        if self.optimizer not in (OPTIMIZER_SGD, OPTIMIZER_ADAM):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        self.hidden = tuple(int(h) for h in self.hidden)
        if any(h < 1 for h in self.hidden):
            raise ValidationError("hidden widths must be >= 1")


@dataclass
class MlpModel:
    layer_dims: list                  # [k, h1, ..., n]
    weights: list                     # per layer, shape (fan_in, fan_out)
    biases: list                      # per layer, shape (fan_out,)
    train_meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.layer_dims[0]

    @property
    def n(self) -> int:
        return self.layer_dims[-1]

    @property
    def num_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def _check_samples(samples):
    if isinstance(samples, tuple) and len(samples) == 2:
        thetas, xs = samples
    else:
        thetas = [s[0] for s in samples]
        xs = [s[1] for s in samples]
    thetas = np.ascontiguousarray(np.atleast_2d(np.asarray(thetas, dtype=float)))
    xs = np.ascontiguousarray(np.atleast_2d(np.asarray(xs, dtype=float)))
    if thetas.shape[0] != xs.shape[0] or thetas.shape[0] < 1:
        raise DimensionMismatchError("need matching, nonempty theta/x samples")
    return thetas, xs


@maybe_njit
def _train_kernel(Ws, bs, mW, vW, mb, vb, thetas, xs, perm, batch_size, lr,
                  beta1, beta2, eps, use_adam, limit):
    """Minibatch training loop; mutates the parameter lists in place.

    Returns (code, final_mean_loss, steps): code 0 = finished, 1 = diverged.
    """
    epochs = perm.shape[0]
    m = thetas.shape[0]
    L = len(Ws)
    step = 0
    mean_loss = 0.0
    for e in range(epochs):
        epoch_sse = 0.0
        for start in range(0, m, batch_size):
            stop = min(start + batch_size, m)
            idx = perm[e, start:stop]
            bsz = stop - start
            a = thetas[idx]
            acts = [a]
            zs = []
            for l in range(L):
                z = a @ Ws[l] + bs[l]
                zs.append(z)
                a = np.maximum(z, 0.0) if l < L - 1 else z
                acts.append(a)
            diff = a - xs[idx]
            batch_sse = np.sum(diff * diff)
            epoch_sse += batch_sse
            if not np.isfinite(batch_sse) or batch_sse > limit * bsz:
                return 1, batch_sse / bsz, step
            delta = (2.0 / bsz) * diff
            step += 1
            c1 = 1.0 - beta1 ** step
            c2 = 1.0 - beta2 ** step
            for l in range(L - 1, -1, -1):
                gW = np.ascontiguousarray(acts[l].T) @ delta
                gb = delta.sum(axis=0)
                if l > 0:
                    mask = (zs[l - 1] > 0.0).astype(np.float64)
                    delta = (delta @ np.ascontiguousarray(Ws[l].T)) * mask
                if use_adam:
                    mW[l] = beta1 * mW[l] + (1.0 - beta1) * gW
                    vW[l] = beta2 * vW[l] + (1.0 - beta2) * gW * gW
                    mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb
                    vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb * gb
                    Ws[l] = Ws[l] - lr * (mW[l] / c1) / (np.sqrt(vW[l] / c2) + eps)
                    bs[l] = bs[l] - lr * (mb[l] / c1) / (np.sqrt(vb[l] / c2) + eps)
                else:
                    Ws[l] = Ws[l] - lr * gW
                    bs[l] = bs[l] - lr * gb
        mean_loss = epoch_sse / m
    return 0, mean_loss, step


def _wrap_lists(arrays):
    if NUMBA_ENABLED:
        from numba.typed import List as _TypedList
        out = _TypedList()
        for a in arrays:
            out.append(a)
        return out
    return list(arrays)


def train(samples, cfg: TrainConfig) -> MlpModel:
    """Fit the network to samples; deterministic given cfg.seed."""
    thetas, xs = _check_samples(samples)
    m, k = thetas.shape
    n = xs.shape[1]
    dims = [k, *cfg.hidden, n]
    rng = np.random.default_rng(cfg.seed)
    Ws, bs = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        Ws.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        bs.append(np.zeros(fan_out))
    perm = np.empty((cfg.epochs, m), dtype=np.int64)
    for e in range(cfg.epochs):
        perm[e] = rng.permutation(m)

    Ws_l = _wrap_lists(Ws)
    bs_l = _wrap_lists(bs)
    mW = _wrap_lists([np.zeros_like(w) for w in Ws])
    vW = _wrap_lists([np.zeros_like(w) for w in Ws])
    mb = _wrap_lists([np.zeros_like(b) for b in bs])
    vb = _wrap_lists([np.zeros_like(b) for b in bs])
    code, final_loss, steps = _train_kernel(
        Ws_l, bs_l, mW, vW, mb, vb, thetas, xs, perm,
        cfg.batch_size, cfg.learning_rate, _ADAM_BETA1, _ADAM_BETA2, _ADAM_EPS,
        cfg.optimizer == OPTIMIZER_ADAM, DIVERGENCE_LIMIT)
    if code != 0:
        raise TrainingDivergedError(
            f"training loss {final_loss:.3e} exceeded the divergence guard")

    model = MlpModel(layer_dims=dims,
                     weights=[np.asarray(Ws_l[l]) for l in range(len(dims) - 1)],
                     biases=[np.asarray(bs_l[l]) for l in range(len(dims) - 1)])
    inf_norms, spectral1 = norms(model)
    model.train_meta = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate,
        "optimizer": cfg.optimizer,
        "loss": "squared_error",
        "num_samples": m,
        "steps": int(steps),
        "final_train_loss": float(final_loss),
        "layer_inf_norms": [float(v) for v in inf_norms],
        "layer1_spectral_norm": float(spectral1),
    }
    return model


def forward(model: MlpModel, theta) -> np.ndarray:
    """Evaluate the network; accepts a single (k,) point or a (T, k) batch."""
    th = np.asarray(theta, dtype=float)
    single = th.ndim == 1
    a = np.atleast_2d(th)
    if a.shape[1] != model.k:
        raise DimensionMismatchError(f"input width {a.shape[1]}, expected {model.k}")
    L = len(model.weights)
    for l in range(L):
        z = a @ model.weights[l] + model.biases[l]
        a = np.maximum(z, 0.0) if l < L - 1 else z
    return a[0] if single else a


def _forward_full(weights, biases, thetas):
    """Forward pass retaining preactivations (training-order layout)."""
    a = thetas
    acts = [a]
    zs = []
    L = len(weights)
    for l in range(L):
        z = a @ weights[l] + biases[l]
        zs.append(z)
        a = np.maximum(z, 0.0) if l < L - 1 else z
        acts.append(a)
    return acts, zs


def _mean_loss_and_grads(weights, biases, thetas, xs):
    m = thetas.shape[0]
    acts, zs = _forward_full(weights, biases, thetas)
    diff = acts[-1] - xs
    loss = float(np.sum(diff * diff) / m)
    delta = (2.0 / m) * diff
    gWs = [None] * len(weights)
    gbs = [None] * len(weights)
    for l in range(len(weights) - 1, -1, -1):
        gWs[l] = acts[l].T @ delta
        gbs[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (zs[l - 1] > 0.0)
    return loss, gWs, gbs


def gradient_check(model: MlpModel, samples, tolerance: float = 1e-5) -> bool:
    """Central finite differences vs analytic gradient of the mean loss.

    Parameters feeding a unit whose preactivation is within KINK_BAND of the
    ReLU kink for some sample are excluded; of the rest, at least 99% of
    coordinates must match within the relative tolerance.  Intended for
    small models — runtime grows with parameter count times sample count.
    """
    thetas, xs = _check_samples(samples)
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    _, zs = _forward_full(weights, biases, thetas)
    loss0, gWs, gbs = _mean_loss_and_grads(weights, biases, thetas, xs)
    h = 1e-5
    checked = 0
    bad = 0
    worst = 0.0
    for l in range(len(weights)):
        near_kink = (np.min(np.abs(zs[l]), axis=0) < KINK_BAND
                     if l < len(weights) - 1 else np.zeros(weights[l].shape[1], bool))
        for arr, grads in ((weights[l], gWs[l]), (biases[l], gbs[l])):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                unit = ix[-1]
                if near_kink[unit]:
                    continue
                orig = arr[ix]
                arr[ix] = orig + h
                lp, _, _ = _mean_loss_and_grads(weights, biases, thetas, xs)
                arr[ix] = orig - h
                lm, _, _ = _mean_loss_and_grads(weights, biases, thetas, xs)
                arr[ix] = orig
                numeric = (lp - lm) / (2.0 * h)
                analytic = float(grads[ix])
                rel = abs(numeric - analytic) / max(1e-8, abs(numeric) + abs(analytic))
                worst = max(worst, rel)
                checked += 1
                if rel > tolerance:
                    bad += 1
    if checked == 0:
        logger.warning("gradient_check: every coordinate excluded by the kink band")
        return False
    ok = bad <= 0.01 * checked
    if not ok:
        logger.warning("gradient_check failed: %d/%d coordinates above tolerance "
                       "(worst relative error %.3e, loss %.3e)", bad, checked, worst, loss0)
    return ok


def _spectral_norm(W: np.ndarray) -> float:
    """Largest singular value by power iteration on W'W."""
    v = np.ones(W.shape[1]) / np.sqrt(W.shape[1])
    sigma = 0.0
    for _ in range(_SPECTRAL_ITERS):
        u = W @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = W.T @ (u / nu)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        if abs(nv - sigma) <= _SPECTRAL_TOL * max(1.0, nv):
            sigma = nv
            break
        sigma = nv
    return float(sigma)


def norms(model: MlpModel):
    """Per-layer infinity norms of the weight maps, plus layer-1 spectral norm.

    The infinity norm of the mathematical W^l (rows = output units) equals
    the max column absolute sum of the stored (fan_in, fan_out) array.
    """
    inf_norms = [float(np.abs(w).sum(axis=0).max()) for w in model.weights]
    return inf_norms, _spectral_norm(model.weights[0])


# ---------------------------------------------------------------------------
# (de)serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: MlpModel) -> dict:
    return {
        "layer_dims": [int(d) for d in model.layer_dims],
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "train_meta": model.train_meta,
    }


def model_from_dict(obj: dict) -> MlpModel:
    dims = [int(d) for d in obj["layer_dims"]]
    weights = [np.asarray(w, dtype=float) for w in obj["weights"]]
    biases = [np.asarray(b, dtype=float) for b in obj["biases"]]
    for l, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if weights[l].shape != (fan_in, fan_out) or biases[l].shape != (fan_out,):
            raise DimensionMismatchError(f"layer {l} shapes do not chain")
    return MlpModel(layer_dims=dims, weights=weights, biases=biases,
                    train_meta=obj.get("train_meta", {}))


def save_model(model: MlpModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> MlpModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
