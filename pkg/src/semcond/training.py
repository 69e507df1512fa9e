"""A miniature linear classifier for end-to-end sanity studies.

The generator draws one prototype on the unit sphere in feature space per
consistent label vector, then samples points by picking a prototype,
labeling with its vector, and adding isotropic Gaussian noise.  A linear
model trained on such data makes exactly the kind of mistakes constraint
conditioning is supposed to repair: near cluster boundaries it predicts
label combinations no prototype carries.

Training is deliberately plain full-batch gradient descent so that runs are
reproducible to the byte for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compiler import CompiledKnowledge
from .errors import DivergenceError, InputError
from .inference import Knowledge, knowledge_entails, knowledge_k, predict_imc, predict_sci
from .logic import Formula
from .losses import loss_sr_batch

DEFAULT_WEIGHTS = (-1.0, 0.0, 0.1, 0.5, 1.0)


@dataclass(frozen=True)
class ToyConfig:
    k: int
    d: int = 10
    n_train: int = 2000
    n_test: int = 1000
    seed: int = 0
    epochs: int = 300
    learning_rate: float = 0.5
    noise: float = 0.9
    weights: tuple[float, ...] = DEFAULT_WEIGHTS

    @classmethod
    def from_dict(cls, raw: dict, k: int) -> "ToyConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise InputError(f"unknown toy config keys: {sorted(unknown)}")
        if "k" in raw and int(raw["k"]) != k:
            raise InputError(
                f"config says k={raw['k']} but the knowledge has {k} variables"
            )
        merged = {**raw, "k": k}
        if "weights" in merged:
            merged["weights"] = tuple(float(w) for w in merged["weights"])
        cfg = cls(**merged)
        if cfg.d < 1 or cfg.n_train < 1 or cfg.n_test < 0 or cfg.epochs < 1:
            raise InputError("toy config sizes must be positive")
        if cfg.noise < 0 or cfg.learning_rate <= 0:
            raise InputError("noise must be >= 0 and learning_rate > 0")
        return cfg


def _model_set(kn: Knowledge) -> np.ndarray:
    if isinstance(kn, CompiledKnowledge):
        return kn.consistent_states()
    if isinstance(kn, Formula):
        return kn.models()
    raise TypeError(f"not a knowledge object: {type(kn).__name__}")


@dataclass
class ToyDataset:
    features: np.ndarray
    labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    prototypes: np.ndarray
    prototype_labels: np.ndarray


def generate_toy_dataset(kn: Knowledge, config: ToyConfig, rng: np.random.Generator) -> ToyDataset:
    """Prototype-per-consistent-vector clusters with Gaussian feature noise."""
    models = _model_set(kn)
    if models.shape[0] == 0:
        raise InputError("the constraint has no consistent label vector")
    protos = rng.normal(size=(models.shape[0], config.d))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)

    def draw(n):
        which = rng.integers(0, models.shape[0], size=n)
        x = protos[which] + config.noise * rng.normal(size=(n, config.d))
        return x, models[which]

    x_train, y_train = draw(config.n_train)
    x_test, y_test = draw(config.n_test)
    return ToyDataset(x_train, y_train, x_test, y_test, protos, models)


@dataclass
class ToyModel:
    weights: np.ndarray  # (k, d)
    bias: np.ndarray  # (k,)

    def activations(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights.T + self.bias


@dataclass
class TrainResult:
    weight: float
    model: ToyModel
    epoch_losses: list[float] = field(default_factory=list)


def train_toy_model(
    kn: Knowledge, data: ToyDataset, config: ToyConfig, weight: float,
    rng: np.random.Generator,
) -> TrainResult:
    """Full-batch gradient descent on the regularized loss at one weight."""
    k = knowledge_k(kn)
    model = ToyModel(0.01 * rng.normal(size=(k, config.d)), np.zeros(k))
    n = data.features.shape[0]
    result = TrainResult(weight, model)
    for epoch in range(config.epochs):
        acts = model.activations(data.features)
        values, grads = loss_sr_batch(kn, acts, data.labels, weight)
        mean_loss = float(values.mean())
        if not np.isfinite(mean_loss):
            raise DivergenceError(
                f"training diverged at epoch {epoch} (weight {weight}): "
                f"mean loss is not finite"
            )
        result.epoch_losses.append(mean_loss)
        model.weights -= config.learning_rate * (grads.T @ data.features) / n
        model.bias -= config.learning_rate * grads.mean(axis=0)
    return result


def exact_accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows predicted exactly right (all k labels)."""
    return float((predictions == labels).all(axis=1).mean())


def consistency_rate(kn: Knowledge, predictions: np.ndarray) -> float:
    ok = sum(1 for row in predictions if knowledge_entails(kn, row))
    return ok / max(len(predictions), 1)


def evaluate_decoders(kn: Knowledge, model: ToyModel, features, labels) -> dict:
    """Exact accuracy and consistency under both decoding rules."""
    acts = model.activations(features)
    pred_imc = np.stack([predict_imc(a) for a in acts])
    pred_sci = np.stack([predict_sci(kn, a) for a in acts])
    return {
        "imc": {
            "exact_accuracy": exact_accuracy(pred_imc, labels),
            "consistency": consistency_rate(kn, pred_imc),
        },
        "sci": {
            "exact_accuracy": exact_accuracy(pred_sci, labels),
            "consistency": consistency_rate(kn, pred_sci),
        },
    }


def run_toy_study(kn: Knowledge, config: ToyConfig) -> dict:
    """Train once per regularization weight and evaluate both decoders.

    The dataset and the initial weights are regenerated from the same seed
    for every sweep entry, so entries differ only in the loss being
    minimized.
    """
    sweep = []
    for weight in config.weights:
        rng = np.random.default_rng(config.seed)
        data = generate_toy_dataset(kn, config, rng)
        result = train_toy_model(kn, data, config, weight, rng)
        entry = {
            "lambda": weight,
            "epoch_losses": result.epoch_losses,
            "train": evaluate_decoders(kn, result.model, data.features, data.labels),
            "test": evaluate_decoders(kn, result.model, data.test_features, data.test_labels),
        }
        sweep.append(entry)
    return {
        "config": {
            "k": config.k,
            "d": config.d,
            "n_train": config.n_train,
            "n_test": config.n_test,
            "seed": config.seed,
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "noise": config.noise,
        },
        "sweep": sweep,
    }
