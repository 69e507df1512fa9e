"""Training losses and their closed-form activation gradients.

Four techniques share this module.  Plain independent BCE is the baseline;
the categorical loss covers the softmax special case; the regularized loss
adds a penalty proportional to -log P(constraint | a); and the conditioned
loss trains -log P(y | a, constraint) directly.  The conditioned loss is
exactly the regularized loss at weight -1, which the tests pin down.

Gradients never go through autodiff.  The useful identities:

    d BCE / d a_j               = sigmoid(a_j) - y_j
    d log P(constraint|a)/d a_j = mu_j - sigmoid(a_j)
    d (-log P(y|a,constr))/d a_j = mu_j - y_j

with mu the conditioned marginals, all computed exactly by the inference
engine (or enumeration for small non-HEX formulas).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import as_activations
from .errors import InconsistentLabelError
from .inference import (
    Knowledge,
    knowledge_entails,
    knowledge_k,
    knowledge_log_pqe,
    knowledge_log_pqe_batch,
    knowledge_marginals,
    knowledge_marginals_batch,
)
from .logic import as_label_vector
from .numerics import sigmoid, softplus


@dataclass(frozen=True)
class LossValue:
    value: float
    gradient: np.ndarray


def loss_imc(a, y) -> LossValue:
    """Independent binary cross-entropy over all k coordinates."""
    a = as_activations(a)
    y = as_label_vector(y, a.shape[0]).astype(np.float64)
    value = float((y * softplus(-a) + (1.0 - y) * softplus(a)).sum())
    return LossValue(value, sigmoid(a) - y)


def loss_categorical(a, j: int) -> LossValue:
    """Softmax cross-entropy against class j (1-based)."""
    a = as_activations(a)
    if not 1 <= j <= a.shape[0]:
        raise ValueError(f"class index {j} outside 1..{a.shape[0]}")
    shifted = a - a.max()
    log_norm = np.log(np.exp(shifted).sum())
    grad = np.exp(shifted - log_norm)
    grad[j - 1] -= 1.0
    return LossValue(float(log_norm - shifted[j - 1]), grad)


def log_knowledge_probability(kn: Knowledge, a) -> tuple[float, np.ndarray]:
    """log P(constraint | a) and its activation gradient mu - sigmoid(a)."""
    a = as_activations(a, knowledge_k(kn))
    value = knowledge_log_pqe(kn, a)
    grad = knowledge_marginals(kn, a) - sigmoid(a)
    return value, grad


def loss_sr(kn: Knowledge, a, y, weight: float) -> LossValue:
    """BCE plus ``weight`` times the -log P(constraint | a) penalty.

    weight 0 recovers plain BCE; weight -1 recovers the conditioned loss
    (for labels satisfying the constraint).
    """
    a = as_activations(a, knowledge_k(kn))
    base = loss_imc(a, y)
    log_pqe, pqe_grad = log_knowledge_probability(kn, a)
    return LossValue(
        base.value - weight * log_pqe,
        base.gradient - weight * pqe_grad,
    )


def loss_sc(kn: Knowledge, a, y) -> LossValue:
    """-log P(y | a, constraint); the label must satisfy the constraint."""
    a = as_activations(a, knowledge_k(kn))
    y = as_label_vector(y, a.shape[0])
    if not knowledge_entails(kn, y):
        raise InconsistentLabelError(
            "conditioned loss needs a label vector satisfying the constraint"
        )
    base = loss_imc(a, y)
    log_pqe = knowledge_log_pqe(kn, a)
    mu = knowledge_marginals(kn, a)
    return LossValue(base.value + log_pqe, mu - y.astype(np.float64))


# -- batched forms used by the trainer and the CLI ---------------------------


def loss_imc_batch(activations, labels) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(activations, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    values = (y * softplus(-a) + (1.0 - y) * softplus(a)).sum(axis=1)
    return values, sigmoid(a) - y


def loss_sr_batch(kn: Knowledge, activations, labels, weight: float):
    """Per-row values and gradients of the regularized loss."""
    a = np.asarray(activations, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    values, grads = loss_imc_batch(a, y)
    if weight != 0.0:
        log_pqe = knowledge_log_pqe_batch(kn, a)
        mu = knowledge_marginals_batch(kn, a)
        values = values - weight * log_pqe
        grads = grads - weight * (mu - sigmoid(a))
    return values, grads


def loss_sc_batch(kn: Knowledge, activations, labels):
    """Per-row conditioned loss; every label row must satisfy the constraint."""
    a = np.asarray(activations, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    for i, row in enumerate(np.asarray(labels)):
        if not knowledge_entails(kn, row):
            raise InconsistentLabelError(f"label row {i} violates the constraint")
    values, _ = loss_imc_batch(a, y)
    values = values + knowledge_log_pqe_batch(kn, a)
    mu = knowledge_marginals_batch(kn, a)
    return values, mu - y
