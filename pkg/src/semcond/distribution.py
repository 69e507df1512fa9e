"""Fully factorized exponential distributions over label vectors.

A vector of activations ``a`` induces an unnormalized weight ``e^{a . y}``
for every label vector ``y``; normalizing by the closed-form partition
function turns each coordinate into an independent Bernoulli with success
probability ``sigmoid(a_j)``.

This module is the exhaustive (2^k) reference implementation: it materializes
dense tables, conditions them on a formula by carving states out with -inf
log mass, and reads off probabilities and modes directly.  It doubles as the
test oracle for the junction-tree engine and as the production path for
non-HEX knowledge with few variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NullDistributionError, UnsatisfiableKnowledgeError
from .logic import Formula, all_states, as_label_vector
from .numerics import log_sigmoid, logsumexp, softplus


def as_activations(a, k: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 activation vector, optionally of length k."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d activation vector, got shape {arr.shape}")
    if k is not None and arr.shape != (k,):
        raise ValueError(f"expected {k} activations, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise ValueError("activations must be finite")
    return arr


def log_exponential_weight(a, y) -> float:
    a = as_activations(a)
    y = as_label_vector(y, a.shape[0])
    return float(a @ y)


def exponential_weight(a, y) -> float:
    """Unnormalized weight e^{a . y} of one label vector."""
    return float(np.exp(log_exponential_weight(a, y)))


def log_partition_function(a) -> float:
    """log of the normalizer; the product form makes it a softplus sum."""
    return float(softplus(as_activations(a)).sum())


def partition_function(a) -> float:
    """Sum of e^{a . y} over all label vectors, i.e. prod_j (1 + e^{a_j})."""
    a = as_activations(a)
    return float(np.prod(1.0 + np.exp(a)))


def log_probability(a, y) -> float:
    """log P(y | a) under the normalized distribution, stable for large |a|."""
    a = as_activations(a)
    y = as_label_vector(y, a.shape[0]).astype(np.float64)
    return float((y * log_sigmoid(a) + (1.0 - y) * log_sigmoid(-a)).sum())


def probability(a, y) -> float:
    """P(y | a): a product of independent Bernoulli factors sigmoid(a_j)."""
    return float(np.exp(log_probability(a, y)))


@dataclass(frozen=True)
class DenseDistribution:
    """Explicit table of log weights, one entry per label vector.

    Rows follow the lexicographic state order of :func:`all_states`.  Entries
    may be -inf (carved-out states) and the table may be unnormalized; the
    all--inf table is representable but cannot be normalized.
    """

    k: int
    log_weights: np.ndarray

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=np.float64)
        if lw.shape != (2**self.k,):
            raise ValueError(
                f"expected {2**self.k} log-weights for k={self.k}, got {lw.shape}"
            )
        object.__setattr__(self, "log_weights", lw)

    def states(self) -> np.ndarray:
        return all_states(self.k)

    def log_total(self) -> float:
        return float(logsumexp(self.log_weights))

    def is_null(self) -> bool:
        return bool(np.isneginf(self.log_weights).all())

    def normalize(self) -> np.ndarray:
        """Probabilities per state; raises on the null table."""
        if self.is_null():
            raise NullDistributionError("cannot normalize a distribution with zero mass")
        return np.exp(self.log_weights - self.log_total())


def dense_from_activations(a) -> DenseDistribution:
    """Unnormalized table of the exponential distribution for activations a."""
    a = as_activations(a)
    k = a.shape[0]
    return DenseDistribution(k, all_states(k) @ a)


def semantic_project(dist: DenseDistribution, f: Formula) -> DenseDistribution:
    """Zero out (set to -inf) every state falsifying f; mass is not rescaled."""
    if f.k != dist.k:
        raise ValueError(f"formula over {f.k} variables, table over {dist.k}")
    lw = np.where(f.model_mask(), dist.log_weights, -np.inf)
    return DenseDistribution(dist.k, lw)


def log_formula_probability_bruteforce(a, f: Formula) -> float:
    """log P(f | a) by summing the normalized mass of every model of f."""
    dist = dense_from_activations(as_activations(a, f.k))
    masked = semantic_project(dist, f)
    return masked.log_total() - dist.log_total()


def formula_probability_bruteforce(a, f: Formula) -> float:
    """P(f | a) in [0, 1] by exhaustive enumeration."""
    return float(np.exp(log_formula_probability_bruteforce(a, f)))


def conditioned_distribution_bruteforce(a, f: Formula) -> DenseDistribution:
    """The normalized distribution P(y | a, f) as a dense table.

    States outside the models of f carry -inf; raises if f has no models.
    """
    dist = semantic_project(dense_from_activations(as_activations(a, f.k)), f)
    if dist.is_null():
        raise UnsatisfiableKnowledgeError(
            f"cannot condition on an unsatisfiable formula: {f}"
        )
    return DenseDistribution(dist.k, dist.log_weights - dist.log_total())


def marginals_bruteforce(a, f: Formula) -> np.ndarray:
    """P(Y_j = 1 | a, f) for every coordinate, by enumeration."""
    cond = conditioned_distribution_bruteforce(a, f)
    probs = cond.normalize()
    return probs @ cond.states()


def mode_bruteforce(dist: DenseDistribution) -> np.ndarray:
    """Highest-weight state; ties go to the lexicographically smallest vector.

    The state table is enumerated in lexicographic order (y1 most
    significant), so the first maximum is the canonical tie-break.
    """
    if dist.is_null():
        raise NullDistributionError("the null distribution has no mode")
    return dist.states()[int(np.argmax(dist.log_weights))].copy()
