"""Exact inference over compiled constraints by message passing.

One traversal engine, two semirings.  The sum-product pass (logsumexp, +)
computes the log probability of the constraint and the conditioned
per-label marginals; the max-product pass (max, +) computes the most
probable consistent label vector.  Both run in log-space over the sparse
valid-state tables of the junction tree, so carved-out assignments are
simply -inf and activations of any magnitude stay finite.

Ties in the max semiring are broken toward the lexicographically smallest
label vector (y1 the most significant bit).  That order does not decompose
clique-locally, so upward messages carry the best achievable subtree
assignment alongside the score; comparing those assignments directly makes
the tie-break exact, matching the brute-force mode on every input.

Formulas that are not HEX graphs take the exhaustive path from
:mod:`semcond.distribution`, capped at 20 variables; the functions here
accept either knowledge form and dispatch on type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import CompiledKnowledge
from .distribution import (
    as_activations,
    conditioned_distribution_bruteforce,
    log_formula_probability_bruteforce,
    marginals_bruteforce,
    mode_bruteforce,
)
from .logic import Formula
from .numerics import logsumexp, softplus


def _seg_logsumexp(vals: np.ndarray, plan) -> np.ndarray:
    """logsumexp of emitter states grouped by separator assignment.

    vals has shape (S,) or (S, B); the reduction runs over axis 0 using the
    plan's precomputed sort order and segment starts.  All--inf segments
    come out as -inf without NaN.
    """
    v = vals[plan.order]
    m = np.maximum.reduceat(v, plan.starts, axis=0)
    shift = np.where(np.isneginf(m), 0.0, m)
    with np.errstate(divide="ignore"):
        s = np.add.reduceat(np.exp(v - shift[plan.seg_ids]), plan.starts, axis=0)
        return shift + np.log(s)


def _gather(msg: np.ndarray, plan) -> np.ndarray:
    """Receiver-side view of a message; unrealizable separators read -inf."""
    out = msg[plan.recv_idx].copy()
    if plan.recv_missing.any():
        out[plan.recv_missing] = -np.inf
    return out


def _as_batch(ck: CompiledKnowledge, a) -> tuple[np.ndarray, bool]:
    arr = np.asarray(a, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != ck.k:
        raise ValueError(f"expected activations with {ck.k} columns, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("activations must be finite")
    return arr, single


def _clique_scores(ck: CompiledKnowledge, batch: np.ndarray) -> list[np.ndarray]:
    scores = []
    for plan in ck._plans:
        if plan.home_vars.size:
            scores.append(plan.home_bits @ batch[:, plan.home_vars].T)
        else:
            scores.append(np.zeros((plan.codes.shape[0], batch.shape[0])))
    return scores


def _sum_pass(ck: CompiledKnowledge, batch: np.ndarray, want_marginals: bool):
    """Collect (and optionally distribute) in the sum semiring.

    Returns (log mass of consistent states (B,), marginals (B, k) or None).
    """
    plans = ck._plans
    scores = _clique_scores(ck, batch)
    up_msg: list[np.ndarray | None] = [None] * len(plans)
    child_gathered: list[dict[int, np.ndarray]] = [dict() for _ in plans]
    totals: list[np.ndarray | None] = [None] * len(plans)

    for c in ck.upward_order:
        plan = plans[c]
        total = scores[c]
        for ch in plan.children:
            g = _gather(up_msg[ch], plans[ch].up)
            child_gathered[c][ch] = g
            total = total + g
        totals[c] = total
        if plan.parent >= 0:
            up_msg[c] = _seg_logsumexp(total, plan.up)

    root_total = totals[ck.root]
    log_mass = logsumexp(root_total, axis=0)

    if not want_marginals:
        return log_mass, None

    down_gathered: list[np.ndarray | None] = [None] * len(plans)
    mu = np.zeros((batch.shape[0], ck.k))
    for c in ck.downward_order:
        plan = plans[c]
        if plan.parent >= 0:
            p = plan.parent
            base = scores[p]
            if down_gathered[p] is not None:
                base = base + down_gathered[p]
            for ch, g in child_gathered[p].items():
                if ch != c:
                    base = base + g
            down_gathered[c] = _gather(_seg_logsumexp(base, plan.down), plan.down)
        belief = totals[c]
        if down_gathered[c] is not None:
            belief = belief + down_gathered[c]
        z = logsumexp(belief, axis=0)
        for t in range(plan.home_vars.shape[0]):
            on = plan.home_bits[:, t] == 1.0
            if on.any():
                mass_on = logsumexp(belief[on], axis=0)
                mu[:, plan.home_vars[t]] = np.exp(mass_on - z)
    return log_mass, np.clip(mu, 0.0, 1.0)


def pqe_batch(ck: CompiledKnowledge, activations) -> np.ndarray:
    """log P(constraint | a) for every row of a (B, k) activation matrix."""
    batch, _ = _as_batch(ck, activations)
    log_mass, _ = _sum_pass(ck, batch, want_marginals=False)
    return log_mass - softplus(batch).sum(axis=1)


def pqe(ck: CompiledKnowledge, a) -> float:
    """log probability that a label vector drawn from P(.|a) satisfies the constraint."""
    batch, single = _as_batch(ck, a)
    if not single:
        raise ValueError("pqe takes one activation vector; use pqe_batch for matrices")
    return float(pqe_batch(ck, batch)[0])


def marginals_batch(ck: CompiledKnowledge, activations) -> np.ndarray:
    """Conditioned marginals P(Y_j = 1 | a, constraint) for every row."""
    batch, _ = _as_batch(ck, activations)
    _, mu = _sum_pass(ck, batch, want_marginals=True)
    return mu


def conditioned_marginals(ck: CompiledKnowledge, a) -> np.ndarray:
    batch, single = _as_batch(ck, a)
    if not single:
        raise ValueError("conditioned_marginals takes one vector; use marginals_batch")
    return marginals_batch(ck, batch)[0]


# -- max semiring -------------------------------------------------------------


class _MapPlan:
    """Static decode layout: per clique, its subtree variables (sorted) and
    where clique bits and child payloads land inside that layout."""

    def __init__(self, ck: CompiledKnowledge):
        n = len(ck.cliques)
        subtree: list[np.ndarray | None] = [None] * n
        for c in ck.upward_order:
            vs = set(ck.cliques[c])
            for ch in ck._plans[c].children:
                vs.update(subtree[ch].tolist())
            subtree[c] = np.asarray(sorted(vs), dtype=np.int64)
        self.subtree = subtree
        self.self_pos = [
            np.searchsorted(subtree[c], ck._plans[c].vars) for c in range(n)
        ]
        self.child_pos = [
            {
                ch: np.searchsorted(subtree[c], subtree[ch])
                for ch in ck._plans[c].children
            }
            for c in range(n)
        ]


def _map_plan(ck: CompiledKnowledge) -> _MapPlan:
    if ck._map_plan is None:
        ck._map_plan = _MapPlan(ck)
    return ck._map_plan


def map_state(ck: CompiledKnowledge, a) -> np.ndarray:
    """Most probable consistent label vector, exact lexicographic tie-break."""
    batch, single = _as_batch(ck, a)
    if not single:
        raise ValueError("map_state takes one activation vector")
    mp = _map_plan(ck)
    plans = ck._plans
    scores = _clique_scores(ck, batch)
    # per clique: (values over separator states, payload bytes per separator state)
    up_vals: list[np.ndarray | None] = [None] * len(plans)
    up_payloads: list[list[bytes] | None] = [None] * len(plans)

    best_root: tuple[float, bytes] | None = None
    for c in ck.upward_order:
        plan = plans[c]
        vals = scores[c][:, 0].copy()
        gathered = []
        for ch in plan.children:
            g_vals = _gather(up_vals[ch], plans[ch].up)
            g_idx = plans[ch].up.recv_idx
            vals += g_vals
            gathered.append((ch, g_idx, plans[ch].up.recv_missing))
        layout = mp.subtree[c]
        payloads = []
        for s in range(plan.codes.shape[0]):
            pl = np.zeros(layout.shape[0], dtype=np.uint8)
            for ch, g_idx, missing in gathered:
                if not missing[s]:
                    pl[mp.child_pos[c][ch]] = np.frombuffer(
                        up_payloads[ch][g_idx[s]], dtype=np.uint8
                    )
            pl[mp.self_pos[c]] = plan.bits[s]
            payloads.append(pl.tobytes())
        if plan.parent < 0:
            for s in range(plan.codes.shape[0]):
                cand = (vals[s], payloads[s])
                if (
                    best_root is None
                    or cand[0] > best_root[0]
                    or (cand[0] == best_root[0] and cand[1] < best_root[1])
                ):
                    best_root = cand
        else:
            sep_of = plan.up.emit_state_sep
            best: list[tuple[float, bytes] | None] = [None] * plan.up.n_sep
            for s in range(plan.codes.shape[0]):
                t = sep_of[s]
                cand = (vals[s], payloads[s])
                cur = best[t]
                if (
                    cur is None
                    or cand[0] > cur[0]
                    or (cand[0] == cur[0] and cand[1] < cur[1])
                ):
                    best[t] = cand
            up_vals[c] = np.asarray([b[0] for b in best])
            up_payloads[c] = [b[1] for b in best]

    assert best_root is not None
    return np.frombuffer(best_root[1], dtype=np.uint8).copy()


# -- predictors and brute-force mirrors --------------------------------------


def predict_imc(a) -> np.ndarray:
    """Independent thresholding: label j on iff a_j >= 0 (on at exactly zero)."""
    arr = as_activations(np.asarray(a, dtype=np.float64))
    return (arr >= 0.0).astype(np.uint8)


def map_bruteforce(f: Formula, a) -> np.ndarray:
    """Conditioned mode by enumeration; the oracle twin of map_state."""
    return mode_bruteforce(conditioned_distribution_bruteforce(a, f))


def pqe_bruteforce(f: Formula, a) -> float:
    """log P(f | a) by enumeration; the oracle twin of pqe."""
    return log_formula_probability_bruteforce(a, f)


Knowledge = CompiledKnowledge | Formula


def knowledge_k(kn: Knowledge) -> int:
    return kn.k


def knowledge_entails(kn: Knowledge, y) -> bool:
    if isinstance(kn, CompiledKnowledge):
        return kn.entails(y)
    return kn.evaluate(y)


def knowledge_log_pqe(kn: Knowledge, a) -> float:
    if isinstance(kn, CompiledKnowledge):
        return pqe(kn, a)
    return pqe_bruteforce(kn, a)


def knowledge_marginals(kn: Knowledge, a) -> np.ndarray:
    if isinstance(kn, CompiledKnowledge):
        return conditioned_marginals(kn, a)
    return marginals_bruteforce(a, kn)


def knowledge_marginals_batch(kn: Knowledge, activations) -> np.ndarray:
    if isinstance(kn, CompiledKnowledge):
        return marginals_batch(kn, activations)
    arr = np.asarray(activations, dtype=np.float64)
    return np.stack([marginals_bruteforce(row, kn) for row in arr])


def knowledge_log_pqe_batch(kn: Knowledge, activations) -> np.ndarray:
    if isinstance(kn, CompiledKnowledge):
        return pqe_batch(kn, activations)
    arr = np.asarray(activations, dtype=np.float64)
    return np.asarray([pqe_bruteforce(kn, row) for row in arr])


def predict_sci(kn: Knowledge, a) -> np.ndarray:
    """Constraint-aware decoding: the conditioned mode of P(.|a)."""
    if isinstance(kn, CompiledKnowledge):
        return map_state(kn, a)
    return map_bruteforce(kn, a)


@dataclass(frozen=True)
class InferenceResult:
    """Everything one query produces: log P(constraint|a), marginals, mode."""

    log_pqe: float
    marginals: np.ndarray
    map_state: np.ndarray


def infer(kn: Knowledge, a) -> InferenceResult:
    return InferenceResult(
        log_pqe=knowledge_log_pqe(kn, a),
        marginals=knowledge_marginals(kn, a),
        map_state=predict_sci(kn, a),
    )
