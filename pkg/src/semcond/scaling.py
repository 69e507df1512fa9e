"""Saturating power-law fits for accuracy-versus-resource curves.

Each technique's accuracy as a function of a resource measure m (data size,
model size) is summarized as

    acc(m) = alpha * m**(-b) + a_inf

with alpha < 0 for curves that improve with m.  The asymptote a_inf is what
the technique can ever reach; differences of asymptotes quantify how much a
constraint-aware method ultimately buys, and inverting the curve turns an
accuracy target into the resources needed to hit it.

Fitting is deliberately solver-free and deterministic: a coarse grid over
(b, a_inf) with the closed-form least-squares alpha at every grid point
seeds a damped Gauss-Newton refinement.  Accuracies may arrive in [0,1] or
in percent; the pipeline is scale-consistent, so alpha and a_inf simply
scale along with the inputs and b is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FitInputError, UnattainableAccuracyError


@dataclass(frozen=True)
class AccuracyPoint:
    m: float
    accuracy: float


@dataclass(frozen=True)
class SurrogateModel:
    """acc(m) = alpha * m**(-b) + a_inf."""

    alpha: float
    b: float
    a_inf: float

    def predict(self, m):
        """Accuracy at resource level m (scalar or array, m > 0)."""
        m = np.asarray(m, dtype=np.float64)
        if np.any(m <= 0):
            raise ValueError("resource levels must be positive")
        out = self.alpha * m ** (-self.b) + self.a_inf
        return float(out) if out.ndim == 0 else out

    def inverse(self, accuracy: float) -> float:
        """Resources needed to reach an accuracy below the asymptote."""
        if self.alpha >= 0:
            raise ValueError("inverse needs a decaying curve (alpha < 0)")
        if accuracy >= self.a_inf:
            raise UnattainableAccuracyError(
                f"accuracy {accuracy} is at or above the asymptote {self.a_inf}"
            )
        return float((self.alpha / (accuracy - self.a_inf)) ** (1.0 / self.b))


@dataclass(frozen=True)
class FitReport:
    model: SurrogateModel
    residual: float  # root-mean-square residual
    converged: bool


def _validate(points: Sequence[AccuracyPoint]) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 4:
        raise FitInputError(
            f"need at least 4 points to fit 3 parameters, got {len(points)}"
        )
    m = np.asarray([p.m for p in points], dtype=np.float64)
    acc = np.asarray([p.accuracy for p in points], dtype=np.float64)
    if not np.isfinite(m).all() or not np.isfinite(acc).all():
        raise FitInputError("points must be finite")
    if np.any(m <= 0):
        raise FitInputError("resource levels must be positive")
    if np.unique(m).shape[0] < 2:
        raise FitInputError("all points share one resource level; curve is undetermined")
    return m, acc


def _closed_form_alpha(m, acc, b, a_inf) -> tuple[float, float]:
    x = m ** (-b)
    denom = float(x @ x)
    alpha = float(x @ (acc - a_inf)) / denom
    r = alpha * x + a_inf - acc
    return alpha, float(r @ r)


_B_GRID = np.geomspace(0.05, 2.0, 41)
_T_GRID = (0.0, 1e-4, 3e-4, 1e-3, 3e-3, 0.01, 0.03, 0.1, 0.2, 0.3, 0.5, 0.75,
           1.0, 1.5, 2.0, 3.0, 5.0)


def fit_report(points: Sequence[AccuracyPoint]) -> FitReport:
    """Grid-seeded damped Gauss-Newton fit; deterministic for fixed input."""
    m, acc = _validate(points)
    spread = float(acc.max() - acc.min())
    if spread == 0.0:
        return FitReport(SurrogateModel(0.0, 1.0, float(acc[0])), 0.0, True)

    best = None
    for b in _B_GRID:
        for t in _T_GRID:
            a_inf = float(acc.max()) + t * spread
            alpha, rss = _closed_form_alpha(m, acc, float(b), a_inf)
            if best is None or rss < best[0]:
                best = (rss, alpha, float(b), a_inf)
    rss, alpha, b, a_inf = best

    log_m = np.log(m)
    lam = 1e-3
    converged = False
    for _ in range(200):
        x = m ** (-b)
        r = alpha * x + a_inf - acc
        jac = np.column_stack([x, -alpha * log_m * x, np.ones_like(x)])
        diag = np.sqrt((jac * jac).sum(axis=0))
        diag = np.maximum(diag, 1e-300)
        accepted = False
        for _ in range(40):
            aug = np.vstack([jac, np.sqrt(lam) * np.diag(diag)])
            rhs = np.concatenate([-r, np.zeros(3)])
            delta, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
            cand = np.array([alpha + delta[0], b + delta[1], a_inf + delta[2]])
            if cand[1] > 0:
                x_new = m ** (-cand[1])
                r_new = cand[0] * x_new + cand[2] - acc
                if float(r_new @ r_new) <= rss:
                    alpha, b, a_inf = cand
                    rss = float(r_new @ r_new)
                    lam = max(lam / 3.0, 1e-12)
                    accepted = True
                    break
            lam *= 10.0
            if lam > 1e12:
                break
        if not accepted:
            converged = True  # no improving step exists at any damping
            break
        scale_a = max(abs(alpha), spread)
        scale_c = max(abs(a_inf), spread)
        if (
            abs(delta[0]) <= 1e-13 * scale_a
            and abs(delta[1]) <= 1e-13 * max(abs(b), 1.0)
            and abs(delta[2]) <= 1e-13 * scale_c
        ):
            converged = True
            break

    residual = float(np.sqrt(rss / m.shape[0]))
    return FitReport(SurrogateModel(float(alpha), float(b), float(a_inf)), residual, converged)


def fit_surrogate(points: Sequence[AccuracyPoint]) -> SurrogateModel:
    return fit_report(points).model


def asymptotic_gain(nesy: SurrogateModel, baseline: SurrogateModel) -> float:
    """How much higher the constraint-aware asymptote sits, in accuracy units."""
    return nesy.a_inf - baseline.a_inf


def resource_savings(
    nesy: SurrogateModel, baseline: SurrogateModel, m: float
) -> tuple[float, float]:
    """Absolute and relative resources saved reaching the baseline's accuracy.

    At resource level m the baseline reaches some accuracy; the
    constraint-aware curve reaches the same accuracy at m' <= m (when it
    dominates), so the savings are m - m' and the ratio (m - m') / m.
    """
    target = baseline.predict(m)
    needed = nesy.inverse(target)
    return float(m - needed), float((m - needed) / m)


def savings_curve(
    nesy: SurrogateModel, baseline: SurrogateModel, ms: Sequence[float]
) -> list[tuple[float, float, float]]:
    """(m, absolute savings, relative savings) rows for a grid of levels."""
    out = []
    for m in ms:
        eps, tau = resource_savings(nesy, baseline, float(m))
        out.append((float(m), eps, tau))
    return out
