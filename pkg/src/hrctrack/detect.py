"""Track-extraction detection: null likelihoods, log-likelihood-ratio scores,
empirical ROC curves and their summary statistics.

Provides
--------
- null_loglik: clutter-only log-likelihood of an observation sequence
- log_likelihood_ratio: alternative-minus-null score
- DetectorSpec: which filter supplies the alternative likelihood
- roc_from_scores / auc / delta_auc / operating_point: empirical curve with
  strictly-greater thresholding, infinite sentinels, trapezoidal area
- auc_u_statistic: rank form of the same area (used by the bootstrap)
- bootstrap_delta_auc_se / bootstrap_auc_se: paired resampling noise scales
- roc_to_rows: CSV-ready rows
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridworld import GridSpec
from .observation import MultiObsModel, SingleObsModel, clutter_likelihood_table

__all__ = [
    "DetectorSpec",
    "RocCurve",
    "null_loglik",
    "log_likelihood_ratio",
    "roc_from_scores",
    "auc",
    "delta_auc",
    "operating_point",
    "auc_u_statistic",
    "bootstrap_auc_se",
    "bootstrap_delta_auc_se",
    "roc_to_rows",
]

_ALTERNATIVES = ("hrc", "hmc", "hsc")


@dataclass(frozen=True)
class DetectorSpec:
    """A likelihood-ratio detector: the named filter gives the alternative
    model; the null is always clutter-only."""

    alternative: str

    def __post_init__(self) -> None:
        if self.alternative not in _ALTERNATIVES:
            raise ValueError(
                f"alternative must be one of {_ALTERNATIVES}, got {self.alternative!r}"
            )


def null_loglik(
    points: np.ndarray, model: SingleObsModel | MultiObsModel, grid: GridSpec
) -> float:
    """Log-likelihood of the sequence when every point is clutter; -inf when
    some point is impossible under the clutter origin."""
    g = clutter_likelihood_table(points, model, grid)
    if np.any(g <= 0.0):
        return float("-inf")
    return float(np.log(g).sum())


def log_likelihood_ratio(alt_loglik: float, null_loglik_value: float) -> float:
    return alt_loglik - null_loglik_value


@dataclass
class RocCurve:
    """Empirical operating points, ordered by decreasing threshold so both
    rates are nondecreasing; the infinite sentinels pin (0, 0) and (1, 1)."""

    thresholds: np.ndarray
    p_fa: np.ndarray
    p_d: np.ndarray
    n_null: int
    n_alt: int


def _exceed_fraction(sorted_scores: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    count = len(sorted_scores) - np.searchsorted(sorted_scores, thresholds, side="right")
    return count / len(sorted_scores)


def roc_from_scores(alt_scores: np.ndarray, null_scores: np.ndarray) -> RocCurve:
    """Curve over every distinct finite score: a sequence is declared a
    detection when its score strictly exceeds the threshold."""
    alt = np.asarray(alt_scores, dtype=float)
    null = np.asarray(null_scores, dtype=float)
    if alt.size == 0 or null.size == 0:
        raise ValueError("both score samples must be non-empty")
    if np.any(np.isnan(alt)) or np.any(np.isnan(null)):
        raise ValueError("scores must not contain NaN")
    pooled = np.concatenate([alt, null])
    finite = np.unique(pooled[np.isfinite(pooled)])[::-1]
    thresholds = np.concatenate([[np.inf], finite, [-np.inf]])
    alt_sorted = np.sort(alt)
    null_sorted = np.sort(null)
    p_d = _exceed_fraction(alt_sorted, thresholds)
    p_fa = _exceed_fraction(null_sorted, thresholds)
    # The -inf sentinel means "always declare": rates are 1 by definition,
    # even when some scores are themselves -inf.
    p_d[-1] = 1.0
    p_fa[-1] = 1.0
    return RocCurve(
        thresholds=thresholds, p_fa=p_fa, p_d=p_d, n_null=null.size, n_alt=alt.size
    )


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve in the (p_fa, p_d) plane."""
    return float(np.trapezoid(curve.p_d, curve.p_fa))


def delta_auc(curve_a: RocCurve, curve_b: RocCurve) -> float:
    return auc(curve_a) - auc(curve_b)


def operating_point(
    alt_scores: np.ndarray, null_scores: np.ndarray, threshold: float
) -> tuple[float, float]:
    """(p_fa, p_d) of the fixed-threshold detector (strictly greater)."""
    alt = np.asarray(alt_scores, dtype=float)
    null = np.asarray(null_scores, dtype=float)
    return float((null > threshold).mean()), float((alt > threshold).mean())


def auc_u_statistic(alt_scores: np.ndarray, null_scores: np.ndarray) -> float:
    """Rank form of the trapezoidal area: the probability an alternative
    score beats a null score, with ties counted half."""
    alt = np.asarray(alt_scores, dtype=float)
    null_sorted = np.sort(np.asarray(null_scores, dtype=float))
    below = np.searchsorted(null_sorted, alt, side="left")
    at_or_below = np.searchsorted(null_sorted, alt, side="right")
    wins = below + 0.5 * (at_or_below - below)
    return float(wins.sum() / (alt.size * null_sorted.size))


def bootstrap_auc_se(
    alt_scores: np.ndarray,
    null_scores: np.ndarray,
    n_boot: int = 200,
    rng: np.random.Generator | None = None,
) -> float:
    """Bootstrap standard error of the area, resampling both score samples."""
    rng = rng or np.random.default_rng(0)
    alt = np.asarray(alt_scores, dtype=float)
    null = np.asarray(null_scores, dtype=float)
    stats = np.empty(n_boot)
    for b in range(n_boot):
        ai = rng.integers(0, alt.size, alt.size)
        ni = rng.integers(0, null.size, null.size)
        stats[b] = auc_u_statistic(alt[ai], null[ni])
    return float(stats.std(ddof=1))


def bootstrap_delta_auc_se(
    alt_a: np.ndarray,
    null_a: np.ndarray,
    alt_b: np.ndarray,
    null_b: np.ndarray,
    n_boot: int = 200,
    rng: np.random.Generator | None = None,
) -> float:
    """Bootstrap standard error of auc(a) - auc(b) for two detectors scored
    on the same sequences: resampled trial indices are shared, preserving
    the correlation between the detectors."""
    rng = rng or np.random.default_rng(0)
    alt_a = np.asarray(alt_a, dtype=float)
    alt_b = np.asarray(alt_b, dtype=float)
    null_a = np.asarray(null_a, dtype=float)
    null_b = np.asarray(null_b, dtype=float)
    if alt_a.shape != alt_b.shape or null_a.shape != null_b.shape:
        raise ValueError("paired score samples must align")
    stats = np.empty(n_boot)
    for b in range(n_boot):
        ai = rng.integers(0, alt_a.size, alt_a.size)
        ni = rng.integers(0, null_a.size, null_a.size)
        stats[b] = auc_u_statistic(alt_a[ai], null_a[ni]) - auc_u_statistic(
            alt_b[ai], null_b[ni]
        )
    return float(stats.std(ddof=1))


def roc_to_rows(curve: RocCurve) -> list[tuple[float, float, float]]:
    """(threshold, p_fa, p_d) triples in curve order."""
    return [
        (float(t), float(fa), float(d))
        for t, fa, d in zip(curve.thresholds, curve.p_fa, curve.p_d)
    ]
