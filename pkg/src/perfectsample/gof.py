"""Goodness-of-fit wrappers used by the validation suite and the CLI.

Thin, uniform interfaces over scipy.stats: every check returns a GofReport
carrying the statistic, the p-value, and the sample sizes, so callers can
print or serialize results without caring which test ran.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class GofReport:
    test: str
    statistic: float
    p_value: float
    n: int
    n_other: int = 0

    def passes(self, alpha: float = 0.001) -> bool:
        return self.p_value > alpha


def count_labels(draws, labels) -> np.ndarray:
    """Occurrence counts of each label, in label order."""
    index = {s: i for i, s in enumerate(labels)}
    counts = np.zeros(len(labels), dtype=np.int64)
    for d in draws:
        counts[index[d]] += 1
    return counts


def chisq_counts(counts: np.ndarray, probs: np.ndarray) -> GofReport:
    """Pearson chi-square of observed counts against exact cell probabilities."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    keep = probs > 0
    if not np.all(counts[~keep] == 0):
        return GofReport(test="chisq", statistic=np.inf, p_value=0.0, n=int(n))
    stat, p = stats.chisquare(counts[keep], n * probs[keep] / probs[keep].sum())
    return GofReport(test="chisq", statistic=float(stat), p_value=float(p), n=int(n))


def chisq_gof(draws, labels, probs: np.ndarray) -> GofReport:
    return chisq_counts(count_labels(draws, labels), probs)


def chisq_two_sample(counts_a: np.ndarray, counts_b: np.ndarray) -> GofReport:
    """Homogeneity chi-square for two vectors of category counts."""
    table = np.vstack([np.asarray(counts_a, dtype=float),
                       np.asarray(counts_b, dtype=float)])
    occupied = table.sum(axis=0) > 0
    stat, p, _, _ = stats.chi2_contingency(table[:, occupied])
    return GofReport(test="chisq-2sample", statistic=float(stat), p_value=float(p),
                     n=int(table[0].sum()), n_other=int(table[1].sum()))


def ks_gof(draws: np.ndarray, cdf) -> GofReport:
    """Kolmogorov-Smirnov of a continuous sample against an exact CDF."""
    draws = np.asarray(draws, dtype=float)
    stat, p = stats.kstest(draws, cdf)
    return GofReport(test="ks", statistic=float(stat), p_value=float(p), n=len(draws))


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> GofReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    stat, p = stats.ks_2samp(a, b)
    return GofReport(test="ks-2sample", statistic=float(stat), p_value=float(p),
                     n=len(a), n_other=len(b))


def binned_tv(sample: np.ndarray, edges: np.ndarray, exact_masses: np.ndarray) -> float:
    """Total variation between a sample's bin frequencies and exact bin masses."""
    emp = np.histogram(np.asarray(sample, dtype=float), bins=edges)[0] / len(sample)
    return float(0.5 * np.abs(emp - np.asarray(exact_masses, dtype=float)).sum())
