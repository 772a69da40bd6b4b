"""Timing-offset estimators: approximate ML, weighted energy, plain energy.

All three search a contiguous integer hypothesis set. Scores for every
hypothesis are returned alongside the decision; ties break toward the
smallest offset. Scoring is pure, so per-hypothesis work may be reordered or
parallelized without changing the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ReceivedWindow
from .likelihood import NoiseMixture, VarianceProfile, loglik_class_table
from .waveform import ConfigError


@dataclass(frozen=True)
class HypothesisSet:
    """Contiguous search set of integer timing offsets [d_min, d_max]."""

    d_min: int
    d_max: int

    def __post_init__(self) -> None:
        if self.d_min > self.d_max:
            raise ConfigError(f"empty hypothesis set [{self.d_min}, {self.d_max}]")

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.d_min, self.d_max + 1)

    @property
    def size(self) -> int:
        return self.d_max - self.d_min + 1

    def validate_against(self, block_len: int) -> None:
        if self.d_min <= -block_len or self.d_max >= block_len:
            raise ConfigError(
                f"hypotheses must lie within ({-block_len}, {block_len}), "
                f"got [{self.d_min}, {self.d_max}]"
            )


@dataclass(frozen=True, eq=False)
class EstimateResult:
    d_hat: int
    scores: np.ndarray
    d_values: np.ndarray
    estimator_id: str


def _decide(scores: np.ndarray, hyp: HypothesisSet, maximize: bool, tag: str) -> EstimateResult:
    # argmax/argmin return the first optimum, i.e. the smallest d
    idx = int(np.argmax(scores) if maximize else np.argmin(scores))
    return EstimateResult(
        d_hat=hyp.d_min + idx, scores=scores, d_values=hyp.values, estimator_id=tag
    )


def aml_estimate(
    window: ReceivedWindow,
    vp: VarianceProfile,
    mixture: NoiseMixture,
    hyp: HypothesisSet,
) -> EstimateResult:
    """Approximate ML estimate: the offset whose shifted variance profile
    maximizes the window log-likelihood, summed over receive antennas."""
    hyp.validate_against(vp.block_len)
    m = window.length
    table = loglik_class_table(window.samples, vp, mixture)
    classes = vp.window_class_matrix(hyp.d_min, hyp.d_max, m)
    # row-at-a-time gather keeps the working set cache-sized for long windows
    idx = np.arange(m)
    scores = np.array([table[row, idx].sum() for row in classes])
    return _decide(scores, hyp, maximize=True, tag="aml")


def wed_estimate(
    window: ReceivedWindow,
    vp: VarianceProfile,
    noise_var: float,
    hyp: HypothesisSet,
) -> EstimateResult:
    """Weighted energy detector for Gaussian noise and non-negative offsets.

    Minimizes sample energy weighted by the inverse of the hypothesized total
    variance, so noise-only positions dominate the statistic. Valid only for
    single-component noise with d >= 0 (where it shares its decision with the
    approximate ML estimator).
    """
    if hyp.d_min < 0:
        raise ConfigError("weighted energy detector is defined only for d >= 0")
    if not noise_var > 0:
        raise ConfigError("noise_var must be positive")
    hyp.validate_against(vp.block_len)
    m = window.length
    energy = (np.abs(window.samples) ** 2).sum(axis=0)
    inv_w = 1.0 / (vp.class_values + noise_var / 2.0)
    classes = vp.window_class_matrix(hyp.d_min, hyp.d_max, m)
    scores = inv_w[classes] @ energy
    return _decide(scores, hyp, maximize=False, tag="wed")


def ed_estimate(
    window: ReceivedWindow,
    hyp: HypothesisSet,
) -> EstimateResult:
    """Energy detector: total energy over the hypothesized zero-tail regions.

    Per block r, the hypothesized noise-only span of the capture runs from
    n_data + n_taps - 1 + r*block_len - d through (r+1)*block_len - 1 - d.
    Spans that start before the capture are clipped at 0; blocks beyond the
    window are not used.
    """
    cfg = window.config
    if hyp.d_min < 0:
        raise ConfigError("energy detector is defined only for d >= 0")
    hyp.validate_against(cfg.block_len)
    m = window.length
    if m < cfg.window_len:
        raise ConfigError("window shorter than n_blocks * block_len")
    energy = (np.abs(window.samples) ** 2).sum(axis=0)
    csum = np.concatenate([[0.0], np.cumsum(energy)])
    d = hyp.values[:, None]
    r = np.arange(cfg.n_blocks)[None, :]
    lo = np.maximum(cfg.n_data + cfg.n_taps - 1 + r * cfg.block_len - d, 0)
    hi = np.minimum((r + 1) * cfg.block_len - d, m)
    scores = (csum[hi] - csum[lo]).sum(axis=1)
    return _decide(scores, hyp, maximize=False, tag="ed")
