"""Closed-form attack probabilities, threshold selection and sweep timing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import erf, erfinv, gammaln

from .errors import DomainError


def prop1_detects(p_t1: float, p_t2: float, epsilon: float) -> bool:
    """A fixed-power relay on a sector is caught when ``p_t2 < p_t1 - epsilon``."""
    return p_t2 < p_t1 - epsilon


@dataclass(frozen=True)
class AttackModel:
    n_m: int
    k: int
    x: int

    def __post_init__(self):
        if not 0 <= self.k <= self.n_m:
            raise DomainError(f"need 0 <= K <= N_M, got K={self.k}, N_M={self.n_m}")
        if not 1 <= self.x <= self.n_m:
            raise DomainError(f"need 1 <= x <= N_M, got x={self.x}, N_M={self.n_m}")


def _model(m, k=None, x=None) -> AttackModel:
    return m if isinstance(m, AttackModel) else AttackModel(int(m), int(k), int(x))


def log_binom(n: int, r: int) -> float:
    if r < 0 or r > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1))


def prob_fa_single_direction(m: AttackModel | int, k: int | None = None, x: int | None = None) -> float:
    """Chance one sweep direction passes the path-loss test and is steered.

    Round 1 must relay at least one of the K winning sectors; round 2 must
    relay exactly the same x-subset.
    """
    m = _model(m, k, x)
    # Vandermonde: sum_{i>=1} C(K,i) C(N_M-K,x-i) = C(N_M,x) - C(N_M-K,x)
    log_all = log_binom(m.n_m, m.x)
    miss = math.exp(log_binom(m.n_m - m.k, m.x) - log_all)
    if miss >= 1.0:
        return 0.0
    return min(1.0, math.exp(math.log1p(-miss) - log_all))


def prob_beam_steal(m: AttackModel | int, k: int | None = None, x: int | None = None) -> float:
    """Both directions must be fooled independently."""
    return prob_fa_single_direction(m, k, x) ** 2


def prob_beam_steal_oracle(m: AttackModel | tuple[int, int, int], trials: int,
                           rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate (and its standard error) of the beam-stealing probability.

    Sectors 0..K-1 are the winning ones. A uniformly random x-subset is
    the first ``x`` entries of a random ranking, found with a partition.
    """
    model = m if isinstance(m, AttackModel) else AttackModel(*m)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    n, kk, xx = model.n_m, model.k, model.x
    ok = np.ones(trials, dtype=bool)
    for _direction in range(2):
        s1 = _random_subsets(rng, trials, n, xx)
        s2 = _random_subsets(rng, trials, n, xx)
        hit = s1[:, :kk].any(axis=1)
        same = (s1 == s2).all(axis=1)
        ok &= hit & same
    p = float(ok.mean())
    return p, math.sqrt(p * (1.0 - p) / trials)


def _random_subsets(rng: np.random.Generator, trials: int, n: int, x: int) -> np.ndarray:
    """Boolean membership matrix (trials, n) of uniformly random x-subsets."""
    if x == n:
        return np.ones((trials, n), dtype=bool)
    keys = rng.random((trials, n))
    cut = np.partition(keys, x - 1, axis=1)[:, x - 1:x]
    return keys <= cut


FoldMode = Literal["difference", "single"]


def _fold_scale(sigma: float, mode: FoldMode) -> float:
    if not sigma > 0:
        raise DomainError("sigma must be > 0")
    if mode == "difference":
        return sigma * math.sqrt(2.0)
    if mode == "single":
        return sigma
    raise DomainError(f"unknown fold mode {mode!r}")


def folded_normal_cdf(x: float, sigma: float, mode: FoldMode = "difference") -> float:
    """CDF of ``|X2 - X1|`` for i.i.d. Normal(0, sigma^2) draws.

    ``mode="single"`` instead folds one draw, ``|X|``.
    """
    s = _fold_scale(sigma, mode)
    if x <= 0:
        return 0.0
    return float(erf(x / (s * math.sqrt(2.0))))


def epsilon_for_confidence(sigma: float, p: float, mode: FoldMode = "difference") -> float:
    """Smallest threshold that a benign round-to-round change stays under with probability ``p``."""
    if not 0.0 <= p < 1.0:
        raise DomainError("confidence must lie in [0, 1)")
    s = _fold_scale(sigma, mode)
    return float(s * math.sqrt(2.0) * erfinv(p))


def folded_normal_mean(sigma: float, mode: FoldMode = "difference") -> float:
    return _fold_scale(sigma, mode) * math.sqrt(2.0 / math.pi)


def folded_normal_var(sigma: float, mode: FoldMode = "difference") -> float:
    return _fold_scale(sigma, mode) ** 2 * (1.0 - 2.0 / math.pi)


@dataclass(frozen=True)
class TimingParams:
    frame_bytes: float = 26
    frames_per_sector: int = 1
    bandwidth: float = 160e6
    n_sectors: int = 32
    n_quasi: int = 6
    sbifs: float = 1e-6
    lbifs: float = 18e-6

    def __post_init__(self):
        for name in ("frame_bytes", "frames_per_sector", "bandwidth", "n_sectors", "n_quasi", "sbifs", "lbifs"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.n_quasi > self.n_sectors:
            raise DomainError("n_quasi must not exceed n_sectors")


def secbeam_duration(t: TimingParams) -> float:
    """Air time in seconds of both rounds in both directions.

    Each quasi pattern hears a full fine sweep (Y frames of F bytes per
    sector, short gaps between frames and sectors, long gaps between
    patterns), in both rounds; the final term adds the inter-pattern gaps
    of the feedback exchange.
    """
    n, nq, y = t.n_sectors, t.n_quasi, t.frames_per_sector
    frame_time = t.frame_bytes * 8.0 / t.bandwidth
    per_pattern = (n * (y * frame_time + (y - 1) * t.sbifs)
                   + (n - nq) * t.sbifs + (nq - 1) * t.lbifs)
    return 2.0 * nq * per_pattern + 2.0 * (nq - 1) * t.lbifs
