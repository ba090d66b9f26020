"""Attack checks: the round-consistency path-loss test, the coarse AoA test and CPDP."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channel import PropagationPath
from .errors import DomainError, EmptyProfileError

#: 1 / 160 MHz
DEFAULT_BIN_WIDTH = 6.25e-9


@dataclass(frozen=True)
class PathLossResult:
    passed: bool
    sector: int | None = None
    delta: float | None = None


def path_loss_test(pl1: Mapping[int, float], pl2: Mapping[int, float], epsilon: float) -> PathLossResult:
    """Flag the lowest sector whose path loss moved by more than ``epsilon``.

    A sector seen only in round 2 also fails (``delta`` is ``inf``): a link
    that appears only under reduced power is physically inconsistent. A
    sector seen only in round 1 is skipped.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be >= 0")
    for sector in sorted(set(pl1) | set(pl2)):
        if sector not in pl2:
            continue
        if sector not in pl1:
            return PathLossResult(False, sector, math.inf)
        delta = abs(pl1[sector] - pl2[sector])
        if delta > epsilon:
            return PathLossResult(False, sector, delta)
    return PathLossResult(True)


@dataclass(frozen=True)
class AoaResult:
    passed: bool
    counts: dict[int, int]
    pattern: int | None = None
    count: int = 0


def aoa_counts(best_pattern: Mapping[int, int], n_patterns: int | None = None) -> dict[int, int]:
    counts = Counter(best_pattern.values())
    if n_patterns is not None:
        return {j: counts.get(j, 0) for j in range(1, n_patterns + 1)}
    return dict(sorted(counts.items()))


def coarse_aoa_test(best_pattern: Mapping[int, int], n: int, beta: float,
                    n_patterns: int | None = None) -> AoaResult:
    """Fail when one quasi pattern is best for more than ``beta * n`` sectors.

    The reported pattern is the most crowded one (lowest index on ties).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 < beta <= 1.0:
        raise DomainError("beta must lie in (0, 1]")
    counts = aoa_counts(best_pattern, n_patterns)
    if not counts:
        return AoaResult(True, counts)
    top = max(counts.values())
    pattern = min(j for j, c in counts.items() if c == top)
    return AoaResult(not top > beta * n, counts, pattern, top)


def aoa_passes(max_count: int, n: int, beta: float) -> bool:
    """Re-threshold a recorded maximum count."""
    return not max_count > beta * n


@dataclass(frozen=True)
class Peak:
    delay: float
    power: float
    sector: int | None = None


@dataclass(frozen=True)
class Cpdp:
    peaks: tuple[Peak, ...]
    bin_width: float = DEFAULT_BIN_WIDTH

    def bins(self) -> list[int]:
        return [delay_bin(p.delay, self.bin_width) for p in self.peaks]


def delay_bin(delay: float, bin_width: float) -> int:
    # tolerance keeps exact multiples of the bin width in their own bin
    return int(math.floor(delay / bin_width + 1e-9))


def build_cpdp(per_sector_paths: Mapping[int, Iterable[tuple[PropagationPath, float]]],
               bin_width: float = DEFAULT_BIN_WIDTH) -> Cpdp:
    """Strongest path per sector, merged by delay bin (max power wins)."""
    if not bin_width > 0:
        raise DomainError("bin_width must be > 0")
    merged: dict[int, Peak] = {}
    for sector in sorted(per_sector_paths):
        entries = list(per_sector_paths[sector])
        if not entries:
            continue
        path, power = max(entries, key=lambda e: (e[1], -e[0].delay))
        b = delay_bin(path.delay, bin_width)
        if b not in merged or power > merged[b].power:
            merged[b] = Peak(path.delay, float(power), sector)
    return Cpdp(tuple(merged[b] for b in sorted(merged)), bin_width)


@dataclass(frozen=True)
class CpdpResult:
    passed: bool
    offending_delay: float | None = None
    offending_power: float | None = None


def cpdp_test(cpdp: Cpdp, margin: float = 0.0) -> CpdpResult:
    """Fail if any later peak is stronger than the earliest one by more than ``margin``.

    The strongest offender is reported.
    """
    if not cpdp.peaks:
        raise EmptyProfileError("CPDP has no peaks")
    first = cpdp.peaks[0]
    offenders = [p for p in cpdp.peaks[1:] if p.power > first.power + margin]
    if not offenders:
        return CpdpResult(True)
    worst = max(offenders, key=lambda p: (p.power, -p.delay))
    return CpdpResult(False, worst.delay, worst.power)


def observe_cpdp(env, transmitter, receiver, adversary=None, tx_power: float | None = None,
                 bin_width: float = DEFAULT_BIN_WIDTH, rng: np.random.Generator | None = None) -> Cpdp:
    """CPDP the receiver would collect during one full-power sweep.

    Every decodable (sector, pattern) reception contributes its paths; a
    relaying adversary forwards every sector it hears.
    """
    from .adversary import plan_relay
    from .protocol.radio import build_link, measure, sector_arrivals

    link = build_link(env, transmitter, receiver, adversary)
    p = transmitter.p_max if tx_power is None else tx_power
    powers = np.full(link.n_sectors, float(p))
    order = list(range(1, link.n_sectors + 1))
    relay_tx = None
    if adversary is not None and adversary.relays:
        relay_tx = plan_relay(adversary, powers + link.in_total, order, 1,
                              rng if rng is not None else np.random.default_rng(0))
    meas = measure(link, env, powers, relay_tx)
    sens = receiver.sensitivity(env)
    per_sector: dict[int, list[tuple[PropagationPath, float]]] = {}
    for i in range(link.n_sectors):
        entries = []
        r = -math.inf if relay_tx is None else float(relay_tx[i])
        for j in range(link.n_patterns):
            if meas.grid[i, j] < sens:
                continue
            entries.extend((path, power) for path, power, _ in
                           sector_arrivals(link, i + 1, float(p), r, pattern=j + 1))
        per_sector[i + 1] = entries
    return build_cpdp(per_sector, bin_width)


def peaks_from_pairs(pairs: Sequence[tuple[float, float]], bin_width: float = DEFAULT_BIN_WIDTH) -> Cpdp:
    """Build a CPDP directly from (delay, power) pairs, one per sector."""
    merged: dict[int, Peak] = {}
    for k, (delay, power) in enumerate(pairs):
        b = delay_bin(delay, bin_width)
        if b not in merged or power > merged[b].power:
            merged[b] = Peak(float(delay), float(power), k + 1)
    return Cpdp(tuple(merged[b] for b in sorted(merged)), bin_width)
