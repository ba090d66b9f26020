"""Verdicts and per-run records produced by the alignment protocols."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Union

from .frames import Direction


@dataclass(frozen=True)
class Accepted:
    label: ClassVar[str] = "Accepted"


@dataclass(frozen=True)
class PathLossTestFailed:
    sector: int
    direction: Direction
    delta: float = float("nan")
    label: ClassVar[str] = "PathLossTestFailed"


@dataclass(frozen=True)
class AoaTestFailed:
    pattern: int
    count: int
    direction: Direction
    label: ClassVar[str] = "AoaTestFailed"


@dataclass(frozen=True)
class AuthFailed:
    reason: str = ""
    label: ClassVar[str] = "AuthFailed"


@dataclass(frozen=True)
class CpdpFailed:
    delay: float
    label: ClassVar[str] = "CpdpFailed"


Verdict = Union[Accepted, PathLossTestFailed, AoaTestFailed, AuthFailed, CpdpFailed]


@dataclass
class SweepRecord:
    """What the receiving side of one sweep direction learned.

    Maps are keyed by 1-based transmit sector (or quasi pattern for
    ``aoa_counts``). Round-2 entries exist only for SecBeam.
    """

    direction: Direction
    n_sectors: int
    n_patterns: int
    pl_round1: dict[int, float] = field(default_factory=dict)
    pl_round2: dict[int, float] = field(default_factory=dict)
    tx_power_round2: dict[int, float] = field(default_factory=dict)
    order_round2: list[int] = field(default_factory=list)
    best_pattern_round1: dict[int, int] = field(default_factory=dict)
    best_pattern_round2: dict[int, int] = field(default_factory=dict)
    aoa_counts: dict[int, int] = field(default_factory=dict)
    relay_dominant_round1: dict[int, bool] = field(default_factory=dict)
    snr_round1: dict[int, float] = field(default_factory=dict)
    heard_by_adversary: int = 0
    best_sector: int | None = None

    @property
    def max_aoa_count(self) -> int:
        return max(self.aoa_counts.values(), default=0)

    @property
    def max_aoa_pattern(self) -> int | None:
        if not self.aoa_counts:
            return None
        top = self.max_aoa_count
        return min(j for j, c in self.aoa_counts.items() if c == top)


@dataclass
class SweepOutcome:
    """Result of one alignment run.

    ``initiator_sweep`` is measured at the responder (initiator transmits);
    ``responder_sweep`` is measured at the initiator. ``failures`` lists every
    failed check in protocol order; ``verdict`` is the first of them.
    """

    protocol: str
    initiator_sweep: SweepRecord
    responder_sweep: SweepRecord
    best_initiator_sector: int
    best_responder_sector: int
    verdict: Verdict = field(default_factory=Accepted)
    failures: list[Verdict] = field(default_factory=list)
    selected_path_kind: str | None = None

    @property
    def accepted(self) -> bool:
        return isinstance(self.verdict, Accepted)

    @property
    def pl_round1(self) -> dict[int, float]:
        return self.initiator_sweep.pl_round1

    @property
    def pl_round2(self) -> dict[int, float]:
        return self.initiator_sweep.pl_round2

    @property
    def aoa_counts(self) -> dict[int, int]:
        return self.initiator_sweep.aoa_counts

    def record(self, direction: Direction) -> SweepRecord:
        return self.initiator_sweep if direction is Direction.INITIATOR_SWEEP else self.responder_sweep
