"""Beam-stealing adversary: forgery and amplify-and-relay strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Sequence, Union

import numpy as np

from .antenna import isotropic_gain
from .errors import DomainError

if TYPE_CHECKING:
    from .protocol.frames import Ssf


@dataclass(frozen=True)
class Forgery:
    """Inject forged feedback naming the sector the adversary hears best."""


@dataclass(frozen=True)
class FixedPower:
    p_fix: float


@dataclass(frozen=True)
class FixedAmplification:
    gain: float


Strategy = Union[Forgery, FixedPower, FixedAmplification]


@dataclass(frozen=True)
class RelayAntenna:
    """Two flat-top faces, one aimed at each victim.

    ``face_gain`` defaults to the gain of a lossless beam of ``face_hpbw``;
    set it explicitly to model horns with elevation directivity.
    """

    face_hpbw: float = math.pi / 3
    face_gain: float | None = None
    sidelobe_gain: float = -10.0

    def __post_init__(self):
        if not 0.0 < self.face_hpbw <= 2.0 * math.pi:
            raise DomainError("face_hpbw must lie in (0, 2pi]")
        if self.face_gain is None:
            object.__setattr__(self, "face_gain", isotropic_gain(self.face_hpbw))


@dataclass(frozen=True)
class AdversaryConfig:
    position: tuple[float, float]
    strategy: Strategy = field(default_factory=lambda: FixedAmplification(60.0))
    subset_size: int = 0
    relay_sensitivity: float = -100.0
    relay_p_max: float = 30.0
    processing_delay: float = 0.0
    antenna: RelayAntenna = field(default_factory=RelayAntenna)
    #: "random" picks a uniform subset of heard frames; "strongest" picks by power
    selection: Literal["random", "strongest"] = "random"
    #: genie mode: always relay this sector (models a lucky round-2 guess)
    target_sector: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if self.subset_size < 0:
            raise DomainError("subset_size must be >= 0")
        if isinstance(self.strategy, FixedAmplification) and self.strategy.gain < 0:
            raise DomainError("amplification gain must be >= 0")
        if isinstance(self.strategy, FixedPower) and self.strategy.p_fix > self.relay_p_max:
            raise DomainError("p_fix must not exceed relay_p_max")
        if self.processing_delay < 0:
            raise DomainError("processing_delay must be >= 0")
        if self.selection not in ("random", "strongest"):
            raise DomainError(f"unknown selection rule {self.selection!r}")

    @property
    def relays(self) -> bool:
        return not isinstance(self.strategy, Forgery)


@dataclass(frozen=True)
class HeardTransmission:
    """What the relay observes: an opaque arrival handle and a power level."""

    handle: int
    rx_power: float


def _heard(adversary: AdversaryConfig, arrivals: Sequence[float]) -> list[HeardTransmission]:
    return [HeardTransmission(k, float(p)) for k, p in enumerate(arrivals)
            if p >= adversary.relay_sensitivity]


def hear_sectors(env, adversary: AdversaryConfig, transmitter, tx_round_power,
                 rng: np.random.Generator | None = None,
                 order: Sequence[int] | None = None) -> list[HeardTransmission]:
    """Transmissions of one sweep round that reach the adversary above its sensitivity.

    ``tx_round_power[i-1]`` is sector i's transmit power and ``order`` the
    transmit sequence (default 1..N). Handles are arrival positions, never
    sector IDs. The relay leg is noiseless, so ``rng`` is accepted only for
    interface symmetry.
    """
    from .protocol.radio import relay_input_power

    at_relay = relay_input_power(env, transmitter, adversary, tx_round_power)
    order = range(1, len(at_relay) + 1) if order is None else order
    return _heard(adversary, [float(at_relay[s - 1]) for s in order])


def select_relay_subset(heard: Sequence[HeardTransmission], x: int, round_: int,
                        rng: np.random.Generator, selection: str = "random") -> list[HeardTransmission]:
    """Choose which heard transmissions to relay in one round.

    ``x = 0`` relays everything. Each round draws a fresh subset: sector IDs
    are sealed and the order is permuted, so nothing links the rounds.
    """
    if round_ not in (1, 2):
        raise ValueError("round must be 1 or 2")
    heard = list(heard)
    if x == 0 or x >= len(heard):
        return heard
    if selection == "strongest":
        ranked = sorted(heard, key=lambda h: (-h.rx_power, h.handle))
        return sorted(ranked[:x], key=lambda h: h.handle)
    picks = rng.choice(len(heard), size=x, replace=False)
    return [heard[k] for k in sorted(int(p) for p in picks)]


def relay_transform(adversary: AdversaryConfig | Strategy, rx_power, relay_p_max: float = 30.0):
    """Transmit power of a relayed frame given its power at the relay."""
    strategy = adversary.strategy if isinstance(adversary, AdversaryConfig) else adversary
    if isinstance(adversary, AdversaryConfig):
        relay_p_max = adversary.relay_p_max
    if isinstance(strategy, FixedPower):
        return np.full_like(np.asarray(rx_power, dtype=float), strategy.p_fix) \
            if np.ndim(rx_power) else float(strategy.p_fix)
    if isinstance(strategy, FixedAmplification):
        out = np.minimum(np.asarray(rx_power, dtype=float) + strategy.gain, relay_p_max)
        return out if np.ndim(rx_power) else float(out)
    raise TypeError("forgery adversaries do not relay")


def forge_feedback(target: Literal["initiator", "responder"], preferred_sector: int,
                   rng: np.random.Generator, l_alpha: int = 8) -> Ssf:
    """A well-formed feedback frame naming ``preferred_sector``.

    The authenticator is random bytes: without the shared secret that is
    the best the adversary can do.
    """
    from .protocol.frames import Direction, Feedback, Ssf

    # frames addressed to the initiator are responder-sweep frames and vice versa
    direction = Direction.RESPONDER_SWEEP if target == "initiator" else Direction.INITIATOR_SWEEP
    return Ssf(direction=direction, round=1, sector_id=preferred_sector, tx_power=None,
               nonce=rng.bytes(12), authenticator=rng.bytes(l_alpha),
               feedback=Feedback(best_sector=preferred_sector))


def plan_relay(adversary: AdversaryConfig, at_relay: np.ndarray, order: Sequence[int], round_: int,
               rng: np.random.Generator) -> np.ndarray:
    """Relay transmit power per sector (``-inf`` where not relayed).

    ``at_relay[i-1]`` is sector i's power at the relay; ``order`` is the
    transmit sequence. Only arrival positions reach the decision logic.
    """
    out = np.full(len(at_relay), -np.inf)
    if not adversary.relays:
        return out
    arrivals = [float(at_relay[s - 1]) for s in order]
    heard = _heard(adversary, arrivals)
    if adversary.target_sector is not None:
        chosen_sectors = [adversary.target_sector] if at_relay[adversary.target_sector - 1] >= \
            adversary.relay_sensitivity else []
    else:
        chosen = select_relay_subset(heard, adversary.subset_size, round_, rng, adversary.selection)
        chosen_sectors = [order[h.handle] for h in chosen]
    for s in chosen_sectors:
        out[s - 1] = relay_transform(adversary, float(at_relay[s - 1]))
    return out
