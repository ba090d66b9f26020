"""Physical layer for a sweep: per-sector received power through direct and relayed paths.

A :class:`Link` precomputes every gain that does not depend on transmit
power, so a sweep round reduces to a few array operations.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..antenna import AntennaConfig, face_gain
from ..channel import (SPEED_OF_LIGHT, Environment, LineOfSight, PropagationPath, Relayed,
                       bearing, distance, power_sum, trace_paths)
from ..errors import GeometryError

if TYPE_CHECKING:
    from ..adversary import AdversaryConfig, RelayAntenna


@dataclass(frozen=True)
class DeviceConfig:
    position: tuple[float, float]
    antenna: AntennaConfig = AntennaConfig()
    p_max: float = 0.0
    snr_min: float = 10.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))

    def sensitivity(self, env: Environment) -> float:
        """Minimum decodable received power ``P_f``."""
        return env.noise_floor + self.snr_min


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Link:
    tx: DeviceConfig
    rx: DeviceConfig
    direct: tuple[PropagationPath, ...]
    direct_gain: np.ndarray      # (N, L, P): tx fine + rx quasi - loss
    direct_total: np.ndarray     # (N, L)
    relay_in: tuple[PropagationPath, ...] = ()
    in_gain: np.ndarray | None = None    # (N, Q): tx fine + relay face - loss
    in_total: np.ndarray | None = None   # (N,)
    relay_out: tuple[PropagationPath, ...] = ()
    out_gain: np.ndarray | None = None   # (L, R): relay face + rx quasi - loss
    out_total: np.ndarray | None = None  # (L,)
    relay_position: tuple[float, float] | None = None
    processing_delay: float = 0.0

    @property
    def n_sectors(self) -> int:
        return self.tx.antenna.n_sectors

    @property
    def n_patterns(self) -> int:
        return self.rx.antenna.n_quasi

    @property
    def has_relay(self) -> bool:
        return self.relay_position is not None


def _angles(paths, attr):
    return np.array([getattr(p, attr) for p in paths], dtype=float)


def _losses(paths):
    return np.array([p.channel_loss for p in paths], dtype=float)


def _sum_last(a: np.ndarray) -> np.ndarray:
    if a.shape[-1] == 0:
        return np.full(a.shape[:-1], -np.inf)
    return power_sum(*np.moveaxis(a, -1, 0))


@functools.lru_cache(maxsize=512)
def _build(env: Environment, tx: DeviceConfig, rx: DeviceConfig,
           relay_pos: tuple[float, float] | None, relay_ant: RelayAntenna | None,
           processing_delay: float) -> Link:
    direct = tuple(trace_paths(env, tx.position, rx.position))
    ta, ra = tx.antenna, rx.antenna
    if direct:
        dg = (ta.fine_gain_table(_angles(direct, "aod"))[:, None, :]
              + ra.quasi_gain_table(_angles(direct, "aoa"))[None, :, :]
              - _losses(direct)[None, None, :])
    else:
        dg = np.zeros((ta.n_sectors, ra.n_quasi, 0))
    fields = dict(tx=tx, rx=rx, direct=direct, direct_gain=_frozen(dg),
                  direct_total=_frozen(_sum_last(dg)))
    if relay_pos is None:
        return Link(**fields)

    if not env.contains(relay_pos):
        raise GeometryError(f"adversary {relay_pos} lies outside the room")
    if distance(relay_pos, rx.position) <= 1e-9:
        raise GeometryError("adversary coincides with the receiver")
    bore_out = bearing(relay_pos, rx.position)
    if distance(relay_pos, tx.position) <= 1e-9:
        # co-located with the transmitter: every sector reaches it without loss
        ins: tuple[PropagationPath, ...] = (
            PropagationPath(LineOfSight(), 0.0, 0.0, 0.0, bore_out, bore_out),)
        ig = np.zeros((ta.n_sectors, 1))
    else:
        bore_in = bearing(relay_pos, tx.position)
        ins = tuple(trace_paths(env, tx.position, relay_pos))
        ig = (ta.fine_gain_table(_angles(ins, "aod"))
              + face_gain(relay_ant.face_hpbw, relay_ant.face_gain, relay_ant.sidelobe_gain,
                          bore_in, _angles(ins, "aoa"))[None, :]
              - _losses(ins)[None, :]) if ins else np.zeros((ta.n_sectors, 0))
    outs = tuple(trace_paths(env, relay_pos, rx.position))
    og = (face_gain(relay_ant.face_hpbw, relay_ant.face_gain, relay_ant.sidelobe_gain,
                    bore_out, _angles(outs, "aod"))[None, :]
          + ra.quasi_gain_table(_angles(outs, "aoa"))
          - _losses(outs)[None, :]) if outs else np.zeros((ra.n_quasi, 0))
    return Link(**fields, relay_in=ins, in_gain=_frozen(ig), in_total=_frozen(_sum_last(ig)),
                relay_out=outs, out_gain=_frozen(og), out_total=_frozen(_sum_last(og)),
                relay_position=relay_pos, processing_delay=processing_delay)


def build_link(env: Environment, tx: DeviceConfig, rx: DeviceConfig,
               adversary: AdversaryConfig | None = None) -> Link:
    """Gain tables for the ``tx`` to ``rx`` sweep, optionally through a relay."""
    if adversary is None:
        return _build(env, tx, rx, None, None, 0.0)
    return _build(env, tx, rx, adversary.position, adversary.antenna, adversary.processing_delay)


@dataclass(frozen=True)
class Measurement:
    """Per-sector outcome of one sweep round (arrays indexed by sector - 1)."""

    tx_power: np.ndarray
    at_relay: np.ndarray       # power reaching the relay (-inf without one)
    relay_tx: np.ndarray       # relay transmit power (-inf where not relayed)
    shadowing: np.ndarray
    grid: np.ndarray           # (N, L) received power per quasi pattern
    best_pattern: np.ndarray   # 1-based
    rx_power: np.ndarray
    decodable: np.ndarray
    relay_dominant: np.ndarray

    def path_loss(self) -> np.ndarray:
        return self.tx_power - self.rx_power


def relay_input_power(env: Environment, transmitter: DeviceConfig, adversary: AdversaryConfig,
                      tx_power) -> np.ndarray:
    """Per-sector power captured by the adversary's face toward ``transmitter``."""
    n = transmitter.antenna.n_sectors
    p = np.broadcast_to(np.asarray(tx_power, dtype=float), (n,))
    if distance(adversary.position, transmitter.position) <= 1e-9:
        return p.copy()
    if not env.contains(adversary.position):
        raise GeometryError(f"adversary {adversary.position} lies outside the room")
    ant = adversary.antenna
    ins = trace_paths(env, transmitter.position, adversary.position)
    if not ins:
        return np.full(n, -np.inf)
    gain = (transmitter.antenna.fine_gain_table(_angles(ins, "aod"))
            + face_gain(ant.face_hpbw, ant.face_gain, ant.sidelobe_gain,
                        bearing(adversary.position, transmitter.position), _angles(ins, "aoa"))[None, :]
            - _losses(ins)[None, :])
    return p + _sum_last(gain)


def power_at_relay(link: Link, tx_power: np.ndarray) -> np.ndarray:
    if not link.has_relay:
        return np.full(link.n_sectors, -np.inf)
    return np.asarray(tx_power, dtype=float) + link.in_total


def measure(link: Link, env: Environment, tx_power, relay_tx=None, shadowing=None) -> Measurement:
    """Receive every sector of a sweep with every quasi pattern; keep the best."""
    n = link.n_sectors
    p = np.broadcast_to(np.asarray(tx_power, dtype=float), (n,)).copy()
    x = np.zeros(n) if shadowing is None else np.asarray(shadowing, dtype=float)
    direct = p[:, None] + link.direct_total
    if link.has_relay and relay_tx is not None:
        r = np.asarray(relay_tx, dtype=float)
        relayed = r[:, None] + link.out_total[None, :]
        grid = power_sum(direct, relayed) + x[:, None]
    else:
        r = np.full(n, -np.inf)
        relayed = np.full_like(direct, -np.inf)
        grid = direct + x[:, None]
    best = np.argmax(grid, axis=1)
    rows = np.arange(n)
    rx = grid[rows, best]
    # relay dominance compares the summed relayed and direct contributions
    dominant = relayed[rows, best] > direct[rows, best]
    return Measurement(
        tx_power=p, at_relay=power_at_relay(link, p), relay_tx=r, shadowing=x, grid=grid,
        best_pattern=best + 1, rx_power=rx, decodable=rx >= link.rx.sensitivity(env),
        relay_dominant=dominant)


def sector_arrivals(link: Link, sector: int, tx_power: float, relay_tx: float = -math.inf,
                    pattern: int | None = None, shadowing: float = 0.0
                    ) -> list[tuple[PropagationPath, float, int]]:
    """Every path of one sector with its received power and receive pattern.

    With ``pattern=None`` each path is reported at the quasi pattern that
    receives it best. Relayed paths are composites of an in-leg and out-leg.
    """
    i = sector - 1
    pats = range(link.n_patterns) if pattern is None else [pattern - 1]
    ta, ra = link.tx.antenna, link.rx.antenna
    out: list[tuple[PropagationPath, float, int]] = []
    for k, path in enumerate(link.direct):
        j = max(pats, key=lambda jj: link.direct_gain[i, jj, k])
        out.append((path, tx_power + link.direct_gain[i, j, k] + shadowing, j + 1))
    if link.has_relay and np.isfinite(relay_tx):
        at_relay = tx_power + link.in_total[i]
        amp = relay_tx - at_relay
        for q, pin in enumerate(link.relay_in):
            for r, pout in enumerate(link.relay_out):
                j = max(pats, key=lambda jj: link.out_gain[jj, r])
                power = tx_power + link.in_gain[i, q] + amp + link.out_gain[j, r] + shadowing
                g_tx = float(ta.fine_gain_table([pin.aod])[i, 0])
                g_rx = float(ra.quasi_gain_table([pout.aoa])[j, 0])
                loss = pin.channel_loss + pout.channel_loss
                applied = power - shadowing - tx_power - g_tx - g_rx + loss
                length = pin.length + pout.length
                composite = PropagationPath(
                    Relayed(link.relay_position, float(applied)), length,
                    length / SPEED_OF_LIGHT + link.processing_delay, loss, pin.aod, pout.aoa)
                out.append((composite, float(power), j + 1))
    return out


def pair_paths(env: Environment, tx: DeviceConfig, rx: DeviceConfig, tx_sector: int, rx_sector: int,
               tx_power: float | None = None, adversary: AdversaryConfig | None = None
               ) -> list[tuple[PropagationPath, float]]:
    """Paths between two fine sectors (data-phase beams), strongest first."""
    from ..adversary import relay_transform

    p = tx.p_max if tx_power is None else tx_power
    ta, ra = tx.antenna, rx.antenna
    out = []
    for path in trace_paths(env, tx.position, rx.position):
        g = ta.fine_gain_table([path.aod])[tx_sector - 1, 0] + ra.fine_gain_table([path.aoa])[rx_sector - 1, 0]
        out.append((path, float(p + g - path.channel_loss)))
    if adversary is not None and adversary.relays:
        link = build_link(env, tx, rx, adversary)
        at_relay = float(p + link.in_total[tx_sector - 1])
        if at_relay >= adversary.relay_sensitivity:
            r_tx = float(relay_transform(adversary, at_relay))
            ant = adversary.antenna
            bore_out = bearing(adversary.position, rx.position)
            for q, pin in enumerate(link.relay_in):
                for pout in link.relay_out:
                    g_out = float(face_gain(ant.face_hpbw, ant.face_gain, ant.sidelobe_gain, bore_out, pout.aod))
                    g_rx = float(ra.fine_gain_table([pout.aoa])[rx_sector - 1, 0])
                    power = p + link.in_gain[tx_sector - 1, q] + (r_tx - at_relay) + g_out + g_rx - pout.channel_loss
                    g_tx = float(ta.fine_gain_table([pin.aod])[tx_sector - 1, 0])
                    loss = pin.channel_loss + pout.channel_loss
                    length = pin.length + pout.length
                    composite = PropagationPath(
                        Relayed(adversary.position, float(power - p - g_tx - g_rx + loss)), length,
                        length / SPEED_OF_LIGHT + adversary.processing_delay, loss, pin.aod, pout.aoa)
                    out.append((composite, float(power)))
    out.sort(key=lambda item: (-item[1], item[0].delay))
    return out
