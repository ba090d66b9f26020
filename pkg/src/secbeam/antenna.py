"""Flat-top sectored antenna model (fine beams and quasi-omni patterns).

Sectors and quasi-omni patterns are 1-indexed. Sector ``i`` tiles the arc
``[offset + (i-1) 2pi/N, offset + i 2pi/N)`` and points at its centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_TWO_PI = 2.0 * math.pi
# angular comparisons tolerate float noise from wrapping
_ANG_TOL = 1e-9


def isotropic_gain(beamwidth: float) -> float:
    """Gain (dBi) of a flat-top beam of width ``beamwidth`` holding all power."""
    return 10.0 * math.log10(_TWO_PI / beamwidth)


def angular_distance(a, b):
    """Smallest absolute angle between two directions (works on arrays)."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), _TWO_PI)
    return np.minimum(d, _TWO_PI - d)


@dataclass(frozen=True)
class AntennaConfig:
    n_sectors: int = 1
    n_quasi: int = 1
    hpbw: float | None = None
    quasi_hpbw: float | None = None
    mainlobe_gain: float | None = None
    sidelobe_gain: float = -10.0
    boresight_offset: float = 0.0
    quasi_gain: float | None = None

    def __post_init__(self):
        if self.n_sectors < 1 or self.n_quasi < 1:
            raise DomainError("n_sectors and n_quasi must be >= 1")
        if self.n_quasi > self.n_sectors:
            raise DomainError("n_quasi must not exceed n_sectors")
        if self.hpbw is None:
            object.__setattr__(self, "hpbw", _TWO_PI / self.n_sectors)
        if self.quasi_hpbw is None:
            object.__setattr__(self, "quasi_hpbw", _TWO_PI / self.n_quasi)
        if not 0.0 < self.hpbw <= _TWO_PI or not 0.0 < self.quasi_hpbw <= _TWO_PI:
            raise DomainError("beamwidths must lie in (0, 2pi]")
        if self.hpbw > self.quasi_hpbw + _ANG_TOL:
            raise DomainError("fine-beam hpbw must not exceed quasi_hpbw")
        if self.mainlobe_gain is None:
            object.__setattr__(self, "mainlobe_gain", isotropic_gain(self.hpbw))
        if self.quasi_gain is None:
            object.__setattr__(self, "quasi_gain", isotropic_gain(self.quasi_hpbw))
        if not self.mainlobe_gain > self.sidelobe_gain:
            raise DomainError("mainlobe_gain must exceed sidelobe_gain")

    @property
    def sector_width(self) -> float:
        return _TWO_PI / self.n_sectors

    @property
    def quasi_width(self) -> float:
        return _TWO_PI / self.n_quasi

    def sector_boresight(self, sector: int) -> float:
        _check_index(sector, self.n_sectors, "sector")
        return math.fmod(self.boresight_offset + (sector - 0.5) * self.sector_width, _TWO_PI) % _TWO_PI

    def quasi_boresight(self, pattern: int) -> float:
        _check_index(pattern, self.n_quasi, "pattern")
        return math.fmod(self.boresight_offset + (pattern - 0.5) * self.quasi_width, _TWO_PI) % _TWO_PI

    def fine_gain_table(self, angles) -> np.ndarray:
        """Gains of every sector toward ``angles``: shape (n_sectors, len(angles))."""
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        bores = self.boresight_offset + (np.arange(self.n_sectors) + 0.5) * self.sector_width
        inside = angular_distance(angles[None, :], bores[:, None]) <= self.hpbw / 2.0 + _ANG_TOL
        return np.where(inside, self.mainlobe_gain, self.sidelobe_gain)

    def quasi_gain_table(self, angles) -> np.ndarray:
        """Gains of every quasi-omni pattern toward ``angles``: (n_quasi, len(angles))."""
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        bores = self.boresight_offset + (np.arange(self.n_quasi) + 0.5) * self.quasi_width
        # half-open arc [bore - w/2, bore + w/2) so default arcs tile exactly
        if abs(self.quasi_hpbw - self.quasi_width) <= _ANG_TOL:
            # tiling arcs: same index rule as quasi_pattern_for_angle, so exactly one arc holds each angle
            idx = _arc_index(angles - self.boresight_offset, self.quasi_width, self.n_quasi)
            inside = idx[None, :] == np.arange(self.n_quasi)[:, None]
            return np.where(inside, self.quasi_gain, self.sidelobe_gain)
        rel = np.mod(angles[None, :] - (bores[:, None] - self.quasi_hpbw / 2.0), _TWO_PI)
        rel = np.where(rel >= _TWO_PI - _ANG_TOL, 0.0, rel)
        inside = rel < self.quasi_hpbw - _ANG_TOL
        return np.where(inside, self.quasi_gain, self.sidelobe_gain)


def _check_index(index: int, upper: int, what: str) -> None:
    if not (isinstance(index, (int, np.integer)) and 1 <= index <= upper):
        raise IndexError(f"{what} {index} out of range 1..{upper}")


def fine_beam_gain(cfg: AntennaConfig, sector: int, angle: float) -> float:
    """Gain of fine sector ``sector`` toward ``angle``; the hpbw/2 edge is mainlobe."""
    _check_index(sector, cfg.n_sectors, "sector")
    return float(cfg.fine_gain_table([angle])[sector - 1, 0])


def quasi_omni_gain(cfg: AntennaConfig, pattern: int, angle: float) -> float:
    _check_index(pattern, cfg.n_quasi, "pattern")
    return float(cfg.quasi_gain_table([angle])[pattern - 1, 0])


def best_sector_for_angle(cfg: AntennaConfig, angle: float) -> int:
    """The fine sector whose tiling arc contains ``angle``."""
    rel = (angle - cfg.boresight_offset) % _TWO_PI
    idx = int(math.floor(rel / cfg.sector_width + _ANG_TOL))
    return idx % cfg.n_sectors + 1


def _arc_index(rel, width: float, n: int) -> np.ndarray:
    """0-based index of the half-open tiling arc holding each relative angle."""
    rel = np.mod(np.asarray(rel, dtype=float), _TWO_PI)
    return np.floor(rel / width + _ANG_TOL).astype(int) % n


def quasi_pattern_for_angle(cfg: AntennaConfig, angle: float) -> int:
    return int(_arc_index(angle - cfg.boresight_offset, cfg.quasi_width, cfg.n_quasi)) + 1


def face_gain(beamwidth: float, gain: float, sidelobe: float, boresight: float, angles) -> np.ndarray:
    """Flat-top gain of a single beam pointed at ``boresight`` (closed edges)."""
    inside = angular_distance(angles, boresight) <= beamwidth / 2.0 + _ANG_TOL
    return np.where(inside, gain, sidelobe)
