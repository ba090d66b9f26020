"""Planar geometric channel: ray paths, losses, shadowing and link budget.

All powers are in dBm, all gains and losses in dB, distances in meters,
angles in radians measured counter-clockwise from the +x axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, GeometryError

SPEED_OF_LIGHT = 299_792_458.0

#: Penetration loss marking a segment that no signal can cross.
OPAQUE = math.inf

_EPS = 1e-9
_TWO_PI = 2.0 * math.pi

Point = tuple[float, float]


def _wrap(angle: float) -> float:
    a = math.fmod(angle, _TWO_PI)
    if a < 0.0:
        a += _TWO_PI
    # fmod can return 2π - tiny which rounds to 2π after the addition
    return 0.0 if a >= _TWO_PI else a


def bearing(src: Sequence[float], dst: Sequence[float]) -> float:
    """Direction from ``src`` toward ``dst`` in [0, 2π)."""
    return _wrap(math.atan2(dst[1] - src[1], dst[0] - src[0]))


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


@dataclass(frozen=True)
class Segment:
    """A wall or obstacle face.

    ``penetration_loss`` is the extra loss (dB) of a ray crossing the
    segment; :data:`OPAQUE` removes any crossing ray.
    """

    a: Point
    b: Point
    permittivity: float = 3.24
    penetration_loss: float = OPAQUE

    def __post_init__(self):
        object.__setattr__(self, "a", (float(self.a[0]), float(self.a[1])))
        object.__setattr__(self, "b", (float(self.b[0]), float(self.b[1])))
        if distance(self.a, self.b) <= _EPS:
            raise GeometryError("segment endpoints coincide")
        if not self.permittivity >= 1.0:
            raise DomainError(f"permittivity must be >= 1, got {self.permittivity}")
        if not self.penetration_loss >= 0.0:
            raise DomainError("penetration_loss must be >= 0 dB")


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _segments_cross(p, q, a, b) -> bool:
    """True when segments p-q and a-b share any point (collinear overlap included)."""
    d1 = _cross(*a, *b, *p)
    d2 = _cross(*a, *b, *q)
    d3 = _cross(*p, *q, *a)
    d4 = _cross(*p, *q, *b)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 and d2 and d3 and d4:
        return True

    def on_seg(u, v, w):
        return (min(u[0], v[0]) - _EPS <= w[0] <= max(u[0], v[0]) + _EPS
                and min(u[1], v[1]) - _EPS <= w[1] <= max(u[1], v[1]) + _EPS)

    return ((abs(d1) <= _EPS and on_seg(a, b, p)) or (abs(d2) <= _EPS and on_seg(a, b, q))
            or (abs(d3) <= _EPS and on_seg(p, q, a)) or (abs(d4) <= _EPS and on_seg(p, q, b)))


def _is_simple(vertices: Sequence[Point]) -> bool:
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def _signed_area(vertices: Sequence[Point]) -> float:
    n = len(vertices)
    return 0.5 * sum(vertices[i][0] * vertices[(i + 1) % n][1]
                     - vertices[(i + 1) % n][0] * vertices[i][1] for i in range(n))


@dataclass(frozen=True)
class Environment:
    """A 2D room (counter-clockwise simple polygon) plus obstacle segments."""

    room_vertices: tuple[Point, ...]
    obstacles: tuple[Segment, ...] = ()
    wall_permittivity: float = 3.24
    carrier_frequency: float = 28e9
    noise_floor: float = -128.0
    shadowing_sigma: float = 0.0

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.room_vertices)
        object.__setattr__(self, "room_vertices", verts)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if len(verts) < 3:
            raise GeometryError("room polygon needs at least 3 vertices")
        if not _is_simple(verts):
            raise GeometryError("room polygon self-intersects")
        if _signed_area(verts) <= 0.0:
            raise GeometryError("room vertices must be listed counter-clockwise")
        if not self.wall_permittivity >= 1.0:
            raise DomainError("wall_permittivity must be >= 1")
        if not self.carrier_frequency > 0.0:
            raise DomainError("carrier_frequency must be > 0")
        if not self.shadowing_sigma >= 0.0:
            raise DomainError("shadowing_sigma must be >= 0")

    @classmethod
    def rectangle(cls, width: float, height: float, **kwargs) -> "Environment":
        """Axis-aligned room of ``width`` x ``height`` centred on the origin."""
        w, h = width / 2.0, height / 2.0
        return cls(room_vertices=((-w, -h), (w, -h), (w, h), (-w, h)), **kwargs)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def walls(self) -> list[Segment]:
        n = len(self.room_vertices)
        return [Segment(self.room_vertices[i], self.room_vertices[(i + 1) % n],
                        self.wall_permittivity, OPAQUE) for i in range(n)]

    def reflectors(self) -> list[Segment]:
        """Walls (edge k joins vertex k and k+1) followed by the obstacles.

        ``Reflected.segment_index`` indexes this list.
        """
        return self.walls() + list(self.obstacles)

    def contains(self, p: Sequence[float]) -> bool:
        """Closed containment test: points on a wall count as inside."""
        x, y = float(p[0]), float(p[1])
        verts = self.room_vertices
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            if abs(_cross(*a, *b, x, y)) <= _EPS * max(1.0, distance(a, b)) and \
                    min(a[0], b[0]) - _EPS <= x <= max(a[0], b[0]) + _EPS and \
                    min(a[1], b[1]) - _EPS <= y <= max(a[1], b[1]) + _EPS:
                return True
        inside = False
        for i in range(n):
            (x1, y1), (x2, y2) = verts[i], verts[(i + 1) % n]
            if (y1 > y) != (y2 > y):
                xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if xi > x:
                    inside = not inside
        return inside


@dataclass(frozen=True)
class LineOfSight:
    pass


@dataclass(frozen=True)
class Reflected:
    segment_index: int


@dataclass(frozen=True)
class Relayed:
    """A path through an amplify-and-relay node.

    ``gain_applied`` is the relay's end-to-end gain: its receive face gain,
    the applied amplification and its transmit face gain.
    """

    via: Point
    gain_applied: float


PathKind = Union[LineOfSight, Reflected, Relayed]


@dataclass(frozen=True)
class PropagationPath:
    kind: PathKind
    length: float
    delay: float
    channel_loss: float
    aod: float
    aoa: float

    @property
    def is_relayed(self) -> bool:
        return isinstance(self.kind, Relayed)

    @property
    def kind_name(self) -> str:
        return {LineOfSight: "los", Reflected: "reflected", Relayed: "relayed"}[type(self.kind)]


def free_space_loss(distance: float, frequency: float) -> float:
    """Friis free-space loss ``20 log10(4 pi d / lambda)`` in dB."""
    if not distance > 0.0 or not frequency > 0.0:
        raise DomainError("distance and frequency must be positive")
    wavelength = SPEED_OF_LIGHT / frequency
    return 20.0 * math.log10(4.0 * math.pi * distance / wavelength)


def fresnel_reflection_coefficient(permittivity: float, incidence_angle: float) -> float:
    """TE (perpendicular) Fresnel amplitude coefficient for a lossless dielectric."""
    if not permittivity >= 1.0:
        raise DomainError(f"permittivity must be >= 1, got {permittivity}")
    if not 0.0 <= incidence_angle < math.pi / 2:
        raise DomainError("incidence angle must lie in [0, pi/2)")
    cos_t = math.cos(incidence_angle)
    root = math.sqrt(permittivity - math.sin(incidence_angle) ** 2)
    return (cos_t - root) / (cos_t + root)


def fresnel_reflection_loss(permittivity: float, incidence_angle: float) -> float:
    """Reflection loss ``-20 log10 |Gamma_TE|``; ``inf`` when nothing reflects."""
    gamma = abs(fresnel_reflection_coefficient(permittivity, incidence_angle))
    if gamma == 0.0:
        return math.inf
    return -20.0 * math.log10(gamma)


def _leg_penetration(env: Environment, p: Point, q: Point, skip: int | None) -> float:
    """Total penetration loss of the straight leg p-q (``inf`` when blocked)."""
    total = 0.0
    for idx, seg in enumerate(env.reflectors()):
        if idx == skip:
            continue
        if _proper_hit(p, q, seg.a, seg.b):
            total += seg.penetration_loss
            if math.isinf(total):
                return total
    return total


def _proper_hit(p, q, a, b) -> bool:
    """Does leg p-q cross segment a-b away from the leg's own endpoints?"""
    rx, ry = q[0] - p[0], q[1] - p[1]
    sx, sy = b[0] - a[0], b[1] - a[1]
    denom = rx * sy - ry * sx
    if abs(denom) <= _EPS * max(1.0, math.hypot(rx, ry) * math.hypot(sx, sy)):
        return False
    t = ((a[0] - p[0]) * sy - (a[1] - p[1]) * sx) / denom
    u = ((a[0] - p[0]) * ry - (a[1] - p[1]) * rx) / denom
    return _EPS < t < 1.0 - _EPS and -_EPS <= u <= 1.0 + _EPS


def _reflection_point(tx, rx, seg: Segment, is_wall: bool):
    ax, ay = seg.a
    dx, dy = seg.b[0] - ax, seg.b[1] - ay
    norm = math.hypot(dx, dy)
    # left-hand normal: points into the room for counter-clockwise walls
    nx, ny = -dy / norm, dx / norm
    d_tx = (tx[0] - ax) * nx + (tx[1] - ay) * ny
    d_rx = (rx[0] - ax) * nx + (rx[1] - ay) * ny
    if abs(d_tx) <= 1e-6 or abs(d_rx) <= 1e-6 or (d_tx > 0) != (d_rx > 0):
        return None
    if is_wall and d_tx < 0:
        return None
    image = (rx[0] - 2.0 * d_rx * nx, rx[1] - 2.0 * d_rx * ny)
    t = d_tx / (d_tx + d_rx)
    px, py = tx[0] + t * (image[0] - tx[0]), tx[1] + t * (image[1] - tx[1])
    u = ((px - ax) * dx + (py - ay) * dy) / (norm * norm)
    if not (1e-6 < u < 1.0 - 1e-6):
        return None
    length = distance(tx, image)
    cos_inc = abs(d_tx) / distance(tx, (px, py))
    return (px, py), length, math.acos(min(1.0, cos_inc))


def trace_paths(env: Environment, tx: Sequence[float], rx: Sequence[float]) -> list[PropagationPath]:
    """Line-of-sight plus every valid first-order specular reflection, by delay."""
    tx = (float(tx[0]), float(tx[1]))
    rx = (float(rx[0]), float(rx[1]))
    for name, p in (("tx", tx), ("rx", rx)):
        if not env.contains(p):
            raise GeometryError(f"{name} {p} lies outside the room")
    if distance(tx, rx) <= _EPS:
        raise GeometryError("tx and rx coincide")

    f = env.carrier_frequency
    paths: list[tuple[int, int, PropagationPath]] = []

    pen = _leg_penetration(env, tx, rx, skip=None)
    if not math.isinf(pen):
        d = distance(tx, rx)
        paths.append((0, -1, PropagationPath(
            LineOfSight(), d, d / SPEED_OF_LIGHT, free_space_loss(d, f) + pen,
            bearing(tx, rx), bearing(rx, tx))))

    n_walls = len(env.room_vertices)
    for idx, seg in enumerate(env.reflectors()):
        hit = _reflection_point(tx, rx, seg, is_wall=idx < n_walls)
        if hit is None:
            continue
        point, length, theta = hit
        refl = fresnel_reflection_loss(seg.permittivity, theta)
        if math.isinf(refl):
            continue
        pen = _leg_penetration(env, tx, point, skip=idx) + _leg_penetration(env, point, rx, skip=idx)
        if math.isinf(pen):
            continue
        paths.append((1, idx, PropagationPath(
            Reflected(idx), length, length / SPEED_OF_LIGHT,
            free_space_loss(length, f) + refl + pen,
            bearing(tx, point), bearing(rx, point))))

    paths.sort(key=lambda item: (item[2].delay, item[0], item[1]))
    return [p for _, _, p in paths]


def received_power(tx_power: float, tx_gain: float, rx_gain: float,
                   path: PropagationPath, shadowing: float = 0.0) -> float:
    """Link budget in the dB domain: ``P_T + G_T + G_R - L_ch + X`` (+ relay gain)."""
    p = tx_power + tx_gain + rx_gain - path.channel_loss + shadowing
    if isinstance(path.kind, Relayed):
        p += path.kind.gain_applied
    return p


def sample_shadowing(rng: np.random.Generator, sigma: float) -> float:
    """One zero-mean Gaussian shadowing draw with standard deviation ``sigma`` dB."""
    if sigma < 0.0:
        raise DomainError("sigma must be >= 0")
    if sigma == 0.0:
        return 0.0
    return float(rng.normal(0.0, sigma))


def snr(received: float, noise_floor: float) -> float:
    return received - noise_floor


def power_sum(*powers_dbm) -> np.ndarray:
    """Incoherent sum of dBm quantities (``-inf`` entries contribute nothing)."""
    stack = np.stack(np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in powers_dbm]))
    with np.errstate(divide="ignore"):
        peak = np.max(stack, axis=0)
        safe = np.where(np.isfinite(peak), peak, 0.0)
        total = np.sum(10.0 ** ((stack - safe) / 10.0), axis=0)
        return np.where(np.isfinite(peak), safe + 10.0 * np.log10(total), -np.inf)
