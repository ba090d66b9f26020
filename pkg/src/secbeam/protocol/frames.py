"""Sector sweep frames (SSF) and their byte encoding."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace


class Direction(enum.Enum):
    INITIATOR_SWEEP = "initiator"
    RESPONDER_SWEEP = "responder"

    @property
    def code(self) -> int:
        return 0 if self is Direction.INITIATOR_SWEEP else 1


@dataclass(frozen=True)
class Feedback:
    """SSW feedback field: the peer's best sector and optionally its PL vector."""

    best_sector: int | None = None
    pl_vector: tuple[tuple[int, float], ...] = ()

    def encode(self) -> bytes:
        best = 0 if self.best_sector is None else self.best_sector
        out = [struct.pack(">HH", best, len(self.pl_vector))]
        out.extend(struct.pack(">Hd", s, v) for s, v in self.pl_vector)
        return b"".join(out)

    @classmethod
    def decode(cls, data: bytes, offset: int = 0) -> tuple["Feedback", int]:
        best, count = struct.unpack_from(">HH", data, offset)
        offset += 4
        pairs = []
        for _ in range(count):
            s, v = struct.unpack_from(">Hd", data, offset)
            pairs.append((s, v))
            offset += 10
        return cls(best or None, tuple(pairs)), offset

    def pl_map(self) -> dict[int, float]:
        return dict(self.pl_vector)


@dataclass(frozen=True)
class Ssf:
    """A sector sweep frame.

    In SecBeam the confidential body (sector, power, nonce, authenticator,
    feedback) travels only inside ``ciphertext``; the clear header carries
    direction and round.
    """

    direction: Direction
    round: int
    sector_id: int | None = None
    tx_power: float | None = None
    nonce: bytes | None = None
    authenticator: bytes | None = None
    feedback: Feedback | None = None
    ciphertext: bytes | None = None

    @property
    def sealed(self) -> bool:
        return self.ciphertext is not None

    def header(self) -> bytes:
        return struct.pack(">BB", self.direction.code, self.round)

    def encode_body(self) -> bytes:
        if self.sector_id is None or self.nonce is None:
            raise ValueError("frame body needs sector_id and nonce")
        power = float("nan") if self.tx_power is None else self.tx_power
        auth = self.authenticator or b""
        fb = self.feedback.encode() if self.feedback is not None else b""
        return b"".join([
            struct.pack(">Hd", self.sector_id, power),
            struct.pack(">B", len(self.nonce)), self.nonce,
            struct.pack(">B", len(auth)), auth,
            struct.pack(">B", 1 if self.feedback is not None else 0), fb,
        ])

    def with_body(self, body: bytes) -> "Ssf":
        sector, power = struct.unpack_from(">Hd", body, 0)
        off = 10
        (n_len,) = struct.unpack_from(">B", body, off)
        nonce = body[off + 1: off + 1 + n_len]
        off += 1 + n_len
        (a_len,) = struct.unpack_from(">B", body, off)
        auth = body[off + 1: off + 1 + a_len]
        off += 1 + a_len
        (has_fb,) = struct.unpack_from(">B", body, off)
        off += 1
        fb = None
        if has_fb:
            fb, off = Feedback.decode(body, off)
        if off != len(body) or len(nonce) != n_len or len(auth) != a_len:
            raise ValueError("malformed frame body")
        return replace(self, sector_id=sector, tx_power=None if power != power else power,
                       nonce=nonce, authenticator=auth or None, feedback=fb, ciphertext=None)
