"""Key derivation, truncated MACs, frame sealing and sweep-order permutation."""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass, replace

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import DecryptError, SecretTooShortError
from .frames import Direction, Feedback, Ssf

MIN_SECRET_BYTES = 16
MIN_AUTH_BYTES = 4
DEFAULT_AUTH_BYTES = 8
AEAD_NONCE_BYTES = 12


@dataclass(frozen=True)
class KeyPair:
    k1: bytes  # integrity
    k2: bytes  # confidentiality

    def __repr__(self) -> str:
        return "KeyPair(<redacted>)"


def derive_keys(secret: bytes) -> KeyPair:
    """Split the shared secret into a MAC key and an encryption key.

    Keys are HMAC-SHA256(secret, label) for the labels ``mac`` and ``enc``.
    """
    secret = bytes(secret)
    if len(secret) < MIN_SECRET_BYTES:
        raise SecretTooShortError(f"shared secret must be >= {MIN_SECRET_BYTES} bytes, got {len(secret)}")
    k1 = hmac.new(secret, b"secbeam/mac", hashlib.sha256).digest()
    k2 = hmac.new(secret, b"secbeam/enc", hashlib.sha256).digest()
    return KeyPair(k1, k2)


def _mac_message(sector: int, tx_power: float | None, nonce: bytes,
                 feedback: Feedback | None = None) -> bytes:
    parts = [struct.pack(">H", sector)]
    if tx_power is not None:
        parts.append(struct.pack(">d", float(tx_power)))
    parts.append(struct.pack(">B", len(nonce)))
    parts.append(nonce)
    if feedback is not None:
        parts.append(feedback.encode())
    return b"".join(parts)


def make_authenticator(k1: bytes, sector: int, tx_power: float | None, nonce: bytes,
                       l_alpha: int = DEFAULT_AUTH_BYTES, feedback: Feedback | None = None) -> bytes:
    """``trunc(HMAC-SHA256_k1(sector || tx_power || nonce [|| feedback]), l_alpha)``.

    ``tx_power=None`` drops the power field (the authenticated-SLS variant
    binds only sector and nonce).
    """
    if l_alpha < MIN_AUTH_BYTES or l_alpha > 32:
        raise ValueError(f"l_alpha must be in [{MIN_AUTH_BYTES}, 32], got {l_alpha}")
    tag = hmac.new(k1, _mac_message(sector, tx_power, nonce, feedback), hashlib.sha256).digest()
    return tag[:l_alpha]


def verify_authenticator(k1: bytes, sector: int, tx_power: float | None, nonce: bytes,
                         authenticator: bytes | None, feedback: Feedback | None = None) -> bool:
    if not authenticator or len(authenticator) < MIN_AUTH_BYTES:
        return False
    expected = make_authenticator(k1, sector, tx_power, nonce, len(authenticator), feedback)
    return hmac.compare_digest(expected, authenticator)


def authenticate_frame(k1: bytes, frame: Ssf, l_alpha: int = DEFAULT_AUTH_BYTES) -> Ssf:
    alpha = make_authenticator(k1, frame.sector_id, frame.tx_power, frame.nonce, l_alpha, frame.feedback)
    return replace(frame, authenticator=alpha)


def frame_is_authentic(k1: bytes, frame: Ssf) -> bool:
    return verify_authenticator(k1, frame.sector_id, frame.tx_power, frame.nonce,
                                frame.authenticator, frame.feedback)


def seal_ssf(k2: bytes, frame: Ssf) -> Ssf:
    """Encrypt the frame body under AES-256-GCM; only the header stays clear."""
    if frame.sealed:
        raise ValueError("frame is already sealed")
    if frame.nonce is None or len(frame.nonce) != AEAD_NONCE_BYTES:
        raise ValueError(f"sealing needs a {AEAD_NONCE_BYTES}-byte frame nonce")
    ct = AESGCM(k2).encrypt(frame.nonce, frame.encode_body(), frame.header())
    return Ssf(direction=frame.direction, round=frame.round, ciphertext=frame.nonce + ct)


def open_ssf(k2: bytes, frame: Ssf) -> Ssf:
    if not frame.sealed:
        raise DecryptError("frame is not sealed")
    blob = frame.ciphertext
    if len(blob) < AEAD_NONCE_BYTES + 16:
        raise DecryptError("ciphertext truncated")
    try:
        body = AESGCM(k2).decrypt(blob[:AEAD_NONCE_BYTES], blob[AEAD_NONCE_BYTES:], frame.header())
        return frame.with_body(body)
    except (InvalidTag, ValueError, struct.error) as exc:
        raise DecryptError("frame failed to open") from exc


def permutation_seed(k1: bytes, direction: Direction, round_: int, run_salt: bytes) -> bytes:
    """Per-run permutation seed; unpredictable without the shared secret."""
    msg = b"secbeam/perm" + struct.pack(">BB", direction.code, round_) + run_salt
    return hmac.new(k1, msg, hashlib.sha256).digest()


def permute_sectors(seed: bytes, n: int) -> list[int]:
    """Pseudorandom permutation of ``1..n`` keyed by ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = np.random.default_rng(np.frombuffer(hashlib.sha256(seed).digest(), dtype=np.uint32))
    return [int(v) + 1 for v in gen.permutation(n)]


class NonceSource:
    """Unique 12-byte frame nonces: a random run prefix plus a counter."""

    def __init__(self, prefix: bytes):
        if len(prefix) != 8:
            raise ValueError("nonce prefix must be 8 bytes")
        self.prefix = prefix
        self._counter = 0

    def next(self) -> bytes:
        self._counter += 1
        return self.prefix + self._counter.to_bytes(4, "big")
