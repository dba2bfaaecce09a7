"""Deterministic primitives: SHA-256, seeded Schnorr keys and signatures, AES-GCM.

All functions are pure. Randomness never enters here; callers pass seeds and
nonce counters so a whole simulation replays bit-for-bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import _group as grp

DIGEST_LEN = 32
KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16
SIGNATURE_LEN = 2 * grp.SCALAR_LEN
PUBLIC_LEN = grp.ELEMENT_LEN

ZERO_DIGEST = bytes(DIGEST_LEN)


class CryptoError(Exception):
    pass


class MalformedInput(CryptoError, ValueError):
    """Wrong length or encoding of a key, nonce, seed or signature."""


class DecryptionFailed(CryptoError):
    """AEAD authentication failed: tampered data, wrong key or wrong associated data."""


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def secret_scalar(secret: bytes) -> int:
    if len(secret) != KEY_LEN:
        raise MalformedInput("secret must be %d bytes" % KEY_LEN)
    return grp.hash_to_scalar(b"ledgerlab/keygen", secret) or 1


@dataclass(frozen=True)
class KeyPair:
    secret: bytes = field(repr=False)
    public: bytes

    def __post_init__(self):
        if len(self.secret) != KEY_LEN:
            raise MalformedInput("secret must be %d bytes" % KEY_LEN)


def public_from_secret(secret: bytes) -> bytes:
    return grp.encode_element(grp.gexp(secret_scalar(secret)))


def keygen(seed: bytes) -> KeyPair:
    """Derive a key pair from a 32-byte seed. The seed itself is the secret."""
    if len(seed) != KEY_LEN:
        raise MalformedInput("seed must be %d bytes, got %d" % (KEY_LEN, len(seed)))
    return KeyPair(bytes(seed), public_from_secret(seed))


def seed_from_label(label: str) -> bytes:
    return sha256(b"ledgerlab/seed/" + label.encode())


def sign(secret: bytes, message: bytes) -> bytes:
    x = secret_scalar(secret)
    public = grp.encode_element(grp.gexp(x))
    k = grp.hash_to_scalar(b"ledgerlab/nonce", secret, message) or 1
    r = grp.encode_element(grp.gexp(k))
    c = grp.hash_to_scalar(b"ledgerlab/sig", r, public, message)
    s = (k + c * x) % grp.Q
    return grp.encode_scalar(c) + grp.encode_scalar(s)


def verify(public: bytes, message: bytes, signature: bytes) -> bool:
    """Check a signature; every malformed input yields False."""
    try:
        if len(signature) != SIGNATURE_LEN:
            return False
        y = grp.decode_element(public)
        c = grp.decode_scalar(signature[: grp.SCALAR_LEN])
        s = grp.decode_scalar(signature[grp.SCALAR_LEN:])
    except (ValueError, TypeError):
        return False
    if c >= grp.Q or s >= grp.Q or not grp.is_element(y):
        return False
    r = grp.mul(grp.gexp(s), grp.powmod(y, grp.Q - c))
    return grp.hash_to_scalar(b"ledgerlab/sig", grp.encode_element(r), public, message) == c


def shared_key(secret: bytes, peer_public: bytes, context: bytes = b"") -> bytes:
    """Diffie-Hellman agreement hashed down to a 32-byte symmetric key."""
    try:
        y = grp.decode_element(peer_public)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from None
    if not grp.is_element(y):
        raise MalformedInput("peer public key is not a group element")
    z = grp.powmod(y, secret_scalar(secret))
    return sha256(b"ledgerlab/dh" + grp.encode_element(z) + context)


def _check_aead_args(key: bytes, nonce: bytes) -> None:
    if len(key) != KEY_LEN:
        raise MalformedInput("key must be %d bytes" % KEY_LEN)
    if len(nonce) != NONCE_LEN:
        raise MalformedInput("nonce must be %d bytes" % NONCE_LEN)


def aead_seal(key: bytes, nonce: bytes, plaintext: bytes, associated_data: bytes = b"") -> bytes:
    _check_aead_args(key, nonce)
    return AESGCM(key).encrypt(nonce, plaintext, associated_data)


def aead_open(key: bytes, nonce: bytes, ciphertext: bytes, associated_data: bytes = b"") -> bytes:
    _check_aead_args(key, nonce)
    if len(ciphertext) < TAG_LEN:
        raise MalformedInput("ciphertext shorter than the authentication tag")
    try:
        return AESGCM(key).decrypt(nonce, ciphertext, associated_data)
    except InvalidTag:
        raise DecryptionFailed("authentication failed") from None


class NonceCounter:
    """Monotone 96-bit nonce source; one instance per key."""

    def __init__(self, prefix: int = 0):
        self.prefix = prefix
        self.count = 0

    def next(self) -> bytes:
        self.count += 1
        return self.prefix.to_bytes(4, "big") + self.count.to_bytes(8, "big")
