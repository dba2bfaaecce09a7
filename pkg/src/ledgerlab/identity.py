"""Membership service: certificates, one-time keys with linking certificates,
and ring membership proofs (Schnorr OR-composition, Fiat-Shamir).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from . import _group as grp
from .crypto import KeyPair, keygen, secret_scalar, sha256, sign, verify
from .encoding import Reader, field, fields, seq, u64


class IdentityError(Exception):
    pass


class DuplicateName(IdentityError):
    pass


class LinkRejected(IdentityError):
    pass


class CannotProve(IdentityError):
    pass


class KeyCollision(IdentityError):
    """Two distinct identities mapped to the same public key. Fatal."""


@dataclass(frozen=True)
class Certificate:
    subject_name: str
    subject_public: bytes
    issuer_public: bytes
    issuer_signature: bytes

    def signed_bytes(self) -> bytes:
        return certificate_message(self.subject_name, self.subject_public)

    def encode(self) -> bytes:
        return fields(self.subject_name.encode(), self.subject_public,
                      self.issuer_public, self.issuer_signature)

    def verify(self, ca_public: bytes | None = None) -> bool:
        issuer = self.issuer_public if ca_public is None else ca_public
        return issuer == self.issuer_public and verify(issuer, self.signed_bytes(), self.issuer_signature)


@dataclass(frozen=True)
class LinkingCertificate:
    one_time_public: bytes
    long_term_public: bytes
    issuer_signature: bytes

    def signed_bytes(self) -> bytes:
        return link_message(self.one_time_public, self.long_term_public)

    def encode(self) -> bytes:
        return fields(self.one_time_public, self.long_term_public, self.issuer_signature)


def certificate_message(name: str, subject_public: bytes) -> bytes:
    return fields(b"ledgerlab/cert", name.encode(), subject_public)


def link_message(one_time_public: bytes, long_term_public: bytes) -> bytes:
    return fields(b"ledgerlab/link", one_time_public, long_term_public)


class CertificateAuthority:
    """Single in-simulation CA with a name -> public key registry."""

    def __init__(self, keypair: KeyPair):
        self.keypair = keypair
        self.registry: dict[str, bytes] = {}
        self._owners: dict[bytes, str] = {}

    @property
    def public(self) -> bytes:
        return self.keypair.public

    def issue(self, name: str, subject_public: bytes) -> Certificate:
        if not name:
            raise IdentityError("certificate subject name must be non-empty")
        if name in self.registry:
            raise DuplicateName(name)
        if subject_public in self._owners:
            raise KeyCollision("public key already registered to %r" % self._owners[subject_public])
        cert = ca_issue(self.keypair, name, subject_public)
        self.registry[name] = subject_public
        self._owners[subject_public] = name
        return cert

    def derive_one_time(self, long_term: KeyPair, index: int) -> tuple[KeyPair, LinkingCertificate]:
        one_time, link = derive_one_time(long_term, index, self.keypair)
        if one_time.public in self._owners:
            raise KeyCollision("one-time key collides with a registered identity")
        return one_time, link

    def name_of(self, public: bytes) -> str | None:
        return self._owners.get(public)


def ca_issue(ca: KeyPair, name: str, subject_public: bytes) -> Certificate:
    if not name:
        raise IdentityError("certificate subject name must be non-empty")
    sig = sign(ca.secret, certificate_message(name, subject_public))
    return Certificate(name, subject_public, ca.public, sig)


def one_time_seed(long_term_secret: bytes, index: int) -> bytes:
    if index < 0:
        raise ValueError("one-time key index must be >= 0")
    return sha256(long_term_secret + u64(index))


def derive_one_time(long_term: KeyPair, index: int, ca: KeyPair) -> tuple[KeyPair, LinkingCertificate]:
    one_time = keygen(one_time_seed(long_term.secret, index))
    if one_time.public == long_term.public:
        raise KeyCollision("one-time key equals its long-term key")
    sig = sign(ca.secret, link_message(one_time.public, long_term.public))
    return one_time, LinkingCertificate(one_time.public, long_term.public, sig)


def open_link(link: LinkingCertificate, ca_public: bytes) -> bytes:
    """Return the long-term key behind a one-time key, or raise LinkRejected."""
    if not verify(ca_public, link.signed_bytes(), link.issuer_signature):
        raise LinkRejected("linking certificate does not verify under this CA")
    return link.long_term_public


# -- ring membership proofs ---------------------------------------------------

@dataclass(frozen=True)
class MembershipProof:
    ring: tuple[bytes, ...]
    context: bytes
    commitments: tuple[bytes, ...]
    challenges: tuple[int, ...]
    responses: tuple[int, ...]

    def encode(self) -> bytes:
        return b"".join([
            seq(self.ring),
            field(self.context),
            seq(self.commitments),
            seq(grp.encode_scalar(c) for c in self.challenges),
            seq(grp.encode_scalar(s) for s in self.responses),
        ])

    @classmethod
    def decode(cls, data: bytes) -> "MembershipProof":
        r = Reader(data)
        ring = tuple(r.seq())
        context = r.field()
        commitments = tuple(r.seq())
        challenges = tuple(grp.decode_scalar(c) for c in r.seq())
        responses = tuple(grp.decode_scalar(s) for s in r.seq())
        r.done()
        return cls(ring, context, commitments, challenges, responses)


def canonical_ring(ring: Sequence[bytes]) -> tuple[bytes, ...]:
    ring = tuple(bytes(k) for k in ring)
    if not ring:
        raise ValueError("ring must be non-empty")
    if len(set(ring)) != len(ring):
        raise ValueError("ring contains duplicate keys")
    return tuple(sorted(ring))


def ring_challenge(ring: Sequence[bytes], context: bytes, commitments: Sequence[bytes]) -> int:
    return grp.hash_to_scalar(b"ledgerlab/ring", seq(ring), context, seq(commitments))


def prove_membership(secret: bytes, ring: Sequence[bytes], context: bytes,
                     rng: random.Random) -> MembershipProof:
    """Prove knowledge of the secret key of one ring member without saying which.

    The ring is sorted into canonical order first; the returned proof carries
    that order and only verifies against it.
    """
    ring = canonical_ring(ring)
    x = secret_scalar(secret)
    me = grp.encode_element(grp.gexp(x))
    try:
        j = ring.index(me)
    except ValueError:
        raise CannotProve("prover key is not a ring member") from None

    n = len(ring)
    commitments: list[bytes] = [b""] * n
    challenges = [0] * n
    responses = [0] * n
    for i, pk in enumerate(ring):
        if i == j:
            continue
        c = rng.randrange(grp.Q)
        s = rng.randrange(grp.Q)
        y = grp.decode_element(pk)
        # simulated branch: A = g^s * y^-c
        a = grp.mul(grp.gexp(s), grp.powmod(y, grp.Q - c))
        commitments[i] = grp.encode_element(a)
        challenges[i] = c
        responses[i] = s
    k = rng.randrange(1, grp.Q)
    commitments[j] = grp.encode_element(grp.gexp(k))

    total = ring_challenge(ring, context, commitments)
    challenges[j] = (total - sum(challenges)) % grp.Q
    responses[j] = (k + challenges[j] * x) % grp.Q
    return MembershipProof(ring, bytes(context), tuple(commitments), tuple(challenges), tuple(responses))


def verify_membership(proof: MembershipProof, ring: Sequence[bytes], context: bytes) -> bool:
    try:
        ring = tuple(bytes(k) for k in ring)
        n = len(ring)
        if n == 0 or proof.ring != ring or proof.context != bytes(context):
            return False
        if not (len(proof.commitments) == len(proof.challenges) == len(proof.responses) == n):
            return False
        if sum(proof.challenges) % grp.Q != ring_challenge(ring, context, proof.commitments):
            return False
        for pk, a_bytes, c, s in zip(ring, proof.commitments, proof.challenges, proof.responses):
            if not (0 <= c < grp.Q and 0 <= s < grp.Q):
                return False
            y = grp.decode_element(pk)
            a = grp.decode_element(a_bytes)
            if not grp.is_element(y) or not 0 < a < grp.P:
                return False
            if grp.gexp(s) != grp.mul(a, grp.powmod(y, c)):
                return False
        return True
    except (ValueError, TypeError):
        return False
