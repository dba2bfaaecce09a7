import random
from pathlib import Path

import pytest

from ledgerlab import _group as grp
from ledgerlab.crypto import (
    KEY_LEN,
    TAG_LEN,
    DecryptionFailed,
    MalformedInput,
    aead_open,
    aead_seal,
    keygen,
    sha256,
    shared_key,
    sign,
    verify,
)

VECTORS = Path(__file__).resolve().parent.parent / "vectors"


def _rows(name):
    for line in (VECTORS / name).read_text().splitlines():
        if line and not line.startswith("#"):
            yield [b"" if f == "-" else f for f in line.split()]


def _sha_input(field):
    if field == b"":
        return b""
    if field.startswith("repeat:"):
        _, n, h = field.split(":")
        return bytes.fromhex(h) * int(n)
    return bytes.fromhex(field)


def test_sha256_fips_vectors():
    rows = list(_rows("sha256.txt"))
    assert len(rows) >= 4
    for data, expected in rows:
        assert sha256(_sha_input(data)).hex() == expected


def test_sha256_known_prefixes():
    assert sha256(b"").hex().startswith("e3b0c442")
    assert sha256(b"").hex().endswith("7852b855")
    assert sha256(b"abc").hex().startswith("ba7816bf")
    assert sha256(b"abc").hex().endswith("f20015ad")


def test_group_parameters_are_sound():
    gmpy2 = pytest.importorskip("gmpy2")
    assert gmpy2.is_prime(grp.P, 40) and gmpy2.is_prime(grp.Q, 40)
    assert (grp.P - 1) % grp.Q == 0
    assert grp.G != 1 and pow(grp.G, grp.Q, grp.P) == 1
    assert grp.P.bit_length() == 2048 and grp.Q.bit_length() == 256


@pytest.mark.slow
def test_group_parameters_regenerate_from_seed():
    pytest.importorskip("gmpy2")
    assert grp.derive_parameters() == (grp.P, grp.Q, grp.G)


def test_keygen_deterministic_and_degenerate_seed():
    seed = sha256(b"alice")
    assert keygen(seed) == keygen(seed)
    zero = keygen(bytes(32))
    assert grp.is_element(int.from_bytes(zero.public, "big"))


@pytest.mark.parametrize("bad", [b"", bytes(31), bytes(33)])
def test_keygen_rejects_bad_seed_length(bad):
    with pytest.raises(MalformedInput):
        keygen(bad)


def test_keygen_no_collisions_over_1000_seed_pairs():
    rng = random.Random(1)
    publics = set()
    for _ in range(1000):
        s1, s2 = rng.randbytes(32), rng.randbytes(32)
        assert s1 != s2
        p1, p2 = keygen(s1).public, keygen(s2).public
        assert p1 != p2
        publics.update((p1, p2))
    assert len(publics) == 2000


def test_secret_not_in_repr():
    kp = keygen(sha256(b"x"))
    assert kp.secret.hex() not in repr(kp)


def test_sign_round_trip_and_negatives():
    a, b = keygen(sha256(b"a")), keygen(sha256(b"b"))
    sig = sign(a.secret, b"pay 10")
    assert verify(a.public, b"pay 10", sig)
    assert sign(a.secret, b"pay 10") == sig
    assert not verify(a.public, b"pay 11", sig)
    assert not verify(b.public, b"pay 10", sig)


@pytest.mark.parametrize("public,sig", [
    (b"", bytes(64)),
    (bytes(256), bytes(64)),
    (b"\xff" * 256, bytes(64)),
    (None, b"short"),
    (None, b"\xff" * 64),
])
def test_verify_malformed_returns_false(public, sig):
    kp = keygen(sha256(b"m"))
    assert verify(public if public is not None else kp.public, b"m", sig) is False


def _flip(data: bytes, bit: int) -> bytes:
    buf = bytearray(data)
    buf[bit // 8] ^= 1 << (bit % 8)
    return bytes(buf)


def test_signature_mutation_suite_1000():
    rng = random.Random(2024)
    for _ in range(1000):
        kp = keygen(rng.randbytes(32))
        msg = rng.randbytes(rng.randrange(1, 64))
        sig = sign(kp.secret, msg)
        assert verify(kp.public, msg, sig)
        if rng.random() < 0.5:
            assert not verify(kp.public, _flip(msg, rng.randrange(len(msg) * 8)), sig)
        else:
            assert not verify(kp.public, msg, _flip(sig, rng.randrange(len(sig) * 8)))


def test_signature_golden_vectors():
    rows = list(_rows("signatures.txt"))
    assert rows
    for seed, msg, pub_digest, sig in rows:
        seed, msg = bytes.fromhex(seed), bytes.fromhex(msg) if msg else b""
        kp = keygen(seed)
        assert sha256(kp.public).hex() == pub_digest
        assert sign(seed, msg).hex() == sig


def test_aead_round_trip_and_overhead():
    key, nonce = sha256(b"k"), bytes(12)
    ct = aead_seal(key, nonce, b"terms", b"tx")
    assert len(ct) == len(b"terms") + TAG_LEN
    assert aead_open(key, nonce, ct, b"tx") == b"terms"


def test_aead_failures_are_distinguishable():
    key, nonce = sha256(b"k"), bytes(12)
    ct = aead_seal(key, nonce, b"terms", b"tx")
    with pytest.raises(DecryptionFailed):
        aead_open(key, nonce, _flip(ct, 3), b"tx")
    with pytest.raises(DecryptionFailed):
        aead_open(key, nonce, ct, b"other")
    with pytest.raises(MalformedInput):
        aead_open(key[:16], nonce, ct, b"tx")
    with pytest.raises(MalformedInput):
        aead_seal(key, bytes(8), b"x")
    assert not issubclass(MalformedInput, DecryptionFailed)


def test_aead_mutation_suite_1000():
    rng = random.Random(7)
    for i in range(1000):
        key = rng.randbytes(KEY_LEN)
        nonce = rng.randbytes(12)
        pt = rng.randbytes(rng.randrange(0, 48))
        aad = rng.randbytes(rng.randrange(0, 16))
        ct = aead_seal(key, nonce, pt, aad)
        assert aead_open(key, nonce, ct, aad) == pt
        which = i % 4
        with pytest.raises(DecryptionFailed):
            if which == 0:
                aead_open(key, nonce, _flip(ct, rng.randrange(len(ct) * 8)), aad)
            elif which == 1:
                aead_open(key, _flip(nonce, rng.randrange(96)), ct, aad)
            elif which == 2:
                aead_open(_flip(key, rng.randrange(256)), nonce, ct, aad)
            else:
                aead_open(key, nonce, ct, aad + b"\x00")


def test_aead_golden_vectors():
    for key, nonce, pt, aad, ct in _rows("aead.txt"):
        key, nonce = bytes.fromhex(key), bytes.fromhex(nonce)
        pt = bytes.fromhex(pt) if pt else b""
        aad = bytes.fromhex(aad) if aad else b""
        assert aead_seal(key, nonce, pt, aad).hex() == ct


def test_shared_key_agrees():
    a, b = keygen(sha256(b"a")), keygen(sha256(b"b"))
    assert shared_key(a.secret, b.public) == shared_key(b.secret, a.public)
    with pytest.raises(MalformedInput):
        shared_key(a.secret, b"\x01" * 256)
