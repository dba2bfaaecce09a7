"""Prime-order subgroup of Z_p^* used for keys, signatures and ring proofs.

Modular exponentiation is the only hot kernel in the package. It runs on
gmpy2 when available and falls back to the builtin ``pow`` otherwise; set
``LEDGERLAB_PURE_PYTHON=1`` to force the fallback.

The parameters were derived deterministically (see ``derive_parameters``)
so anyone can regenerate and check them.
"""

from __future__ import annotations

import hashlib
import os
from functools import lru_cache

P = int(
    "e81d5f98c4d4d7c521f81e8c514375d1157ee6271688cbd82041ef543036aea1"
    "d8da9e0657d82302da5f9cb705005b0c0e7ab515f77e4910526a1a11995f1945"
    "69d3364e7f1150fa5580b254ea8922f8efd3c60168dbe33b14c5df2217dc9166"
    "3f1e39f9b75fe7457d224377eeae88274cc3af99c0110c781ec5dda647f5d316"
    "215c75e945c10ac946d6942f9708db3ca2e1feab9207056010f35ee56a898819"
    "6dc8774e331b19b519162c4056695ffe9510ce09b22eab8fcd9fe175439daa29"
    "b369b855da4677c66bf8d43bb956d7d0c33f7d7d909323973afd03cef9b01d2b"
    "459b0a5008617336aa1fbe6cacdb37700acc7bdf1825b21b43a5c5534873b075",
    16,
)
Q = int("f5e002f3d3ef3822821004e12eebcdf581e4d102caed833adb63fe1ab0150e5b", 16)
G = int(
    "c2bf4bc05608d0eda506f79752720bb2cde48e206ccb56a7a7722c8269129e77"
    "ae4e4fd50825633dca609664e7a16b0f9d98eeb466d6d482e1d6145cc9fff241"
    "ea27760f0044ffb21bc29ce351004125be6ab107cad344e08ecb76ba1a08bba5"
    "006ae8a82856f9b13f1f1681874709aa2bb9e80f5aeb0bb310ca7bcc7b0c95fc"
    "3df88c3dea4961a28ef8325b046d3ea7bfe652b96d9c5c241ab391e706427272"
    "5ebc2b497d1a62511546d183448a207d3077a3e2b0805756d4677554054136fb"
    "29af1cc56b3e3fd6ee386f8753afc316b3596b716c7e927329ea45bac14ef5d0"
    "4e49286127840ee02c86c9ffbb6c091031df16bf01f1236138b2ee2e34dfd406",
    16,
)

ELEMENT_LEN = 256  # bytes, big-endian
SCALAR_LEN = 32

PARAM_SEED = b"ledgerlab schnorr group v1"


def _pure_powmod(base: int, exp: int, mod: int) -> int:
    return pow(base, exp, mod)


BACKEND = "python"
_powmod = _pure_powmod

if not os.environ.get("LEDGERLAB_PURE_PYTHON"):
    try:
        import gmpy2

        def _gmp_powmod(base: int, exp: int, mod: int) -> int:
            return int(gmpy2.powmod(base, exp, mod))

        _powmod = _gmp_powmod
        BACKEND = "gmpy2"
    except ImportError:  # pragma: no cover - exercised only without gmpy2
        pass


def powmod(base: int, exp: int, mod: int = P) -> int:
    return _powmod(base, exp, mod)


def gexp(exp: int) -> int:
    return _powmod(G, exp % Q, P)


def mul(a: int, b: int) -> int:
    return a * b % P


@lru_cache(maxsize=4096)
def is_element(y: int) -> bool:
    """True for a non-identity member of the order-Q subgroup."""
    return 1 < y < P and _powmod(y, Q, P) == 1


def encode_element(y: int) -> bytes:
    return y.to_bytes(ELEMENT_LEN, "big")


def decode_element(data: bytes) -> int:
    if len(data) != ELEMENT_LEN:
        raise ValueError("group element must be %d bytes" % ELEMENT_LEN)
    return int.from_bytes(data, "big")


def encode_scalar(x: int) -> bytes:
    return x.to_bytes(SCALAR_LEN, "big")


def decode_scalar(data: bytes) -> int:
    if len(data) != SCALAR_LEN:
        raise ValueError("scalar must be %d bytes" % SCALAR_LEN)
    return int.from_bytes(data, "big")


def hash_to_scalar(*parts: bytes) -> int:
    # 512-bit digest reduced mod Q keeps the bias negligible
    h = hashlib.sha512()
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    return int.from_bytes(h.digest(), "big") % Q


def derive_parameters(seed: bytes = PARAM_SEED):
    """Regenerate (P, Q, G) from ``seed``. Slow; used by tests only."""
    import gmpy2

    q = gmpy2.next_prime(
        gmpy2.mpz(int.from_bytes(hashlib.sha256(seed).digest(), "big")) | (gmpy2.mpz(1) << 255)
    )
    base = gmpy2.mpz(
        int.from_bytes(b"".join(hashlib.sha256(seed + bytes([i])).digest() for i in range(8)), "big")
    ) | (gmpy2.mpz(1) << 2047)
    k = base // q
    while True:
        p = k * q + 1
        if p.bit_length() == 2048 and gmpy2.is_prime(p, 50):
            break
        k += 1
    h = 2
    while True:
        g = gmpy2.powmod(h, (p - 1) // q, p)
        if g != 1:
            break
        h += 1
    return int(p), int(q), int(g)
