"""Regenerate the golden signature/AEAD vectors under vectors/.

Run once after an intentional change to the signature or AEAD construction;
the test-suite then pins the output byte-for-byte.
"""

from pathlib import Path

from ledgerlab.crypto import aead_seal, keygen, sha256, sign

OUT = Path(__file__).resolve().parent.parent / "vectors"


def main():
    lines = ["# seed-hex message-hex public-sha256-hex signature-hex"]
    for i, msg in enumerate([b"", b"abc", b"ledgerlab", bytes(range(64))]):
        seed = sha256(b"vector-seed-%d" % i)
        kp = keygen(seed)
        lines.append(" ".join([seed.hex(), msg.hex() or "-", sha256(kp.public).hex(), sign(seed, msg).hex()]))
    (OUT / "signatures.txt").write_text("\n".join(lines) + "\n")

    lines = ["# key-hex nonce-hex plaintext-hex aad-hex ciphertext-hex"]
    for i, (pt, aad) in enumerate([(b"", b""), (b"hello", b""), (b"confidential terms", b"tx-7"), (bytes(100), b"aad")]):
        key = sha256(b"vector-key-%d" % i)
        nonce = i.to_bytes(12, "big")
        ct = aead_seal(key, nonce, pt, aad)
        lines.append(" ".join([key.hex(), nonce.hex(), pt.hex() or "-", aad.hex() or "-", ct.hex()]))
    (OUT / "aead.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
