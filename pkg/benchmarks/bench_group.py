"""Compare the gmpy2 and pure-Python modular exponentiation backends.

    python3 benchmarks/bench_group.py

Each backend runs in its own interpreter because the choice is made at import.
"""

import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, random, time
from ledgerlab import _group
from ledgerlab.crypto import keygen, sign, verify
from ledgerlab.identity import canonical_ring, prove_membership, verify_membership

rng = random.Random(0)
keys = [keygen(rng.randbytes(32)) for _ in range(8)]
ring = canonical_ring([k.public for k in keys])
out = {"backend": _group.BACKEND}

t = time.perf_counter()
sigs = [sign(k.secret, b"bench") for k in keys for _ in range(25)]
out["sign_ms"] = (time.perf_counter() - t) * 1000 / len(sigs)

t = time.perf_counter()
for k in keys:
    for _ in range(25):
        verify(k.public, b"bench", sigs[0])
out["verify_ms"] = (time.perf_counter() - t) * 1000 / 200

t = time.perf_counter()
proofs = [prove_membership(keys[i].secret, ring, b"bench", rng) for i in range(8)]
out["ring8_prove_ms"] = (time.perf_counter() - t) * 1000 / 8

t = time.perf_counter()
for proof in proofs:
    assert verify_membership(proof, ring, b"bench")
out["ring8_verify_ms"] = (time.perf_counter() - t) * 1000 / 8
print(json.dumps(out))
"""


def run(pure: bool) -> dict:
    env = dict(os.environ)
    env.pop("LEDGERLAB_PURE_PYTHON", None)
    if pure:
        env["LEDGERLAB_PURE_PYTHON"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True,
                          text=True, check=True)
    return json.loads(proc.stdout)


def main():
    rows = [run(pure=False), run(pure=True)]
    metrics = [k for k in rows[0] if k != "backend"]
    print("%-16s" % "metric" + "".join("%14s" % r["backend"] for r in rows))
    for m in metrics:
        print("%-16s" % m + "".join("%14.3f" % r[m] for r in rows))


if __name__ == "__main__":
    main()
