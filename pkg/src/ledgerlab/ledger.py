"""Transactions, hash-chained ledgers, UTXO asset state and the off-chain
private data store.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from . import merkle
from .crypto import ZERO_DIGEST, KeyPair, sha256, sign, verify
from .encoding import fields, seq, u32, u64


class Reason(enum.Enum):
    MissingSignature = "MissingSignature"
    UnknownInput = "UnknownInput"
    DoubleSpend = "DoubleSpend"
    ContractViolation = "ContractViolation"
    NotVisible = "NotVisible"


class Rejection(Exception):
    def __init__(self, reason: Reason, detail: str = ""):
        super().__init__("%s: %s" % (reason.value, detail) if detail else reason.value)
        self.reason = reason
        self.detail = detail


class Unauthorized(Exception):
    pass


class AssetRef(NamedTuple):
    tx_id: bytes
    index: int

    def encode(self) -> bytes:
        return fields(self.tx_id, u32(self.index))

    def __str__(self):
        return "%s:%d" % (self.tx_id.hex()[:16], self.index)


class Output(NamedTuple):
    owner: bytes
    value: bytes

    def encode(self) -> bytes:
        return fields(self.owner, self.value)


# -- payloads -----------------------------------------------------------------

@dataclass(frozen=True)
class Inline:
    data: bytes
    kind = "inline"

    def encode(self) -> bytes:
        return fields(b"inline", self.data)


@dataclass(frozen=True)
class Encrypted:
    ciphertext: bytes
    key_hint: str = ""
    kind = "encrypted"

    def encode(self) -> bytes:
        return fields(b"encrypted", self.ciphertext, self.key_hint.encode())


@dataclass(frozen=True)
class Anchor:
    digest: bytes
    kind = "anchor"

    def encode(self) -> bytes:
        return fields(b"anchor", self.digest)


@dataclass(frozen=True)
class TearOff:
    """Merkle root over the transaction leaves; views are per recipient class
    and are not part of the transaction id (the root already commits to them)."""

    root: bytes
    views: Mapping[str, merkle.TearOffView] = field(default_factory=dict)
    kind = "tearoff"

    def encode(self) -> bytes:
        return fields(b"tearoff", self.root)


Payload = Inline | Encrypted | Anchor | TearOff


# -- transactions -------------------------------------------------------------

@dataclass(frozen=True)
class Transaction:
    id: bytes
    group: str
    participants: tuple[bytes, ...]
    payload: Payload
    inputs: tuple[AssetRef, ...]
    outputs: tuple[Output, ...]
    contract: str
    signatures: Mapping[bytes, bytes] = field(default_factory=dict)

    def compute_id(self) -> bytes:
        return transaction_id(self.group, self.participants, self.payload,
                              self.inputs, self.outputs, self.contract)

    def signing_message(self) -> bytes:
        if isinstance(self.payload, TearOff):
            return self.payload.root
        return self.id

    def with_signature(self, public: bytes, signature: bytes) -> "Transaction":
        sigs = dict(self.signatures)
        sigs[public] = signature
        return replace(self, signatures=sigs)

    def encode(self) -> bytes:
        """Full encoding including signatures (what a ledger stores)."""
        return fields(
            self.id,
            encode_unsigned(self.group, self.participants, self.payload,
                            self.inputs, self.outputs, self.contract),
            seq(fields(k, self.signatures[k]) for k in sorted(self.signatures)),
        )

    def ref(self, index: int) -> AssetRef:
        return AssetRef(self.id, index)


def encode_unsigned(group, participants, payload, inputs, outputs, contract) -> bytes:
    return fields(
        b"ledgerlab/tx",
        group.encode(),
        contract.encode(),
        seq(participants),
        payload.encode(),
        seq(AssetRef(*r).encode() for r in inputs),
        seq(Output(*o).encode() for o in outputs),
    )


def transaction_id(group, participants, payload, inputs, outputs, contract) -> bytes:
    return sha256(encode_unsigned(group, participants, payload, inputs, outputs, contract))


def make_transaction(group: str, participants: Sequence[bytes], payload: Payload,
                     inputs: Sequence[AssetRef] = (), outputs: Sequence[Output] = (),
                     contract: str = "") -> Transaction:
    if not participants:
        raise ValueError("a transaction needs at least one participant")
    inputs = tuple(AssetRef(bytes(r[0]), int(r[1])) for r in inputs)
    for ref in inputs:
        if len(ref.tx_id) != 32 or ref.index < 0:
            raise ValueError("malformed input reference %r" % (ref,))
    participants = tuple(bytes(p) for p in participants)
    outputs = tuple(Output(bytes(o[0]), bytes(o[1])) for o in outputs)
    tx_id = transaction_id(group, participants, payload, inputs, outputs, contract)
    return Transaction(tx_id, group, participants, payload, inputs, outputs, contract, {})


# Canonical leaf order for tear-off payloads:
# [group, contract, *participants, *inputs, *outputs, body]

class LeafLayout(NamedTuple):
    participants: int
    inputs: int
    outputs: int

    @property
    def count(self) -> int:
        return 3 + self.participants + self.inputs + self.outputs

    def role(self, index: int) -> str:
        if index == 0:
            return "group"
        if index == 1:
            return "contract"
        index -= 2
        for name, n in (("participant", self.participants), ("input", self.inputs),
                        ("output", self.outputs)):
            if index < n:
                return name
            index -= n
        if index == 0:
            return "body"
        raise IndexError("leaf index out of range")

    def indices(self, role: str) -> list[int]:
        return [i for i in range(self.count) if self.role(i) == role]


def tearoff_leaves(group: str, contract: str, participants: Sequence[bytes],
                   inputs: Sequence[AssetRef], outputs: Sequence[Output], body: bytes) -> list[bytes]:
    return ([b"group:" + group.encode(), b"contract:" + contract.encode()]
            + [b"participant:" + p for p in participants]
            + [b"input:" + AssetRef(*r).encode() for r in inputs]
            + [b"output:" + Output(*o).encode() for o in outputs]
            + [b"body:" + body])


def strip_leaf(leaf: bytes) -> bytes:
    return leaf.split(b":", 1)[1]


def make_tearoff_transaction(group: str, participants: Sequence[bytes], body: bytes,
                             inputs: Sequence[AssetRef] = (), outputs: Sequence[Output] = (),
                             contract: str = "") -> tuple[Transaction, merkle.MerkleTree]:
    tree = merkle.build(tearoff_leaves(group, contract, participants, inputs, outputs, body))
    tx = make_transaction(group, participants, TearOff(tree.root), inputs, outputs, contract)
    return tx, tree


def sign_transaction(tx: Transaction, keypair: KeyPair, endorsers: Iterable[bytes] = ()) -> Transaction:
    if keypair.public not in tx.participants and keypair.public not in set(endorsers):
        raise Unauthorized("signer is neither a participant nor a designated endorser")
    return tx.with_signature(keypair.public, sign(keypair.secret, tx.signing_message()))


def sign_view(view: merkle.TearOffView, keypair: KeyPair) -> bytes:
    """Oracle path: sign the root recomputed from a tear-off view."""
    return sign(keypair.secret, merkle.recompute(view))


# -- contracts ----------------------------------------------------------------

class ExecutionMode(enum.Enum):
    OnNode = "on-node"
    OffChainEngine = "off-chain"


SignerRule = Callable[[Transaction], set]
Predicate = Callable[[Sequence["Output | None"], Sequence[Output], Payload], bool]


def all_participants(tx: Transaction) -> set:
    return set(tx.participants)


def initiator_only(tx: Transaction) -> set:
    return {tx.participants[0]}


def always(inputs, outputs, payload) -> bool:
    return True


def conserve_count(inputs, outputs, payload) -> bool:
    """Transfers keep the asset count; issuances (no inputs) must create something."""
    return len(outputs) >= 1 if not inputs else len(outputs) == len(inputs)


SIGNER_RULES: dict[str, SignerRule] = {"participants": all_participants, "initiator": initiator_only}
PREDICATES: dict[str, Predicate] = {"always": always, "conserve-count": conserve_count}


@dataclass(frozen=True)
class Contract:
    id: str
    version: int = 1
    signers: str = "participants"
    predicate: str = "conserve-count"
    mode: ExecutionMode = ExecutionMode.OnNode

    def required_signers(self, tx: Transaction) -> set:
        return SIGNER_RULES[self.signers](tx)

    def check(self, inputs, outputs, payload) -> bool:
        return PREDICATES[self.predicate](inputs, outputs, payload)


# -- state and validation -------------------------------------------------------

class AssetState:
    """UTXO set as seen by one ledger copy."""

    def __init__(self):
        self.unspent: dict[AssetRef, Output] = {}
        self.spent: dict[AssetRef, bytes] = {}
        self.known_txs: set[bytes] = set()

    def apply(self, tx: Transaction) -> None:
        for ref in tx.inputs:
            self.unspent.pop(ref, None)
            self.spent[ref] = tx.id
        for i, out in enumerate(tx.outputs):
            self.unspent[AssetRef(tx.id, i)] = out
        self.known_txs.add(tx.id)

    def copy(self) -> "AssetState":
        other = AssetState()
        other.unspent = dict(self.unspent)
        other.spent = dict(self.spent)
        other.known_txs = set(self.known_txs)
        return other


def validate(tx: Transaction, state: AssetState, contracts: Mapping[str, Contract],
             visible: Callable[[AssetRef], bool] | None = None,
             has_code: bool = True) -> list[Reason]:
    """Run the validation pipeline; raise Rejection on the first failure.

    Returns warnings (currently only NotVisible, one per input the validator
    cannot see). Inputs outside the validator's view are not checked for
    existence or double spending.
    """
    if visible is None:
        visible = lambda ref: ref.tx_id in state.known_txs  # noqa: E731
    if tx.compute_id() != tx.id:
        raise Rejection(Reason.MissingSignature, "transaction id does not match contents")
    contract = contracts.get(tx.contract)
    if contract is None:
        raise Rejection(Reason.ContractViolation, "unknown contract %r" % tx.contract)

    msg = tx.signing_message()
    for pk in sorted(contract.required_signers(tx)):
        sig = tx.signatures.get(pk)
        if sig is None or not verify(pk, msg, sig):
            raise Rejection(Reason.MissingSignature, "required signer %s" % pk.hex()[:16])
    for pk, sig in tx.signatures.items():
        if not verify(pk, msg, sig):
            raise Rejection(Reason.MissingSignature, "invalid signature by %s" % pk.hex()[:16])

    warnings = []
    if len(set(tx.inputs)) != len(tx.inputs):
        raise Rejection(Reason.DoubleSpend, "input listed twice")
    resolved = []
    for ref in tx.inputs:
        if not visible(ref):
            warnings.append(Reason.NotVisible)
            resolved.append(None)
            continue
        if ref in state.spent:
            raise Rejection(Reason.DoubleSpend, "input %s already consumed" % (ref,))
        if ref not in state.unspent:
            raise Rejection(Reason.UnknownInput, "input %s" % (ref,))
        resolved.append(state.unspent[ref])

    if has_code and contract.mode is ExecutionMode.OnNode:
        if not contract.check(resolved, tx.outputs, tx.payload):
            raise Rejection(Reason.ContractViolation, "predicate %r failed" % contract.predicate)
    return warnings


# -- blocks and ledgers ---------------------------------------------------------

@dataclass(frozen=True)
class Block:
    height: int
    prev: bytes
    tx_ids: tuple[bytes, ...]
    body_hash: bytes


def block_hash(height: int, prev: bytes, tx_ids: Sequence[bytes]) -> bytes:
    return sha256(fields(b"ledgerlab/block", u64(height), prev, seq(tx_ids)))


class Ledger:
    """Append-only chain of blocks plus the asset state it implies."""

    def __init__(self, name: str):
        self.name = name
        self.blocks: list[Block] = []
        self.txs: dict[bytes, Transaction] = {}
        self.state = AssetState()

    @property
    def height(self) -> int:
        return len(self.blocks)

    @property
    def head(self) -> bytes:
        return self.blocks[-1].body_hash if self.blocks else ZERO_DIGEST

    def append(self, txs: Sequence[Transaction]) -> Block:
        txs = list(txs)
        ids = tuple(tx.id for tx in txs)
        block = Block(self.height, self.head, ids, block_hash(self.height, self.head, ids))
        self.blocks.append(block)
        for tx in txs:
            self.txs[tx.id] = tx
            self.state.apply(tx)
        return block

    def recompute_head(self) -> bytes:
        """Rebuild every hash from the stored transactions, ignoring cached ids."""
        prev = ZERO_DIGEST
        for block in self.blocks:
            ids = [self.txs[t].compute_id() for t in block.tx_ids]
            prev = block_hash(block.height, prev, ids)
        return prev

    def verify_chain(self) -> bool:
        return self.recompute_head() == self.head

    def dump_records(self) -> list[dict]:
        out = []
        for block in self.blocks:
            out.append({
                "ledger": self.name,
                "height": block.height,
                "prev": block.prev.hex(),
                "body_hash": block.body_hash.hex(),
                "txs": [tx_to_json(self.txs[t]) for t in block.tx_ids],
            })
        return out

    def dump(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
                       for r in self.dump_records())


def payload_to_json(payload: Payload) -> dict:
    if isinstance(payload, Inline):
        return {"kind": "inline", "data": payload.data.hex()}
    if isinstance(payload, Encrypted):
        return {"kind": "encrypted", "ciphertext": payload.ciphertext.hex(), "key_hint": payload.key_hint}
    if isinstance(payload, Anchor):
        return {"kind": "anchor", "digest": payload.digest.hex()}
    return {"kind": "tearoff", "root": payload.root.hex(),
            "views": {k: v.encode().hex() for k, v in sorted(payload.views.items())}}


def tx_to_json(tx: Transaction) -> dict:
    return {
        "id": tx.id.hex(),
        "group": tx.group,
        "contract": tx.contract,
        "participants": [p.hex() for p in tx.participants],
        "payload": payload_to_json(tx.payload),
        "inputs": [[r.tx_id.hex(), r.index] for r in tx.inputs],
        "outputs": [[o.owner.hex(), o.value.hex()] for o in tx.outputs],
        "signatures": {k.hex(): v.hex() for k, v in sorted(tx.signatures.items())},
    }


# -- off-chain private data -------------------------------------------------------

class PrivateDataStore:
    """Content-addressed off-chain store. Purge drops the data, never the anchor.

    Anchors may be salted; the salt is kept after purge so re-presented data
    can still be checked against the on-ledger digest.
    """

    def __init__(self):
        self.entries: dict[bytes, bytes] = {}
        self.salts: dict[bytes, bytes] = {}

    def anchor(self, data: bytes, salt: bytes = b"") -> bytes:
        digest = sha256(salt + data)
        self.entries[digest] = data
        if salt:
            self.salts[digest] = salt
        return digest

    def retrieve(self, digest: bytes) -> bytes | None:
        return self.entries.get(digest)

    def purge(self, digest: bytes) -> None:
        self.entries.pop(digest, None)

    def verify(self, digest: bytes, data: bytes) -> bool:
        return sha256(self.salts.get(digest, b"") + data) == digest


def payload_from_json(d: dict) -> Payload:
    kind = d["kind"]
    if kind == "inline":
        return Inline(bytes.fromhex(d["data"]))
    if kind == "encrypted":
        return Encrypted(bytes.fromhex(d["ciphertext"]), d.get("key_hint", ""))
    if kind == "anchor":
        return Anchor(bytes.fromhex(d["digest"]))
    views = {k: merkle.TearOffView.decode(bytes.fromhex(v)) for k, v in d.get("views", {}).items()}
    return TearOff(bytes.fromhex(d["root"]), views)


def tx_from_json(d: dict) -> Transaction:
    return Transaction(
        bytes.fromhex(d["id"]),
        d["group"],
        tuple(bytes.fromhex(p) for p in d["participants"]),
        payload_from_json(d["payload"]),
        tuple(AssetRef(bytes.fromhex(t), i) for t, i in d["inputs"]),
        tuple(Output(bytes.fromhex(o), bytes.fromhex(v)) for o, v in d["outputs"]),
        d["contract"],
        {bytes.fromhex(k): bytes.fromhex(v) for k, v in d["signatures"].items()},
    )
