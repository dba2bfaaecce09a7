"""Channel-per-group ledgers with an ordering service and optional
private data collections (anchored payloads shared with a sub-group)."""

from __future__ import annotations

from typing import Sequence

from ..auditor import ContentClass, TxPayload
from ..crypto import sha256
from ..ledger import (
    Anchor,
    AssetRef,
    Encrypted,
    Inline,
    Ledger,
    Rejection,
    Transaction,
    make_transaction,
)
from ..netsim import (
    Envelope,
    OrderedBatch,
    Orderer,
    OrdererMode,
    OffChainData,
    OrderRequest,
    PrivatePayload,
    Sealed,
    SimConfig,
)
from .base import GroupDescriptor, LedgerScope, PartyNode, Platform, Support

PAYLOAD_AAD = b"ledgerlab/payload"
ANCHOR_SALT_LEN = 16


def content_of(tx: Transaction) -> ContentClass:
    if isinstance(tx.payload, Inline):
        return ContentClass.Full
    if isinstance(tx.payload, Encrypted):
        return ContentClass.EncryptedOnly
    return ContentClass.HashOnly


class Channelized(Platform):
    kind = "channelized"
    scope = LedgerScope.SharedChannel
    CAPABILITIES = {
        "Separation of ledgers": Support.Native,
        "One-time public key": Support.RequiresRewrite,
        "Off-chain peer data": Support.Native,
        "Symmetric keys": Support.Native,
        "Merkle trees and tear-offs": Support.Implementable,
        "Install contract on involved nodes": Support.Native,
        "Off-chain execution engine": Support.Implementable,
    }

    def __init__(self, config: SimConfig = SimConfig(), audit=None):
        super().__init__(config, audit)
        self.orderers: dict[str, Orderer] = {}
        self.shared_orderer = None
        if config.orderer_mode is OrdererMode.SharedThirdParty:
            self.shared_orderer = self.sim.add(Orderer("orderer"))
        self._side: dict[bytes, tuple[str, object, tuple[str, ...]]] = {}

    def _form_group(self, desc: GroupDescriptor) -> None:
        for m in desc.members:
            self.party(m).ledgers[desc.id] = Ledger("%s/%s" % (m, desc.id))
        orderer = self.shared_orderer
        if orderer is None:
            orderer = self.sim.add(Orderer("orderer-" + desc.id, OrdererMode.MemberRun,
                                           operator=desc.members[0]))
        orderer.groups[desc.id] = tuple(self.party(m).id for m in desc.members)
        self.orderers[desc.id] = orderer
        self._announce(desc, [self.party(m).id for m in desc.members] + [orderer.id])

    # -- building

    def build(self, group: str, participants: Sequence[bytes], inputs, outputs, body: bytes,
              contract: str = "asset", mode: str = "inline",
              private_to: Sequence[str] = ()) -> Transaction:
        desc = self.group(group)
        participants = list(dict.fromkeys(participants))
        if mode == "inline":
            payload = Inline(body)
        elif mode == "anchor":
            if not private_to:
                raise ValueError("an anchored payload needs a private sub-group")
            for name in private_to:
                if name not in desc.members:
                    raise ValueError("%r is not a member of %r" % (name, group))
            # the collection's members are listed in the transaction
            participants += [self.public(n) for n in private_to if self.public(n) not in participants]
            side = OffChainData(body, self.sim.material.randbytes(ANCHOR_SALT_LEN))
            payload = Anchor(sha256(side.salt + side.data))
        elif mode == "encrypted":
            sealed = self.seal(body, participants, PAYLOAD_AAD)
            payload = Encrypted(sealed.ciphertext, sealed.nonce.hex())
        else:
            raise ValueError("unsupported payload mode %r" % mode)
        tx = self.sign_all(make_transaction(group, participants, payload, inputs, outputs, contract))
        if mode == "anchor":
            self._side[tx.id] = ("anchor", side, tuple(private_to))
        elif mode == "encrypted":
            self._side[tx.id] = ("encrypted", sealed, tuple(self.name_of(p) for p in participants))
        return tx

    def issue(self, owner, value, group=None, body=b"", contract="asset", mode="inline",
              private_to=()) -> AssetRef:
        if group is None:
            raise ValueError("channel issuance needs a group")
        key = self.owner_key(owner)
        tx = self.build(group, [key], [], [(key, value)], body, contract, mode, private_to)
        return AssetRef(self.submit(tx, submitter=owner, body=body), 0)

    def transfer(self, sender, ref, receiver, group=None, body=b"", contract="asset",
                 mode="inline", private_to=()) -> bytes:
        out = self.find_output(sender, ref)
        if out is None:
            raise KeyError("unknown asset %s for %r" % (ref, sender))
        group = group or self.group_of(sender, ref)
        new = self.owner_key(receiver)
        tx = self.build(group, [out.owner, new], [ref], [(new, out.value)], body, contract,
                        mode, private_to)
        return self.submit(tx, submitter=sender, body=body)

    # -- submission

    def submit(self, tx: Transaction, submitter: str | None = None, body: bytes | None = None) -> bytes:
        submitter = submitter or self.name_of(tx.participants[0])
        desc = self.group(tx.group)
        if submitter not in desc.members:
            raise ValueError("%r is not a member of %r" % (submitter, tx.group))
        node = self.party(submitter)
        self.authored(submitter, tx, body)
        kind, side, holders = self._side.pop(tx.id, (None, None, ()))
        if kind == "anchor":
            node.store.anchor(side.data, side.salt)
            for name in holders:
                if name != submitter:
                    self.sim.send(Envelope(node.id, self.party(name).id, PrivatePayload(tx.id, side)))
        elif kind == "encrypted":
            for name in holders:
                if name != submitter:
                    self.sim.send(Envelope(node.id, self.party(name).id, PrivatePayload(tx.id, side)))
        orderer = self.orderers[tx.group]
        self.sim.send(Envelope(node.id, orderer.id, OrderRequest(tx, tx.group)))
        self.sim.run_to_idle()
        tx_id = self.outcome(tx.id)

        base = content_of(tx)
        table = {m: base for m in desc.members}
        table[orderer.name] = base
        for name in holders:
            table[name] = ContentClass.Full
        table[submitter] = ContentClass.Full
        self.expect(tx.id, table)
        return tx_id

    def on_party_message(self, node: PartyNode, env: Envelope) -> None:
        body = env.body
        if isinstance(body, OrderedBatch):
            ledger = node.ledgers.get(body.group)
            if ledger is None:
                return
            accepted = []
            for tx in body.txs:
                try:
                    self.validate_as(node.name, tx, ledger)
                except Rejection as exc:
                    self.verdict(tx.id, node.name, exc)
                    continue
                accepted.append(tx)
                self.verdict(tx.id, node.name, None)
            if accepted:
                ledger.append(accepted)
                for tx in accepted:
                    self.audit.record_commit(self.sim.delivered, tx.id, tx.inputs, node.name)
        elif isinstance(body, PrivatePayload) and body.tx_id is not None:
            if isinstance(body.content, OffChainData):
                node.store.anchor(body.content.data, body.content.salt)
            elif isinstance(body.content, Sealed):
                plaintext = self.unseal(body.content, node.keypair, PAYLOAD_AAD)
                if plaintext is not None:
                    self.sim.record(node.name, TxPayload(body.tx_id, sha256(plaintext)), via_decryption=True)
                    self.held(body.tx_id, node.name)

    def classify(self, env: Envelope):
        body = env.body
        if isinstance(body, OrderRequest):
            return [(body.tx.id, content_of(body.tx))]
        if isinstance(body, OrderedBatch):
            return [(tx.id, content_of(tx)) for tx in body.txs]
        if isinstance(body, PrivatePayload) and body.tx_id is not None:
            if isinstance(body.content, OffChainData):
                return [(body.tx_id, ContentClass.Full)]
            if isinstance(body.content, Sealed):
                return [(body.tx_id, ContentClass.EncryptedOnly)]
        return []
