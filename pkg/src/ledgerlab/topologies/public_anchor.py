"""One global chain of hash markers plus per-node private state.

Private transactions travel encrypted through a transaction manager; every
node receives a public marker naming the participants and committing to the
private transaction id. Receivers validate against their own private state,
so inputs they never saw are accepted with a NotVisible warning.
"""

from __future__ import annotations

import json

from ..auditor import ContentClass
from ..ledger import (
    Anchor,
    AssetRef,
    Inline,
    Ledger,
    Rejection,
    Transaction,
    make_transaction,
    tx_from_json,
    tx_to_json,
)
from ..netsim import (
    Actor,
    ActorId,
    Envelope,
    PrivatePayload,
    Role,
    Sealed,
    SimConfig,
    TxDistribution,
    tx_facts,
)
from .base import ABSENT, UNDECRYPTABLE, GroupDescriptor, LedgerScope, PartyNode, Platform, Support

PUBLIC = "public"
PRIVATE = "private"
MARKER_GROUP = "global"


class TxManager(Actor):
    """Relays sealed private transactions to the recipients named in their envelopes."""

    def __init__(self, platform: "PublicAnchor", name: str = "txmanager"):
        super().__init__(ActorId(Role.TxManager, name))
        self.platform = platform

    def handle(self, env: Envelope) -> None:
        body = env.body
        if not (isinstance(body, PrivatePayload) and isinstance(body.content, Sealed)):
            return
        for recipient in dict.fromkeys(e[0] for e in body.content.envelopes):
            name = self.platform.owners.get(recipient)
            if name is not None and name != env.frm.name:
                self.sim.send(Envelope(self.id, self.platform.party(name).id, body))


class PublicAnchor(Platform):
    kind = "public-anchor"
    scope = LedgerScope.GlobalWithPrivateState
    CAPABILITIES = {
        "Separation of ledgers": Support.Native,
        "One-time public key": Support.Implementable,
        "Off-chain peer data": Support.RequiresRewrite,
        "Symmetric keys": Support.Native,
        "Merkle trees and tear-offs": Support.RequiresRewrite,
        "Install contract on involved nodes": Support.Native,
        "Off-chain execution engine": Support.RequiresRewrite,
    }

    def __init__(self, config: SimConfig = SimConfig(), audit=None):
        super().__init__(config, audit)
        self.txmanager = self.sim.add(TxManager(self))

    def register(self, *names: str) -> None:
        super().register(*names)
        for name in names:
            node = self.party(name)
            node.ledgers[PUBLIC] = Ledger("%s/%s" % (name, PUBLIC))
            node.ledgers[PRIVATE] = Ledger("%s/%s" % (name, PRIVATE))

    def _form_group(self, desc: GroupDescriptor) -> None:
        # the single global ledger makes membership visible to every node
        self._announce(desc, [self.parties[n].id for n in sorted(self.parties)])

    def ledgers_of(self, name: str) -> list[Ledger]:
        return [self.party(name).ledgers[PRIVATE]]

    # -- building

    def issue(self, owner, value, group=None, body=b"", contract="asset") -> AssetRef:
        if group is None:
            raise ValueError("issuance needs a group")
        self.group(group)
        key = self.owner_key(owner)
        tx = self.sign_all(make_transaction(group, [key], Inline(body), [], [(key, value)], contract))
        return AssetRef(self.submit(tx, submitter=owner), 0)

    def transfer(self, sender, ref, receiver, group=None, body=b"", contract="asset") -> bytes:
        out = self.find_output(sender, ref)
        if out is None:
            raise KeyError("unknown asset %s for %r" % (ref, sender))
        group = group or self.group_of(sender, ref)
        new = self.owner_key(receiver)
        tx = self.sign_all(make_transaction(group, [out.owner, new], Inline(body), [ref],
                                            [(new, out.value)], contract))
        return self.submit(tx, submitter=sender)

    @staticmethod
    def marker_for(tx: Transaction) -> Transaction:
        return make_transaction(MARKER_GROUP, tx.participants, Anchor(tx.id), contract="marker")

    # -- submission

    def submit(self, tx: Transaction, submitter: str | None = None) -> bytes:
        submitter = submitter or self.name_of(tx.participants[0])
        node = self.party(submitter)
        self.authored(submitter, tx)
        recipients = list(dict.fromkeys(tx.participants))
        sealed = self.seal(json.dumps(tx_to_json(tx), sort_keys=True).encode(), recipients, tx.id)
        self.sim.send(Envelope(node.id, self.txmanager.id, PrivatePayload(tx.id, sealed)))

        marker = self.marker_for(tx)
        self.audit.register_tx(marker.id, tx.group)
        node.ledgers[PUBLIC].append([marker])
        for fact in TxDistribution(marker, ContentClass.HashOnly).facts():
            self.sim.record(submitter, fact)
        for name in sorted(self.parties):
            if name != submitter:
                self.sim.send(Envelope(node.id, self.parties[name].id,
                                       TxDistribution(marker, ContentClass.HashOnly)))
        self.sim.run_to_idle()
        tx_id = self.outcome(tx.id)
        # the submitting node's private state is not consulted: only receivers validate
        node.ledgers[PRIVATE].append([tx])
        self.audit.record_commit(self.sim.delivered, tx.id, tx.inputs, submitter)

        involved = {self.name_of(p) for p in recipients}
        table = {n: (ContentClass.Full if n in involved else ContentClass.HashOnly) for n in self.parties}
        table[self.txmanager.name] = ContentClass.EncryptedOnly
        self.expect(tx.id, table)
        return tx_id

    def on_party_message(self, node: PartyNode, env: Envelope) -> None:
        body = env.body
        if isinstance(body, TxDistribution):
            node.ledgers[PUBLIC].append([body.tx])
        elif isinstance(body, PrivatePayload) and isinstance(body.content, Sealed):
            plaintext = self.unseal(body.content, node.keypair, body.tx_id)
            if plaintext is None:
                return
            tx = tx_from_json(json.loads(plaintext))
            if tx.id != body.tx_id:
                return
            for fact in tx_facts(tx):
                self.sim.record(node.name, fact, via_decryption=True)
            self.held(tx.id, node.name)
            private = node.ledgers[PRIVATE]
            try:
                self.validate_as(node.name, tx, private, tolerate_invisible=True)
            except Rejection as exc:
                self.verdict(tx.id, node.name, exc)
                return
            private.append([tx])
            self.audit.register_tx(tx.id, tx.group)
            self.audit.record_commit(self.sim.delivered, tx.id, tx.inputs, node.name)
            self.verdict(tx.id, node.name, None)

    def classify(self, env: Envelope):
        body = env.body
        if isinstance(body, TxDistribution) and isinstance(body.tx.payload, Anchor):
            return [(body.tx.payload.digest, ContentClass.HashOnly)]
        if isinstance(body, PrivatePayload) and isinstance(body.content, Sealed):
            return [(body.tx_id, ContentClass.EncryptedOnly)]
        return []

    def query_state(self, name: str, ref: AssetRef):
        out = self.find_output(name, ref)
        if out is not None:
            return out.value
        for marker in self.party(name).ledgers[PUBLIC].txs.values():
            if isinstance(marker.payload, Anchor) and marker.payload.digest == ref.tx_id:
                return UNDECRYPTABLE
        return ABSENT
