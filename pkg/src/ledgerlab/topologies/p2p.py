"""Point-to-point distribution: transactions go only to their participants,
a notary guards against double spends, and every transaction is a Merkle
tree so third parties can be shown tear-off views."""

from __future__ import annotations

from typing import Sequence

from .. import merkle
from ..auditor import ContentClass
from ..crypto import keygen, seed_from_label
from ..identity import LinkingCertificate
from ..ledger import (
    AssetRef,
    LeafLayout,
    Ledger,
    Rejection,
    Transaction,
    make_tearoff_transaction,
    sign_view,
)
from ..netsim import (
    Envelope,
    Notary,
    NotarySignature,
    NotarySignRequest,
    NotaryMode,
    PrivatePayload,
    SimConfig,
    TxDistribution,
    TxProposal,
)
from .base import LedgerScope, PartyNode, Platform, Support

VAULT = "vault"


class NotaryRejection(Rejection):
    pass


def reveal(tree: merkle.MerkleTree, layout: LeafLayout, roles: Sequence[str]) -> merkle.TearOffView:
    shown = {i for role in roles for i in layout.indices(role)}
    return merkle.tear_off(tree, [i for i in range(layout.count) if i not in shown])


class PointToPoint(Platform):
    kind = "p2p"
    scope = LedgerScope.PairwisePerTx
    CAPABILITIES = {
        "Separation of ledgers": Support.Native,
        "One-time public key": Support.Native,
        "Off-chain peer data": Support.Implementable,
        "Symmetric keys": Support.Native,
        "Merkle trees and tear-offs": Support.Native,
        "Install contract on involved nodes": Support.NotApplicable,
        "Off-chain execution engine": Support.Native,
    }

    def __init__(self, config: SimConfig = SimConfig(), audit=None, one_time_keys: bool = True):
        super().__init__(config, audit)
        self.one_time_keys = one_time_keys
        self.notary = self.sim.add(Notary("notary", keygen(seed_from_label("notary")), config.notary_mode))
        self.links: dict[bytes, LinkingCertificate] = {}
        self._next_index: dict[str, int] = {}
        self._notary_replies: dict[bytes, NotarySignature] = {}
        self._endorsements: dict[bytes, tuple[bytes, bytes]] = {}

    def register(self, *names: str) -> None:
        super().register(*names)
        for name in names:
            self.party(name).ledgers[VAULT] = Ledger("%s/%s" % (name, VAULT))

    def _install_scope(self, group):
        return None if group is None else set(self.group(group).members)

    def owner_key(self, name: str) -> bytes:
        if not self.one_time_keys:
            return self.public(name)
        index = self._next_index.get(name, 0)
        self._next_index[name] = index + 1
        kp, link = self.ca.derive_one_time(self.party(name).keypair, index)
        self.wallets[kp.public] = kp
        self.owners[kp.public] = name
        self.links[kp.public] = link
        return kp.public

    # -- building

    def issue(self, owner, value, group=None, body=b"", contract="asset", **opts) -> AssetRef:
        key = self.owner_key(owner)
        tx, tree = make_tearoff_transaction(group or "", [key], body, [], [(key, value)], contract)
        return AssetRef(self.submit(self.sign_all(tx), tree, body, submitter=owner, **opts), 0)

    def transfer(self, sender, ref, receiver, group=None, body=b"", contract="asset", **opts) -> bytes:
        out = self.find_output(sender, ref)
        if out is None or self.owners.get(out.owner) != sender:
            raise KeyError("%r does not hold %s" % (sender, ref))
        new = self.owner_key(receiver)
        tx, tree = make_tearoff_transaction(group or "", [out.owner, new], body, [ref],
                                            [(new, out.value)], contract)
        return self.submit(self.sign_all(tx), tree, body, submitter=sender, **opts)

    # -- submission

    def submit(self, tx: Transaction, tree: merkle.MerkleTree, body: bytes,
               submitter: str | None = None, oracle: str | None = None,
               oracle_reveal: Sequence[str] = ("body",)) -> bytes:
        submitter = submitter or self.name_of(tx.participants[0])
        node = self.party(submitter)
        layout = LeafLayout(len(tx.participants), len(tx.inputs), len(tx.outputs))
        self.authored(submitter, tx, body)
        others = [n for n in dict.fromkeys(self.name_of(p) for p in tx.participants) if n != submitter]

        # counterparties swap certificates and the links for their keys in this tx
        for name in others:
            for frm, to in ((submitter, name), (name, submitter)):
                links = tuple(self.links[p] for p in tx.participants
                              if p in self.links and self.owners[p] == frm)
                self.sim.send(Envelope(self.party(frm).id, self.party(to).id,
                                       PrivatePayload(None, (self.certs[frm],), links)))
        self.sim.run_to_idle()

        table = {n: ContentClass.Full for n in [submitter, *others]}
        if oracle is not None:
            view = reveal(tree, layout, oracle_reveal)
            self.sim.send(Envelope(node.id, self.party(oracle).id, TxProposal(tx.id, view, layout)))
            self.sim.run_to_idle()
            public, signature = self._endorsements.pop(tx.id)
            tx = tx.with_signature(public, signature)
            table[oracle] = ContentClass.TearOffView

        if tx.inputs:
            if self.notary.mode is NotaryMode.Validating:
                req = NotarySignRequest(tx.id, tx.inputs, tx=tx, body=body)
                table[self.notary.name] = ContentClass.Full
            else:
                req = NotarySignRequest(tx.id, tx.inputs, view=reveal(tree, layout, ["input"]), layout=layout)
                table[self.notary.name] = ContentClass.TearOffView
            self.sim.send(Envelope(node.id, self.notary.id, req))
            self.sim.run_to_idle()
            reply = self._notary_replies.pop(tx.id)
            if reply.rejection is not None:
                raise NotaryRejection(reply.rejection, "notary refused %s" % tx.id.hex()[:16])

        vault = node.ledgers[VAULT]
        backchain = self.backchain(vault, tx.inputs)
        for name in others:
            for prior in backchain:
                self._expect_at_least(prior.id, name, ContentClass.HashOnly)
            self.sim.send(Envelope(node.id, self.party(name).id,
                                   TxDistribution(tx, ContentClass.Full, body, backchain=backchain)))
        self.sim.run_to_idle()
        tx_id = self.outcome(tx.id)
        # the submitter's own vault is not consulted before notarisation; the
        # notary and the receivers are the validators
        vault.append([tx])
        self.audit.record_commit(self.sim.delivered, tx.id, tx.inputs, submitter)
        self.expect(tx.id, table)
        return tx_id

    def backchain(self, vault: Ledger, refs) -> tuple[Transaction, ...]:
        """Ancestors of ``refs`` in dependency order (oldest first)."""
        out: list[Transaction] = []
        seen: set[bytes] = set()

        def visit(tx_id: bytes) -> None:
            if tx_id in seen or tx_id not in vault.txs:
                return
            seen.add(tx_id)
            tx = vault.txs[tx_id]
            for ref in tx.inputs:
                visit(ref.tx_id)
            out.append(tx)

        for ref in refs:
            visit(ref.tx_id)
        return tuple(out)

    def _expect_at_least(self, tx_id: bytes, actor: str, content: ContentClass) -> None:
        table = self.audit.expected.setdefault(tx_id, {})
        if content > table.get(actor, ContentClass.Nothing):
            table[actor] = content

    def on_party_message(self, node: PartyNode, env: Envelope) -> None:
        body = env.body
        if isinstance(body, TxProposal):
            self._endorsements[body.tx_id] = (node.keypair.public, sign_view(body.view, node.keypair))
        elif isinstance(body, NotarySignature):
            self._notary_replies[body.tx_id] = body
        elif isinstance(body, TxDistribution):
            vault = node.ledgers[VAULT]
            try:
                for prior in body.backchain:
                    if prior.id not in vault.txs:
                        self.validate_as(node.name, prior, vault)
                        vault.append([prior])
                self.validate_as(node.name, body.tx, vault)
            except Rejection as exc:
                self.verdict(body.tx.id, node.name, exc)
                return
            vault.append([body.tx])
            self.audit.register_tx(body.tx.id, body.tx.group)
            self.audit.record_commit(self.sim.delivered, body.tx.id, body.tx.inputs, node.name)
            self.verdict(body.tx.id, node.name, None)

    def classify(self, env: Envelope):
        body = env.body
        if isinstance(body, NotarySignRequest):
            return [(body.tx_id, ContentClass.Full if body.tx is not None else ContentClass.TearOffView)]
        if isinstance(body, TxProposal):
            return [(body.tx_id, ContentClass.TearOffView)]
        if isinstance(body, TxDistribution):
            return [(body.tx.id, body.content)] + [(p.id, ContentClass.HashOnly) for p in body.backchain]
        return []
