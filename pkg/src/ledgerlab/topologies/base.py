"""Shared machinery for the three ledger architectures."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..auditor import Auditor, ContentClass, ContractLogic
from ..crypto import (
    KEY_LEN,
    KeyPair,
    NonceCounter,
    aead_open,
    aead_seal,
    keygen,
    seed_from_label,
    shared_key,
)
from ..crypto import DecryptionFailed
from ..identity import Certificate, CertificateAuthority
from ..ledger import (
    AssetRef,
    Contract,
    ExecutionMode,
    Ledger,
    Output,
    PrivateDataStore,
    Reason,
    Rejection,
    Transaction,
    sign_transaction,
    validate,
)
from ..netsim import (
    Actor,
    ActorId,
    Envelope,
    MembershipNotice,
    Party,
    PrivatePayload,
    Role,
    Sealed,
    SimConfig,
    Simulation,
    tx_facts,
)


class Support(enum.Enum):
    Native = "native"
    Implementable = "implementable"
    RequiresRewrite = "requires-rewrite"
    NotApplicable = "n/a"


MECHANISMS = (
    "Separation of ledgers",
    "One-time public key",
    "Off-chain peer data",
    "Symmetric keys",
    "Merkle trees and tear-offs",
    "Install contract on involved nodes",
    "Off-chain execution engine",
)


class LedgerScope(enum.Enum):
    SharedChannel = "SharedChannel"
    PairwisePerTx = "PairwisePerTx"
    GlobalWithPrivateState = "GlobalWithPrivateState"


class Lookup(enum.Enum):
    Absent = "Absent"
    Undecryptable = "Undecryptable"


ABSENT = Lookup.Absent
UNDECRYPTABLE = Lookup.Undecryptable


@dataclass(frozen=True)
class GroupDescriptor:
    id: str
    members: tuple[str, ...]
    scope: LedgerScope


@dataclass(frozen=True)
class BothCommitted:
    first: bytes
    second: bytes


@dataclass(frozen=True)
class SecondRejected:
    first: bytes
    reason: Reason


DEFAULT_CONTRACT = Contract("asset", signers="participants", predicate="conserve-count")


class PartyNode(Party):
    """A party's node. Message handling is delegated to the owning platform."""

    def __init__(self, name: str, keypair: KeyPair, platform: "Platform"):
        super().__init__(name, keypair)
        self.platform = platform
        self.ledgers: dict[str, Ledger] = {}
        self.store = PrivateDataStore()
        self.certs: dict[bytes, Certificate] = {}

    def handle(self, env: Envelope) -> None:
        body = env.body
        if isinstance(body, PrivatePayload) and isinstance(body.content, tuple):
            for cert in body.content:
                if isinstance(cert, Certificate):
                    self.certs[cert.subject_public] = cert
        self.platform.on_party_message(self, env)


class Platform:
    """Common interface: register parties, form groups, deploy contracts,
    submit transactions, query state. Subclasses fix the distribution rules."""

    kind = "base"
    scope = LedgerScope.SharedChannel
    CAPABILITIES: dict[str, Support] = {}

    def __init__(self, config: SimConfig = SimConfig(), audit: Auditor | None = None):
        self.config = config
        self.audit = audit if audit is not None else Auditor()
        self.sim = Simulation(config, audit=self.audit)
        self.sim.hooks.append(self._on_delivery)
        self.ca = CertificateAuthority(keygen(seed_from_label("ca")))
        self.ca_node = self.sim.add(Actor(ActorId(Role.CA, "ca")))
        self.parties: dict[str, PartyNode] = {}
        self.certs: dict[str, Certificate] = {}
        self.groups: dict[str, GroupDescriptor] = {}
        self.contracts: dict[str, Contract] = {DEFAULT_CONTRACT.id: DEFAULT_CONTRACT}
        self.installs: dict[str, set[str]] = {}
        self.owners: dict[bytes, str] = {}
        self.wallets: dict[bytes, KeyPair] = {}
        self.nonces = NonceCounter()
        self.verdicts: dict[bytes, dict[str, Rejection | None]] = {}

    # -- introspection

    @classmethod
    def capabilities(cls) -> dict[str, Support]:
        return dict(cls.CAPABILITIES)

    # -- membership

    def register(self, *names: str) -> None:
        for name in names:
            kp = keygen(seed_from_label("party/" + name))
            self.certs[name] = self.ca.issue(name, kp.public)
            node = PartyNode(name, kp, self)
            self.sim.add(node)
            self.parties[name] = node
            self.owners[kp.public] = name
            self.wallets[kp.public] = kp

    def party(self, name: str) -> PartyNode:
        try:
            return self.parties[name]
        except KeyError:
            raise KeyError("unknown party %r" % name) from None

    def public(self, name: str) -> bytes:
        return self.party(name).keypair.public

    def _check_members(self, members: Sequence[str]) -> tuple[str, ...]:
        members = tuple(dict.fromkeys(members))
        if not members:
            raise ValueError("a group needs at least one member")
        for m in members:
            self.party(m)
        return members

    def create_group(self, name: str, members: Sequence[str]) -> GroupDescriptor:
        if name in self.groups:
            raise ValueError("group %r already exists" % name)
        desc = GroupDescriptor(name, self._check_members(members), self.scope)
        self.groups[name] = desc
        self._form_group(desc)
        self.sim.run_to_idle()
        return desc

    def _form_group(self, desc: GroupDescriptor) -> None:
        pass

    def _announce(self, desc: GroupDescriptor, recipients: Iterable[ActorId]) -> None:
        certs = tuple(self.certs[m] for m in desc.members)
        for to in recipients:
            self.sim.send(Envelope(self.ca_node.id, to, PrivatePayload(None, MembershipNotice(desc.id, desc.members))))
            self.sim.send(Envelope(self.ca_node.id, to, PrivatePayload(None, certs)))

    # -- contracts

    def deploy_contract(self, group: str | None, contract: Contract,
                        install_set: Sequence[str]) -> str:
        install_set = tuple(dict.fromkeys(install_set))
        allowed = self._install_scope(group)
        for actor in install_set:
            self.party(actor)
            if allowed is not None and actor not in allowed:
                raise ValueError("installer %r is outside group %r" % (actor, group))
        current = self.contracts.get(contract.id)
        if current is not None and current is not DEFAULT_CONTRACT and contract.version <= current.version:
            raise ValueError("contract %r already at version %d" % (contract.id, current.version))
        self.contracts[contract.id] = contract
        if contract.mode is ExecutionMode.OffChainEngine:
            self.installs[contract.id] = set()
            return contract.id
        self.installs[contract.id] = set(install_set)
        if install_set:
            deployer = self.party(install_set[0])
            self.sim.record(deployer.name, ContractLogic(contract.id, contract.version))
            for actor in install_set[1:]:
                self.sim.send(Envelope(deployer.id, self.party(actor).id, PrivatePayload(None, contract)))
            self.sim.run_to_idle()
        return contract.id

    def _install_scope(self, group: str | None) -> set[str] | None:
        if group is None:
            raise ValueError("this topology deploys contracts into a group")
        return set(self.group(group).members)

    def group(self, name: str) -> GroupDescriptor:
        try:
            return self.groups[name]
        except KeyError:
            raise KeyError("unknown group %r" % name) from None

    def has_code(self, actor: str, contract_id: str) -> bool:
        return actor in self.installs.get(contract_id, ())

    def validate_as(self, actor: str, tx: Transaction, ledger: Ledger, tolerate_invisible: bool = False):
        visible = None
        if not tolerate_invisible:
            # every input is treated as visible, so unknown ones are rejected
            visible = lambda ref: True  # noqa: E731
        return validate(tx, ledger.state, self.contracts, visible=visible,
                        has_code=self.has_code(actor, tx.contract))

    # -- keys and signing

    def owner_key(self, name: str) -> bytes:
        """Key that will own a new output for ``name``."""
        return self.public(name)

    def sign_all(self, tx: Transaction) -> Transaction:
        for pk in tx.participants:
            tx = sign_transaction(tx, self.wallets[pk])
        return tx

    def name_of(self, public: bytes) -> str:
        return self.owners[public]

    # -- sealing for symmetric-key distribution

    def seal(self, plaintext: bytes, recipients: Sequence[bytes], aad: bytes) -> Sealed:
        material = self.sim.material
        key = material.randbytes(KEY_LEN)
        nonce = self.nonces.next()
        ciphertext = aead_seal(key, nonce, plaintext, aad)
        envelopes = []
        for pk in recipients:
            eph = keygen(material.randbytes(32))
            wrap_nonce = self.nonces.next()
            wrapped = aead_seal(shared_key(eph.secret, pk), wrap_nonce, key, aad)
            envelopes.append((pk, eph.public, wrap_nonce, wrapped))
        return Sealed(ciphertext, nonce, tuple(envelopes))

    @staticmethod
    def unseal(sealed: Sealed, keypair: KeyPair, aad: bytes) -> bytes | None:
        for pk, eph_public, wrap_nonce, wrapped in sealed.envelopes:
            if pk != keypair.public:
                continue
            try:
                key = aead_open(shared_key(keypair.secret, eph_public), wrap_nonce, wrapped, aad)
                return aead_open(key, sealed.nonce, sealed.ciphertext, aad)
            except DecryptionFailed:
                return None
        return None

    # -- distribution bookkeeping

    def _on_delivery(self, env: Envelope) -> None:
        for tx_key, content in self.classify(env):
            self.audit.record_distribution(tx_key, env.to.name, content)

    def classify(self, env: Envelope) -> list[tuple[bytes, ContentClass]]:
        return []

    def expect(self, tx_key: bytes, table: dict[str, ContentClass]) -> None:
        self.audit.expect_distribution(tx_key, {a: c for a, c in table.items() if c is not ContentClass.Nothing})

    def held(self, tx_key: bytes, actor: str, content: ContentClass = ContentClass.Full) -> None:
        """The actor holds the content without a delivery (it authored it)."""
        self.audit.record_distribution(tx_key, actor, content)

    def authored(self, name: str, tx: Transaction, body: bytes | None = None) -> None:
        """The submitter knows everything about its own transaction."""
        self.audit.register_tx(tx.id, tx.group)
        for fact in tx_facts(tx, body):
            self.sim.record(name, fact)
        self.held(tx.id, name)

    def verdict(self, tx_id: bytes, actor: str, rejection: Rejection | None) -> None:
        self.verdicts.setdefault(tx_id, {})[actor] = rejection

    def outcome(self, tx_id: bytes) -> bytes:
        verdicts = self.verdicts.get(tx_id, {})
        for actor in sorted(verdicts):
            if verdicts[actor] is not None:
                raise verdicts[actor]
        return tx_id

    def on_party_message(self, node: PartyNode, env: Envelope) -> None:
        pass

    # -- assets

    def ledgers_of(self, name: str) -> list[Ledger]:
        return list(self.party(name).ledgers.values())

    def find_output(self, name: str, ref: AssetRef) -> Output | None:
        for ledger in self.ledgers_of(name):
            tx = ledger.txs.get(ref.tx_id)
            if tx is not None and ref.index < len(tx.outputs):
                return tx.outputs[ref.index]
        return None

    def query_state(self, name: str, ref: AssetRef):
        out = self.find_output(name, ref)
        return out.value if out is not None else ABSENT

    def group_of(self, name: str, ref: AssetRef) -> str | None:
        for ledger in self.ledgers_of(name):
            tx = ledger.txs.get(ref.tx_id)
            if tx is not None:
                return tx.group
        return None

    def ownership(self) -> dict[str, str]:
        """Asset value -> owning party, each party speaking only for its own keys."""
        owned: dict[str, str] = {}
        for name in sorted(self.parties):
            for ledger in self.ledgers_of(name):
                for out in ledger.state.unspent.values():
                    if self.owners.get(out.owner) == name:
                        owned[out.value.decode(errors="replace")] = name
        return dict(sorted(owned.items()))

    def issue(self, owner: str, value: bytes, group: str | None = None, body: bytes = b"",
              contract: str = "asset", **opts) -> AssetRef:
        raise NotImplementedError

    def transfer(self, sender: str, ref: AssetRef, receiver: str, group: str | None = None,
                 body: bytes = b"", contract: str = "asset", **opts) -> bytes:
        raise NotImplementedError

    def attempt_double_spend(self, owner: str, ref: AssetRef, receiver1: str, receiver2: str,
                             group: str | None = None, **opts):
        if self.find_output(owner, ref) is None:
            raise KeyError("unknown asset %s for %r" % (ref, owner))
        first = self.transfer(owner, ref, receiver1, group=group, body=b"spend to " + receiver1.encode(), **opts)
        try:
            second = self.transfer(owner, ref, receiver2, group=group,
                                   body=b"spend to " + receiver2.encode(), **opts)
        except Rejection as exc:
            return SecondRejected(first, exc.reason)
        return BothCommitted(first, second)

    def purge(self, name: str, digest: bytes) -> None:
        self.party(name).store.purge(digest)

    def dump_ledgers(self) -> str:
        out = []
        for name in sorted(self.parties):
            for key in sorted(self.parties[name].ledgers):
                out.append(self.parties[name].ledgers[key].dump())
        return "".join(out)
