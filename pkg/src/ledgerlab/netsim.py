"""Deterministic in-process actor network.

Messages are queued FIFO per (sender, recipient) pair; which pair delivers
next is drawn from a seeded RNG. Each delivery is numbered and the facts it
conveys are recorded with the auditor before the recipient's handler runs.
"""

from __future__ import annotations

import enum
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from . import merkle
from .auditor import (
    Auditor,
    ContentClass,
    ContractLogic,
    Fact,
    GroupMembership,
    InputRef,
    KeyLinkage,
    PartyIdentity,
    PayloadDigest,
    TxExistence,
    TxParticipants,
    TxPayload,
)
from .crypto import KeyPair, sha256, sign
from .identity import Certificate, LinkingCertificate
from .ledger import (
    Anchor,
    AssetRef,
    Contract,
    Inline,
    LeafLayout,
    Reason,
    Rejection,
    TearOff,
    Transaction,
    strip_leaf,
)


class Role(enum.Enum):
    Party = "Party"
    Orderer = "Orderer"
    Notary = "Notary"
    TxManager = "TxManager"
    CA = "CA"


class ActorId(NamedTuple):
    role: Role
    name: str

    def __str__(self):
        return self.name


class OrdererMode(enum.Enum):
    SharedThirdParty = "SharedThirdParty"
    MemberRun = "MemberRun"


class NotaryMode(enum.Enum):
    Validating = "Validating"
    NonValidating = "NonValidating"


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    orderer_mode: OrdererMode = OrdererMode.SharedThirdParty
    notary_mode: NotaryMode = NotaryMode.NonValidating


# -- fact derivation ------------------------------------------------------------

def tx_facts(tx: Transaction, body: bytes | None = None) -> list[Fact]:
    """Facts conveyed by a whole transaction (plus its plaintext body, if any)."""
    out: list[Fact] = [TxExistence(tx.id), TxParticipants(tx.id, tx.participants)]
    if tx.inputs:
        out.append(InputRef(tx.id, tx.inputs))
    p = tx.payload
    if isinstance(p, Inline):
        body = p.data
    elif isinstance(p, Anchor):
        out.append(PayloadDigest(tx.id, p.digest))
    elif isinstance(p, TearOff):
        out.append(PayloadDigest(tx.id, p.root))
    if body is not None:
        out.append(TxPayload(tx.id, sha256(body)))
    return out


def view_facts(tx_id: bytes, view: merkle.TearOffView, layout: LeafLayout) -> list[Fact]:
    """Facts conveyed by a tear-off view: the root plus whatever leaves are revealed."""
    out: list[Fact] = [TxExistence(tx_id), PayloadDigest(tx_id, merkle.recompute(view))]
    revealed = {layout.role(i): [] for i in view.revealed}
    for i in sorted(view.revealed):
        revealed[layout.role(i)].append(strip_leaf(view.revealed[i]))
    if "participant" in revealed:
        out.append(TxParticipants(tx_id, tuple(revealed["participant"])))
    if "input" in revealed:
        out.append(InputRef(tx_id, tuple(_decode_ref(b) for b in revealed["input"])))
    if "body" in revealed:
        out.append(TxPayload(tx_id, sha256(revealed["body"][0])))
    return out


def _decode_ref(data: bytes) -> AssetRef:
    from .encoding import Reader
    r = Reader(data)
    tx_id = r.field()
    index = int.from_bytes(r.field(), "big")
    return AssetRef(tx_id, index)


# -- message bodies ---------------------------------------------------------------

@dataclass(frozen=True)
class TxProposal:
    """A tear-off view sent for signing (oracle or filtered notarisation)."""
    tx_id: bytes
    view: merkle.TearOffView
    layout: LeafLayout
    purpose: str = "sign"

    content = ContentClass.TearOffView

    def facts(self) -> list[Fact]:
        return view_facts(self.tx_id, self.view, self.layout)


@dataclass(frozen=True)
class TxDistribution:
    tx: Transaction
    content: ContentClass = ContentClass.Full
    body: bytes | None = None
    links: tuple[LinkingCertificate, ...] = ()
    backchain: tuple[Transaction, ...] = ()

    def facts(self) -> list[Fact]:
        if self.content is ContentClass.HashOnly:
            out = [TxExistence(self.tx.id), TxParticipants(self.tx.id, self.tx.participants)]
            if isinstance(self.tx.payload, Anchor):
                out.append(PayloadDigest(self.tx.id, self.tx.payload.digest))
        else:
            out = tx_facts(self.tx, self.body)
        for prior in self.backchain:
            out.extend(tx_facts(prior))
        out.extend(KeyLinkage(l.one_time_public, l.long_term_public) for l in self.links)
        return out


@dataclass(frozen=True)
class OrderRequest:
    tx: Transaction
    group: str
    body: bytes | None = None


@dataclass(frozen=True)
class OrderedBatch:
    group: str
    txs: tuple[Transaction, ...]
    bodies: tuple[bytes | None, ...] = ()

    def facts(self) -> list[Fact]:
        out = []
        bodies = self.bodies or (None,) * len(self.txs)
        for tx, body in zip(self.txs, bodies):
            out.extend(tx_facts(tx, body))
        return out


@dataclass(frozen=True)
class NotarySignRequest:
    tx_id: bytes
    inputs: tuple[AssetRef, ...]
    tx: Transaction | None = None
    view: merkle.TearOffView | None = None
    layout: LeafLayout | None = None
    body: bytes | None = None


@dataclass(frozen=True)
class NotarySignature:
    tx_id: bytes
    notary_public: bytes = b""
    signature: bytes = b""
    rejection: Reason | None = None

    def facts(self) -> list[Fact]:
        return [TxExistence(self.tx_id)]


@dataclass(frozen=True)
class Sealed:
    """AEAD ciphertext plus per-recipient wrapped keys (recipient public -> (ephemeral public, nonce, wrapped key))."""
    ciphertext: bytes
    nonce: bytes
    envelopes: tuple[tuple[bytes, bytes, bytes, bytes], ...]


@dataclass(frozen=True)
class PrivatePayload:
    """Point-to-point delivery of non-ledger content.

    ``content`` is one of: OffChainData for ``tx_id``, Sealed, Contract,
    Certificate tuple, or a (group, members) membership notice.
    """
    tx_id: bytes | None
    content: object
    links: tuple[LinkingCertificate, ...] = ()

    def facts(self) -> list[Fact]:
        c = self.content
        out: list[Fact] = []
        if isinstance(c, OffChainData):
            out.append(TxPayload(self.tx_id, sha256(c.data)))
        elif isinstance(c, Sealed):
            out.append(TxExistence(self.tx_id))
        elif isinstance(c, Contract):
            out.append(ContractLogic(c.id, c.version))
        elif isinstance(c, tuple) and c and isinstance(c[0], Certificate):
            out.extend(PartyIdentity(cert.subject_public, cert.subject_name) for cert in c)
        elif isinstance(c, MembershipNotice):
            out.extend(GroupMembership(c.group, m) for m in c.members)
        out.extend(KeyLinkage(l.one_time_public, l.long_term_public) for l in self.links)
        return out


@dataclass(frozen=True)
class OffChainData:
    """Plaintext kept off the ledger, with the salt its on-ledger anchor commits to."""
    data: bytes
    salt: bytes = b""


@dataclass(frozen=True)
class MembershipNotice:
    group: str
    members: tuple[str, ...]


Body = (TxProposal | TxDistribution | OrderRequest | OrderedBatch
        | NotarySignRequest | NotarySignature | PrivatePayload)


@dataclass(frozen=True)
class Envelope:
    frm: ActorId
    to: ActorId
    body: Body


# -- actors -------------------------------------------------------------------------

class Actor:
    """Base actor: records the facts a message carries, then runs ``handle``."""

    def __init__(self, actor_id: ActorId):
        self.id = actor_id
        self.sim: Simulation | None = None

    @property
    def name(self) -> str:
        return self.id.name

    def observe(self, env: Envelope) -> list[tuple[str, Fact]]:
        facts = env.body.facts() if hasattr(env.body, "facts") else []
        return [(self.name, f) for f in facts]

    def handle(self, env: Envelope) -> None:
        pass


class Party(Actor):
    def __init__(self, name: str, keypair: KeyPair | None = None):
        super().__init__(ActorId(Role.Party, name))
        self.keypair = keypair


class Orderer(Actor):
    """Sequences transactions. In SharedThirdParty mode the orderer itself
    learns everything it orders; in MemberRun mode those observations are
    attributed to the operating member instead."""

    def __init__(self, name: str, mode: OrdererMode = OrdererMode.SharedThirdParty,
                 operator: str | None = None):
        super().__init__(ActorId(Role.Orderer, name))
        if mode is OrdererMode.MemberRun and not operator:
            raise ValueError("a member-run orderer needs an operator")
        self.mode = mode
        self.operator = operator
        self.arrivals = 0
        self.groups: dict[str, tuple[ActorId, ...]] = {}
        self.on_ordered = None

    @property
    def observer(self) -> str:
        return self.operator if self.mode is OrdererMode.MemberRun else self.name

    def order_facts(self, tx: Transaction, body: bytes | None) -> list[Fact]:
        return tx_facts(tx, body)

    def observe(self, env):
        body = env.body
        if isinstance(body, OrderRequest):
            return [(self.observer, f) for f in self.order_facts(body.tx, body.body)]
        return [(self.observer, f) for f in (body.facts() if hasattr(body, "facts") else [])]

    def order(self, batch: Sequence[tuple[int, Transaction]] | Sequence[Transaction],
              group: str = "", bodies: Sequence[bytes | None] | None = None) -> OrderedBatch:
        """Stable-sort a batch by arrival index and record what the orderer sees."""
        items = [b if isinstance(b, tuple) else (i, b) for i, b in enumerate(batch)]
        bodies = list(bodies) if bodies is not None else [None] * len(items)
        ranked = sorted(zip(items, bodies), key=lambda pair: pair[0][0])
        if self.sim is not None:
            for (_, tx), body in ranked:
                for f in self.order_facts(tx, body):
                    self.sim.record(self.observer, f)
        return OrderedBatch(group, tuple(tx for (_, tx), _ in ranked),
                            tuple(body for _, body in ranked))

    def handle(self, env):
        body = env.body
        if isinstance(body, OrderRequest):
            self.arrivals += 1
            batch = self.order([(self.arrivals, body.tx)], body.group, [body.body])
            if self.on_ordered is not None:
                self.on_ordered(self, batch)
            for member in self.groups.get(body.group, ()):
                self.sim.send(Envelope(self.id, member, batch))


class Notary(Actor):
    """Uniqueness service: signs a transaction iff none of its inputs was consumed before."""

    def __init__(self, name: str, keypair: KeyPair, mode: NotaryMode = NotaryMode.NonValidating):
        super().__init__(ActorId(Role.Notary, name))
        self.keypair = keypair
        self.mode = mode
        self.consumed: dict[AssetRef, bytes] = {}

    def request_facts(self, req: NotarySignRequest) -> list[Fact]:
        if self.mode is NotaryMode.Validating and req.tx is not None:
            return tx_facts(req.tx, req.body)
        if req.view is not None and req.layout is not None:
            return [f for f in view_facts(req.tx_id, req.view, req.layout)
                    if isinstance(f, (TxExistence, InputRef))]
        out: list[Fact] = [TxExistence(req.tx_id)]
        if req.inputs:
            out.append(InputRef(req.tx_id, tuple(req.inputs)))
        return out

    def observe(self, env):
        if isinstance(env.body, NotarySignRequest):
            return [(self.name, f) for f in self.request_facts(env.body)]
        return super().observe(env)

    def notarize(self, req: NotarySignRequest | Transaction) -> NotarySignature:
        if isinstance(req, Transaction):
            req = NotarySignRequest(req.id, req.inputs, tx=req)
        if self.sim is not None:
            for f in self.request_facts(req):
                self.sim.record(self.name, f)
        for ref in req.inputs:
            prior = self.consumed.get(ref)
            if prior is not None and prior != req.tx_id:
                raise Rejection(Reason.DoubleSpend, "input %s already consumed" % (ref,))
        for ref in req.inputs:
            self.consumed[ref] = req.tx_id
        return NotarySignature(req.tx_id, self.keypair.public, sign(self.keypair.secret, req.tx_id))

    def handle(self, env):
        if isinstance(env.body, NotarySignRequest):
            try:
                reply = self.notarize(env.body)
            except Rejection as exc:
                reply = NotarySignature(env.body.tx_id, self.keypair.public, b"", exc.reason)
            self.sim.send(Envelope(self.id, env.frm, reply))


# -- simulation ---------------------------------------------------------------------

class Idle:
    """Returned by ``step`` when no message is pending."""

    def __repr__(self):
        return "Idle"


IDLE = Idle()


class Simulation:
    def __init__(self, config: SimConfig, actors: Iterable[Actor] = (), audit: Auditor | None = None):
        self.config = config
        self.rng = random.Random(config.seed)
        # crypto material (salts, ephemeral keys) comes from its own stream so
        # scheduling choices never shift it
        self.material = random.Random(config.seed ^ 0x5EED_5EED)
        self.audit = audit if audit is not None else Auditor()
        self.actors: dict[ActorId, Actor] = {}
        self._names: dict[str, ActorId] = {}
        self.queues: dict[tuple[ActorId, ActorId], deque] = {}
        self.delivered = 0
        self.dead_letters: list[tuple[int, Envelope]] = []
        self.trace: list[tuple[int, str, str, str]] = []
        self.hooks: list = []
        for actor in actors:
            self.add(actor)

    def add(self, actor: Actor) -> Actor:
        if actor.id in self.actors or actor.name in self._names:
            raise ValueError("duplicate actor id %s/%s" % (actor.id.role.value, actor.name))
        self.actors[actor.id] = actor
        self._names[actor.name] = actor.id
        actor.sim = self
        self.audit.register_actor(actor.name)
        return actor

    def actor(self, name: str) -> Actor:
        return self.actors[self._names[name]]

    def has(self, name: str) -> bool:
        return name in self._names

    def record(self, actor: str, fact: Fact, via_decryption: bool = False) -> None:
        self.audit.record(actor, fact, self.delivered, via_decryption)

    def send(self, env: Envelope) -> None:
        if env.to not in self.actors:
            self.dead_letters.append((self.delivered, env))
            self.audit.note(kind="dead-letter", delivery_index=self.delivered,
                            frm=env.frm.name, to=env.to.name, body=type(env.body).__name__)
            return
        self.queues.setdefault((env.frm, env.to), deque()).append(env)

    def pending(self) -> int:
        return sum(len(q) for q in self.queues.values())

    def step(self):
        ready = sorted((k for k, q in self.queues.items() if q),
                       key=lambda k: (k[0].role.value, k[0].name, k[1].role.value, k[1].name))
        if not ready:
            return IDLE
        key = ready[self.rng.randrange(len(ready))] if len(ready) > 1 else ready[0]
        env = self.queues[key].popleft()
        self.delivered += 1
        receiver = self.actors[env.to]
        for actor, fact in receiver.observe(env):
            self.record(actor, fact)
        self.trace.append((self.delivered, env.frm.name, env.to.name, type(env.body).__name__))
        for hook in self.hooks:
            hook(env)
        receiver.handle(env)
        return env

    def run_to_idle(self, limit: int = 1_000_000) -> int:
        count = 0
        while self.step() is not IDLE:
            count += 1
            if count >= limit:
                raise RuntimeError("simulation did not become idle")
        return count

    def state_digest(self) -> bytes:
        """Digest over actors, queue contents and delivery count."""
        state = {
            "seed": self.config.seed,
            "actors": sorted([a.role.value, a.name] for a in self.actors),
            "pending": sorted([k[0].name, k[1].name, len(q)] for k, q in self.queues.items()),
            "delivered": self.delivered,
        }
        return sha256(json.dumps(state, sort_keys=True).encode())


def spawn(config: SimConfig, actors: Iterable[Actor], audit: Auditor | None = None) -> Simulation:
    return Simulation(config, actors, audit)
