"""Knowledge tracking and privacy policy checks.

Every actor accumulates a set of typed facts as messages are delivered to it.
Policies forbid fact patterns for sets of actors; ``check`` turns the log
into a deterministic report.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, fields as dc_fields
from typing import Iterable, Mapping, Sequence

from .ledger import AssetRef


# -- facts --------------------------------------------------------------------

class Fact:
    """Base for immutable knowledge items. Subclasses are frozen dataclasses."""

    @property
    def type(self) -> str:
        return type(self).__name__

    def field_values(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}

    def to_json(self) -> dict:
        return {"type": self.type, **{k: _jsonable(v) for k, v in self.field_values().items()}}

    def sort_key(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _jsonable(v):
    if isinstance(v, bytes):
        return v.hex()
    if isinstance(v, AssetRef):
        return [v.tx_id.hex(), v.index]
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(frozen=True)
class PartyIdentity(Fact):
    public: bytes
    name: str


@dataclass(frozen=True)
class GroupMembership(Fact):
    group: str
    actor: str


@dataclass(frozen=True)
class TxExistence(Fact):
    tx_id: bytes


@dataclass(frozen=True)
class TxParticipants(Fact):
    tx_id: bytes
    participants: tuple[bytes, ...]


@dataclass(frozen=True)
class TxPayload(Fact):
    tx_id: bytes
    payload_hash: bytes


@dataclass(frozen=True)
class PayloadDigest(Fact):
    """The actor holds a digest committing to the payload, not the payload."""
    tx_id: bytes
    digest: bytes


@dataclass(frozen=True)
class ContractLogic(Fact):
    contract_id: str
    version: int


@dataclass(frozen=True)
class InputRef(Fact):
    tx_id: bytes
    refs: tuple[AssetRef, ...]


@dataclass(frozen=True)
class KeyLinkage(Fact):
    one_time: bytes
    long_term: bytes


FACT_TYPES = {cls.__name__: cls for cls in (
    PartyIdentity, GroupMembership, TxExistence, TxParticipants, TxPayload,
    PayloadDigest, ContractLogic, InputRef, KeyLinkage)}

TX_FACTS = (TxExistence, TxParticipants, TxPayload, PayloadDigest, InputRef)


# -- distribution records ---------------------------------------------------------

class ContentClass(enum.IntEnum):
    Nothing = 0
    HashOnly = 1
    EncryptedOnly = 2
    TearOffView = 3
    Full = 4


@dataclass
class DistributionRecord:
    tx_id: bytes
    received: dict[str, ContentClass] = field(default_factory=dict)

    def note(self, actor: str, content: ContentClass) -> None:
        if content > self.received.get(actor, ContentClass.Nothing):
            self.received[actor] = content


# -- policies -----------------------------------------------------------------

@dataclass(frozen=True)
class Policy:
    """Forbid a fact pattern for a set of actors.

    ``pattern`` maps field names to required values; unspecified fields are
    wildcards. ``type`` selects the fact variant and ``group`` matches the
    group a transaction fact belongs to. ``actors=None`` quantifies over every
    actor. ``kind="no-double-spend"`` instead flags any asset reference
    consumed by two committed transactions.
    """
    name: str
    pattern: Mapping[str, object] = field(default_factory=dict)
    actors: tuple[str, ...] | None = None
    exempt: tuple[str, ...] = ()
    kind: str = "forbid"


@dataclass(frozen=True)
class Violation:
    policy: str
    actor: str
    fact: dict
    delivery_index: int

    def to_json(self) -> dict:
        return {"policy": self.policy, "actor": self.actor, "fact": self.fact,
                "delivery_index": self.delivery_index}


@dataclass
class AuditReport:
    scenario: str
    seed: int
    violations: list[Violation]
    totals: dict[str, int]
    matrix: dict[str, list[str]] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            **self.extra,
            "violations": [v.to_json() for v in self.violations],
            "totals": dict(sorted(self.totals.items())),
            "knowledge_matrix": dict(sorted(self.matrix.items())),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"


# -- auditor ------------------------------------------------------------------

class Auditor:
    def __init__(self):
        self._knowledge: dict[str, dict[Fact, int]] = {}
        self.log: list[tuple[int, str, Fact]] = []
        self.actors: list[str] = []
        self.tx_groups: dict[bytes, str] = {}
        self.commits: list[tuple[int, bytes, tuple[AssetRef, ...], str]] = []
        self.distribution: dict[bytes, DistributionRecord] = {}
        self.expected: dict[bytes, dict[str, ContentClass]] = {}
        self.admins: dict[str, list[tuple[str, bool]]] = {}
        self.notes: list[dict] = []

    def register_actor(self, actor: str) -> None:
        if actor not in self._knowledge:
            self._knowledge[actor] = {}
            self.actors.append(actor)

    def attach_admin(self, node: str, admin: str, sees_keys: bool = False) -> None:
        """Model a node administrator who sees whatever the node stores.

        With ``sees_keys=False`` payloads the node only obtained by decrypting
        with in-memory keys are withheld from the admin.
        """
        self.register_actor(admin)
        self.admins.setdefault(node, []).append((admin, sees_keys))
        for fact, idx in list(self._knowledge.get(node, {}).items()):
            self._store(admin, fact, idx)

    def record(self, actor: str, fact: Fact, delivery_index: int,
               via_decryption: bool = False) -> None:
        self.register_actor(actor)
        if isinstance(fact, TxPayload):
            self._store(actor, TxExistence(fact.tx_id), delivery_index)
        self._store(actor, fact, delivery_index)
        for admin, sees_keys in self.admins.get(actor, ()):
            if via_decryption and not sees_keys:
                continue
            self.record(admin, fact, delivery_index)

    def _store(self, actor: str, fact: Fact, idx: int) -> None:
        self.register_actor(actor)
        known = self._knowledge[actor]
        if fact not in known:
            known[fact] = idx
            self.log.append((idx, actor, fact))

    def knowledge(self, actor: str) -> frozenset:
        return frozenset(self._knowledge.get(actor, ()))

    def first_seen(self, actor: str, fact: Fact) -> int | None:
        return self._knowledge.get(actor, {}).get(fact)

    # metadata supplied by platforms

    def register_tx(self, tx_id: bytes, group: str) -> None:
        self.tx_groups.setdefault(tx_id, group)

    def record_commit(self, delivery_index: int, tx_id: bytes, inputs: Iterable[AssetRef],
                      by: str) -> None:
        self.commits.append((delivery_index, tx_id, tuple(inputs), by))

    def record_distribution(self, tx_id: bytes, actor: str, content: ContentClass) -> None:
        self.distribution.setdefault(tx_id, DistributionRecord(tx_id)).note(actor, content)

    def expect_distribution(self, tx_id: bytes, table: Mapping[str, ContentClass]) -> None:
        self.expected[tx_id] = dict(table)

    def note(self, **entry) -> None:
        self.notes.append(entry)

    # derivations

    def linkage_closure(self, actor: str) -> frozenset:
        """Knowledge plus PartyIdentity facts derived through KeyLinkage.

        The only rule: KeyLinkage(ot, lt) and PartyIdentity(lt, name) give
        PartyIdentity(ot, name). Applied to a fixpoint so chains resolve.
        """
        facts = set(self.knowledge(actor))
        links = [f for f in facts if isinstance(f, KeyLinkage)]
        while True:
            names: dict[bytes, set[str]] = {}
            for f in facts:
                if isinstance(f, PartyIdentity):
                    names.setdefault(f.public, set()).add(f.name)
            new = {PartyIdentity(link.one_time, name)
                   for link in links for name in names.get(link.long_term, ())}
            if new <= facts:
                return frozenset(facts)
            facts |= new

    # policy evaluation

    def matches(self, fact: Fact, pattern: Mapping[str, object]) -> bool:
        for key, want in pattern.items():
            if key == "type":
                if fact.type != want:
                    return False
            elif key == "group" and isinstance(fact, TX_FACTS):
                if self.tx_groups.get(fact.tx_id) != want:
                    return False
            else:
                if not hasattr(fact, key):
                    return False
                have = _jsonable(getattr(fact, key))
                want = _jsonable(want)
                if isinstance(have, list) and not isinstance(want, list):
                    if want not in have:
                        return False
                elif have != want:
                    return False
        return True

    def check(self, policies: Sequence[Policy], scenario: str = "", seed: int = 0,
              check_distribution: bool = False) -> AuditReport:
        violations: list[Violation] = []
        for order, policy in enumerate(policies):
            if policy.kind == "no-double-spend":
                violations.extend(self._double_spends(policy))
                continue
            actors = self.actors if policy.actors is None else policy.actors
            for actor in actors:
                if actor in policy.exempt:
                    continue
                for fact, idx in self._knowledge.get(actor, {}).items():
                    if self.matches(fact, policy.pattern):
                        violations.append(Violation(policy.name, actor, fact.to_json(), idx))
        if check_distribution:
            violations.extend(self._distribution_mismatches())
        violations.sort(key=lambda v: (v.delivery_index, v.policy, v.actor,
                                       json.dumps(v.fact, sort_keys=True)))
        totals: dict[str, int] = {}
        for _, _, fact in self.log:
            totals[fact.type] = totals.get(fact.type, 0) + 1
        matrix = {a: sorted({f.type for f in self._knowledge[a]}) for a in self.actors}
        return AuditReport(scenario, seed, violations, totals, matrix)

    def _double_spends(self, policy: Policy) -> list[Violation]:
        consumed: dict[AssetRef, bytes] = {}
        out = []
        for idx, tx_id, inputs, by in sorted(self.commits, key=lambda c: c[0]):
            for ref in inputs:
                first = consumed.setdefault(ref, tx_id)
                if first != tx_id:
                    fact = InputRef(tx_id, (ref,)).to_json()
                    fact["first_spend"] = first.hex()
                    out.append(Violation(policy.name, by, fact, idx))
        # several holders of the same ledger report the same commit; keep one per tx
        seen, unique = set(), []
        for v in out:
            key = (v.fact["tx_id"], tuple(map(tuple, v.fact["refs"])))
            if key not in seen:
                seen.add(key)
                unique.append(v)
        return unique

    def _distribution_mismatches(self) -> list[Violation]:
        out = []
        for tx_id, table in sorted(self.expected.items()):
            actual = self.distribution.get(tx_id, DistributionRecord(tx_id)).received
            for actor in sorted(set(table) | set(actual)):
                want = table.get(actor, ContentClass.Nothing)
                got = actual.get(actor, ContentClass.Nothing)
                if want != got:
                    out.append(Violation("visibility-table", actor,
                                         {"type": "Distribution", "tx_id": tx_id.hex(),
                                          "expected": want.name, "actual": got.name}, -1))
        return out

    def export_log(self) -> str:
        lines = []
        for idx, actor, fact in self.log:
            rec = {"delivery_index": idx, "actor": actor, "fact": fact.type,
                   "fields": fact.to_json()}
            rec["fields"].pop("type")
            lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")
