"""Declarative scenario files and the runner that plays them on a platform.

A scenario is a JSON object::

    {
      "format": 1,
      "name": "demo",
      "topology": "channelized",            # default, overridable
      "config": {"orderer_mode": "SharedThirdParty", "notary_mode": "NonValidating",
                 "one_time_keys": true, "check_distribution": true},
      "parties": ["A", "B", "C"],
      "admins": {"A": {"name": "A-admin", "sees_keys": false}},
      "groups": {"G": ["A", "B"]},
      "contracts": [{"id": "loan", "group": "G", "install": ["A"], "version": 1,
                     "signers": "participants", "predicate": "conserve-count",
                     "mode": "on-node"}],
      "steps": [
        {"op": "issue", "as": "bond", "owner": "A", "value": "bond-1", "group": "G",
         "body": "terms", "options": {"channelized": {"mode": "anchor", "private_to": ["A"]}}},
        {"op": "transfer", "asset": "bond", "from": "A", "to": "B", "as": "bond"},
        {"op": "double_spend", "asset": "bond", "owner": "B", "to": ["A", "C"]},
        {"op": "purge", "party": "A", "asset": "bond"}
      ],
      "policies": [{"name": "outsiders", "forbid": {"type": "TxPayload", "group": "G"},
                    "actors": ["C"], "exempt": []},
                   {"name": "no double spend", "kind": "no-double-spend"}]
    }

``options`` holds per-topology keyword arguments for the step; keys for
other topologies are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .auditor import AuditReport, Policy
from .ledger import Anchor, AssetRef, Contract, ExecutionMode, Rejection
from .netsim import NotaryMode, OrdererMode, SimConfig
from .topologies import TOPOLOGIES, BothCommitted, Platform, make_platform

FORMAT = 1
STEP_OPS = ("issue", "transfer", "double_spend", "purge")


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    parties: list[str]
    groups: dict[str, list[str]] = field(default_factory=dict)
    contracts: list[dict] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)
    policies: list[Policy] = field(default_factory=list)
    topology: str = "channelized"
    config: dict = field(default_factory=dict)
    admins: dict[str, dict] = field(default_factory=dict)


def _policy(d: dict) -> Policy:
    if "name" not in d:
        raise ScenarioError("policy without a name")
    actors = d.get("actors")
    return Policy(d["name"], dict(d.get("forbid", {})),
                  tuple(actors) if actors is not None else None,
                  tuple(d.get("exempt", ())), d.get("kind", "forbid"))


def parse(data: dict) -> Scenario:
    if data.get("format") != FORMAT:
        raise ScenarioError("unsupported scenario format %r" % data.get("format"))
    for key in ("name", "parties", "steps"):
        if key not in data:
            raise ScenarioError("scenario is missing %r" % key)
    topology = data.get("topology", "channelized")
    if topology not in TOPOLOGIES:
        raise ScenarioError("unknown topology %r" % topology)
    for i, step in enumerate(data["steps"]):
        if step.get("op") not in STEP_OPS:
            raise ScenarioError("step %d: unknown op %r" % (i, step.get("op")))
    return Scenario(
        name=data["name"],
        parties=list(data["parties"]),
        groups={k: list(v) for k, v in data.get("groups", {}).items()},
        contracts=list(data.get("contracts", [])),
        steps=list(data["steps"]),
        policies=[_policy(p) for p in data.get("policies", [])],
        topology=topology,
        config=dict(data.get("config", {})),
        admins=dict(data.get("admins", {})),
    )


def load(path: str | Path) -> Scenario:
    """Load a scenario file; bare names fall back to the packaged scenarios."""
    path = Path(path)
    if path.exists():
        text = path.read_text()
    else:
        name = path.name if path.suffix else path.name + ".scenario"
        packaged = resources.files("ledgerlab").joinpath("scenarios", name)
        if not packaged.is_file():
            raise FileNotFoundError(str(path))
        text = packaged.read_text()
    try:
        return parse(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ScenarioError("%s: %s" % (path, exc)) from None


def packaged_scenarios() -> list[str]:
    root = resources.files("ledgerlab").joinpath("scenarios")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".scenario"))


@dataclass
class RunResult:
    scenario: Scenario
    platform: Platform
    report: AuditReport
    steps: list[dict]

    def report_json(self) -> str:
        return self.report.dumps()

    def ledger_dump(self) -> str:
        return self.platform.dump_ledgers()

    def audit_log(self) -> str:
        return self.platform.audit.export_log()


def build_platform(sc: Scenario, seed: int, topology: str | None = None) -> Platform:
    kind = topology or sc.topology
    cfg = sc.config
    config = SimConfig(seed=seed,
                       orderer_mode=OrdererMode(cfg.get("orderer_mode", "SharedThirdParty")),
                       notary_mode=NotaryMode(cfg.get("notary_mode", "NonValidating")))
    options = {}
    if kind == "p2p" and "one_time_keys" in cfg:
        options["one_time_keys"] = bool(cfg["one_time_keys"])
    platform = make_platform(kind, config, **options)
    platform.register(*sc.parties)
    for node, admin in sorted(sc.admins.items()):
        platform.audit.attach_admin(node, admin["name"], bool(admin.get("sees_keys", False)))
    for name, members in sc.groups.items():
        platform.create_group(name, members)
    for c in sc.contracts:
        contract = Contract(c["id"], int(c.get("version", 1)), c.get("signers", "participants"),
                            c.get("predicate", "conserve-count"), ExecutionMode(c.get("mode", "on-node")))
        platform.deploy_contract(c.get("group"), contract, c.get("install", []))
    return platform


def run(sc: Scenario, seed: int, topology: str | None = None) -> RunResult:
    platform = build_platform(sc, seed, topology)
    assets: dict[str, AssetRef] = {}
    results = []
    for i, step in enumerate(sc.steps):
        results.append(_play(platform, assets, i, step))
    report = platform.audit.check(sc.policies, sc.name, seed,
                                  check_distribution=bool(sc.config.get("check_distribution", True)))
    report.extra = {
        "topology": platform.kind,
        "steps": results,
        "ownership": platform.ownership(),
        "deliveries": platform.sim.delivered,
        "dead_letters": len(platform.sim.dead_letters),
    }
    return RunResult(sc, platform, report, results)


def _asset(assets: dict[str, AssetRef], step: dict, i: int) -> AssetRef:
    alias = step.get("asset")
    if alias not in assets:
        raise ScenarioError("step %d: unknown asset %r" % (i, alias))
    return assets[alias]


def _play(platform: Platform, assets: dict[str, AssetRef], i: int, step: dict) -> dict:
    op = step["op"]
    opts = dict(step.get("options", {}).get(platform.kind, {}))
    body = step.get("body", "").encode()
    contract = step.get("contract", "asset")
    result: dict = {"step": i, "op": op}
    try:
        if op == "issue":
            ref = platform.issue(step["owner"], step["value"].encode(), group=step.get("group"),
                                 body=body, contract=contract, **opts)
            assets[step.get("as", step["value"])] = ref
            result.update(outcome="committed", tx=ref.tx_id.hex())
        elif op == "transfer":
            ref = _asset(assets, step, i)
            tx_id = platform.transfer(step["from"], ref, step["to"], group=step.get("group"),
                                      body=body, contract=contract, **opts)
            assets[step.get("as", step["asset"])] = AssetRef(tx_id, 0)
            result.update(outcome="committed", tx=tx_id.hex())
        elif op == "double_spend":
            ref = _asset(assets, step, i)
            first, second = step["to"]
            out = platform.attempt_double_spend(step["owner"], ref, first, second,
                                                group=step.get("group"), **opts)
            if isinstance(out, BothCommitted):
                result.update(outcome="BothCommitted")
            else:
                result.update(outcome="SecondRejected", reason=out.reason.value)
        elif op == "purge":
            ref = _asset(assets, step, i)
            node = platform.party(step["party"])
            digest = _anchor_digest(platform, step["party"], ref)
            if digest is None:
                result.update(outcome="skipped", reason="no anchored payload under this topology")
                return result
            before = {k: led.head for k, led in node.ledgers.items()}
            platform.purge(step["party"], digest)
            after = {k: led.head for k, led in node.ledgers.items()}
            result.update(outcome="purged", retrievable=node.store.retrieve(digest) is not None,
                          heads_unchanged=before == after)
    except Rejection as exc:
        result.update(outcome="rejected", reason=exc.reason.value)
    if "expect" in step:
        result["expected"] = step["expect"]
        result["matched"] = step["expect"] in (result.get("outcome"), result.get("reason"))
    return result


def _anchor_digest(platform: Platform, party: str, ref: AssetRef) -> bytes | None:
    for ledger in platform.party(party).ledgers.values():
        tx = ledger.txs.get(ref.tx_id)
        if tx is not None and isinstance(tx.payload, Anchor):
            return tx.payload.digest
    return None
