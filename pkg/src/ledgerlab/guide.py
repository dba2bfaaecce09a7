"""Design-guide decision trees: which confidentiality mechanism fits a set
of requirements, answered as yes/no questions."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class Maturity(enum.Enum):
    Available = "Available"
    Experimental = "Experimental"


MECHANISM_NAMES = frozenset({
    "Single ledger",
    "Separation of ledgers",
    "Separation of ledgers with optional hash",
    "One-time public keys",
    "Zero-knowledge proof of identity",
    "Off-chain data with public hash",
    "MPC with off-chain data",
    "ZKP",
    "Merkle tree tear-offs on separate ledger",
    "TEE",
    "Homomorphic computation",
    "Install contract on involved nodes",
    "Off-chain execution engine",
})


@dataclass(frozen=True)
class Recommendation:
    mechanisms: tuple[str, ...]
    maturity: Maturity = Maturity.Available
    notes: str = ""
    experimental: tuple[str, ...] = ()

    def __post_init__(self):
        unknown = set(self.mechanisms + self.experimental) - MECHANISM_NAMES
        if unknown:
            raise ValueError("unknown mechanism(s): %s" % ", ".join(sorted(unknown)))

    @property
    def name(self) -> str:
        return " + ".join(self.mechanisms)

    def describe(self) -> str:
        text = self.name
        if self.experimental:
            text += " (experimental alternative: %s)" % ", ".join(self.experimental)
        return text

    def to_json(self) -> dict:
        return {"mechanisms": list(self.mechanisms), "maturity": self.maturity.value,
                "experimental": list(self.experimental), "notes": self.notes}


@dataclass(frozen=True)
class Question:
    text: str
    yes: str
    no: str


@dataclass(frozen=True)
class Leaf:
    recommendation: Recommendation


Node = Question | Leaf


@dataclass(frozen=True)
class DecisionTree:
    id: str
    root: str
    nodes: Mapping[str, Node] = field(default_factory=dict)

    def questions(self) -> dict[str, Question]:
        return {k: v for k, v in self.nodes.items() if isinstance(v, Question)}


class GuideError(Exception):
    pass


class NeedsAnswer(GuideError):
    def __init__(self, question_id: str, text: str):
        super().__init__(text)
        self.question_id = question_id
        self.text = text


class UnknownTree(GuideError, KeyError):
    pass


def _leaf(*mechanisms: str, notes: str = "", experimental: Sequence[str] = ()) -> Leaf:
    return Leaf(Recommendation(tuple(mechanisms), Maturity.Available, notes, tuple(experimental)))


def data_tree() -> DecisionTree:
    q, leaf = Question, _leaf
    return DecisionTree("data", "confidential", {
        "confidential": q("Is data confidential?", "deletion", "single-ledger"),
        "deletion": q("Is deletion necessary?", "collective", "enc-shareable"),
        "collective": q("Collective computation?", "mpc", "offchain-hash"),
        "enc-shareable": q("Can encrypted data be shared and stored?", "validators-read", "owner-only"),
        "owner-only": q("Data private to owner only?", "boolean-proofs", "parts-private"),
        "boolean-proofs": q("Boolean proofs enough?", "zkp", "collective"),
        "parts-private": q("Parts of data private to one or more parties?", "tearoffs", "separation-parts"),
        "validators-read": q("Are validators allowed to read transactions?", "separation-validators", "hide-logic"),
        "hide-logic": q("Need to hide business logic?", "tee", "tee-or-homomorphic"),
        "single-ledger": leaf("Single ledger"),
        "mpc": leaf("MPC with off-chain data"),
        "offchain-hash": leaf("Off-chain data with public hash",
                              notes="payload kept off-chain so it can be deleted; the ledger keeps only its hash"),
        "zkp": leaf("ZKP"),
        "tearoffs": leaf("Merkle tree tear-offs on separate ledger"),
        "separation-parts": leaf("Separation of ledgers with optional hash"),
        "separation-validators": leaf("Separation of ledgers with optional hash"),
        "tee": leaf("TEE"),
        "tee-or-homomorphic": leaf("TEE", experimental=["Homomorphic computation"],
                                   notes="homomorphic computation is not yet practical"),
    })


def interaction_tree() -> DecisionTree:
    q, leaf = Question, _leaf
    return DecisionTree("interaction", "hide-subgroup", {
        "hide-subgroup": q("Must a sub-group hide from the network that it transacts at all?",
                           "anonymous-individual", "separate-ledger"),
        "anonymous-individual": q("Must an individual stay anonymous even towards its counterparties?",
                                  "zkp-identity", "one-time-keys"),
        "separate-ledger": leaf("Separation of ledgers"),
        "one-time-keys": leaf("One-time public keys",
                              notes="counterparties exchange linking certificates; others see unlinkable keys"),
        "zkp-identity": leaf("Zero-knowledge proof of identity"),
    })


def logic_tree() -> DecisionTree:
    q, leaf = Question, _leaf
    return DecisionTree("logic", "hide-from-admin", {
        "hide-from-admin": q("Must data and logic stay hidden from node administrators?",
                             "tee", "language-freedom"),
        "language-freedom": q("Is a free choice of programming language needed?",
                              "offchain-engine", "install-involved"),
        "tee": leaf("TEE"),
        "offchain-engine": leaf("Off-chain execution engine",
                                notes="contract versioning must be handled outside the ledger"),
        "install-involved": leaf("Install contract on involved nodes",
                                 notes="the ledger versions contracts itself"),
    })


def builtin_trees() -> dict[str, DecisionTree]:
    return {t.id: t for t in (data_tree(), interaction_tree(), logic_tree())}


def get_tree(name: str) -> DecisionTree:
    trees = builtin_trees()
    try:
        return trees[name]
    except KeyError:
        raise UnknownTree("unknown tree %r (choose from %s)" % (name, ", ".join(trees))) from None


# -- answers ------------------------------------------------------------------

_TRUE = {"y", "yes", "true", "1"}
_FALSE = {"n", "no", "false", "0"}


def parse_answer(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ValueError("answer must be yes or no, got %r" % (value,))


def normalize_id(question_id: str) -> str:
    return question_id.strip().lower().replace("_", "-")


def parse_answers(spec: str) -> dict[str, bool]:
    """Parse ``k=v,k=v`` into an answer mapping."""
    out: dict[str, bool] = {}
    for item in filter(None, (s.strip() for s in spec.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError("expected question=answer, got %r" % item)
        out[normalize_id(key)] = parse_answer(value)
    return out


def _answer_map(answers) -> dict[str, bool]:
    if isinstance(answers, Mapping):
        items = answers.items()
    else:
        items = answers
    return {normalize_id(k): parse_answer(v) for k, v in items}


# -- traversal ------------------------------------------------------------------

def evaluate(tree: DecisionTree, answers: Mapping[str, object] | Iterable[tuple[str, object]]
             ) -> tuple[Recommendation, list[str]]:
    """Follow the answers from the root; return the leaf and the node path."""
    given = _answer_map(answers)
    node_id, path = tree.root, []
    while True:
        path.append(node_id)
        node = tree.nodes[node_id]
        if isinstance(node, Leaf):
            return node.recommendation, path
        if node_id not in given:
            raise NeedsAnswer(node_id, node.text)
        node_id = node.yes if given[node_id] else node.no


def enumerate_paths(tree: DecisionTree) -> list[tuple[list[tuple[str, bool]], Recommendation]]:
    """One answer vector per leaf node: the shortest route to it.

    A question reachable from several parents (a shared sub-flow) does not
    multiply the leaves below it; each leaf is listed once.
    """
    found: dict[str, list[tuple[str, bool]]] = {}
    queue = deque([(tree.root, [])])
    while queue:
        node_id, answers = queue.popleft()
        node = tree.nodes[node_id]
        if isinstance(node, Leaf):
            found.setdefault(node_id, answers)
            continue
        if any(q == node_id for q, _ in answers):
            continue
        queue.append((node.yes, answers + [(node_id, True)]))
        queue.append((node.no, answers + [(node_id, False)]))
    order = [n for n in tree.nodes if n in found]
    return [(found[n], tree.nodes[n].recommendation) for n in order]


def check_tree(tree: DecisionTree) -> None:
    """Raise GuideError unless the tree is rooted, acyclic, closed and fully reachable."""
    if tree.root not in tree.nodes:
        raise GuideError("root %r missing" % tree.root)
    for node_id, node in tree.nodes.items():
        if isinstance(node, Question):
            for target in (node.yes, node.no):
                if target not in tree.nodes:
                    raise GuideError("%s points at missing node %r" % (node_id, target))
    state: dict[str, int] = {}

    def visit(node_id: str) -> None:
        state[node_id] = 1
        node = tree.nodes[node_id]
        if isinstance(node, Question):
            for target in (node.yes, node.no):
                if state.get(target) == 1:
                    raise GuideError("cycle through %r" % target)
                if target not in state:
                    visit(target)
        state[node_id] = 2

    visit(tree.root)
    unreachable = set(tree.nodes) - set(state)
    if unreachable:
        raise GuideError("unreachable nodes: %s" % ", ".join(sorted(unreachable)))


def format_path(tree: DecisionTree, path: Sequence[str], answers: Mapping[str, bool]) -> list[str]:
    lines = []
    for node_id in path:
        node = tree.nodes[node_id]
        if isinstance(node, Question):
            lines.append("%s -> %s" % (node.text, "yes" if answers[node_id] else "no"))
    return lines
