"""Merkle trees with tear-off views.

Leaves are hashed as ``H(0x00 || leaf)``, internal nodes as
``H(0x01 || left || right)``. An unpaired node is promoted unchanged to the
next level (no duplication). A tear-off view keeps the revealed leaves in the
clear and replaces every maximal fully-hidden subtree by its digest, so a
holder can recompute the root without ever seeing hidden data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .crypto import sha256
from .encoding import Reader, field as enc_field, u32

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"


class MerkleError(ValueError):
    pass


class MalformedView(MerkleError):
    pass


def leaf_hash(leaf: bytes) -> bytes:
    return sha256(LEAF_PREFIX + leaf)


def node_hash(left: bytes, right: bytes) -> bytes:
    return sha256(NODE_PREFIX + left + right)


def level_sizes(leaf_count: int) -> list[int]:
    if leaf_count < 1:
        raise MerkleError("a tree needs at least one leaf")
    sizes = [leaf_count]
    while sizes[-1] > 1:
        sizes.append((sizes[-1] + 1) // 2)
    return sizes


def span(level: int, pos: int, leaf_count: int) -> range:
    """Leaf indices under node ``(level, pos)``."""
    lo = pos << level
    return range(lo, min((pos + 1) << level, leaf_count))


@dataclass(frozen=True)
class MerkleTree:
    leaves: tuple[bytes, ...]
    levels: tuple[tuple[bytes, ...], ...]

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    @property
    def leaf_count(self) -> int:
        return len(self.leaves)

    def node(self, level: int, pos: int) -> bytes:
        return self.levels[level][pos]


def _parent_level(nodes: Sequence[bytes]) -> list[bytes]:
    out = [node_hash(nodes[i], nodes[i + 1]) for i in range(0, len(nodes) - 1, 2)]
    if len(nodes) % 2:
        out.append(nodes[-1])
    return out


def build(leaves: Iterable[bytes]) -> MerkleTree:
    leaves = tuple(bytes(x) for x in leaves)
    if not leaves:
        raise MerkleError("cannot build a Merkle tree without leaves")
    levels = [[leaf_hash(x) for x in leaves]]
    while len(levels[-1]) > 1:
        levels.append(_parent_level(levels[-1]))
    return MerkleTree(leaves, tuple(tuple(lv) for lv in levels))


@dataclass(frozen=True)
class TearOffView:
    leaf_count: int
    revealed: Mapping[int, bytes]
    covers: Mapping[tuple[int, int], bytes] = field(default_factory=dict)

    def encode(self) -> bytes:
        out = [u32(self.leaf_count), u32(len(self.revealed))]
        for idx in sorted(self.revealed):
            out.append(u32(idx) + enc_field(self.revealed[idx]))
        out.append(u32(len(self.covers)))
        for (level, pos) in sorted(self.covers):
            out.append(u32(level) + u32(pos) + enc_field(self.covers[(level, pos)]))
        return b"".join(out)

    @classmethod
    def decode(cls, data: bytes) -> "TearOffView":
        r = Reader(data)
        leaf_count = r.u32()
        revealed = {}
        for _ in range(r.u32()):
            idx = r.u32()
            revealed[idx] = r.field()
        covers = {}
        for _ in range(r.u32()):
            level, pos = r.u32(), r.u32()
            covers[(level, pos)] = r.field()
        r.done()
        return cls(leaf_count, revealed, covers)


def tear_off(tree: MerkleTree, hidden: Iterable[int]) -> TearOffView:
    n = tree.leaf_count
    hidden = set(hidden)
    for i in hidden:
        if not 0 <= i < n:
            raise MerkleError("leaf index %d out of range for %d leaves" % (i, n))

    sizes = level_sizes(n)
    # full[level][pos]: every leaf under the node is hidden
    full = [[i in hidden for i in range(n)]]
    for size in sizes[1:]:
        below = full[-1]
        full.append([
            below[2 * p] and (2 * p + 1 >= len(below) or below[2 * p + 1])
            for p in range(size)
        ])

    covers = {}
    top = len(sizes) - 1
    for level in range(top + 1):
        for pos, is_full in enumerate(full[level]):
            if is_full and (level == top or not full[level + 1][pos // 2]):
                covers[(level, pos)] = tree.node(level, pos)
    revealed = {i: tree.leaves[i] for i in range(n) if i not in hidden}
    return TearOffView(n, revealed, covers)


def _check_partition(view: TearOffView, sizes: list[int]) -> None:
    n = view.leaf_count
    owner = [0] * n
    for i in view.revealed:
        if not 0 <= i < n:
            raise MalformedView("revealed index %d out of range" % i)
        owner[i] += 1
    for (level, pos) in view.covers:
        if not (0 <= level < len(sizes) and 0 <= pos < sizes[level]):
            raise MalformedView("cover position (%d, %d) does not exist" % (level, pos))
        for i in span(level, pos, n):
            owner[i] += 1
    bad = [i for i, k in enumerate(owner) if k != 1]
    if bad:
        raise MalformedView("leaves %s are covered %s times" % (bad, [owner[i] for i in bad]))


def recompute(view: TearOffView) -> bytes:
    """Recompute the root digest from a view; raises MalformedView on bad coverage."""
    try:
        sizes = level_sizes(view.leaf_count)
    except MerkleError as exc:
        raise MalformedView(str(exc)) from None
    _check_partition(view, sizes)

    def value(level: int, pos: int) -> bytes:
        if (level, pos) in view.covers:
            return view.covers[(level, pos)]
        if level == 0:
            return leaf_hash(view.revealed[pos])
        left = value(level - 1, 2 * pos)
        if 2 * pos + 1 >= sizes[level - 1]:
            return left
        return node_hash(left, value(level - 1, 2 * pos + 1))

    return value(len(sizes) - 1, 0)
