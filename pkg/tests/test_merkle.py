import hashlib
import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ledgerlab.merkle import (
    MalformedView,
    MerkleError,
    TearOffView,
    build,
    recompute,
    span,
    tear_off,
)


def H(b):
    return hashlib.sha256(b).digest()


def oracle_root(leaves):
    """Recursive definition: split at the largest power of two below n."""
    if len(leaves) == 1:
        return H(b"\x00" + leaves[0])
    k = 1
    while k * 2 < len(leaves):
        k *= 2
    return H(b"\x01" + oracle_root(leaves[:k]) + oracle_root(leaves[k:]))


def oracle_subtrees(n):
    """All aligned subtree spans (level, pos) -> leaf range, by enumeration."""
    out = {}
    level = 0
    while True:
        count = (n + (1 << level) - 1) >> level
        for pos in range(count):
            out[(level, pos)] = range(pos << level, min((pos + 1) << level, n))
        if count == 1:
            return out
        level += 1


def leaves_for(n, seed=0):
    rng = random.Random(seed)
    return [rng.randbytes(20) for _ in range(n)]


def test_single_and_pair():
    x, a, b = b"x", b"a", b"b"
    assert build([x]).root == H(b"\x00" + x)
    assert build([a, b]).root == H(b"\x01" + H(b"\x00" + a) + H(b"\x00" + b))


def test_seven_leaves_match_oracle():
    lv = leaves_for(7)
    assert build(lv).root == oracle_root(lv)


def test_empty_rejected():
    with pytest.raises(MerkleError):
        build([])


def test_any_leaf_change_changes_root():
    lv = leaves_for(6)
    root = build(lv).root
    for i in range(6):
        mutated = list(lv)
        mutated[i] = mutated[i] + b"!"
        assert build(mutated).root != root


def test_domain_separation_prefixes():
    # a two-leaf internal node cannot be replayed as a leaf
    a, b = b"a", b"b"
    inner = H(b"\x00" + a) + H(b"\x00" + b)
    assert build([inner]).root != build([a, b]).root
    assert build([a]).levels[0][0] == H(b"\x00" + a)


def test_tear_off_extremes():
    t = build(leaves_for(5))
    none_hidden = tear_off(t, set())
    assert none_hidden.covers == {} and len(none_hidden.revealed) == 5
    all_hidden = tear_off(t, range(5))
    assert all_hidden.revealed == {}
    assert list(all_hidden.covers.values()) == [t.root]


def test_tear_off_eight_leaves_hidden_pair():
    t = build(leaves_for(8))
    view = tear_off(t, {2, 3})
    assert list(view.covers) == [(1, 1)]
    subtrees = oracle_subtrees(8)
    assert list(subtrees[(1, 1)]) == [2, 3]
    assert view.covers[(1, 1)] == oracle_root(t.leaves[2:4])


def test_tear_off_index_out_of_range():
    with pytest.raises(MerkleError):
        tear_off(build(leaves_for(3)), {3})


def test_covers_are_maximal_and_minimal():
    for n in range(1, 9):
        subtrees = oracle_subtrees(n)
        t = build(leaves_for(n, n))
        for r in range(n + 1):
            for hidden in itertools.combinations(range(n), r):
                hidden = set(hidden)
                view = tear_off(t, hidden)
                # greedy oracle: pick largest fully hidden aligned subtrees
                expected = set()
                todo = set(hidden)
                for key in sorted(subtrees, key=lambda k: -k[0]):
                    rg = set(subtrees[key])
                    if rg and rg <= todo and rg <= hidden:
                        expected.add(frozenset(rg))
                        todo -= rg
                got = {frozenset(span(lv, pos, n)) for (lv, pos) in view.covers}
                assert got == expected


def test_exhaustive_oracle_equivalence():
    checks = 0
    for n in range(1, 9):
        lv = leaves_for(n, 100 + n)
        t = build(lv)
        expected = oracle_root(lv)
        assert t.root == expected
        for mask in range(1 << n):
            hidden = {i for i in range(n) if mask >> i & 1}
            assert recompute(tear_off(t, hidden)) == expected
            checks += 1
    assert checks == 510


def test_mutated_view_changes_digest():
    t = build(leaves_for(6))
    view = tear_off(t, {1, 4})
    idx = next(iter(view.revealed))
    revealed = dict(view.revealed)
    revealed[idx] = bytes([revealed[idx][0] ^ 1]) + revealed[idx][1:]
    assert recompute(TearOffView(6, revealed, view.covers)) != t.root
    key = next(iter(view.covers))
    covers = dict(view.covers)
    covers[key] = bytes(32)
    assert recompute(TearOffView(6, view.revealed, covers)) != t.root


def test_malformed_views():
    t = build(leaves_for(4))
    view = tear_off(t, {0})
    overlapping = TearOffView(4, {**view.revealed, 0: t.leaves[0]}, view.covers)
    with pytest.raises(MalformedView):
        recompute(overlapping)
    missing = TearOffView(4, {1: t.leaves[1]}, view.covers)
    with pytest.raises(MalformedView):
        recompute(missing)
    with pytest.raises(MalformedView):
        recompute(TearOffView(4, view.revealed, {(9, 0): bytes(32)}))


def test_view_encoding_round_trip():
    t = build(leaves_for(7))
    view = tear_off(t, {0, 1, 5})
    assert TearOffView.decode(view.encode()) == view


@settings(max_examples=60, deadline=None)
@given(st.lists(st.binary(min_size=16, max_size=40), min_size=1, max_size=8, unique=True),
       st.data())
def test_tear_off_secrecy(leaves, data):
    n = len(leaves)
    hidden = data.draw(st.sets(st.integers(0, n - 1)))
    t = build(leaves)
    blob = tear_off(t, hidden).encode()
    for i in hidden:
        if not any(leaves[i] in leaves[j] for j in range(n) if j not in hidden):
            assert leaves[i] not in blob
    assert recompute(TearOffView.decode(blob)) == t.root
