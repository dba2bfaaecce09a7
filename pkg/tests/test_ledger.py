import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from ledgerlab import merkle
from ledgerlab.crypto import ZERO_DIGEST, keygen, seed_from_label, sha256, verify
from ledgerlab.ledger import (
    Anchor,
    AssetRef,
    AssetState,
    Contract,
    Encrypted,
    ExecutionMode,
    Inline,
    LeafLayout,
    Ledger,
    PrivateDataStore,
    Reason,
    Rejection,
    TearOff,
    Unauthorized,
    make_tearoff_transaction,
    make_transaction,
    sign_transaction,
    sign_view,
    tearoff_leaves,
    tx_from_json,
    tx_to_json,
    validate,
)

A = keygen(seed_from_label("A"))
B = keygen(seed_from_label("B"))
C = keygen(seed_from_label("C"))
CONTRACTS = {"asset": Contract("asset")}


def issue(owner=A, value=b"coin"):
    tx = make_transaction("G", [owner.public], Inline(b"mint"), [], [(owner.public, value)], "asset")
    return sign_transaction(tx, owner)


def spend(ref, frm=A, to=B, value=b"coin", body=b"pay"):
    tx = make_transaction("G", [frm.public, to.public], Inline(body), [ref], [(to.public, value)], "asset")
    return sign_transaction(sign_transaction(tx, frm), to)


def ledger_with(*txs):
    led = Ledger("test")
    for tx in txs:
        led.append([tx])
    return led


# -- transactions -------------------------------------------------------------

def test_id_commits_to_contents():
    tx = issue()
    assert tx.compute_id() == tx.id
    assert replace(tx, group="H").compute_id() != tx.id


def test_make_transaction_rejects_bad_inputs():
    with pytest.raises(ValueError):
        make_transaction("G", [], Inline(b""))
    with pytest.raises(ValueError):
        make_transaction("G", [A.public], Inline(b""), [(b"short", 0)])


def test_signing_requires_participant_or_endorser():
    tx = issue()
    with pytest.raises(Unauthorized):
        sign_transaction(tx, B)
    signed = sign_transaction(tx, B, endorsers=[B.public])
    assert B.public in signed.signatures


def test_json_round_trip_all_payloads():
    tearoff_tx, _ = make_tearoff_transaction("G", [A.public], b"body", [], [(A.public, b"v")], "asset")
    for payload in (Inline(b"x"), Encrypted(b"ct", "k1"), Anchor(sha256(b"d"))):
        tx = sign_transaction(make_transaction("G", [A.public], payload, [], [], "asset"), A)
        assert tx_from_json(json.loads(json.dumps(tx_to_json(tx)))) == tx
    assert tx_from_json(tx_to_json(tearoff_tx)) == tearoff_tx


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["group", "contract", "payload", "outputs", "inputs", "participants"]))
def test_any_field_change_changes_id(which):
    ref = AssetRef(sha256(b"prior"), 0)
    tx = make_transaction("G", [A.public, B.public], Inline(b"p"), [ref], [(B.public, b"v")], "asset")
    changed = {
        "group": dict(group="H"),
        "contract": dict(contract="other"),
        "payload": dict(payload=Inline(b"q")),
        "outputs": dict(outputs=((B.public, b"w"),)),
        "inputs": dict(inputs=(AssetRef(ref.tx_id, 1),)),
        "participants": dict(participants=(A.public,)),
    }[which]
    assert replace(tx, **changed).compute_id() != tx.id


# -- tear-off transactions --------------------------------------------------------

def test_tearoff_layout_and_oracle_signature():
    ref = AssetRef(sha256(b"prior"), 2)
    tx, tree = make_tearoff_transaction("G", [A.public, B.public], b"rate=1.07", [ref],
                                        [(B.public, b"v")], "fx")
    layout = LeafLayout(2, 1, 1)
    assert layout.count == tree.leaf_count == 7
    assert [layout.role(i) for i in range(7)] == [
        "group", "contract", "participant", "participant", "input", "output", "body"]
    assert tree.root == tx.payload.root == tx.signing_message()
    # oracle sees only the body leaf and signs the recomputed root
    view = merkle.tear_off(tree, range(6))
    assert set(view.revealed) == {6}
    sig = sign_view(view, C)
    assert verify(C.public, tx.signing_message(), sig)
    endorsed = tx.with_signature(C.public, sig)
    validate(sign_transaction(sign_transaction(endorsed, A), B), _state_with_input(ref, A),
             {"fx": Contract("fx")}, visible=lambda r: False)


def _state_with_input(ref, owner):
    state = AssetState()
    state.unspent[ref] = (owner.public, b"v")
    state.known_txs.add(ref.tx_id)
    return state


def test_tearoff_leaves_are_tagged():
    leaves = tearoff_leaves("G", "c", [A.public], [], [], b"x")
    assert leaves[0] == b"group:G" and leaves[1] == b"contract:c" and leaves[-1] == b"body:x"
    with pytest.raises(IndexError):
        LeafLayout(0, 0, 0).role(3)


# -- validation -----------------------------------------------------------------

def test_valid_issue_and_spend():
    mint = issue()
    led = ledger_with(mint)
    pay = spend(mint.ref(0))
    assert validate(pay, led.state, CONTRACTS) == []
    led.append([pay])
    assert mint.ref(0) not in led.state.unspent
    assert led.state.unspent[pay.ref(0)].owner == B.public


def test_missing_signature():
    mint = issue()
    tx = make_transaction("G", [A.public, B.public], Inline(b""), [mint.ref(0)], [(B.public, b"coin")], "asset")
    with pytest.raises(Rejection) as exc:
        validate(sign_transaction(tx, A), ledger_with(mint).state, CONTRACTS)
    assert exc.value.reason is Reason.MissingSignature


def test_forged_extra_signature_rejected():
    mint = issue()
    tx = spend(mint.ref(0)).with_signature(C.public, bytes(64))
    with pytest.raises(Rejection) as exc:
        validate(tx, ledger_with(mint).state, CONTRACTS)
    assert exc.value.reason is Reason.MissingSignature


def test_tampered_id_rejected():
    mint = issue()
    with pytest.raises(Rejection):
        validate(replace(mint, group="H"), AssetState(), CONTRACTS)


def test_unknown_input_and_double_spend():
    mint = issue()
    led = ledger_with(mint)
    ghost = spend(AssetRef(sha256(b"ghost"), 0))
    with pytest.raises(Rejection) as exc:
        validate(ghost, led.state, CONTRACTS, visible=lambda r: True)
    assert exc.value.reason is Reason.UnknownInput
    first = spend(mint.ref(0))
    led.append([first])
    second = spend(mint.ref(0), to=C)
    with pytest.raises(Rejection) as exc:
        validate(second, led.state, CONTRACTS)
    assert exc.value.reason is Reason.DoubleSpend


def test_duplicate_input_in_one_tx():
    mint = issue()
    tx = make_transaction("G", [A.public], Inline(b""), [mint.ref(0), mint.ref(0)],
                          [(A.public, b"a"), (A.public, b"b")], "asset")
    with pytest.raises(Rejection) as exc:
        validate(sign_transaction(tx, A), ledger_with(mint).state, CONTRACTS)
    assert exc.value.reason is Reason.DoubleSpend


def test_invisible_input_is_only_a_warning():
    tx = spend(AssetRef(sha256(b"elsewhere"), 0))
    assert validate(tx, AssetState(), CONTRACTS) == [Reason.NotVisible]


def test_contract_predicate_and_modes():
    mint = issue()
    led = ledger_with(mint)
    split = make_transaction("G", [A.public, B.public], Inline(b""), [mint.ref(0)],
                             [(B.public, b"x"), (B.public, b"y")], "asset")
    split = sign_transaction(sign_transaction(split, A), B)
    with pytest.raises(Rejection) as exc:
        validate(split, led.state, CONTRACTS)
    assert exc.value.reason is Reason.ContractViolation
    # without the code, or for off-ledger execution, only signatures are checked
    assert validate(split, led.state, CONTRACTS, has_code=False) == []
    offchain = {"asset": Contract("asset", mode=ExecutionMode.OffChainEngine)}
    assert validate(split, led.state, offchain) == []
    with pytest.raises(Rejection) as exc:
        validate(split, led.state, {})
    assert exc.value.reason is Reason.ContractViolation


def test_initiator_signer_rule():
    mint = issue()
    tx = make_transaction("G", [A.public, B.public], Inline(b""), [mint.ref(0)], [(B.public, b"coin")], "loan")
    assert validate(sign_transaction(tx, A), ledger_with(mint).state,
                    {"loan": Contract("loan", signers="initiator")}) == []


# -- chain ----------------------------------------------------------------------

def test_genesis_head_and_chain_verification():
    led = Ledger("x")
    assert led.head == ZERO_DIGEST and led.verify_chain()
    mint = issue()
    led.append([mint])
    led.append([spend(mint.ref(0))])
    assert led.height == 2 and led.verify_chain()
    assert led.blocks[1].prev == led.blocks[0].body_hash


def test_tampering_breaks_chain():
    mint = issue()
    led = ledger_with(mint, spend(mint.ref(0)))
    tx = led.txs[mint.id]
    led.txs[mint.id] = replace(tx, outputs=((C.public, b"coin"),))
    assert not led.verify_chain()


def test_dump_is_canonical():
    mint = issue()
    a = ledger_with(mint, spend(mint.ref(0))).dump()
    b = ledger_with(mint, spend(mint.ref(0))).dump()
    assert a == b
    for line in a.splitlines():
        rec = json.loads(line)
        assert list(rec) == sorted(rec)


# -- off-chain store ---------------------------------------------------------------

def test_purge_semantics():
    store = PrivateDataStore()
    data = b"shipping documents"
    digest = store.anchor(data)
    assert digest == sha256(data)
    mint = make_transaction("G", [A.public], Anchor(digest), [], [(A.public, b"doc")], "asset")
    led = ledger_with(sign_transaction(mint, A))
    head = led.head
    assert store.retrieve(digest) == data
    store.purge(digest)
    store.purge(digest)
    assert store.retrieve(digest) is None
    assert led.head == head and led.verify_chain()
    assert store.verify(digest, data)
    assert not store.verify(digest, data + b"!")


def test_salted_anchor_survives_purge():
    store = PrivateDataStore()
    digest = store.anchor(b"low entropy", salt=b"s" * 16)
    assert digest != sha256(b"low entropy")
    store.purge(digest)
    assert store.verify(digest, b"low entropy")


def test_retrieve_unknown_is_none():
    assert PrivateDataStore().retrieve(sha256(b"nothing")) is None


@settings(max_examples=50, deadline=None)
@given(st.lists(st.binary(max_size=64), min_size=1, max_size=8, unique=True))
def test_purge_never_touches_other_entries(blobs):
    store = PrivateDataStore()
    digests = [store.anchor(b) for b in blobs]
    store.purge(digests[0])
    for d, b in zip(digests[1:], blobs[1:]):
        assert store.retrieve(d) == b
    assert all(store.verify(d, b) for d, b in zip(digests, blobs))


def test_tearoff_payload_excludes_views_from_id():
    tx, tree = make_tearoff_transaction("G", [A.public], b"b", [], [], "asset")
    view = merkle.tear_off(tree, [0])
    with_view = replace(tx, payload=TearOff(tx.payload.root, {"oracle": view}))
    assert with_view.compute_id() == tx.id
