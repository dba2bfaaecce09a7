from hypothesis import given, settings, strategies as st

from ledgerlab.auditor import InputRef, TxExistence, TxPayload
from ledgerlab.crypto import keygen, seed_from_label, verify
from ledgerlab.ledger import AssetRef, Inline, Reason, Rejection, make_transaction
from ledgerlab.netsim import (
    IDLE,
    Actor,
    ActorId,
    Envelope,
    Notary,
    NotaryMode,
    NotarySignature,
    NotarySignRequest,
    Orderer,
    OrdererMode,
    OrderRequest,
    Party,
    PrivatePayload,
    Role,
    SimConfig,
    Simulation,
)

A = keygen(seed_from_label("A"))


class Recorder(Party):
    def __init__(self, name):
        super().__init__(name)
        self.inbox = []

    def handle(self, env):
        self.inbox.append((env.frm.name, env.body))


def chatter(seed, senders=3, per_sender=5):
    sim = Simulation(SimConfig(seed=seed))
    sink = sim.add(Recorder("sink"))
    srcs = [sim.add(Recorder("s%d" % i)) for i in range(senders)]
    for i in range(per_sender):
        for s in srcs:
            sim.send(Envelope(s.id, sink.id, PrivatePayload(None, b"%d" % i)))
    sim.run_to_idle()
    return sim, sink


def test_same_seed_same_trace():
    a, _ = chatter(4)
    b, _ = chatter(4)
    assert a.trace == b.trace
    assert a.state_digest() == b.state_digest()


def test_seeds_change_interleaving():
    traces = {tuple(chatter(seed)[0].trace) for seed in range(6)}
    assert len(traces) > 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 6))
def test_fifo_per_pair(seed, senders, per_sender):
    _, sink = chatter(seed, senders, per_sender)
    by_sender = {}
    for frm, body in sink.inbox:
        by_sender.setdefault(frm, []).append(int(body.content))
    for seq in by_sender.values():
        assert seq == sorted(seq)
    assert len(sink.inbox) == senders * per_sender


def test_step_idle_and_delivery_count():
    sim = Simulation(SimConfig())
    assert sim.step() is IDLE
    sim, _ = chatter(0, 2, 2)
    assert sim.delivered == 4 and sim.pending() == 0


def test_dead_letters_are_noted():
    sim = Simulation(SimConfig())
    a = sim.add(Recorder("a"))
    sim.send(Envelope(a.id, ActorId(Role.Party, "ghost"), PrivatePayload(None, b"x")))
    assert sim.run_to_idle() == 0
    assert len(sim.dead_letters) == 1
    assert sim.audit.notes[0]["kind"] == "dead-letter"


def test_duplicate_actor_rejected():
    sim = Simulation(SimConfig())
    sim.add(Actor(ActorId(Role.Party, "x")))
    try:
        sim.add(Actor(ActorId(Role.Notary, "x")))
    except ValueError:
        pass
    else:
        raise AssertionError("duplicate name accepted")


def test_material_stream_independent_of_scheduling():
    a, _ = chatter(9, 3, 4)
    b = Simulation(SimConfig(seed=9))
    assert a.material.random() == b.material.random()


def _tx(inputs=()):
    return make_transaction("G", [A.public], Inline(b"secret"), inputs, [(A.public, b"v")], "asset")


def test_shared_orderer_learns_everything():
    sim = Simulation(SimConfig())
    o = sim.add(Orderer("orderer"))
    p = sim.add(Recorder("p"))
    tx = _tx()
    sim.send(Envelope(p.id, o.id, OrderRequest(tx, "G")))
    sim.run_to_idle()
    assert any(isinstance(f, TxPayload) for f in sim.audit.knowledge("orderer"))


def test_member_run_orderer_attributes_to_operator():
    sim = Simulation(SimConfig())
    o = sim.add(Orderer("orderer-G", OrdererMode.MemberRun, operator="p"))
    p = sim.add(Recorder("p"))
    o.groups["G"] = (p.id,)
    seen = []
    o.on_ordered = lambda orderer, batch: seen.append(batch)
    sim.send(Envelope(p.id, o.id, OrderRequest(_tx(), "G")))
    sim.run_to_idle()
    assert sim.audit.knowledge("orderer-G") == frozenset()
    assert any(isinstance(f, TxPayload) for f in sim.audit.knowledge("p"))
    assert len(seen) == 1 and len(p.inbox) == 1


def test_order_is_stable_by_arrival():
    o = Orderer("o")
    t1, t2 = _tx(), make_transaction("G", [A.public], Inline(b"2"), [], [], "asset")
    batch = o.order([(2, t2), (1, t1), (2, t1)])
    assert batch.txs == (t1, t2, t1)


def test_notary_modes_and_uniqueness():
    ref = AssetRef(b"\x07" * 32, 0)
    tx = _tx([ref])
    for mode, sees_payload in ((NotaryMode.Validating, True), (NotaryMode.NonValidating, False)):
        sim = Simulation(SimConfig())
        n = sim.add(Notary("notary", keygen(seed_from_label("n")), mode))
        p = sim.add(Recorder("p"))
        sim.send(Envelope(p.id, n.id, NotarySignRequest(tx.id, tx.inputs, tx=tx)))
        sim.run_to_idle()
        facts = sim.audit.knowledge("notary")
        assert InputRef(tx.id, (ref,)) in facts and TxExistence(tx.id) in facts
        assert any(isinstance(f, TxPayload) for f in facts) is sees_payload
        [(_, reply)] = p.inbox
        assert reply.rejection is None and verify(n.keypair.public, tx.id, reply.signature)
    notary = Notary("n", keygen(seed_from_label("n")))
    notary.notarize(tx)
    assert notary.notarize(tx).rejection is None  # re-notarising the same tx is idempotent
    other = make_transaction("G", [A.public], Inline(b"other"), [ref], [], "asset")
    try:
        notary.notarize(other)
    except Rejection as exc:
        assert exc.reason is Reason.DoubleSpend
    else:
        raise AssertionError("double spend signed")


def test_notary_replies_with_rejection():
    ref = AssetRef(b"\x08" * 32, 0)
    sim = Simulation(SimConfig())
    n = sim.add(Notary("notary", keygen(seed_from_label("n"))))
    replies = []

    class Client(Party):
        def handle(self, env):
            replies.append(env.body)

    c = sim.add(Client("c"))
    for body in (b"1", b"2"):
        tx = make_transaction("G", [A.public], Inline(body), [ref], [], "asset")
        sim.send(Envelope(c.id, n.id, NotarySignRequest(tx.id, tx.inputs)))
        sim.run_to_idle()
    assert [type(r) for r in replies] == [NotarySignature, NotarySignature]
    assert replies[0].rejection is None and replies[1].rejection is Reason.DoubleSpend
