import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from telechain import crypto
from telechain.contracts import CONTRACTS
from telechain.engine import (
    BlockCutter,
    EndorsementPolicy,
    Node,
    PeerIdentity,
    assemble_transaction,
    build_proposal,
    decode_response,
    endorse,
    simulate,
    validate_block,
)
from telechain.engine.endorse import sign_endorsement
from telechain.engine.orderer import build_block
from telechain.errors import ClientError, LedgerError
from telechain.identity import IdentityRegistry, Role
from telechain.ledger import (
    GenesisConfig,
    MemoryBlockStore,
    ReadWriteSet,
    ValidationCode,
    Version,
    WorldState,
    apply_block,
    hash_block,
    make_genesis_block,
)
from telechain.ledger.blocks import Transaction
from telechain.ledger.store import DirectoryBlockStore


@pytest.fixture
def rig(rng):
    """Registry + peers + a base state with genesis applied."""
    registry = IdentityRegistry.create(rng)
    cfg = GenesisConfig()
    peers = []
    peer_keys = {}
    for index in range(3):
        kp, cert = registry.create_identity(f"peer{index}", Role.PEER, rng)
        peers.append(PeerIdentity(keypair=kp, certificate=cert))
        peer_keys[f"peer{index}"] = kp.public_key
    alice_kp, alice_cert = registry.create_identity("alice", Role.PATIENT, rng)
    state = WorldState()
    apply_block(state, make_genesis_block(cfg))
    policy = EndorsementPolicy.of(2, peer_keys)
    return {
        "registry": registry, "cfg": cfg, "peers": peers, "peer_keys": peer_keys,
        "alice": (alice_kp, alice_cert), "state": state, "policy": policy, "rng": rng,
    }


def _proposal(rig, contract="payments", function="check_payment_status",
              args=(b"p1",), client_time=1):
    kp, cert = rig["alice"]
    return build_proposal(kp, cert, contract, function, list(args),
                          client_time, rig["rng"])


class TestSimulate:
    def test_missing_payment_records_absent_read_and_error(self, rig):
        proposal = _proposal(rig)
        rwset, response = simulate(proposal, rig["state"], CONTRACTS, rig["cfg"])
        ok, code, _ = decode_response(response)
        assert not ok and code == "NOT_FOUND"
        assert rwset.reads == ((b"pay/p1", None),)
        assert rwset.writes == ()

    def test_same_snapshot_same_rwset_bytes(self, rig):
        proposal = _proposal(rig)
        a = simulate(proposal, rig["state"], CONTRACTS, rig["cfg"])
        b = simulate(proposal, rig["state"], CONTRACTS, rig["cfg"])
        assert a[0].to_canonical() == b[0].to_canonical()
        assert a[1] == b[1]

    def test_simulation_never_mutates_snapshot(self, rig):
        before = rig["state"].digest()
        proposal = _proposal(rig, contract="consent", function="grant_consent",
                             args=(b"ANALYTICS", b"ANY-ANALYST"))
        rwset, response = simulate(proposal, rig["state"], CONTRACTS, rig["cfg"])
        assert decode_response(response)[0]
        assert rwset.writes  # it wanted to write...
        assert rig["state"].digest() == before  # ...but the snapshot is untouched

    def test_unknown_contract_and_function(self, rig):
        with pytest.raises(ClientError) as excinfo:
            simulate(_proposal(rig, contract="nope"), rig["state"], CONTRACTS, rig["cfg"])
        assert excinfo.value.code == "UNKNOWN_CONTRACT"
        with pytest.raises(ClientError) as excinfo:
            simulate(_proposal(rig, function="nope"), rig["state"], CONTRACTS, rig["cfg"])
        assert excinfo.value.code == "UNKNOWN_FUNCTION"

    def test_bad_client_signature_rejected(self, rig):
        proposal = _proposal(rig)
        forged = type(proposal)(**{**proposal.__dict__,
                                   "client_signature": bytes(64)})
        with pytest.raises(ClientError) as excinfo:
            simulate(forged, rig["state"], CONTRACTS, rig["cfg"])
        assert excinfo.value.code == "BAD_PROPOSAL"


class TestEndorse:
    def test_endorsement_verifies_under_peer_key(self, rig):
        proposal = _proposal(rig)
        resp = endorse(rig["peers"][0], proposal, rig["state"], CONTRACTS,
                       rig["cfg"], rig["registry"].ca_public)
        end = resp.endorsement
        assert crypto.verify(rig["peer_keys"]["peer0"],
                             end.signing_payload(proposal.tx_id()), end.signature)
        assert end.rwset_digest == resp.rwset.digest()

    def test_revoked_creator_refused(self, rig):
        proposal = _proposal(rig)
        rig["registry"].revoke("alice")
        with pytest.raises(ClientError) as excinfo:
            endorse(rig["peers"][0], proposal, rig["state"], CONTRACTS,
                    rig["cfg"], rig["registry"].ca_public, rig["registry"].revoked)
        assert excinfo.value.code == "ENDORSE_REFUSED"

    def test_non_peer_cannot_endorse(self, rig):
        kp, cert = rig["alice"]
        with pytest.raises(ClientError) as excinfo:
            endorse(PeerIdentity(kp, cert), _proposal(rig), rig["state"],
                    CONTRACTS, rig["cfg"], rig["registry"].ca_public)
        assert excinfo.value.code == "NOT_PEER"

    def test_two_honest_peers_agree_on_digest(self, rig):
        proposal = _proposal(rig)
        digests = set()
        for peer in rig["peers"][:2]:
            resp = endorse(peer, proposal, rig["state"], CONTRACTS,
                           rig["cfg"], rig["registry"].ca_public)
            digests.add(resp.endorsement.rwset_digest)
        assert len(digests) == 1


class TestAssemble:
    def _responses(self, rig, proposal, count=3, divergent=0):
        out = []
        for index, peer in enumerate(rig["peers"][:count]):
            resp = endorse(peer, proposal, rig["state"], CONTRACTS,
                           rig["cfg"], rig["registry"].ca_public)
            if index < divergent:
                corrupted = ReadWriteSet(
                    reads=resp.rwset.reads,
                    writes=resp.rwset.writes + ((b"div/" + peer.peer_id.encode(), b"x"),))
                resp = sign_endorsement(peer, proposal.tx_id(), corrupted, resp.response)
            out.append(resp)
        return out

    def test_three_matching_endorsements_all_carried(self, rig):
        proposal = _proposal(rig)
        tx = assemble_transaction(proposal, self._responses(rig, proposal), threshold=2)
        assert len(tx.endorsements) == 3
        assert tx.tx_id == proposal.tx_id()

    def test_divergent_minority_dropped(self, rig):
        proposal = _proposal(rig)
        tx = assemble_transaction(proposal,
                                  self._responses(rig, proposal, divergent=1),
                                  threshold=2)
        assert len(tx.endorsements) == 2
        assert {e.peer_id for e in tx.endorsements} == {"peer1", "peer2"}

    def test_all_pairwise_divergent_with_threshold_two_fails(self, rig):
        proposal = _proposal(rig)
        responses = self._responses(rig, proposal, divergent=3)
        # enumerate digest groups: all three must be singletons
        digests = {r.endorsement.rwset_digest for r in responses}
        assert len(digests) == 3
        with pytest.raises(ClientError) as excinfo:
            assemble_transaction(proposal, responses, threshold=2)
        assert excinfo.value.code == "NO_MATCHING_ENDORSEMENTS"

    def test_self_inconsistent_endorsement_dropped(self, rig):
        proposal = _proposal(rig)
        responses = self._responses(rig, proposal)
        # peer0 signs digests that do not match the bytes it returned
        broken = responses[0]
        bad_end = sign_endorsement(rig["peers"][0], proposal.tx_id(),
                                   ReadWriteSet(reads=(), writes=((b"z", b"z"),)),
                                   broken.response)
        responses[0] = type(broken)(peer_id=broken.peer_id, rwset=broken.rwset,
                                    response=broken.response,
                                    endorsement=bad_end.endorsement)
        tx = assemble_transaction(proposal, responses, threshold=2)
        assert {e.peer_id for e in tx.endorsements} == {"peer1", "peer2"}


class TestBlockCutter:
    def _tx(self, rig, index):
        proposal = _proposal(rig, args=(f"p{index}".encode(),))
        resp = endorse(rig["peers"][0], proposal, rig["state"], CONTRACTS,
                       rig["cfg"], rig["registry"].ca_public)
        return assemble_transaction(proposal, [resp])

    def test_25_txs_cut_into_10_10_5(self, rig):
        cutter = BlockCutter(max_txs=10, max_wait=5)
        batches = []
        for index in range(25):
            batches.extend(cutter.add(self._tx(rig, index), tick=0))
        batches.extend(cutter.flush(tick=0))
        assert [len(b) for b in batches] == [10, 10, 5]

    def test_single_tx_cut_after_max_wait(self, rig):
        cutter = BlockCutter(max_txs=10, max_wait=5)
        assert cutter.add(self._tx(rig, 0), tick=3) == []
        for tick in range(4, 8):
            assert cutter.poll(tick) == []
        batches = cutter.poll(8)  # 8 - 3 >= 5
        assert len(batches) == 1 and len(batches[0]) == 1

    def test_no_txs_no_block(self):
        cutter = BlockCutter(max_txs=10, max_wait=5)
        for tick in range(100):
            assert cutter.poll(tick) == []
        assert cutter.flush(100) == []

    def test_fifo_order_preserved(self, rig):
        cutter = BlockCutter(max_txs=4, max_wait=5)
        txs = [self._tx(rig, i) for i in range(4)]
        batches = []
        for tx in txs:
            batches.extend(cutter.add(tx, tick=0))
        assert [t.tx_id for t in batches[0]] == [t.tx_id for t in txs]

    @given(
        schedule=st.lists(st.integers(min_value=0, max_value=3), min_size=1,
                          max_size=60),
        max_txs=st.integers(min_value=1, max_value=6),
        max_wait=st.integers(min_value=1, max_value=6),
    )
    @settings(max_examples=120, deadline=None)
    def test_cutting_properties(self, schedule, max_txs, max_wait):
        """FIFO partition, no empty or oversized batches, bounded waiting.

        ``schedule[tick]`` says how many labels arrive at that tick; labels
        stand in for transactions since the cutter never inspects them.
        """
        cutter = BlockCutter(max_txs=max_txs, max_wait=max_wait)
        submitted, cut = [], []
        for tick, arrivals in enumerate(schedule):
            batches = cutter.poll(tick)
            for label in range(arrivals):
                tag = (tick, label)
                submitted.append(tag)
                batches.extend(cutter.add(tag, tick))
            for batch in batches:
                assert 1 <= len(batch) <= max_txs
                cut.extend(batch)
            # a cut must have happened by the time the oldest pending
            # submission is max_wait ticks old
            for pending in submitted[len(cut):]:
                assert tick - pending[0] < max_wait
        cut.extend(tx for batch in cutter.flush(len(schedule)) for tx in batch)
        assert cut == submitted  # FIFO partition of everything submitted


class TestValidateBlock:
    def _endorsed_tx(self, rig, contract, function, args, client_time=1,
                     endorser_count=2, state=None):
        kp, cert = rig["alice"]
        proposal = build_proposal(kp, cert, contract, function, list(args),
                                  client_time, rig["rng"])
        responses = [
            endorse(peer, proposal, state or rig["state"], CONTRACTS,
                    rig["cfg"], rig["registry"].ca_public)
            for peer in rig["peers"][:endorser_count]
        ]
        return assemble_transaction(proposal, responses)

    def test_intra_block_mvcc_first_wins(self, rig):
        # both txs read the same absent consent namespace then write; the
        # writes collide on era-less keys only if identical, so use payments
        state = rig["state"]
        # fund alice on the committed state first
        registry = rig["registry"]
        admin_kp, admin_cert = registry.create_identity("admin", Role.ADMIN, rig["rng"])
        credit = build_proposal(admin_kp, admin_cert, "payments", "credit_account",
                                [b"alice", b"100"], 1, rig["rng"])
        responses = [endorse(p, credit, state, CONTRACTS, rig["cfg"],
                             registry.ca_public) for p in rig["peers"][:2]]
        credit_tx = assemble_transaction(credit, responses)
        block1 = build_block(1, hash_block(make_genesis_block(rig["cfg"])), 1, [credit_tx])
        seen = set()
        flags = validate_block(block1, state, rig["policy"], seen, rig["peer_keys"],
                               registry.ca_public)
        assert flags == [ValidationCode.VALID]
        apply_block(state, block1.with_flags(flags))

        # register a payee identity directly in state for subject_role lookups
        _, bob_cert = registry.create_identity("bob", Role.PATIENT, rig["rng"])
        state.entries[b"id/bob"] = (bob_cert.to_canonical(), Version(1, 0))

        tx_a = self._endorsed_tx(rig, "payments", "make_payment", (b"bob", b"60", b"a"),
                                 client_time=2, state=state)
        tx_b = self._endorsed_tx(rig, "payments", "make_payment", (b"bob", b"60", b"b"),
                                 client_time=3, state=state)
        block2 = build_block(2, hash_block(block1.with_flags(flags)), 2, [tx_a, tx_b])
        flags2 = validate_block(block2, state, rig["policy"], seen, rig["peer_keys"],
                                registry.ca_public)
        assert flags2 == [ValidationCode.VALID, ValidationCode.MVCC_CONFLICT]

        # sequential oracle: replaying only VALID txs gives the same end state
        clone = state.copy()
        apply_block(state, block2.with_flags(flags2))
        for key, value in tx_a.rwset.writes:
            clone.entries[key] = (value, Version(2, 0))
        clone.height = 2
        assert clone.snapshot_bytes() == state.snapshot_bytes()

    def test_below_threshold_is_endorsement_failure(self, rig):
        tx = self._endorsed_tx(rig, "consent", "grant_consent",
                               (b"ANALYTICS", b"ANY-ANALYST"), endorser_count=1)
        block = build_block(1, bytes(32), 1, [tx])
        flags = validate_block(block, rig["state"], rig["policy"], set(),
                               rig["peer_keys"], rig["registry"].ca_public)
        assert flags == [ValidationCode.ENDORSEMENT_FAILURE]

    def test_replayed_tx_id_is_duplicate(self, rig):
        tx = self._endorsed_tx(rig, "consent", "grant_consent",
                               (b"ANALYTICS", b"ANY-ANALYST"))
        seen = set()
        block1 = build_block(1, bytes(32), 1, [tx])
        flags1 = validate_block(block1, rig["state"], rig["policy"], seen,
                                rig["peer_keys"], rig["registry"].ca_public)
        assert flags1 == [ValidationCode.VALID]
        block2 = build_block(2, bytes(32), 2, [tx])
        flags2 = validate_block(block2, rig["state"], rig["policy"], seen,
                                rig["peer_keys"], rig["registry"].ca_public)
        assert flags2 == [ValidationCode.DUPLICATE_TXID]

    def test_same_block_duplicate_tx_id(self, rig):
        tx = self._endorsed_tx(rig, "consent", "grant_consent",
                               (b"ANALYTICS", b"ANY-ANALYST"))
        block = build_block(1, bytes(32), 1, [tx, tx])
        flags = validate_block(block, rig["state"], rig["policy"], set(),
                               rig["peer_keys"], rig["registry"].ca_public)
        assert flags == [ValidationCode.VALID, ValidationCode.DUPLICATE_TXID]

    def test_forged_client_signature_flagged(self, rig):
        tx = self._endorsed_tx(rig, "consent", "grant_consent",
                               (b"ANALYTICS", b"ANY-ANALYST"))
        forged = Transaction(**{**tx.__dict__, "client_signature": bytes(64)})
        block = build_block(1, bytes(32), 1, [forged])
        flags = validate_block(block, rig["state"], rig["policy"], set(),
                               rig["peer_keys"], rig["registry"].ca_public)
        assert flags == [ValidationCode.BAD_SIGNATURE]

    def test_counted_endorsement_with_bad_signature_flagged(self, rig):
        tx = self._endorsed_tx(rig, "consent", "grant_consent",
                               (b"ANALYTICS", b"ANY-ANALYST"))
        broken = tuple(
            type(e)(peer_id=e.peer_id, rwset_digest=e.rwset_digest,
                    response_digest=e.response_digest, signature=bytes(64))
            for e in tx.endorsements)
        forged = Transaction(**{**tx.__dict__, "endorsements": broken})
        block = build_block(1, bytes(32), 1, [forged])
        flags = validate_block(block, rig["state"], rig["policy"], set(),
                               rig["peer_keys"], rig["registry"].ca_public)
        assert flags == [ValidationCode.BAD_SIGNATURE]

    def test_endorsement_soundness_exhaustive(self, rng):
        """Fewer than m valid eligible endorsements is never VALID,
        for m in 1..3 and peer counts 1..4."""
        for n_peers, m in itertools.product(range(1, 5), range(1, 4)):
            if m > n_peers:
                continue
            registry = IdentityRegistry.create(rng)
            cfg = GenesisConfig(n_peers=n_peers, policy_threshold=m)
            peers, peer_keys = [], {}
            for index in range(n_peers):
                kp, cert = registry.create_identity(f"peer{index}", Role.PEER, rng)
                peers.append(PeerIdentity(kp, cert))
                peer_keys[f"peer{index}"] = kp.public_key
            kp, cert = registry.create_identity("alice", Role.PATIENT, rng)
            state = WorldState()
            apply_block(state, make_genesis_block(cfg))
            policy = EndorsementPolicy.of(m, peer_keys)
            for endorser_count in range(1, n_peers + 1):
                proposal = build_proposal(kp, cert, "consent", "grant_consent",
                                          [b"ANALYTICS", f"g{endorser_count}".encode()],
                                          1, rng)
                responses = [endorse(p, proposal, state, CONTRACTS, cfg,
                                     registry.ca_public)
                             for p in peers[:endorser_count]]
                tx = assemble_transaction(proposal, responses)
                block = build_block(1, bytes(32), 1, [tx])
                flags = validate_block(block, state, policy, set(), peer_keys,
                                       registry.ca_public)
                expected = (ValidationCode.VALID if endorser_count >= m
                            else ValidationCode.ENDORSEMENT_FAILURE)
                assert flags == [expected], (n_peers, m, endorser_count)


class TestNodeCommit:
    def _make_node(self, rig, store=None):
        return Node.bootstrap(rig["cfg"], store or MemoryBlockStore(), rig["policy"],
                              rig["peer_keys"], rig["registry"].ca_public)

    def _endorsed(self, rig, node, contract, function, args, time=1):
        kp, cert = rig["alice"]
        proposal = build_proposal(kp, cert, contract, function, list(args),
                                  time, rig["rng"])
        responses = [endorse(p, proposal, node.state, CONTRACTS, rig["cfg"],
                             rig["registry"].ca_public) for p in rig["peers"][:2]]
        return assemble_transaction(proposal, responses)

    def test_commit_advances_tip_and_emits_events_in_order(self, rig):
        events = []
        node = self._make_node(rig)
        node.event_sink = events.append
        tx1 = self._endorsed(rig, node, "consent", "grant_consent",
                             (b"ANALYTICS", b"g1"))
        tx2 = self._endorsed(rig, node, "consent", "grant_consent",
                             (b"ANALYTICS", b"g2"))
        payload = build_block(1, node.tip_hash(), 1, [tx1, tx2])
        block, emitted = node.commit_block(payload)
        assert node.store.height() == 1
        assert [e.tx_index for e in emitted] == [0, 1]
        assert [e.tx_id for e in events] == [tx1.tx_id, tx2.tx_id]

    def test_double_commit_rejected_and_state_unchanged(self, rig):
        node = self._make_node(rig)
        tx = self._endorsed(rig, node, "consent", "grant_consent", (b"ANALYTICS", b"g"))
        payload = build_block(1, node.tip_hash(), 1, [tx])
        node.commit_block(payload)
        snapshot = node.state.snapshot_bytes()
        with pytest.raises(LedgerError) as excinfo:
            node.commit_block(payload)
        assert excinfo.value.code == "BAD_HEIGHT"
        assert node.state.snapshot_bytes() == snapshot

    def test_crash_between_append_and_apply_recovers_to_replay(self, rig, tmp_path):
        from telechain.ledger import replay
        store = DirectoryBlockStore(str(tmp_path / "node"))
        node = self._make_node(rig, store)
        node.persist_snapshot()
        tx = self._endorsed(rig, node, "consent", "grant_consent", (b"ANALYTICS", b"g"))
        payload = build_block(1, node.tip_hash(), 1, [tx])
        # crash injection: persist the block but never apply it
        flags = validate_block(payload, node.state, rig["policy"], set(node.seen_txids),
                               rig["peer_keys"], rig["registry"].ca_public)
        store.append(payload.with_flags(flags))
        assert node.state.height == 0  # apply never happened

        recovered = Node.recover(rig["cfg"], DirectoryBlockStore(str(tmp_path / "node")),
                                 rig["policy"], rig["peer_keys"],
                                 rig["registry"].ca_public)
        oracle = replay(rig["cfg"], recovered.store.blocks(),
                        ca_public=rig["registry"].ca_public)
        assert recovered.state.snapshot_bytes() == oracle.snapshot_bytes()
        assert recovered.state.height == 1
        assert tx.tx_id in recovered.seen_txids
