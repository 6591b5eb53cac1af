"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report lines.  Tolerances and bounds are pinned here, not configurable.
"""

import itertools
import json
import os
import random
import subprocess
import sys
import time

import pytest

from telechain import canonical, crypto, envelope
from telechain.contracts import base as ns
from telechain.envelope import CipherEnvelope
from telechain.errors import TelechainError
from telechain.gateway.client import ClientKeys
from telechain.gateway.core import GatewayCore
from telechain.identity import Certificate, Role
from telechain.ledger import (
    Block,
    GenesisConfig,
    Transaction,
    replay,
    verify_chain,
)
from telechain.network import FaultKind, NetworkConfig, SimNetwork, run_scenario

DEMO_PATH = os.path.join(os.path.dirname(__file__), "..", "scenarios", "demo.scn")
with open(DEMO_PATH) as _fh:
    DEMO_SCRIPT = _fh.read()

FAULT_SCRIPT = """
enroll alice PATIENT
fault 0 peer2 DELAY:4
submit alice consent grant_consent !str:ANALYTICS !str:ANY-ANALYST
assert-status t1 VALID
fault 40 peer1 DIVERGENT_ENDORSER
tick 45
submit alice consent grant_consent !str:SHARING !str:someone
assert-status t2 VALID
tick 8
"""

DOUBLE_SPEND_SCRIPT = """
enroll alice PATIENT
enroll bob PATIENT
enroll carol PATIENT
submit admin payments credit_account !str:alice !str:100
assert-status t1 VALID
submit alice payments make_payment !str:bob !str:80 !str:a
submit alice payments make_payment !str:carol !str:80 !str:b
tick 6
assert-status t2 VALID
assert-status t3 MVCC_CONFLICT
"""

CI_SCENARIOS = [("demo", DEMO_SCRIPT), ("faults", FAULT_SCRIPT),
                ("double-spend", DOUBLE_SPEND_SCRIPT)]


def report(criterion: str, ok: bool, detail: str = ""):
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {criterion}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def sequential_reexecution_state(cfg, blocks):
    """MVCC serializability oracle: re-run every VALID transaction's contract
    function, in commit order, against an incrementally built state.  The
    writes each re-execution produces must equal the endorsed write set, and
    the final state must equal the committed one."""
    from telechain.contracts import CONTRACTS
    from telechain.engine.context import ContractContext
    from telechain.ledger import Version, WorldState, apply_block

    state = WorldState()
    apply_block(state, blocks[0])
    for block in blocks[1:]:
        for tx_index, (tx, flag) in enumerate(zip(block.txs, block.validation_flags)):
            if flag.value != "VALID":
                continue
            ctx = ContractContext(
                state=state, creator=tx.creator, tx_id=tx.tx_id, args=tx.args,
                client_time=tx.client_time, cfg=cfg)
            CONTRACTS[tx.contract][tx.function](ctx)
            rwset = ctx.rwset()
            assert rwset.writes == tx.rwset.writes, \
                f"re-execution diverged at block {block.height} tx {tx_index}"
            version = Version(block.height, tx_index)
            for key, value in rwset.writes:
                if value is None:
                    state.entries.pop(key, None)
                else:
                    state.entries[key] = (value, version)
        state.height = block.height
    return state


# --------------------------------------------------------------------------
# Criterion 1: chain integrity & replay equality on every CI scenario,
# tamper detection names the exact block, all within 10 seconds.
# --------------------------------------------------------------------------

def test_chain_and_replay():
    started = time.perf_counter()
    for name, script in CI_SCENARIOS:
        transcript = run_scenario(script, seed=1301)
        assert transcript.ok, (name, transcript.failures)
        blocks = transcript.blocks()
        assert verify_chain(blocks, genesis_cfg=transcript.cfg), name

        # replay state must be byte-identical to an independent second run's
        # live state (the dual-execution oracle)
        live = run_scenario(script, seed=1301).replay_state()
        assert transcript.replay_state().snapshot_bytes() == live.snapshot_bytes(), name

        # MVCC serializability: sequential contract re-execution of the VALID
        # transactions reproduces the committed state exactly
        reexecuted = sequential_reexecution_state(transcript.cfg, blocks)
        assert reexecuted.snapshot_bytes() == live.snapshot_bytes(), name

        # tampering with any single transaction byte is caught at that block
        for victim_height in [h for h in (2, len(blocks) // 2, len(blocks) - 1) if h > 0]:
            mutated = list(blocks)
            victim = mutated[victim_height]
            if not victim.txs:
                continue
            tx = victim.txs[0]
            bad_args = (tx.args[0] + b"\x00",) + tx.args[1:] if tx.args else (b"x",)
            bad_tx = Transaction(**{**tx.__dict__, "args": bad_args})
            mutated[victim_height] = Block(
                height=victim.height, prev_hash=victim.prev_hash,
                data_hash=victim.data_hash, ordering_time=victim.ordering_time,
                txs=(bad_tx,) + victim.txs[1:],
                validation_flags=victim.validation_flags)
            verdict = verify_chain(mutated, genesis_cfg=transcript.cfg)
            assert not verdict and verdict.height == victim_height, \
                (name, victim_height, verdict.reason)
    elapsed = time.perf_counter() - started
    report("chain & replay", elapsed < 10.0, f"{elapsed:.2f}s over "
           f"{len(CI_SCENARIOS)} scenarios, tamper detection exact")


# --------------------------------------------------------------------------
# Criterion 2: pipeline correctness: endorsement-policy matrix vs the
# policy-math oracle; 100-seed double spend always yields exactly one VALID
# and one MVCC_CONFLICT.
# --------------------------------------------------------------------------

def _policy_oracle(n_peers, threshold, divergent):
    honest = n_peers - divergent
    winner = honest if honest else (1 if divergent else 0)
    return "VALID" if winner >= threshold else "ENDORSEMENT_FAILURE"


def test_pipeline_correctness():
    checked = 0
    for n_peers in range(1, 5):
        for threshold in range(1, min(3, n_peers) + 1):
            for divergent in range(0, min(3, n_peers) + 1):
                cfg = GenesisConfig(n_peers=n_peers, policy_threshold=threshold)
                net = SimNetwork(NetworkConfig(genesis=cfg, seed=1400 + checked))
                net.enroll("alice", Role.PATIENT)
                for index in range(divergent):
                    net.inject_fault(net.now, f"peer{index}",
                                     FaultKind.DIVERGENT_ENDORSER)
                handle = net.submit("alice", "consent", "grant_consent",
                                    [b"ANALYTICS", b"ANY-ANALYST"])
                expected = _policy_oracle(n_peers, threshold, divergent)
                assert handle.status == expected, \
                    (n_peers, threshold, divergent, handle.status)
                checked += 1

    for seed in range(100):
        net = SimNetwork(NetworkConfig(seed=seed))
        net.enroll("alice", Role.PATIENT)
        net.enroll("bob", Role.PATIENT)
        net.enroll("carol", Role.PATIENT)
        net.submit("admin", "payments", "credit_account", [b"alice", b"100"])
        h1 = net.submit_async("alice", "payments", "make_payment", [b"bob", b"80", b"a"])
        h2 = net.submit_async("alice", "payments", "make_payment", [b"carol", b"80", b"b"])
        net.drain()
        assert sorted([h1.status, h2.status]) == ["MVCC_CONFLICT", "VALID"], seed
    report("pipeline correctness",
           True, f"{checked} policy cells + 100-seed double spend")


# --------------------------------------------------------------------------
# Criterion 3: authorization lifecycle for all six gated operations, plus a
# 10,000-case fuzz against an independent predicate oracle.
# --------------------------------------------------------------------------

def _seal_record(h, patient, record_type=b"vital", payload=b"x"):
    key = envelope.data_key(h.wallets[patient].private_seed, 0)
    return envelope.seal(key, 0, payload,
                         envelope.record_aad(patient, record_type.decode()), h.rng).encode()


def test_authorization_lifecycle_six_operations():
    from conftest import ChainHarness

    failures = []

    def lifecycle(name, setup, use, revoke):
        """grant -> use (must pass) -> revoke -> use (must fail)."""
        h = ChainHarness(cfg=GenesisConfig(analytics_k=1), seed=hash(name) % 2**32)
        h.enroll("alice", Role.PATIENT)
        h.enroll("dr-bob", Role.PRACTITIONER)
        h.enroll("dr-dee", Role.PRACTITIONER)
        h.enroll("ann", Role.ANALYST)
        context = setup(h)
        ok, code, first = use(h, context)
        if not ok:
            failures.append(f"{name}: first use failed with {code}")
            return
        revoke(h, context)
        ok, code, second = use(h, context)
        if ok and name != "analytics-inclusion":
            failures.append(f"{name}: use after revoke still allowed")
        if name == "analytics-inclusion" and first == second:
            failures.append(f"{name}: cohort did not shrink after revoke")

    def grant(h, scope=b"READ"):
        return h.must("alice", "access", "grant_access",
                      [b"dr-bob", scope, b"0", b"wrapped"]).decode()

    # 1. retrieve
    def setup_retrieve(h):
        record_id = h.must("alice", "records", "store_record",
                           [b"alice", b"vital", _seal_record(h, "alice"), b""]).decode()
        return {"grant": grant(h), "record": record_id}
    lifecycle(
        "retrieve",
        setup_retrieve,
        lambda h, c: h.call("dr-bob", "records", "retrieve_record",
                            [c["record"].encode()]),
        lambda h, c: h.must("alice", "access", "revoke_access",
                            [c["grant"].encode()]),
    )

    # 2. store by practitioner
    counter = itertools.count()
    lifecycle(
        "store-by-practitioner",
        lambda h: {"grant": grant(h, b"READ,WRITE")},
        lambda h, c: h.call("dr-bob", "records", "store_record",
                            [b"alice", b"note",
                             _seal_record(h, "alice", b"note",
                                          str(next(counter)).encode()), b""]),
        lambda h, c: h.must("alice", "access", "revoke_access",
                            [c["grant"].encode()]),
    )

    # 3. send_message
    tick = itertools.count(10)
    def use_message(h, c):
        at = next(tick)
        key = envelope.message_key(h.wallets["dr-bob"].private_seed,
                                   h.certs["alice"].public_key)
        env = envelope.seal(key, 0, b"hi",
                            envelope.message_aad("dr-bob", "alice", at), h.rng).encode()
        return h.call("dr-bob", "messages", "send_message", [b"alice", env],
                      client_time=at)
    lifecycle(
        "send_message",
        lambda h: {"grant": grant(h, b"MESSAGE")},
        use_message,
        lambda h, c: h.must("alice", "access", "revoke_access",
                            [c["grant"].encode()]),
    )

    # 4. list
    def setup_list(h):
        h.must("alice", "records", "store_record",
               [b"alice", b"vital", _seal_record(h, "alice"), b""])
        return {"grant": grant(h)}
    lifecycle(
        "list",
        setup_list,
        lambda h, c: h.call("dr-bob", "records", "list_records", [b"alice"]),
        lambda h, c: h.must("alice", "access", "revoke_access",
                            [c["grant"].encode()]),
    )

    # 5. analytics inclusion (cohort shrinks after consent revocation)
    def setup_analytics(h):
        h.must("alice", "records", "store_record",
               [b"alice", b"vital", _seal_record(h, "alice"),
                canonical.encode({b"hr": 70})])
        consent_id = h.must("alice", "consent", "grant_consent",
                            [b"ANALYTICS", b"ANY-ANALYST"]).decode()
        return {"consent": consent_id}
    def use_analytics(h, c):
        ok, code, data = h.call("ann", "analytics", "analyze_data",
                                [b"vital", b"hr", b"COUNT"])
        if not ok:
            return (code == "COHORT_TOO_SMALL", code,
                    0)  # shrink to zero also counts as exclusion
        return True, "", canonical.decode(data)[b"cohort_size"]
    lifecycle(
        "analytics-inclusion",
        setup_analytics,
        use_analytics,
        lambda h, c: h.must("alice", "consent", "revoke_consent",
                            [c["consent"].encode()]),
    )

    # 6. consented sharing
    def setup_share(h):
        record_id = h.must("alice", "records", "store_record",
                           [b"alice", b"vital", _seal_record(h, "alice"), b""]).decode()
        grant(h)
        consent_id = h.must("alice", "consent", "grant_consent",
                            [b"SHARING", b"dr-bob"]).decode()
        return {"record": record_id, "consent": consent_id}
    lifecycle(
        "consented-sharing",
        setup_share,
        lambda h, c: h.call("dr-bob", "records", "share_record",
                            [c["record"].encode(), b"dr-dee", b"wrapped"]),
        lambda h, c: h.must("alice", "consent", "revoke_consent",
                            [c["consent"].encode()]),
    )

    report("authorization lifecycle (6 gated operations)",
           not failures, "; ".join(failures) or "grant/use/revoke/use all enforced")


class _AuthModel:
    """Independent predicate oracle: plain-dict mirror of authorization state."""

    def __init__(self):
        self.grants = {}    # grant_id -> dict
        self.consents = {}  # consent_id -> dict
        self.records = {}   # record_id -> patient
        self.shares = set() # (record_id, recipient)

    def grant_covers(self, caller, patient, scope, now):
        if caller == patient:
            return True
        for g in self.grants.values():
            if (g["patient"] == patient and g["practitioner"] == caller
                    and g["status"] == "ACTIVE"
                    and (g["expires"] == 0 or now < g["expires"])
                    and scope <= g["scope"]):
                return True
        return False

    def consent_active(self, patient, purpose, grantee):
        latest = None
        for c in self.consents.values():
            if c["patient"] == patient and c["purpose"] == purpose \
                    and c["grantee"] == grantee:
                if latest is None or c["at"] > latest["at"]:
                    latest = c
        return latest is not None and latest["status"] == "ACTIVE"

    def may_retrieve(self, caller, record_id, now):
        patient = self.records[record_id]
        return (caller == patient or (record_id, caller) in self.shares
                or self.grant_covers(caller, patient, {"READ"}, now))


def test_authorization_fuzz_10k():
    from conftest import ChainHarness

    rng = random.Random(0xA11CE)
    h = ChainHarness(cfg=GenesisConfig(analytics_k=2), seed=999)
    patients = [f"pat{i}" for i in range(4)]
    practitioners = [f"doc{i}" for i in range(3)]
    for p in patients:
        h.enroll(p, Role.PATIENT)
    for d in practitioners:
        h.enroll(d, Role.PRACTITIONER)
    model = _AuthModel()
    cases = violations = 0
    store_counter = itertools.count()

    def random_scope():
        return set(rng.sample(["READ", "WRITE", "MESSAGE"], rng.randrange(1, 4)))

    while cases < 10_000:
        h.clock = rng.randrange(0, 100)
        roll = rng.random()
        patient = rng.choice(patients)
        doctor = rng.choice(practitioners)
        if roll < 0.10:  # new grant
            scope = random_scope()
            expires = rng.choice([0, rng.randrange(1, 120)])
            grant_id = h.must(patient, "access", "grant_access",
                              [doctor.encode(),
                               ",".join(sorted(scope)).encode(),
                               str(expires).encode(), b"w"]).decode()
            model.grants[grant_id] = {"patient": patient, "practitioner": doctor,
                                      "scope": scope, "status": "ACTIVE",
                                      "expires": expires}
        elif roll < 0.16:  # revoke a random grant (ownership gate checked)
            if model.grants:
                grant_id, g = rng.choice(list(model.grants.items()))
                caller = rng.choice(patients)
                ok, code, _ = h.call(caller, "access", "revoke_access",
                                     [grant_id.encode()])
                expected = caller == g["patient"] and g["status"] != "REVOKED"
                cases += 1
                if ok != expected:
                    violations += 1
                if ok:
                    g["status"] = "REVOKED"
        elif roll < 0.22:  # consent mutation
            purpose = rng.choice(["ANALYTICS", "SHARING"])
            grantee = rng.choice([doctor, "ANY-ANALYST"])
            consent_id = h.must(patient, "consent", "grant_consent",
                                [purpose.encode(), grantee.encode()]).decode()
            for c in model.consents.values():  # supersession
                if (c["patient"], c["purpose"], c["grantee"]) == \
                        (patient, purpose, grantee) and c["status"] == "ACTIVE":
                    c["status"] = "REVOKED"
            model.consents[consent_id] = {"patient": patient, "purpose": purpose,
                                          "grantee": grantee, "status": "ACTIVE",
                                          "at": (h.clock, consent_id)}
        elif roll < 0.26:  # revoke consent
            if model.consents:
                consent_id, c = rng.choice(list(model.consents.items()))
                caller = rng.choice(patients)
                ok, code, _ = h.call(caller, "consent", "revoke_consent",
                                     [consent_id.encode()])
                expected = caller == c["patient"] and c["status"] == "ACTIVE"
                cases += 1
                if ok != expected:
                    violations += 1
                if ok:
                    c["status"] = "REVOKED"
        elif roll < 0.32:  # patient stores own record
            record_id = h.must(patient, "records", "store_record",
                               [patient.encode(), b"vital",
                                _seal_record(h, patient, b"vital",
                                             str(next(store_counter)).encode()),
                                b""]).decode()
            model.records[record_id] = patient
        elif roll < 0.48 and model.records:  # retrieve attempt
            record_id = rng.choice(list(model.records))
            caller = rng.choice(patients + practitioners)
            ok, code, _ = h.call(caller, "records", "retrieve_record",
                                 [record_id.encode()])
            cases += 1
            if ok != model.may_retrieve(caller, record_id, h.clock):
                violations += 1
        elif roll < 0.60:  # practitioner store attempt
            ok, code, _ = h.call(doctor, "records", "store_record",
                                 [patient.encode(), b"note",
                                  _seal_record(h, patient, b"note",
                                               str(next(store_counter)).encode()),
                                  b""])
            cases += 1
            if ok != model.grant_covers(doctor, patient, {"WRITE"}, h.clock):
                violations += 1
        elif roll < 0.72:  # message attempt
            sender, recipient = rng.choice([(doctor, patient), (patient, doctor)])
            key = envelope.message_key(h.wallets[sender].private_seed,
                                       h.certs[recipient].public_key)
            env = envelope.seal(key, 0, b"m",
                                envelope.message_aad(sender, recipient, h.clock),
                                h.rng).encode()
            ok, code, _ = h.call(sender, "messages", "send_message",
                                 [recipient.encode(), env])
            cases += 1
            if ok != model.grant_covers(doctor, patient, {"MESSAGE"}, h.clock):
                violations += 1
        elif roll < 0.84 and model.records:  # share attempt
            record_id = rng.choice(list(model.records))
            recipient = rng.choice(practitioners)
            owner = model.records[record_id]
            ok, code, _ = h.call(doctor, "records", "share_record",
                                 [record_id.encode(), recipient.encode(), b"w"])
            expected = (model.grant_covers(doctor, owner, {"READ"}, h.clock)
                        and model.consent_active(owner, "SHARING", doctor))
            cases += 1
            if ok != expected:
                violations += 1
            if ok:
                model.shares.add((record_id, recipient))
        else:  # list attempt
            caller = rng.choice(patients + practitioners)
            ok, code, _ = h.call(caller, "records", "list_records",
                                 [patient.encode()])
            cases += 1
            if ok != model.grant_covers(caller, patient, {"READ"}, h.clock):
                violations += 1

    report("authorization fuzz", violations == 0,
           f"{cases} gated cases, {violations} violations")


# --------------------------------------------------------------------------
# Criterion 4: token conservation after every block of every scenario;
# 1,000-sequence refund state-machine fuzz never violates the invariant.
# --------------------------------------------------------------------------

PAYMENTS_SCRIPT = """
enroll alice PATIENT
enroll bob PATIENT
enroll dr-bob PRACTITIONER
submit admin payments credit_account !str:alice !str:500
submit admin payments credit_account !str:bob !str:300
tick 6
submit alice payments make_payment !str:dr-bob !str:120 !str:c1
submit bob payments make_payment !str:dr-bob !str:50 !str:c2
submit alice payments make_payment !str:bob !str:10 !str:c3
tick 6
submit alice payments make_payment !str:bob !str:100000 !str:over
assert-status t6 CONTRACT_ERROR:INSUFFICIENT_FUNDS
tick 6
"""


def _conservation_holds_every_block(blocks, cfg):
    from telechain.ledger import WorldState, apply_block
    state = WorldState()
    for block in blocks:
        apply_block(state, block)
        total = 0
        for key, (value, _) in state.entries.items():
            if key.startswith(b"bal/"):
                total += canonical.decode(value)
        minted_raw = state.entries.get(b"sys/minted")
        minted = canonical.decode(minted_raw[0]) if minted_raw else 0
        if total != minted:
            return False, f"block {block.height}: sum={total} minted={minted}"
    return True, ""


def test_token_conservation():
    for name, script in CI_SCENARIOS + [("payments", PAYMENTS_SCRIPT)]:
        transcript = run_scenario(script, seed=1500)
        assert transcript.ok, (name, transcript.failures)
        ok, detail = _conservation_holds_every_block(transcript.blocks(), transcript.cfg)
        assert ok, (name, detail)

    # refund state machine fuzz: 1,000 random payment/refund sequences
    from conftest import ChainHarness
    h = ChainHarness(seed=4321)
    h.enroll("alice", Role.PATIENT)
    h.enroll("dr-bob", Role.PRACTITIONER)
    h.must("admin", "payments", "credit_account", [b"alice", b"10000000"])
    rng = random.Random(0xF00D)
    for sequence in range(1000):
        amount = rng.randrange(1, 300)
        record = canonical.decode(h.must(
            "alice", "payments", "make_payment",
            [b"dr-bob", str(amount).encode(), b"fuzz"]))
        payment_id = record[b"payment_id"]
        refunded = 0
        for _ in range(rng.randrange(0, 4)):
            chunk = rng.randrange(1, 180)
            ok, code, data = h.call("dr-bob", "payments", "refund_payment",
                                    [payment_id.encode(), str(chunk).encode()])
            if ok:
                refunded += chunk
            else:
                assert code in ("OVER_REFUND", "INSUFFICIENT_FUNDS"), code
            current = canonical.decode(h.must(
                "admin", "payments", "check_payment_status", [payment_id.encode()]))
            assert 0 <= current[b"refunded_total"] <= current[b"amount"]
            assert current[b"refunded_total"] == refunded
    report("token conservation", True,
           "per-block equality on 4 scenarios + 1000 refund sequences")


# --------------------------------------------------------------------------
# Criterion 5: privacy scans over committed state and gateway persistence.
# --------------------------------------------------------------------------

def test_privacy_scans(tmp_path):
    home = str(tmp_path / "gw")
    core = GatewayCore.create(home, seed=1601)
    patients = {}
    admin_keys = ClientKeys(seed=core.network.identities.admin.private_seed,
                            certificate=core.network.certs["admin"])

    def submit(keys, contract, function, args, time_=0):
        body = keys.signed_submission(contract, function, args, client_time=time_)
        return core.submit_signed(keys.subject_id, contract, function,
                                  [bytes.fromhex(a) for a in body["args"]],
                                  body["client_time"], bytes.fromhex(body["nonce"]),
                                  bytes.fromhex(body["signature"]))

    for index in range(6):
        blob = core.enroll(f"patient{index}", "PATIENT")
        keys = ClientKeys(seed=bytes.fromhex(blob["private_key"]),
                          certificate=Certificate.from_hex_line(blob["certificate"]))
        patients[f"patient{index}"] = keys
        env = keys.seal_record(0, f"reading {60 + index}".encode(), "vital")
        assert submit(keys, "records", "store_record",
                      [f"patient{index}".encode(), b"vital", env,
                       canonical.encode({b"hr": 60 + index})],
                      time_=index)["status"] == "VALID"
        assert submit(keys, "consent", "grant_consent",
                      [b"ANALYTICS", b"ANY-ANALYST"], time_=index)["status"] == "VALID"

    blob = core.enroll("doc", "PRACTITIONER")
    doc_keys = ClientKeys(seed=bytes.fromhex(blob["private_key"]),
                          certificate=Certificate.from_hex_line(blob["certificate"]))
    alice = patients["patient0"]
    wrapped = alice.wrap_data_key(0, doc_keys.certificate.public_key)
    assert submit(alice, "access", "grant_access",
                  [b"doc", b"READ,MESSAGE", b"0", wrapped])["status"] == "VALID"
    env = doc_keys.seal_message(alice.certificate.public_key, "patient0", b"hello", 30)
    assert submit(doc_keys, "messages", "send_message",
                  [b"patient0", env], time_=30)["status"] == "VALID"

    blob = core.enroll("ann", "ANALYST")
    ann_keys = ClientKeys(seed=bytes.fromhex(blob["private_key"]),
                          certificate=Certificate.from_hex_line(blob["certificate"]))
    assert submit(ann_keys, "analytics", "analyze_data",
                  [b"vital", b"hr", b"MEAN"])["status"] == "VALID"
    # an under-k query must leave no report behind
    assert submit(ann_keys, "analytics", "analyze_data",
                  [b"lab", b"hr", b"MEAN"])["status"] in (
        "CONTRACT_ERROR:UNKNOWN_FIELD", "CONTRACT_ERROR:COHORT_TOO_SMALL")

    state = core.state
    k = core.network.cfg.analytics_k

    # (a) every value under rec/ and msg/ parses as a CipherEnvelope and
    # fails to decrypt under any key other than the intended one
    sealed_values = []
    for prefix in (b"rec/", b"msg/"):
        sealed_values += [value for key, value, _ in state.range_scan(prefix)]
    assert sealed_values
    ok_a = all(value.startswith(b"TCH1") for value in sealed_values)
    for value in sealed_values:
        parsed = CipherEnvelope.decode(value)  # raises on malformed
        wrong = crypto.generate_seed(random.Random(1))
        try:
            crypto.aead_decrypt(wrong, parsed.nonce, parsed.ciphertext,
                                parsed.aad_digest)
            ok_a = False
        except TelechainError:
            pass

    # (b) no insight report below the k floor, (c) no patient ids inside any
    reports = [value for key, value, _ in state.range_scan(b"ins/")]
    assert reports
    ok_b = all(canonical.decode(r)[b"cohort_size"] >= k for r in reports)
    ok_c = all(name.encode() not in r for r in reports for name in patients)

    # (d) no user private key bytes in gateway persistence
    core.close()
    blobs = []
    for root, _, files in os.walk(home):
        for file_name in files:
            with open(os.path.join(root, file_name), "rb") as fh:
                blobs.append(fh.read())
    user_seeds = [keys.seed for keys in patients.values()] + \
        [doc_keys.seed, ann_keys.seed]
    ok_d = all(seed not in blob and seed.hex().encode() not in blob
               for seed in user_seeds for blob in blobs)

    report("privacy scans", ok_a and ok_b and ok_c and ok_d,
           f"envelopes={len(sealed_values)} reports={len(reports)} "
           f"files={len(blobs)} [a={ok_a} b={ok_b} c={ok_c} d={ok_d}]")


# --------------------------------------------------------------------------
# Criterion 6: determinism: same script + seed => bit-identical block files
# and transcripts.
# --------------------------------------------------------------------------

def test_determinism_bit_identical(tmp_path):
    outputs = []
    for run in ("a", "b"):
        data_dir = str(tmp_path / run)
        transcript = run_scenario(DEMO_SCRIPT, seed=77, data_dir=data_dir)
        assert transcript.ok, transcript.failures
        files = {}
        blocks_dir = os.path.join(data_dir, "blocks")
        for file_name in sorted(os.listdir(blocks_dir)):
            with open(os.path.join(blocks_dir, file_name), "rb") as fh:
                files[file_name] = fh.read()
        outputs.append((files, transcript.to_canonical_bytes(), transcript.to_text()))
    same_files = outputs[0][0] == outputs[1][0]
    same_transcripts = outputs[0][1] == outputs[1][1] and outputs[0][2] == outputs[1][2]
    different_seed = run_scenario(DEMO_SCRIPT, seed=78).to_canonical_bytes()
    report("determinism", same_files and same_transcripts,
           f"{len(outputs[0][0])} block files bit-identical; "
           f"seed change diverges={different_seed != outputs[0][1]}")


# --------------------------------------------------------------------------
# Criterion 7: desk-scale throughput report (informational numbers, hard
# bound only on wall time) emitted through the CLI.
# --------------------------------------------------------------------------

def test_throughput_report(tmp_path):
    home = str(tmp_path / "bench")
    started = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "telechain.cli", "bench", "--home", home,
         "--txs", "10000", "--accounts", "100", "--seed", "1"],
        capture_output=True, text=True, timeout=120)
    elapsed = time.perf_counter() - started
    assert proc.returncode == 0, proc.stderr
    bench = json.loads(proc.stdout)
    assert bench["submitted"] == 10_000 and bench["valid"] == 10_000

    metrics_proc = subprocess.run(
        [sys.executable, "-m", "telechain.cli", "metrics", "--home", home],
        capture_output=True, text=True, timeout=60)
    assert metrics_proc.returncode == 0, metrics_proc.stderr
    metrics = json.loads(metrics_proc.stdout)
    assert metrics["by_code"]["VALID"] >= 10_000
    assert metrics["bench"]["tx_per_s"] > 0
    assert "latency_ticks" in metrics
    report("throughput", elapsed < 60.0,
           f"10k txs in {elapsed:.1f}s wall, {metrics['bench']['tx_per_s']} tx/s, "
           f"p95 latency {metrics['latency_ticks']['p95']} ticks, 3 peers m=2")
