"""In-process simulated permissioned network.

N endorsing peers, one orderer, one committer view per peer, all driven by a
single-threaded event loop over logical ticks.  A 64-bit seed fully
determines key generation and nonces, so two runs of the same script produce
bit-identical block files and transcripts.

The harness also plays the role of every client it enrolled: it holds those
subjects' key pairs (real deployments keep them browser/CLI-side) and runs
the client half of the pipeline: endorsement collection, dissenter dropping,
assembly, submission to the orderer.  Externally signed proposals enter
through ``submit_proposal_async`` (the gateway path; no key custody here).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .. import canonical
from ..engine import (
    BlockCutter,
    EndorsementPolicy,
    Node,
    PeerIdentity,
    ProposalResponse,
    assemble_transaction,
    build_proposal,
    decode_response,
    endorse,
)
from ..engine.endorse import sign_endorsement
from ..engine.orderer import build_block
from ..engine.proposal import Proposal
from ..errors import ClientError, TelechainError
from ..identity import Certificate, IdentityRegistry, KeyPair, Role
from ..ledger.blocks import Block, ValidationCode, hash_block
from ..ledger.rwset import ReadWriteSet
from ..ledger.state import apply_block
from ..ledger.store import DirectoryBlockStore, GenesisConfig, MemoryBlockStore
from ..contracts import CONTRACTS
from .transcript import ScenarioTranscript

ADMIN_ID = "admin"
ORDERER_ID = "orderer"


class FaultKind(str, Enum):
    CRASH_PEER = "CRASH_PEER"
    DIVERGENT_ENDORSER = "DIVERGENT_ENDORSER"
    DELAY = "DELAY"
    DROP_PROPOSAL = "DROP_PROPOSAL"


@dataclass(frozen=True)
class NetworkConfig:
    genesis: GenesisConfig = field(default_factory=GenesisConfig)
    seed: int = 0
    data_dir: Optional[str] = None  # peer0 persists here when set
    latency: Tuple[Tuple[str, int], ...] = ()  # (peer_id, delay ticks)
    fault_plan: Tuple[Tuple[int, str, str, int], ...] = ()  # (tick, target, kind, param)

    def validate(self) -> "NetworkConfig":
        self.genesis.validate()
        return self


@dataclass
class TxHandle:
    ref: str
    tx_id: bytes
    contract: str
    function: str
    status: Optional[str] = None  # terminal code string once resolved
    response: Optional[bytes] = None  # endorsed contract response data

    @property
    def terminal(self) -> bool:
        return self.status is not None


class NetworkIdentities:
    """The network-operator key material: CA, admin, peers, orderer.

    Persisted by the gateway so a node can restart; user keys are never in
    here (clients keep their own).
    """

    def __init__(self, registry: IdentityRegistry, admin: KeyPair,
                 peers: List[PeerIdentity], orderer: KeyPair):
        self.registry = registry
        self.admin = admin
        self.peers = peers
        self.orderer = orderer

    @classmethod
    def generate(cls, rng: random.Random, n_peers: int) -> "NetworkIdentities":
        registry = IdentityRegistry.create(rng)
        admin_kp, _ = registry.create_identity(ADMIN_ID, Role.ADMIN, rng)
        peers = []
        for i in range(n_peers):
            kp, cert = registry.create_identity(f"peer{i}", Role.PEER, rng)
            peers.append(PeerIdentity(keypair=kp, certificate=cert))
        orderer_kp, _ = registry.create_identity(ORDERER_ID, Role.ORDERER, rng)
        return cls(registry, admin_kp, peers, orderer_kp)

    def to_canonical(self) -> bytes:
        return canonical.encode({
            b"ca_seed": self.registry.ca_keypair.private_seed,
            b"clock": self.registry._clock,
            b"revoked": sorted(self.registry.revoked),
            b"certs": {subject.encode(): cert.to_canonical()
                       for subject, cert in self.registry.certificates.items()},
            b"admin_seed": self.admin.private_seed,
            b"peer_seeds": [p.keypair.private_seed for p in self.peers],
            b"orderer_seed": self.orderer.private_seed,
        })

    @classmethod
    def from_canonical(cls, data: bytes) -> "NetworkIdentities":
        m = canonical.decode(data)
        registry = IdentityRegistry(ca_keypair=KeyPair.from_seed(m[b"ca_seed"]))
        registry._clock = m[b"clock"]
        registry.revoked = set(m[b"revoked"])
        for raw in m[b"certs"].values():
            cert = Certificate.from_canonical(raw)
            registry.certificates[cert.subject_id] = cert
        peers = []
        for index, seed in enumerate(m[b"peer_seeds"]):
            cert = registry.certificates[f"peer{index}"]
            peers.append(PeerIdentity(keypair=KeyPair.from_seed(seed), certificate=cert))
        return cls(registry, KeyPair.from_seed(m[b"admin_seed"]), peers,
                   KeyPair.from_seed(m[b"orderer_seed"]))


class _Peer:
    def __init__(self, peer_id: str, identity: PeerIdentity, node: Node):
        self.peer_id = peer_id
        self.identity = identity
        self.node = node
        self.crashed = False
        self.divergent = False
        self.drop_proposals = False
        self.delay = 0
        self.last_due = 0  # delivery channel is FIFO: due ticks never decrease
        self.inbox: List[Tuple[int, Block]] = []  # (due tick, block payload)


class SimNetwork:
    def __init__(self, config: NetworkConfig,
                 transcript: Optional[ScenarioTranscript] = None,
                 identities: Optional[NetworkIdentities] = None,
                 recover: bool = False):
        config.validate()
        self.config = config
        self.cfg = config.genesis
        self.rng = random.Random(config.seed)
        self.now = 0
        self.transcript = transcript
        self.identities = identities or NetworkIdentities.generate(self.rng, self.cfg.n_peers)
        self.registry = self.identities.registry
        self.wallets: Dict[str, KeyPair] = {ADMIN_ID: self.identities.admin}
        self.certs: Dict[str, Certificate] = dict(self.registry.certificates)
        self._handles: Dict[bytes, TxHandle] = {}
        self._refs = 0
        self._pending_faults: List[Tuple[int, str, FaultKind, int]] = []

        peer_ids = [p.peer_id for p in self.identities.peers]
        self.policy = EndorsementPolicy.of(self.cfg.policy_threshold, peer_ids)
        self.peer_keys = {p.peer_id: p.keypair.public_key for p in self.identities.peers}

        self.peers: List[_Peer] = []
        for index, identity in enumerate(self.identities.peers):
            if index == 0 and config.data_dir:
                store = DirectoryBlockStore(config.data_dir)
                if recover and store.height() >= 0:
                    node = Node.recover(self.cfg, store, self.policy,
                                        self.peer_keys, self.registry.ca_public)
                else:
                    store.write_genesis_config(self.cfg)
                    node = Node.bootstrap(self.cfg, store, self.policy,
                                          self.peer_keys, self.registry.ca_public)
            else:
                node = Node.bootstrap(self.cfg, MemoryBlockStore(), self.policy,
                                      self.peer_keys, self.registry.ca_public)
            self.peers.append(_Peer(identity.peer_id, identity, node))

        primary_node = self.peers[0].node
        if primary_node.store.height() > self.peers[-1].node.store.height():
            # recovery: bring the in-memory peers up to the persisted tip
            for peer in self.peers[1:]:
                for height in range(1, primary_node.store.height() + 1):
                    block = primary_node.store.get(height)
                    peer.node.store.append(block)
                    apply_block(peer.node.state, block)
                    for tx in block.txs:
                        peer.node.seen_txids.add(tx.tx_id)
        # the chain is authoritative for certificates: restore identities
        # registered on-chain (revocations live in the operator key file)
        for _, raw, _ in primary_node.state.range_scan(b"id/"):
            cert = Certificate.from_canonical(raw)
            self.registry.certificates.setdefault(cert.subject_id, cert)
            self.certs.setdefault(cert.subject_id, cert)

        self.orderer_crashed = False
        self.cutter = BlockCutter(self.cfg.block_max_txs, self.cfg.block_max_wait)
        tip = primary_node.store.tip()
        self._next_height = tip.height + 1
        self._prev_hash = hash_block(tip)
        self.now = tip.ordering_time

        for peer_id, delay in config.latency:
            peer = next((p for p in self.peers if p.peer_id == peer_id), None)
            if peer is None:
                raise ClientError("UNKNOWN_TARGET", peer_id)
            peer.delay = delay
        for tick, target, kind, param in config.fault_plan:
            self.inject_fault(tick, target, FaultKind(kind), param)

        genesis_hash = hash_block(primary_node.store.get(0))
        self._record("start", tick=self.now, genesis_hash=genesis_hash,
                     peers=len(self.peers), recovered=int(tip.height > 0))
        if self.transcript is not None:
            # the transcript alone must suffice to replay the final state
            for block in primary_node.store.blocks():
                self.transcript.on_block(block.ordering_time, block)
        # the admin's own on-chain registration happens lazily, right before
        # the first identity it registers, so an idle network stays at genesis
        self._admin_registered = (
            primary_node.state.get_value(b"id/" + ADMIN_ID.encode()) is not None)

    # --- plumbing -----------------------------------------------------------

    def _record(self, kind: str, **fields) -> None:
        if self.transcript is not None:
            self.transcript.record(kind, **fields)

    @property
    def primary(self) -> _Peer:
        return self.peers[0]

    def tip_hashes(self) -> Dict[str, bytes]:
        return {p.peer_id: p.node.tip_hash() for p in self.peers if not p.crashed}

    def handle_for(self, tx_id: bytes) -> TxHandle:
        return self._handles[tx_id]

    # --- enrollment -----------------------------------------------------------

    def enroll(self, subject_id: str, role: Role) -> Certificate:
        """Harness-held identity: issue, keep the wallet, register on-chain."""
        keypair, cert = self.registry.create_identity(subject_id, role, self.rng)
        self.wallets[subject_id] = keypair
        self.certs[subject_id] = cert
        self._record("enroll", tick=self.now, subject=subject_id, role=role.value)
        handle = self.register_identity(cert)
        if handle.status != ValidationCode.VALID.value:
            raise ClientError("ENROLL_FAILED", f"{subject_id}: {handle.status}")
        return cert

    def register_identity(self, cert: Certificate) -> TxHandle:
        """Synchronous on-chain registration, signed by the network admin."""
        if not self._admin_registered and cert.subject_id != ADMIN_ID:
            self._admin_registered = True
            self.register_identity(self.certs[ADMIN_ID])
        handle = self.submit_async(ADMIN_ID, "identity", "register",
                                   [cert.to_canonical()])
        if not handle.terminal:
            self.drive(handle)
        if cert.subject_id == ADMIN_ID:
            self._admin_registered = True
        return handle

    # --- the client half of the pipeline ---------------------------------------

    def submit_async(self, subject_id: str, contract: str, function: str,
                     args, client_time: Optional[int] = None) -> TxHandle:
        wallet = self.wallets.get(subject_id)
        cert = self.certs.get(subject_id)
        if wallet is None or cert is None:
            raise ClientError("UNKNOWN_SUBJECT", subject_id)
        if client_time is None:
            client_time = self.now
        proposal = build_proposal(wallet, cert, contract, function, args,
                                  client_time, self.rng)
        return self.submit_proposal_async(proposal)

    def submit_proposal_async(self, proposal: Proposal) -> TxHandle:
        """Endorse, assemble and enqueue; terminal status arrives on commit."""
        self._refs += 1
        ref = f"t{self._refs}"
        tx_id = proposal.tx_id()
        handle = TxHandle(ref=ref, tx_id=tx_id, contract=proposal.contract,
                          function=proposal.function)
        self._handles[tx_id] = handle
        self._record("proposal", tick=self.now, ref=ref, tx_id=tx_id,
                     creator=proposal.creator.subject_id,
                     contract=proposal.contract, function=proposal.function,
                     args=list(proposal.args))
        if self.transcript is not None:
            self.transcript.on_submit(self.now, tx_id)

        if self.orderer_crashed:
            handle.status = "CLIENT:ORDERER_UNAVAILABLE"
            self._record("client_error", tick=self.now, ref=ref, code="ORDERER_UNAVAILABLE")
            return handle

        responses: List[ProposalResponse] = []
        client_error: Optional[ClientError] = None
        for peer in self.peers:
            if peer.crashed or peer.drop_proposals:
                continue
            try:
                resp = endorse(peer.identity, proposal, peer.node.state, CONTRACTS,
                               self.cfg, self.registry.ca_public, self.registry.revoked)
            except ClientError as exc:
                client_error = client_error or exc
                continue
            if peer.divergent:
                resp = self._corrupt_response(peer, proposal, resp)
            responses.append(resp)
            self._record("endorsement", tick=self.now, ref=ref,
                         peer=peer.peer_id,
                         rwset_digest=resp.endorsement.rwset_digest)
        try:
            if not responses:
                raise client_error or ClientError("NO_MATCHING_ENDORSEMENTS",
                                                  "no peer endorsed the proposal")
            tx = assemble_transaction(proposal, responses, threshold=1)
        except ClientError as exc:
            handle.status = f"CLIENT:{exc.code}"
            self._record("client_error", tick=self.now, ref=ref, code=exc.code)
            return handle

        for batch in self.cutter.add(tx, self.now):
            self._emit_block(batch)
        return handle

    def _corrupt_response(self, peer: _Peer, proposal, resp: ProposalResponse) -> ProposalResponse:
        """Divergent endorser: self-consistent corruption of the rwset."""
        corrupted = ReadWriteSet(
            reads=resp.rwset.reads,
            writes=resp.rwset.writes + ((b"div/" + peer.peer_id.encode(), proposal.tx_id()),),
        )
        return sign_endorsement(peer.identity, proposal.tx_id(), corrupted, resp.response)

    # --- ordering and delivery ---------------------------------------------------

    def _emit_block(self, batch) -> None:
        block = build_block(self._next_height, self._prev_hash, self.now, batch)
        self._prev_hash = hash_block(block)
        self._next_height += 1
        for peer in self.peers:
            if peer.crashed:
                continue
            # a shrinking delay must not let this block overtake earlier ones
            due = max(self.now + peer.delay, peer.last_due)
            peer.last_due = due
            peer.inbox.append((due, block))
        self._deliver_due()

    def _deliver_due(self) -> None:
        for peer in self.peers:
            if peer.crashed or not peer.inbox:
                continue
            ready = [entry for entry in peer.inbox if entry[0] <= self.now]
            if not ready:
                continue
            peer.inbox = [entry for entry in peer.inbox if entry[0] > self.now]
            for _, payload in sorted(ready, key=lambda e: e[1].height):
                committed, events = peer.node.commit_block(payload)
                if peer is self.primary:
                    if self.transcript is not None:
                        self.transcript.on_block(self.now, committed)
                    for event in events:
                        self._resolve(event, committed.txs[event.tx_index])
                        self._record("event", tick=self.now, height=event.height,
                                     tx_index=event.tx_index, tx_id=event.tx_id,
                                     code=event.code.value, contract=event.contract,
                                     function=event.function)

    def _resolve(self, event, tx) -> None:
        handle = self._handles.get(event.tx_id)
        if handle is None or handle.terminal:
            return
        ok, code, data = decode_response(tx.response)
        handle.response = data if ok else None
        if event.code is ValidationCode.CONTRACT_ERROR:
            handle.status = f"CONTRACT_ERROR:{code}"
        else:
            handle.status = event.code.value
        self._record("status", tick=self.now, ref=handle.ref, status=handle.status)

    # --- clock, faults ---------------------------------------------------------

    def tick(self, steps: int = 1) -> None:
        for _ in range(steps):
            self.now += 1
            self._apply_faults()
            if not self.orderer_crashed:
                for batch in self.cutter.poll(self.now):
                    self._emit_block(batch)
            self._deliver_due()

    def inject_fault(self, tick: int, target: str, kind: FaultKind, param: int = 0) -> None:
        if target != ORDERER_ID and target not in {p.peer_id for p in self.peers}:
            raise ClientError("UNKNOWN_TARGET", target)
        self._pending_faults.append((tick, target, kind, param))
        self._pending_faults.sort(key=lambda f: f[0])
        self._record("fault_scheduled", tick=self.now, at=tick, target=target,
                     fault=kind.value, param=param)
        if tick <= self.now:
            self._apply_faults()

    def _apply_faults(self) -> None:
        due = [f for f in self._pending_faults if f[0] <= self.now]
        self._pending_faults = [f for f in self._pending_faults if f[0] > self.now]
        for tick, target, kind, param in due:
            self._record("fault_active", tick=self.now, target=target,
                         fault=kind.value, param=param)
            if target == ORDERER_ID:
                if kind is FaultKind.CRASH_PEER:
                    self.orderer_crashed = True
                continue
            peer = next(p for p in self.peers if p.peer_id == target)
            if kind is FaultKind.CRASH_PEER:
                peer.crashed = True
                peer.inbox.clear()
            elif kind is FaultKind.DIVERGENT_ENDORSER:
                peer.divergent = True
            elif kind is FaultKind.DELAY:
                peer.delay = param
            elif kind is FaultKind.DROP_PROPOSAL:
                peer.drop_proposals = True

    # --- driving --------------------------------------------------------------

    def drive(self, handle: TxHandle, max_ticks: int = 10_000) -> str:
        """Tick until the handle is terminal."""
        for _ in range(max_ticks):
            if handle.terminal:
                break
            self.tick()
        if not handle.terminal:
            raise TelechainError("STUCK", f"{handle.ref} not terminal after {max_ticks} ticks")
        return handle.status

    def submit(self, subject_id: str, contract: str, function: str, args,
               client_time: Optional[int] = None) -> TxHandle:
        """Synchronous submit: full lifecycle, returns a terminal handle."""
        handle = self.submit_async(subject_id, contract, function, args, client_time)
        if not handle.terminal:
            self.drive(handle)
        return handle

    def drain(self, max_ticks: int = 10_000) -> None:
        """Advance until the orderer queue and all delivery inboxes are empty."""
        for _ in range(max_ticks):
            pending_inbox = any(p.inbox for p in self.peers if not p.crashed)
            if len(self.cutter) == 0 and not pending_inbox:
                return
            if self.orderer_crashed and not pending_inbox:
                return
            self.tick()
        raise TelechainError("STUCK", f"network not quiet after {max_ticks} ticks")

    def close(self) -> None:
        for peer in self.peers:
            peer.node.persist_snapshot()


def start_network(config: NetworkConfig,
                  transcript: Optional[ScenarioTranscript] = None) -> SimNetwork:
    """Raises LedgerError(BAD_CONFIG) on an invalid configuration."""
    return SimNetwork(config, transcript)
