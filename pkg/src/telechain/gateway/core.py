"""Gateway core: the node operator's service layer under the HTTP API.

Owns the in-process network, the identity registry and the session manager.
Mutations funnel through the engine's single FIFO queue under one lock;
queries serve from the latest committed state.  The gateway holds network
operator keys (CA, admin, peers) but never user private keys: clients sign
proposals themselves, enrollment either accepts a client public key or
returns a generated key exactly once without storing it.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Optional

from .. import canonical
from ..contracts import base as ns
from ..contracts.access import STATUS_ACTIVE
from ..engine.proposal import Proposal
from ..errors import ClientError, TelechainError
from ..identity import Certificate, Role
from ..ledger.replay import replay, verify_chain
from ..ledger.store import DirectoryBlockStore, GenesisConfig
from ..network.sim import NetworkConfig, NetworkIdentities, SimNetwork
from .audit import audit_trail, metrics_from_blocks
from .sessions import SessionManager

KEYS_FILE = "network_keys.bin"
ADMIN_KEY_FILE = "admin.key"
LEDGER_DIR = "ledger"
REPORT_FILE = "metrics.report"

# the wire contract: every function a client may submit, with its role gate
# (None = any authenticated subject).  Mutations not listed here are rejected.
INTERFACE = {
    ("access", "request_access"): Role.PRACTITIONER,
    ("access", "approve_access"): Role.PATIENT,
    ("access", "grant_access"): Role.PATIENT,
    ("access", "revoke_access"): Role.PATIENT,
    ("access", "add_wrapped_key"): Role.PATIENT,
    ("access", "check_access"): None,
    ("access", "get_grant"): None,
    ("consent", "grant_consent"): Role.PATIENT,
    ("consent", "revoke_consent"): Role.PATIENT,
    ("consent", "consent_status"): None,
    ("records", "store_record"): None,
    ("records", "retrieve_record"): None,
    ("records", "share_record"): Role.PRACTITIONER,
    ("records", "list_records"): None,
    ("messages", "send_message"): None,
    ("messages", "receive_messages"): None,
    ("payments", "credit_account"): Role.ADMIN,
    ("payments", "make_payment"): None,
    ("payments", "refund_payment"): None,
    ("payments", "check_payment_status"): None,
    ("payments", "get_balance"): None,
    ("analytics", "analyze_data"): Role.ANALYST,
    ("analytics", "get_insights"): None,
}


class GatewayCore:
    def __init__(self, home: str, network: SimNetwork, sessions: SessionManager):
        self.home = home
        self.network = network
        self.sessions = sessions
        self.lock = threading.RLock()
        self._cv = threading.Condition(self.lock)
        self._hold_ordering = False

    # --- lifecycle -----------------------------------------------------------

    @classmethod
    def create(cls, home: str, genesis: Optional[GenesisConfig] = None,
               seed: Optional[int] = None) -> "GatewayCore":
        os.makedirs(home, exist_ok=True)
        cfg = (genesis or GenesisConfig()).validate()
        if seed is None:
            seed = int.from_bytes(os.urandom(8), "big")
        network = SimNetwork(NetworkConfig(genesis=cfg, seed=seed,
                                           data_dir=os.path.join(home, LEDGER_DIR)))
        core = cls(home, network, SessionManager())
        core._save_keys()
        return core

    @classmethod
    def open(cls, home: str) -> "GatewayCore":
        ledger_dir = os.path.join(home, LEDGER_DIR)
        keys_path = os.path.join(home, KEYS_FILE)
        if not os.path.exists(keys_path):
            raise TelechainError("BAD_HOME", f"no {KEYS_FILE} under {home}")
        store = DirectoryBlockStore(ledger_dir)
        cfg = store.read_genesis_config()
        with open(keys_path, "rb") as fh:
            identities = NetworkIdentities.from_canonical(fh.read())
        network = SimNetwork(NetworkConfig(genesis=cfg, data_dir=ledger_dir),
                             identities=identities, recover=True)
        return cls(home, network, SessionManager())

    def _save_keys(self) -> None:
        path = os.path.join(self.home, KEYS_FILE)
        with open(path, "wb") as fh:
            fh.write(self.network.identities.to_canonical())
        os.chmod(path, 0o600)
        admin_path = os.path.join(self.home, ADMIN_KEY_FILE)
        admin_cert = self.network.registry.get("admin")
        with open(admin_path, "w") as fh:
            fh.write(self.network.identities.admin.private_seed.hex() + "\n")
            fh.write(admin_cert.to_hex_line() + "\n")
        os.chmod(admin_path, 0o600)

    def close(self) -> None:
        with self.lock:
            self.network.close()
            self._save_keys()

    # --- test hooks -------------------------------------------------------------

    def pause_ordering(self) -> None:
        with self._cv:
            self._hold_ordering = True

    def resume_ordering(self) -> None:
        with self._cv:
            self._hold_ordering = False
            self._cv.notify_all()

    # --- identity & sessions ------------------------------------------------------

    def enroll(self, subject_id: str, role_name: str,
               public_key_hex: Optional[str] = None) -> dict:
        try:
            role = Role(role_name)
        except ValueError:
            raise ClientError("BAD_ROLE", role_name) from None
        public_key = bytes.fromhex(public_key_hex) if public_key_hex else None
        with self.lock:
            keypair, cert = self.network.registry.create_identity(
                subject_id, role, self.network.rng, public_key=public_key)
            self.network.certs[subject_id] = cert
            handle = self.network.register_identity(cert)
            self._save_keys()  # registry state must survive a restart
        if handle.status != "VALID":
            raise ClientError("ENROLL_FAILED", handle.status or "")
        out = {"subject_id": subject_id, "role": role.value,
               "certificate": cert.to_hex_line()}
        if keypair is not None:
            # returned exactly once; the gateway keeps no copy
            out["private_key"] = keypair.private_seed.hex()
        return out

    def certificate_for(self, subject_id: str) -> Certificate:
        cert = self.network.registry.get(subject_id)
        if cert is None:
            raise ClientError("UNKNOWN_SUBJECT", subject_id)
        return cert

    def login_challenge(self, subject_id: str) -> bytes:
        self.certificate_for(subject_id)
        return self.sessions.issue_challenge(subject_id)

    def login_verify(self, subject_id: str, challenge: bytes, signature: bytes) -> dict:
        cert = self.certificate_for(subject_id)
        if self.network.registry.is_revoked(subject_id):
            raise ClientError("REVOKED", subject_id)
        if not self.sessions.verify_challenge(subject_id, challenge, signature, cert):
            raise ClientError("BAD_CHALLENGE", subject_id)
        token, expires = self.sessions.issue_token(subject_id)
        return {"token": token, "expires_at": expires,
                "subject_id": subject_id, "role": cert.role.value}

    def authenticate(self, token: str) -> Certificate:
        subject = self.sessions.verify_token(token)
        if subject is None:
            raise ClientError("BAD_TOKEN", "invalid or expired token")
        return self.certificate_for(subject)

    # --- submission ------------------------------------------------------------

    def submit_signed(self, subject_id: str, contract: str, function: str,
                      args: list[bytes], client_time: int, nonce: bytes,
                      signature: bytes) -> dict:
        gate = INTERFACE.get((contract, function))
        if (contract, function) not in INTERFACE:
            raise ClientError("UNKNOWN_FUNCTION", f"{contract}.{function}")
        cert = self.certificate_for(subject_id)
        if gate is not None and cert.role is not gate:
            raise ClientError("ROLE_GATE", f"{function} requires {gate.value}")
        proposal = Proposal(
            contract=contract, function=function, args=tuple(args),
            creator=cert, client_time=client_time, nonce=nonce,
            client_signature=signature,
        )
        if not proposal.verify():
            raise ClientError("BAD_PROPOSAL", "client signature does not verify")
        with self.lock:
            handle = self.network.submit_proposal_async(proposal)
        self._drive(handle)
        return {
            "tx_id": handle.tx_id.hex(),
            "status": handle.status,
            "response": (handle.response or b"").hex(),
        }

    def _drive(self, handle) -> None:
        with self._cv:
            while self._hold_ordering and not handle.terminal:
                self._cv.wait()
        while not handle.terminal:
            with self.lock:
                if not handle.terminal:
                    self.network.tick()

    # --- committed-state queries ---------------------------------------------------

    @property
    def state(self):
        return self.network.primary.node.state

    @property
    def store(self):
        return self.network.primary.node.store

    def covers(self, caller_id: str, patient_id: str, scope: str) -> bool:
        """Read-only mirror of the access contract's gate, for query endpoints."""
        if caller_id == patient_id:
            return True
        with self.lock:
            for _, raw, _ in self.state.range_scan(
                    ns.NS_ACCESS + patient_id.encode() + b"/"):
                grant = canonical.decode(raw)
                if (grant[b"practitioner"] == caller_id
                        and grant[b"status"] == STATUS_ACTIVE
                        and (not grant[b"expires_at"]
                             or self.network.now < grant[b"expires_at"])
                        and scope in grant[b"scope"]):
                    return True
            return False

    def era_for(self, patient_id: str) -> int:
        raw = self.state.get_value(ns.key(ns.NS_ERA, patient_id))
        return canonical.decode(raw) if raw is not None else 0

    def records_for(self, patient_id: str) -> list[dict]:
        with self.lock:
            out = []
            prefix = ns.NS_RECORD_INDEX + patient_id.encode() + b"/"
            for index_key, _, _ in self.state.range_scan(prefix):
                record_id = index_key[len(prefix):].decode()
                meta_raw = self.state.get_value(ns.key(ns.NS_RECORD_META, record_id))
                env_raw = self.state.get_value(ns.key(ns.NS_RECORD, record_id))
                if meta_raw is None or env_raw is None:
                    continue
                meta = canonical.decode(meta_raw)
                out.append({
                    "record_id": meta[b"record_id"],
                    "patient_id": meta[b"patient"],
                    "author_id": meta[b"author"],
                    "record_type": meta[b"type"],
                    "created_at": meta[b"created_at"],
                    "public_metadata": {k.decode(): v for k, v in meta[b"metadata"].items()},
                    "envelope": env_raw.hex(),
                })
            out.sort(key=lambda r: (r["created_at"], r["record_id"]))
            return out

    def messages_for(self, subject_id: str, since: int = 0) -> list[dict]:
        with self.lock:
            out = []
            prefix = ns.NS_MESSAGE + subject_id.encode() + b"/"
            for msg_key, env_raw, _ in self.state.range_scan(prefix):
                tail = msg_key[len(prefix):].decode()
                sent_at_hex, _, message_id = tail.partition("/")
                sent_at = int(sent_at_hex, 16)
                if sent_at < since:
                    continue
                meta_raw = self.state.get_value(ns.key(ns.NS_MESSAGE_META, message_id))
                meta = canonical.decode(meta_raw) if meta_raw else {}
                out.append({
                    "message_id": message_id,
                    "sender_id": meta.get(b"sender", ""),
                    "recipient_id": subject_id,
                    "sent_at": sent_at,
                    "envelope": env_raw.hex(),
                })
            out.sort(key=lambda m: (m["sent_at"], m["message_id"]))
            return out

    def grants_for(self, subject_id: str) -> list[dict]:
        """Grants where the subject is the patient or the practitioner."""
        with self.lock:
            out = []
            for _, raw, _ in self.state.range_scan(ns.NS_ACCESS):
                grant = canonical.decode(raw)
                if subject_id not in (grant[b"patient"], grant[b"practitioner"]):
                    continue
                out.append({
                    "grant_id": grant[b"grant_id"],
                    "patient_id": grant[b"patient"],
                    "practitioner_id": grant[b"practitioner"],
                    "scope": list(grant[b"scope"]),
                    "status": grant[b"status"],
                    "expires_at": grant[b"expires_at"],
                    "created_at": grant[b"created_at"],
                    "wrapped_keys": {k.decode(): v.hex()
                                     for k, v in grant[b"wrapped_keys"].items()},
                })
            out.sort(key=lambda g: (g["created_at"], g["grant_id"]))
            return out

    def consents_for(self, patient_id: str) -> list[dict]:
        with self.lock:
            out = []
            prefix = ns.NS_CONSENT + patient_id.encode() + b"/"
            for _, raw, _ in self.state.range_scan(prefix):
                consent = canonical.decode(raw)
                out.append({
                    "consent_id": consent[b"consent_id"],
                    "patient_id": consent[b"patient"],
                    "purpose": consent[b"purpose"],
                    "grantee": consent[b"grantee"],
                    "status": consent[b"status"],
                    "granted_at": consent[b"granted_at"],
                    "revoked_at": consent[b"revoked_at"],
                })
            out.sort(key=lambda c: (c["granted_at"], c["consent_id"]))
            return out

    def payment(self, payment_id: str) -> Optional[dict]:
        raw = self.state.get_value(ns.key(ns.NS_PAYMENT, payment_id))
        if raw is None:
            return None
        return self._payment_dict(canonical.decode(raw))

    def payments_for(self, subject_id: str) -> list[dict]:
        with self.lock:
            out = []
            for _, raw, _ in self.state.range_scan(ns.NS_PAYMENT):
                record = canonical.decode(raw)
                if subject_id in (record[b"payer"], record[b"payee"]):
                    out.append(self._payment_dict(record))
            out.sort(key=lambda p: (p["created_at"], p["payment_id"]))
            return out

    @staticmethod
    def _payment_dict(record: dict) -> dict:
        return {
            "payment_id": record[b"payment_id"],
            "payer_id": record[b"payer"],
            "payee_id": record[b"payee"],
            "amount": record[b"amount"],
            "reference": record[b"reference"],
            "status": record[b"status"],
            "refunded_total": record[b"refunded_total"],
            "created_at": record[b"created_at"],
        }

    def balance(self, subject_id: str) -> int:
        raw = self.state.get_value(ns.key(ns.NS_BALANCE, subject_id))
        return canonical.decode(raw) if raw is not None else 0

    def block_json(self, height: int) -> dict:
        block = self.store.get(height)
        return {
            "height": block.height,
            "prev_hash": block.prev_hash.hex(),
            "data_hash": block.data_hash.hex(),
            "ordering_time": block.ordering_time,
            "tx_ids": [tx.tx_id.hex() for tx in block.txs],
            "flags": [flag.value for flag in block.validation_flags],
        }

    def audit(self, patient_id: str, from_height: int = 0,
              to_height: Optional[int] = None) -> list[dict]:
        with self.lock:
            blocks = list(self.store.blocks())
        return [e.to_dict() for e in audit_trail(blocks, patient_id, from_height, to_height)]

    def metrics(self) -> dict:
        with self.lock:
            blocks = list(self.store.blocks())
        out = metrics_from_blocks(blocks)
        report_path = os.path.join(self.home, REPORT_FILE)
        if os.path.exists(report_path):
            with open(report_path) as fh:
                out["bench"] = json.load(fh)
        return out

    def write_bench_report(self, report: dict) -> None:
        with open(os.path.join(self.home, REPORT_FILE), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)

    def verify(self) -> dict:
        with self.lock:
            blocks = list(self.store.blocks())
            report = verify_chain(blocks, self.network.registry.ca_public,
                                  self.network.cfg)
            live = self.state.snapshot_bytes()
        result = {"ok": bool(report), "height": report.height, "reason": report.reason}
        if report:
            replayed = replay(self.network.cfg, blocks, verify=False)
            result["replay_matches"] = replayed.snapshot_bytes() == live
            result["ok"] = result["ok"] and result["replay_matches"]
        return result
