"""Access control contract: practitioner access to patient records.

Grants are patient-owned state machines PENDING -> ACTIVE -> REVOKED (or a
direct ACTIVE grant from the patient).  Approving or granting stores the
patient's current-era data key wrapped to the practitioner's public key;
revoking bumps the patient's key era so later records use a fresh key.
Already-shared eras stay readable: an immutable ledger cannot unshare
history (forward-only revocation).
"""

from __future__ import annotations

from .. import canonical
from ..identity import Role
from . import base

STATUS_PENDING = "PENDING"
STATUS_ACTIVE = "ACTIVE"
STATUS_REVOKED = "REVOKED"


def _grant_key(patient_id: str, grant_id: str) -> bytes:
    return base.key(base.NS_ACCESS, patient_id, grant_id)


def _era_key(patient_id: str) -> bytes:
    return base.key(base.NS_ERA, patient_id)


def request_access(ctx) -> bytes:
    ctx.require_role(Role.PRACTITIONER, "NOT_PRACTITIONER")
    patient_id = ctx.arg_str(0)
    scope = base.parse_scopes(ctx.arg_str(1))
    ctx.require(ctx.subject_role(patient_id) is Role.PATIENT, "UNKNOWN_PATIENT", patient_id)
    grant_id = ctx.new_id(b"grant")
    base.put_map(ctx, _grant_key(patient_id, grant_id), {
        b"grant_id": grant_id,
        b"patient": patient_id,
        b"practitioner": ctx.caller,
        b"scope": list(scope),
        b"status": STATUS_PENDING,
        b"expires_at": 0,
        b"wrapped_keys": {},
        b"created_at": ctx.client_time,
    })
    return grant_id.encode()


def approve_access(ctx) -> bytes:
    grant_id = ctx.arg_str(0)
    wrapped_key = ctx.arg(1)
    state_key = _grant_key(ctx.caller, grant_id)
    grant = base.get_map(ctx, state_key)
    ctx.require(grant is not None, "NOT_OWNER", grant_id)
    ctx.require(grant[b"status"] == STATUS_PENDING, "BAD_STATE", grant[b"status"])
    era = base.get_u64(ctx, _era_key(ctx.caller))
    grant[b"status"] = STATUS_ACTIVE
    grant[b"wrapped_keys"] = dict(grant[b"wrapped_keys"])
    grant[b"wrapped_keys"][str(era).encode()] = wrapped_key
    base.put_map(ctx, state_key, grant)
    return grant_id.encode()


def grant_access(ctx) -> bytes:
    ctx.require_role(Role.PATIENT, "NOT_PATIENT")
    practitioner_id = ctx.arg_str(0)
    scope = base.parse_scopes(ctx.arg_str(1))
    expires_at = ctx.arg_u64(2)
    wrapped_key = ctx.arg(3)
    ctx.require(ctx.subject_role(practitioner_id) is Role.PRACTITIONER,
                "UNKNOWN_PRACTITIONER", practitioner_id)
    era = base.get_u64(ctx, _era_key(ctx.caller))
    grant_id = ctx.new_id(b"grant")
    base.put_map(ctx, _grant_key(ctx.caller, grant_id), {
        b"grant_id": grant_id,
        b"patient": ctx.caller,
        b"practitioner": practitioner_id,
        b"scope": list(scope),
        b"status": STATUS_ACTIVE,
        b"expires_at": expires_at,
        b"wrapped_keys": {str(era).encode(): wrapped_key},
        b"created_at": ctx.client_time,
    })
    return grant_id.encode()


def revoke_access(ctx) -> bytes:
    grant_id = ctx.arg_str(0)
    state_key = _grant_key(ctx.caller, grant_id)
    grant = base.get_map(ctx, state_key)
    ctx.require(grant is not None, "NOT_OWNER", grant_id)
    ctx.require(grant[b"status"] in (STATUS_ACTIVE, STATUS_PENDING), "BAD_STATE",
                grant[b"status"])
    grant[b"status"] = STATUS_REVOKED
    base.put_map(ctx, state_key, grant)
    # future records use a fresh data key; shared history stays readable
    era = base.get_u64(ctx, _era_key(ctx.caller))
    base.put_u64(ctx, _era_key(ctx.caller), era + 1)
    return grant_id.encode()


def add_wrapped_key(ctx) -> bytes:
    """Patient re-wraps a data key for a still-active grant after an era bump."""
    grant_id = ctx.arg_str(0)
    era = ctx.arg_u64(1)
    wrapped_key = ctx.arg(2)
    state_key = _grant_key(ctx.caller, grant_id)
    grant = base.get_map(ctx, state_key)
    ctx.require(grant is not None, "NOT_OWNER", grant_id)
    ctx.require(grant[b"status"] == STATUS_ACTIVE, "BAD_STATE", grant[b"status"])
    current = base.get_u64(ctx, _era_key(ctx.caller))
    ctx.require(era <= current, "BAD_ARGS", f"era {era} not issued yet")
    grant[b"wrapped_keys"] = dict(grant[b"wrapped_keys"])
    grant[b"wrapped_keys"][str(era).encode()] = wrapped_key
    base.put_map(ctx, state_key, grant)
    return grant_id.encode()


def covers(ctx, caller_id: str, patient_id: str, needed_scope) -> bool:
    """True iff caller is the patient, or an ACTIVE unexpired grant from the
    patient to the caller covers every needed scope element."""
    if caller_id == patient_id:
        return True
    # anchor the check to the patient's revocation epoch: the read puts the
    # patient on this transaction's audit trail and lets a concurrent era
    # bump (revocation) invalidate in-flight authorizations via MVCC
    ctx.get_state(_era_key(patient_id))
    needed = set(needed_scope)
    for _, raw in ctx.range_scan(base.NS_ACCESS + patient_id.encode() + b"/"):
        grant = canonical.decode(raw)
        if grant[b"practitioner"] != caller_id:
            continue
        if grant[b"status"] != STATUS_ACTIVE:
            continue
        expires = grant[b"expires_at"]
        if expires and ctx.client_time >= expires:
            continue
        if needed <= set(grant[b"scope"]):
            return True
    return False


def check_access(ctx) -> bytes:
    caller_id = ctx.arg_str(0)
    patient_id = ctx.arg_str(1)
    needed = base.parse_scopes(ctx.arg_str(2))
    return b"1" if covers(ctx, caller_id, patient_id, needed) else b"0"


def get_grant(ctx) -> bytes:
    patient_id = ctx.arg_str(0)
    grant_id = ctx.arg_str(1)
    raw = ctx.get_state(_grant_key(patient_id, grant_id))
    ctx.require(raw is not None, "NOT_FOUND", grant_id)
    return raw


FUNCTIONS = {
    "request_access": request_access,
    "approve_access": approve_access,
    "grant_access": grant_access,
    "revoke_access": revoke_access,
    "add_wrapped_key": add_wrapped_key,
    "check_access": check_access,
    "get_grant": get_grant,
}
