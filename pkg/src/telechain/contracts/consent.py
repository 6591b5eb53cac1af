"""Consent management contract: purpose-level data-use authorization.

Distinct from access grants: a consent record says what a class of use
(treatment, analytics, sharing) is allowed, per grantee or for any analyst.
History is never deleted; granting the same purpose+grantee again supersedes
the old record (auto-revoke) so "latest status" stays single-valued.
"""

from __future__ import annotations

from .. import canonical
from ..errors import ContractError
from ..identity import Role
from . import base

STATUS_ACTIVE = "ACTIVE"
STATUS_REVOKED = "REVOKED"
STATUS_NONE = "NONE"


def _consent_key(patient_id: str, consent_id: str) -> bytes:
    return base.key(base.NS_CONSENT, patient_id, consent_id)


def _scan(ctx, patient_id: str):
    for _, raw in ctx.range_scan(base.NS_CONSENT + patient_id.encode() + b"/"):
        yield canonical.decode(raw)


def grant_consent(ctx) -> bytes:
    ctx.require_role(Role.PATIENT, "NOT_PATIENT")
    purpose = ctx.arg_str(0)
    grantee = ctx.arg_str(1)
    if purpose not in base.PURPOSES:
        raise ContractError("BAD_ARGS", f"unknown purpose {purpose!r}")
    ctx.require(bool(grantee), "BAD_ARGS", "empty grantee")
    # supersede any active consent for the same purpose+grantee
    for old in _scan(ctx, ctx.caller):
        if (old[b"purpose"] == purpose and old[b"grantee"] == grantee
                and old[b"status"] == STATUS_ACTIVE):
            old[b"status"] = STATUS_REVOKED
            old[b"revoked_at"] = ctx.client_time
            base.put_map(ctx, _consent_key(ctx.caller, old[b"consent_id"]), old)
    consent_id = ctx.new_id(b"consent")
    base.put_map(ctx, _consent_key(ctx.caller, consent_id), {
        b"consent_id": consent_id,
        b"patient": ctx.caller,
        b"purpose": purpose,
        b"grantee": grantee,
        b"status": STATUS_ACTIVE,
        b"granted_at": ctx.client_time,
        b"revoked_at": 0,
    })
    return consent_id.encode()


def revoke_consent(ctx) -> bytes:
    consent_id = ctx.arg_str(0)
    state_key = _consent_key(ctx.caller, consent_id)
    record = base.get_map(ctx, state_key)
    ctx.require(record is not None, "NOT_OWNER", consent_id)
    ctx.require(record[b"status"] == STATUS_ACTIVE, "BAD_STATE", record[b"status"])
    record[b"status"] = STATUS_REVOKED
    record[b"revoked_at"] = ctx.client_time
    base.put_map(ctx, state_key, record)
    return consent_id.encode()


def status_for(ctx, patient_id: str, purpose: str, grantee: str) -> str:
    latest = None
    for record in _scan(ctx, patient_id):
        if record[b"purpose"] != purpose or record[b"grantee"] != grantee:
            continue
        marker = (record[b"granted_at"], record[b"consent_id"])
        if latest is None or marker > (latest[b"granted_at"], latest[b"consent_id"]):
            latest = record
    return latest[b"status"] if latest else STATUS_NONE


def allows_analytics(ctx, patient_id: str, analyst_id: str) -> bool:
    if status_for(ctx, patient_id, "ANALYTICS", analyst_id) == STATUS_ACTIVE:
        return True
    return status_for(ctx, patient_id, "ANALYTICS", base.ANY_ANALYST) == STATUS_ACTIVE


def consent_status(ctx) -> bytes:
    patient_id = ctx.arg_str(0)
    purpose = ctx.arg_str(1)
    grantee = ctx.arg_str(2)
    if purpose not in base.PURPOSES:
        raise ContractError("BAD_ARGS", f"unknown purpose {purpose!r}")
    return status_for(ctx, patient_id, purpose, grantee).encode()


FUNCTIONS = {
    "grant_consent": grant_consent,
    "revoke_consent": revoke_consent,
    "consent_status": consent_status,
}
