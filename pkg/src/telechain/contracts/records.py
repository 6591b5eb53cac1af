"""Data storage contract: write-once encrypted medical records.

The value under rec/ is the raw CipherEnvelope; everything a contract or
query needs without decrypting lives in the rmd/ metadata entry.  The
envelope's bound metadata digest must match (patient, record type), so a
ciphertext cannot be replayed into another patient's history.

Record-level sharing: a practitioner holding READ access may pass one
record to another practitioner, but only while the patient keeps an ACTIVE
SHARING consent naming the sharer.  The share entry carries the data key
wrapped to the recipient, and grants retrieval of that record only.
"""

from __future__ import annotations

from .. import canonical, envelope as envelope_mod
from ..errors import CanonicalError, ContractError, TelechainError
from ..identity import Role
from . import access, base, consent

NS_SHARE = b"shr/"


def _check_access(ctx, patient_id: str, scope: str) -> None:
    if not access.covers(ctx, ctx.caller, patient_id, (scope,)):
        raise ContractError("ACCESS_DENIED", f"{ctx.caller} lacks {scope} on {patient_id}")


def _decode_envelope(ctx, raw: bytes, aad: bytes) -> envelope_mod.CipherEnvelope:
    try:
        env = envelope_mod.CipherEnvelope.decode(raw)
    except TelechainError as exc:
        raise ContractError("MALFORMED_ENVELOPE", exc.message) from None
    ctx.require(env.aad_digest == envelope_mod.crypto.sha256(aad),
                "MALFORMED_ENVELOPE", "envelope bound to different metadata")
    return env


def _decode_metadata(raw: bytes) -> dict:
    if not raw:
        return {}
    try:
        meta = canonical.decode(raw)
    except CanonicalError:
        raise ContractError("BAD_ARGS", "public_metadata is not canonical") from None
    if not isinstance(meta, dict):
        raise ContractError("BAD_ARGS", "public_metadata must be a map")
    for value in meta.values():
        if not isinstance(value, (int, str)):
            raise ContractError("BAD_ARGS", "public_metadata values must be scalars")
    return meta


def store_record(ctx) -> bytes:
    patient_id = ctx.arg_str(0)
    record_type = ctx.arg_str(1)
    envelope_raw = ctx.arg(2)
    metadata = _decode_metadata(ctx.arg(3) if len(ctx.args) > 3 else b"")
    ctx.require(bool(record_type), "BAD_ARGS", "empty record_type")
    if ctx.caller != patient_id:
        _check_access(ctx, patient_id, "WRITE")
    _decode_envelope(ctx, envelope_raw, envelope_mod.record_aad(patient_id, record_type))

    created_at = ctx.client_time
    content = canonical.encode({
        b"patient": patient_id,
        b"author": ctx.caller,
        b"type": record_type,
        b"created_at": created_at,
        b"envelope": envelope_raw,
        b"metadata": metadata,
    })
    record_id = envelope_mod.crypto.sha256(content).hex()
    meta_key = base.key(base.NS_RECORD_META, record_id)
    ctx.require(ctx.get_state(meta_key) is None, "DUPLICATE_RECORD", record_id)

    ctx.put_state(base.key(base.NS_RECORD, record_id), envelope_raw)
    base.put_map(ctx, meta_key, {
        b"record_id": record_id,
        b"patient": patient_id,
        b"author": ctx.caller,
        b"type": record_type,
        b"created_at": created_at,
        b"metadata": metadata,
    })
    ctx.put_state(base.key(base.NS_RECORD_INDEX, patient_id, record_id), b"\x01")
    return record_id.encode()


def retrieve_record(ctx) -> bytes:
    record_id = ctx.arg_str(0)
    meta = base.get_map(ctx, base.key(base.NS_RECORD_META, record_id))
    ctx.require(meta is not None, "NOT_FOUND", record_id)
    patient_id = meta[b"patient"]
    if ctx.caller != patient_id and not _share_entry(ctx, record_id, ctx.caller):
        _check_access(ctx, patient_id, "READ")
    # touch the patient-scoped index so the retrieval lands on the patient's audit trail
    index = ctx.get_state(base.key(base.NS_RECORD_INDEX, patient_id, record_id))
    ctx.require(index is not None, "NOT_FOUND", record_id)
    env_raw = ctx.get_state(base.key(base.NS_RECORD, record_id))
    ctx.require(env_raw is not None, "NOT_FOUND", record_id)
    meta[b"envelope"] = env_raw
    return canonical.encode(meta)


def _share_entry(ctx, record_id: str, subject_id: str):
    return ctx.get_state(base.key(NS_SHARE, record_id, subject_id))


def share_record(ctx) -> bytes:
    record_id = ctx.arg_str(0)
    recipient_id = ctx.arg_str(1)
    wrapped_key = ctx.arg(2)
    ctx.require_role(Role.PRACTITIONER, "NOT_PRACTITIONER")
    meta = base.get_map(ctx, base.key(base.NS_RECORD_META, record_id))
    ctx.require(meta is not None, "NOT_FOUND", record_id)
    patient_id = meta[b"patient"]
    _check_access(ctx, patient_id, "READ")
    if consent.status_for(ctx, patient_id, "SHARING", ctx.caller) != consent.STATUS_ACTIVE:
        raise ContractError("NO_CONSENT",
                            f"{patient_id} has no active SHARING consent for {ctx.caller}")
    ctx.require(ctx.subject_role(recipient_id) is Role.PRACTITIONER,
                "UNKNOWN_PRACTITIONER", recipient_id)
    ctx.put_state(base.key(NS_SHARE, record_id, recipient_id), canonical.encode({
        b"record_id": record_id,
        b"shared_by": ctx.caller,
        b"recipient": recipient_id,
        b"wrapped_key": wrapped_key,
        b"shared_at": ctx.client_time,
    }))
    return record_id.encode()


def list_records(ctx) -> bytes:
    patient_id = ctx.arg_str(0)
    if ctx.caller != patient_id:
        _check_access(ctx, patient_id, "READ")
    entries = []
    prefix = base.NS_RECORD_INDEX + patient_id.encode() + b"/"
    for index_key, _ in ctx.range_scan(prefix):
        record_id = index_key[len(prefix):].decode()
        meta = base.get_map(ctx, base.key(base.NS_RECORD_META, record_id))
        if meta is None:
            continue
        entries.append(meta)
    entries.sort(key=lambda m: (m[b"created_at"], m[b"record_id"]))
    return canonical.encode([
        [m[b"record_id"], m[b"type"], m[b"created_at"], m[b"author"]]
        for m in entries
    ])


FUNCTIONS = {
    "store_record": store_record,
    "retrieve_record": retrieve_record,
    "share_record": share_record,
    "list_records": list_records,
}
