"""Communication contract: encrypted patient-practitioner messaging.

A message may flow in either direction, but only between a patient and a
practitioner linked by an ACTIVE MESSAGE-scoped grant.  The chain stores the
envelope only; decryption happens client-side with the pair key.
"""

from __future__ import annotations

from .. import canonical, envelope as envelope_mod
from ..errors import ContractError, TelechainError
from ..identity import Role
from . import access, base


def _pair(ctx, sender_id: str, recipient_id: str) -> tuple[str, str]:
    """Resolve (patient, practitioner) for the message pair or fail."""
    sender_role = ctx.creator.role if sender_id == ctx.caller else ctx.subject_role(sender_id)
    recipient_role = ctx.subject_role(recipient_id)
    roles = {sender_id: sender_role, recipient_id: recipient_role}
    patients = [s for s, r in roles.items() if r is Role.PATIENT]
    practitioners = [s for s, r in roles.items() if r is Role.PRACTITIONER]
    if len(patients) != 1 or len(practitioners) != 1:
        raise ContractError("NO_RELATIONSHIP",
                            f"{sender_id} -> {recipient_id} is not a patient-practitioner pair")
    return patients[0], practitioners[0]


def send_message(ctx) -> bytes:
    recipient_id = ctx.arg_str(0)
    envelope_raw = ctx.arg(1)
    sender_id = ctx.caller
    ctx.require(recipient_id != sender_id, "NO_RELATIONSHIP", "cannot message self")
    patient_id, practitioner_id = _pair(ctx, sender_id, recipient_id)
    if not access.covers(ctx, practitioner_id, patient_id, ("MESSAGE",)):
        raise ContractError("NO_RELATIONSHIP",
                            f"no MESSAGE grant between {patient_id} and {practitioner_id}")
    sent_at = ctx.client_time
    try:
        env = envelope_mod.CipherEnvelope.decode(envelope_raw)
    except TelechainError as exc:
        raise ContractError("MALFORMED_ENVELOPE", exc.message) from None
    aad = envelope_mod.message_aad(sender_id, recipient_id, sent_at)
    ctx.require(env.aad_digest == envelope_mod.crypto.sha256(aad),
                "MALFORMED_ENVELOPE", "envelope bound to different message metadata")

    message_id = ctx.new_id(b"msg")
    ctx.put_state(
        base.NS_MESSAGE + f"{recipient_id}/{sent_at:016x}/{message_id}".encode(),
        envelope_raw,
    )
    base.put_map(ctx, base.key(base.NS_MESSAGE_META, message_id), {
        b"message_id": message_id,
        b"sender": sender_id,
        b"recipient": recipient_id,
        b"sent_at": sent_at,
    })
    return message_id.encode()


def receive_messages(ctx) -> bytes:
    since = ctx.arg_u64(0) if ctx.args else 0
    prefix = base.NS_MESSAGE + ctx.caller.encode() + b"/"
    found = []
    for msg_key, env_raw in ctx.range_scan(prefix):
        tail = msg_key[len(prefix):].decode()
        sent_at_hex, _, message_id = tail.partition("/")
        sent_at = int(sent_at_hex, 16)
        if sent_at < since:
            continue
        meta = base.get_map(ctx, base.key(base.NS_MESSAGE_META, message_id))
        found.append({
            b"message_id": message_id,
            b"sender": meta[b"sender"] if meta else "",
            b"recipient": ctx.caller,
            b"sent_at": sent_at,
            b"envelope": env_raw,
        })
    found.sort(key=lambda m: (m[b"sent_at"], m[b"message_id"]))
    return canonical.encode(found)


FUNCTIONS = {
    "send_message": send_message,
    "receive_messages": receive_messages,
}
