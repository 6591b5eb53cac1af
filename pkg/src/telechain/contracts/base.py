"""Shared helpers for contract code.

State key layout (all UTF-8 text segments, '/'-separated):

    id/<subject>                      canonical certificate (identity contract)
    era/<patient>                     current data-key era (u64)
    acc/<patient>/<grant_id>          access grant record
    con/<patient>/<consent_id>        consent record
    rec/<record_id>                   raw CipherEnvelope bytes
    rmd/<record_id>                   record metadata
    rpi/<patient>/<record_id>         patient index marker
    msg/<recipient>/<sent_at:016x>/<message_id>   raw CipherEnvelope bytes
    mmd/<message_id>                  message metadata
    pay/<payment_id>                  payment record
    bal/<account>                     token balance (u64)
    sys/minted                        total minted counter (u64)
    ins/<job_id>                      insight report
"""

from __future__ import annotations

from .. import canonical
from ..errors import ContractError

NS_IDENTITY = b"id/"
NS_ERA = b"era/"
NS_ACCESS = b"acc/"
NS_CONSENT = b"con/"
NS_RECORD = b"rec/"
NS_RECORD_META = b"rmd/"
NS_RECORD_INDEX = b"rpi/"
NS_MESSAGE = b"msg/"
NS_MESSAGE_META = b"mmd/"
NS_PAYMENT = b"pay/"
NS_BALANCE = b"bal/"
NS_INSIGHT = b"ins/"
KEY_MINTED = b"sys/minted"

SCOPES = ("READ", "WRITE", "MESSAGE")
PURPOSES = ("TREATMENT", "ANALYTICS", "SHARING")
ANY_ANALYST = "ANY-ANALYST"


def key(namespace: bytes, *segments: str) -> bytes:
    return namespace + "/".join(segments).encode("utf-8")


def parse_scopes(raw: str) -> tuple[str, ...]:
    parts = tuple(sorted({p.strip() for p in raw.split(",") if p.strip()}))
    if not parts or any(p not in SCOPES for p in parts):
        raise ContractError("BAD_ARGS", f"bad scope set {raw!r}")
    return parts


def get_u64(ctx, state_key: bytes, default: int = 0) -> int:
    raw = ctx.get_state(state_key)
    if raw is None:
        return default
    return canonical.decode(raw)


def put_u64(ctx, state_key: bytes, value: int) -> None:
    ctx.put_state(state_key, canonical.encode(value))


def get_map(ctx, state_key: bytes):
    raw = ctx.get_state(state_key)
    if raw is None:
        return None
    return canonical.decode(raw)


def put_map(ctx, state_key: bytes, value: dict) -> None:
    ctx.put_state(state_key, canonical.encode(value))
