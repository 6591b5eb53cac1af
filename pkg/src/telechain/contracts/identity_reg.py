"""On-chain identity registration.

Enrollment writes the CA-issued certificate into world state so contract
code can look up the role and public key of transaction *targets* (the
creator's own certificate always travels with the proposal).  Only an ADMIN
creator may register; the CA signature is checked at endorsement like any
other certificate.
"""

from __future__ import annotations

from ..errors import ContractError
from ..identity import Certificate, Role
from . import base


def register(ctx) -> bytes:
    ctx.require_role(Role.ADMIN, "NOT_ADMIN")
    try:
        cert = Certificate.from_canonical(ctx.arg(0))
    except Exception:
        raise ContractError("BAD_ARGS", "argument 0 is not a certificate") from None
    state_key = base.key(base.NS_IDENTITY, cert.subject_id)
    ctx.require(ctx.get_state(state_key) is None, "DUPLICATE_SUBJECT", cert.subject_id)
    ctx.put_state(state_key, cert.to_canonical())
    return cert.subject_id.encode()


def get_identity(ctx) -> bytes:
    subject_id = ctx.arg_str(0)
    raw = ctx.get_state(base.key(base.NS_IDENTITY, subject_id))
    ctx.require(raw is not None, "NOT_FOUND", subject_id)
    return raw


FUNCTIONS = {
    "register": register,
    "get_identity": get_identity,
}
