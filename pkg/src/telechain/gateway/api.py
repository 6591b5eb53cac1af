"""HTTP API: the surface consoles and CLI clients talk to.

All byte-valued fields travel as hex strings.  Mutations go through POST
/submit with a client-signed proposal; GET endpoints serve committed state.
Status codes: 401 bad/expired token, 403 role or ownership gate, 404 not
found, 409 duplicate or non-VALID outcome.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..errors import ClientError, IdentityError, LedgerError
from ..identity import Certificate, Role
from .core import GatewayCore


class EnrollRequest(BaseModel):
    id: str = Field(min_length=1, max_length=128)
    role: str
    public_key: Optional[str] = None  # hex; when set, no key material is returned


class ChallengeRequest(BaseModel):
    subject_id: str


class VerifyRequest(BaseModel):
    subject_id: str
    challenge: str  # hex
    signature: str  # hex


class SubmitRequest(BaseModel):
    contract: str
    function: str
    args: list[str] = Field(default_factory=list)  # hex-encoded
    client_time: int = 0
    nonce: str  # 16 bytes hex
    signature: str  # hex


def _hex(value: str, what: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise HTTPException(400, f"{what} is not valid hex") from None


def create_app(core: GatewayCore) -> FastAPI:
    app = FastAPI(title="telechain gateway", version="0.1.0")
    app.state.core = core

    def auth(authorization: str = Header(default="")) -> Certificate:
        token = authorization.removeprefix("Bearer ").strip()
        if not token:
            raise HTTPException(401, "missing bearer token")
        try:
            return core.authenticate(token)
        except ClientError:
            raise HTTPException(401, "invalid or expired token") from None

    def require_admin(cert: Certificate = Depends(auth)) -> Certificate:
        if cert.role is not Role.ADMIN:
            raise HTTPException(403, "admin only")
        return cert

    @app.get("/health")
    def health():
        return {"ok": True, "height": core.store.height()}

    # --- identities & login ---------------------------------------------------

    @app.post("/identities", status_code=201)
    def enroll(body: EnrollRequest, _: Certificate = Depends(require_admin)):
        try:
            return core.enroll(body.id, body.role, body.public_key)
        except IdentityError as exc:
            if exc.code == "DUPLICATE_SUBJECT":
                raise HTTPException(409, f"subject {body.id!r} already enrolled") from None
            raise HTTPException(400, exc.message) from None
        except ClientError as exc:
            raise HTTPException(400, exc.message) from None

    @app.get("/identities/{subject_id}")
    def get_identity(subject_id: str):
        try:
            cert = core.certificate_for(subject_id)
        except ClientError:
            raise HTTPException(404, "unknown subject") from None
        return {
            "subject_id": cert.subject_id,
            "role": cert.role.value,
            "public_key": cert.public_key.hex(),
            "certificate": cert.to_hex_line(),
        }

    @app.post("/login/challenge")
    def login_challenge(body: ChallengeRequest):
        try:
            challenge = core.login_challenge(body.subject_id)
        except ClientError:
            raise HTTPException(404, "unknown subject") from None
        return {"challenge": challenge.hex()}

    @app.post("/login/verify")
    def login_verify(body: VerifyRequest):
        try:
            return core.login_verify(body.subject_id,
                                     _hex(body.challenge, "challenge"),
                                     _hex(body.signature, "signature"))
        except ClientError as exc:
            if exc.code == "UNKNOWN_SUBJECT":
                raise HTTPException(404, "unknown subject") from None
            raise HTTPException(401, exc.message) from None

    # --- submission ---------------------------------------------------------------

    @app.post("/submit")
    def submit(body: SubmitRequest, cert: Certificate = Depends(auth)):
        try:
            result = core.submit_signed(
                cert.subject_id, body.contract, body.function,
                [_hex(a, "arg") for a in body.args],
                body.client_time, _hex(body.nonce, "nonce"),
                _hex(body.signature, "signature"),
            )
        except ClientError as exc:
            if exc.code == "UNKNOWN_FUNCTION":
                raise HTTPException(400, exc.message) from None
            if exc.code == "ROLE_GATE":
                raise HTTPException(403, exc.message) from None
            raise HTTPException(400, f"{exc.code}: {exc.message}") from None
        if result["status"] != "VALID":
            return JSONResponse(status_code=409, content=result)
        return result

    # --- committed-state queries ------------------------------------------------

    @app.get("/state/records")
    def records(patient_id: str = Query(...), cert: Certificate = Depends(auth)):
        allowed = (cert.subject_id == patient_id or cert.role is Role.ADMIN
                   or core.covers(cert.subject_id, patient_id, "READ"))
        if not allowed:
            raise HTTPException(403, "no READ access to this patient")
        return core.records_for(patient_id)

    @app.get("/state/era")
    def era(patient_id: str = Query(...), cert: Certificate = Depends(auth)):
        return {"patient_id": patient_id, "era": core.era_for(patient_id)}

    @app.get("/state/messages")
    def messages(since: int = 0, cert: Certificate = Depends(auth)):
        return core.messages_for(cert.subject_id, since)

    @app.get("/state/grants")
    def grants(subject: Optional[str] = None, cert: Certificate = Depends(auth)):
        target = cert.subject_id
        if subject and subject != cert.subject_id:
            if cert.role is not Role.ADMIN:
                raise HTTPException(403, "cannot list another subject's grants")
            target = subject
        return core.grants_for(target)

    @app.get("/state/consents")
    def consents(subject: Optional[str] = None, cert: Certificate = Depends(auth)):
        target = cert.subject_id
        if subject and subject != cert.subject_id:
            if cert.role is not Role.ADMIN:
                raise HTTPException(403, "cannot list another subject's consents")
            target = subject
        return core.consents_for(target)

    @app.get("/state/payments")
    def payments(cert: Certificate = Depends(auth)):
        return core.payments_for(cert.subject_id)

    @app.get("/state/payments/{payment_id}")
    def payment(payment_id: str, cert: Certificate = Depends(auth)):
        record = core.payment(payment_id)
        if record is None:
            raise HTTPException(404, "unknown payment")
        if cert.subject_id not in (record["payer_id"], record["payee_id"]) \
                and cert.role is not Role.ADMIN:
            raise HTTPException(403, "not a party to this payment")
        return record

    @app.get("/state/balance")
    def balance(cert: Certificate = Depends(auth)):
        return {"subject_id": cert.subject_id, "balance": core.balance(cert.subject_id)}

    @app.get("/blocks/{height}")
    def block(height: int, _: Certificate = Depends(require_admin)):
        try:
            return core.block_json(height)
        except LedgerError:
            raise HTTPException(404, "unknown block") from None

    @app.get("/audit")
    def audit(patient_id: str = Query(...), from_height: int = 0,
              to_height: Optional[int] = None, cert: Certificate = Depends(auth)):
        if cert.subject_id != patient_id and cert.role is not Role.ADMIN:
            raise HTTPException(403, "audit is patient-or-admin only")
        return core.audit(patient_id, from_height, to_height)

    @app.get("/metrics")
    def metrics(_: Certificate = Depends(require_admin)):
        return core.metrics()

    @app.post("/verify")
    def verify(_: Certificate = Depends(require_admin)):
        return core.verify()

    return app


def serve(core: GatewayCore, host: str = "127.0.0.1", port: int = 8440,
          console_dir: Optional[str] = None) -> None:
    import uvicorn

    app = create_app(core)
    if console_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/console", StaticFiles(directory=console_dir, html=True),
                  name="console")
    uvicorn.run(app, host=host, port=port, log_level="warning")
