"""Payment contract: admin-minted integer token, transfers and refunds.

Invariant maintained across every function: the sum of all bal/ entries
equals the sys/minted counter, and 0 <= refunded_total <= amount with the
status derived from refunded_total.
"""

from __future__ import annotations

from .. import canonical
from ..identity import Role
from . import base

STATUS_COMPLETED = "COMPLETED"
STATUS_PARTIAL = "PARTIALLY_REFUNDED"
STATUS_REFUNDED = "REFUNDED"


def _balance_key(account_id: str) -> bytes:
    return base.key(base.NS_BALANCE, account_id)


def _payment_key(payment_id: str) -> bytes:
    return base.key(base.NS_PAYMENT, payment_id)


def _status_for(amount: int, refunded: int) -> str:
    if refunded == 0:
        return STATUS_COMPLETED
    if refunded < amount:
        return STATUS_PARTIAL
    return STATUS_REFUNDED


def credit_account(ctx) -> bytes:
    ctx.require_role(Role.ADMIN, "NOT_ADMIN")
    account_id = ctx.arg_str(0)
    amount = ctx.arg_u64(1)
    ctx.require(bool(account_id), "BAD_ARGS", "empty account id")
    ctx.require(amount > 0, "AMOUNT_NOT_POSITIVE", str(amount))
    balance = base.get_u64(ctx, _balance_key(account_id)) + amount
    base.put_u64(ctx, _balance_key(account_id), balance)
    base.put_u64(ctx, base.KEY_MINTED, base.get_u64(ctx, base.KEY_MINTED) + amount)
    return str(balance).encode()


def make_payment(ctx) -> bytes:
    payee_id = ctx.arg_str(0)
    amount = ctx.arg_u64(1)
    reference = ctx.arg_str(2) if len(ctx.args) > 2 else ""
    ctx.require(amount > 0, "AMOUNT_NOT_POSITIVE", str(amount))
    ctx.require(payee_id != ctx.caller, "BAD_ARGS", "cannot pay self")
    ctx.require(ctx.subject_role(payee_id) is not None, "UNKNOWN_PAYEE", payee_id)
    payer_balance = base.get_u64(ctx, _balance_key(ctx.caller))
    ctx.require(payer_balance >= amount, "INSUFFICIENT_FUNDS",
                f"balance {payer_balance} < {amount}")
    payee_balance = base.get_u64(ctx, _balance_key(payee_id))
    base.put_u64(ctx, _balance_key(ctx.caller), payer_balance - amount)
    base.put_u64(ctx, _balance_key(payee_id), payee_balance + amount)

    payment_id = ctx.new_id(b"pay")
    record = {
        b"payment_id": payment_id,
        b"payer": ctx.caller,
        b"payee": payee_id,
        b"amount": amount,
        b"reference": reference,
        b"refunded_total": 0,
        b"status": STATUS_COMPLETED,
        b"created_at": ctx.client_time,
    }
    base.put_map(ctx, _payment_key(payment_id), record)
    return canonical.encode(record)


def refund_payment(ctx) -> bytes:
    payment_id = ctx.arg_str(0)
    amount = ctx.arg_u64(1)
    record = base.get_map(ctx, _payment_key(payment_id))
    ctx.require(record is not None, "NOT_FOUND", payment_id)
    ctx.require(record[b"payee"] == ctx.caller, "NOT_PAYEE", ctx.caller)
    ctx.require(amount > 0, "AMOUNT_NOT_POSITIVE", str(amount))
    refunded = record[b"refunded_total"] + amount
    ctx.require(refunded <= record[b"amount"], "OVER_REFUND",
                f"{refunded} > {record[b'amount']}")
    payee_balance = base.get_u64(ctx, _balance_key(ctx.caller))
    ctx.require(payee_balance >= amount, "INSUFFICIENT_FUNDS",
                f"balance {payee_balance} < {amount}")
    payer_id = record[b"payer"]
    base.put_u64(ctx, _balance_key(ctx.caller), payee_balance - amount)
    base.put_u64(ctx, _balance_key(payer_id),
                 base.get_u64(ctx, _balance_key(payer_id)) + amount)
    record[b"refunded_total"] = refunded
    record[b"status"] = _status_for(record[b"amount"], refunded)
    base.put_map(ctx, _payment_key(payment_id), record)
    return canonical.encode(record)


def check_payment_status(ctx) -> bytes:
    payment_id = ctx.arg_str(0)
    record = base.get_map(ctx, _payment_key(payment_id))
    ctx.require(record is not None, "NOT_FOUND", payment_id)
    return canonical.encode(record)


def get_balance(ctx) -> bytes:
    account_id = ctx.arg_str(0) if ctx.args else ctx.caller
    return str(base.get_u64(ctx, _balance_key(account_id))).encode()


FUNCTIONS = {
    "credit_account": credit_account,
    "make_payment": make_payment,
    "refund_payment": refund_payment,
    "check_payment_status": check_payment_status,
    "get_balance": get_balance,
}
