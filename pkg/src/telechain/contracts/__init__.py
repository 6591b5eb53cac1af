"""Contract registry: name -> function table, as deployed on every peer."""

from . import access, analytics, base, consent, identity_reg, messaging, payments, records

CONTRACTS = {
    "identity": identity_reg.FUNCTIONS,
    "access": access.FUNCTIONS,
    "consent": consent.FUNCTIONS,
    "records": records.FUNCTIONS,
    "messages": messaging.FUNCTIONS,
    "payments": payments.FUNCTIONS,
    "analytics": analytics.FUNCTIONS,
}

__all__ = ["CONTRACTS", "access", "analytics", "base", "consent",
           "identity_reg", "messaging", "payments", "records"]
