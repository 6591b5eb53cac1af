from .core import GatewayCore
from .audit import AuditEntry, audit_trail, iter_entries, metrics_from_blocks

__all__ = ["AuditEntry", "GatewayCore", "audit_trail", "iter_entries",
           "metrics_from_blocks"]
