"""Telechain: a desk-scale permissioned blockchain for telemedicine.

Execute-order-validate pipeline, six healthcare smart contracts, a
deterministic simulated peer network, and an HTTP gateway with CLI.
"""

__version__ = "0.1.0"
