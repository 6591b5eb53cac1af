import random

import pytest

from telechain import canonical, crypto
from telechain.contracts import CONTRACTS
from telechain.engine.context import ContractContext, decode_response
from telechain.errors import ContractError
from telechain.identity import IdentityRegistry, Role
from telechain.ledger.rwset import Version
from telechain.ledger.state import WorldState
from telechain.ledger.store import GenesisConfig


class ChainHarness:
    """Runs contract functions directly against a world state.

    Skips signatures and endorsement: each successful call commits its writes
    like a lone VALID transaction.  This is the fast rig for contract unit
    tests and fuzzing; pipeline semantics are covered by the engine and
    network tests.
    """

    def __init__(self, cfg=None, seed=0):
        self.cfg = (cfg or GenesisConfig()).validate()
        self.state = WorldState()
        self.state.height = 0
        self.rng = random.Random(seed)
        self.registry = IdentityRegistry.create(self.rng)
        self.wallets = {}
        self.certs = {}
        self.clock = 0
        self._height = 0
        _, admin_cert = self._new_identity("admin", Role.ADMIN)
        ok, code, _ = self.call("admin", "identity", "register",
                                [admin_cert.to_canonical()])
        assert ok, code

    def _new_identity(self, subject, role):
        keypair, cert = self.registry.create_identity(subject, role, self.rng)
        self.wallets[subject] = keypair
        self.certs[subject] = cert
        return keypair, cert

    def enroll(self, subject, role):
        _, cert = self._new_identity(subject, role)
        ok, code, _ = self.call("admin", "identity", "register", [cert.to_canonical()])
        assert ok, f"enroll {subject}: {code}"
        return cert

    def tick(self, n=1):
        self.clock += n

    def call(self, caller, contract, function, args, client_time=None, commit=True):
        """Returns (ok, code, data); commits writes when ok and commit=True."""
        self._height += 1
        ctx = ContractContext(
            state=self.state,
            creator=self.certs[caller],
            tx_id=crypto.sha256(b"harness-tx" + self._height.to_bytes(8, "big")),
            args=tuple(args),
            client_time=self.clock if client_time is None else client_time,
            cfg=self.cfg,
        )
        fn = CONTRACTS[contract][function]
        try:
            data = fn(ctx) or b""
        except ContractError as exc:
            return False, exc.code, b""
        if commit:
            version = Version(self._height, 0)
            for key, value in ctx.rwset().writes:
                if value is None:
                    self.state.entries.pop(key, None)
                else:
                    self.state.entries[key] = (value, version)
            self.state.height = self._height
        return True, "", data

    def must(self, caller, contract, function, args, client_time=None):
        ok, code, data = self.call(caller, contract, function, args, client_time)
        assert ok, f"{contract}.{function} failed: {code}"
        return data

    def expect(self, expected_code, caller, contract, function, args, client_time=None):
        ok, code, _ = self.call(caller, contract, function, args, client_time)
        assert not ok and code == expected_code, \
            f"expected {expected_code}, got ok={ok} code={code}"


@pytest.fixture
def harness():
    return ChainHarness(seed=1234)


@pytest.fixture
def rng():
    return random.Random(20250809)
