"""Line-oriented scenario scripts and the deterministic runner.

Commands (UTF-8, ``#`` comments, blank lines ignored):

    enroll <id> <role>
    tick <n>
    submit <id> <contract> <function> <hex-args...>
    fault <tick> <target> <kind>[:<param>]
    assert-status <tx-ref> <code>
    assert-state <hex-key> <hex-value>

``<tx-ref>`` is ``t<k>`` for the k-th submit of the run (1-based) or
``last``.  ``assert-status`` accepts a full status string (``VALID``,
``MVCC_CONFLICT``, ``CONTRACT_ERROR:INSUFFICIENT_FUNDS``, ``CLIENT:...``)
or a bare prefix (``CONTRACT_ERROR`` matches any contract error).
``assert-state`` with an empty hex value asserts the key is absent.

Arguments are hex-encoded bytes.  Because envelopes and wrapped keys depend
on seed-derived client keys, the runner also accepts harness macros in
argument position (expanded deterministically at submit time):

    !str:<text>                          UTF-8 bytes of <text>
    !meta:<k>=<v>,...                    canonical metadata map (int if digits)
    !rec-env:<patient>:<type>:<hex>      record envelope under the patient's
                                         current-era data key
    !msg-env:<sender>:<recipient>:<hex>  message envelope under the pair key
    !wrap:<patient>:<practitioner>       patient's current-era data key wrapped
                                         to the practitioner
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from .. import canonical, envelope as envelope_mod
from ..contracts import base as contract_base
from ..errors import ScenarioError
from ..identity import Role
from ..ledger.store import GenesisConfig
from .sim import FaultKind, NetworkConfig, SimNetwork, TxHandle
from .transcript import ScenarioTranscript


@dataclass
class Command:
    line: int
    op: str
    args: List[str]


def parse_script(text: str) -> List[Command]:
    commands = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        op, args = parts[0], parts[1:]
        if op == "enroll":
            if len(args) != 2:
                raise ScenarioError("PARSE_ERROR", "enroll <id> <role>", line_no)
            if args[1] not in Role.__members__:
                raise ScenarioError("PARSE_ERROR", f"unknown role {args[1]!r}", line_no)
        elif op == "tick":
            if len(args) != 1 or not args[0].isdigit():
                raise ScenarioError("PARSE_ERROR", "tick <n>", line_no)
        elif op == "submit":
            if len(args) < 3:
                raise ScenarioError("PARSE_ERROR",
                                    "submit <id> <contract> <function> <hex-args...>", line_no)
            for arg in args[3:]:
                if not arg.startswith("!"):
                    try:
                        bytes.fromhex(arg)
                    except ValueError:
                        raise ScenarioError("PARSE_ERROR", f"bad hex arg {arg!r}",
                                            line_no) from None
        elif op == "fault":
            if len(args) != 3 or not args[0].isdigit():
                raise ScenarioError("PARSE_ERROR", "fault <tick> <target> <kind>", line_no)
            kind = args[2].split(":", 1)[0]
            if kind not in FaultKind.__members__:
                raise ScenarioError("PARSE_ERROR", f"unknown fault {kind!r}", line_no)
        elif op == "assert-status":
            if len(args) != 2:
                raise ScenarioError("PARSE_ERROR", "assert-status <tx-ref> <code>", line_no)
        elif op == "assert-state":
            if len(args) not in (1, 2):
                raise ScenarioError("PARSE_ERROR", "assert-state <hex-key> <hex-value>", line_no)
            try:
                bytes.fromhex(args[0])
                if len(args) == 2:
                    bytes.fromhex(args[1])
            except ValueError:
                raise ScenarioError("PARSE_ERROR", "bad hex in assert-state", line_no) from None
        else:
            raise ScenarioError("PARSE_ERROR", f"unknown command {op!r}", line_no)
        commands.append(Command(line=line_no, op=op, args=args))
    return commands


def _expand_macro(network: SimNetwork, arg: str, line: int) -> bytes:
    try:
        return _expand_macro_inner(network, arg, line)
    except ScenarioError:
        raise
    except (KeyError, ValueError) as exc:
        raise ScenarioError("PARSE_ERROR", f"bad macro {arg!r}: {exc}", line) from None


def _expand_macro_inner(network: SimNetwork, arg: str, line: int) -> bytes:
    kind, _, rest = arg[1:].partition(":")
    if kind == "str":
        return rest.encode("utf-8")
    if kind == "meta":
        meta = {}
        for pair in rest.split(","):
            if not pair:
                continue
            key, _, value = pair.partition("=")
            meta[key.encode()] = int(value) if value.isdigit() else value
        return canonical.encode(meta)
    if kind == "rec-env":
        patient, record_type, payload_hex = rest.split(":")
        era = _current_era(network, patient)
        key = envelope_mod.data_key(network.wallets[patient].private_seed, era)
        env = envelope_mod.seal(key, era, bytes.fromhex(payload_hex),
                                envelope_mod.record_aad(patient, record_type),
                                network.rng)
        return env.encode()
    if kind == "msg-env":
        sender, recipient, payload_hex = rest.split(":")
        key = envelope_mod.message_key(network.wallets[sender].private_seed,
                                       network.certs[recipient].public_key)
        env = envelope_mod.seal(key, 0, bytes.fromhex(payload_hex),
                                envelope_mod.message_aad(sender, recipient, network.now),
                                network.rng)
        return env.encode()
    if kind == "wrap":
        patient, practitioner = rest.split(":")
        era = _current_era(network, patient)
        key = envelope_mod.data_key(network.wallets[patient].private_seed, era)
        return envelope_mod.wrap_key(network.certs[practitioner].public_key,
                                     key, network.rng)
    raise ScenarioError("PARSE_ERROR", f"unknown macro {arg!r}", line)


def _current_era(network: SimNetwork, patient: str) -> int:
    raw = network.primary.node.state.get_value(
        contract_base.key(contract_base.NS_ERA, patient))
    return canonical.decode(raw) if raw is not None else 0


def run_scenario(script_text: str, genesis: Optional[GenesisConfig] = None,
                 seed: int = 0, data_dir: Optional[str] = None) -> ScenarioTranscript:
    """Execute a script; the transcript carries metrics and any failures."""
    commands = parse_script(script_text)
    cfg = genesis or GenesisConfig()
    transcript = ScenarioTranscript(cfg, seed)
    network = SimNetwork(NetworkConfig(genesis=cfg, seed=seed, data_dir=data_dir),
                         transcript)
    handles: List[TxHandle] = []

    def resolve_ref(ref: str, line: int) -> TxHandle:
        if ref == "last":
            if not handles:
                raise ScenarioError("PARSE_ERROR", "no submits yet", line)
            return handles[-1]
        if ref.startswith("t") and ref[1:].isdigit():
            index = int(ref[1:]) - 1
            if 0 <= index < len(handles):
                return handles[index]
        raise ScenarioError("PARSE_ERROR", f"unknown tx-ref {ref!r}", line)

    for command in commands:
        if command.op == "enroll":
            network.enroll(command.args[0], Role[command.args[1]])
        elif command.op == "tick":
            network.tick(int(command.args[0]))
        elif command.op == "submit":
            subject, contract, function = command.args[:3]
            args = [
                _expand_macro(network, arg, command.line) if arg.startswith("!")
                else bytes.fromhex(arg)
                for arg in command.args[3:]
            ]
            handles.append(network.submit_async(subject, contract, function, args))
        elif command.op == "fault":
            kind_name, _, param = command.args[2].partition(":")
            network.inject_fault(int(command.args[0]), command.args[1],
                                 FaultKind[kind_name], int(param or 0))
        elif command.op == "assert-status":
            handle = resolve_ref(command.args[0], command.line)
            if not handle.terminal:
                network.drive(handle)
            expected = command.args[1]
            actual = handle.status or ""
            ok = actual == expected or actual.startswith(expected + ":")
            transcript.record("assert_status", line=command.line, ref=handle.ref,
                              expected=expected, actual=actual, ok=int(ok))
            if not ok:
                transcript.fail(
                    f"line {command.line}: {handle.ref} expected {expected}, got {actual}")
        elif command.op == "assert-state":
            network.drain()
            key = bytes.fromhex(command.args[0])
            expected = bytes.fromhex(command.args[1]) if len(command.args) == 2 else None
            actual = network.primary.node.state.get_value(key)
            ok = actual == expected
            transcript.record("assert_state", line=command.line, key=key,
                              expected=expected or b"", actual=actual or b"", ok=int(ok))
            if not ok:
                transcript.fail(
                    f"line {command.line}: state[{key!r}] expected {expected!r}, got {actual!r}")

    network.drain()
    network.close()
    transcript.finalize(network.now, network.primary.node.store.height())
    return transcript
