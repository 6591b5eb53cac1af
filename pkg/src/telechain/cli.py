"""telechain command line.

Local commands (run-scenario, verify-chain, bench, metrics --home) operate on
the data directory (TELECHAIN_HOME or --home); the rest talk to a gateway
over HTTP.  Exit codes: 0 ok, 1 usage error, 2 verification/assertion
failure, 3 network error.
"""

from __future__ import annotations

import json
import os
import sys
import time

import click

from .errors import ClientError, ScenarioError, TelechainError
from .gateway.client import ClientKeys, GatewayClient, load_keys, save_keys
from .identity import Role
from .ledger.replay import replay, verify_chain
from .ledger.store import DirectoryBlockStore, GenesisConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_NETWORK = 3


def _home(value: str | None) -> str:
    home = value or os.environ.get("TELECHAIN_HOME") or os.path.join(os.getcwd(), "telechain-home")
    return os.path.abspath(home)


def _genesis_overrides(pairs) -> GenesisConfig:
    text = "\n".join(pairs)
    base = GenesisConfig().to_text()
    return GenesisConfig.from_text(base + "\n" + text)


def _client(url: str, key_path: str | None) -> tuple[GatewayClient, ClientKeys | None]:
    client = GatewayClient(url)
    keys = None
    if key_path:
        keys = load_keys(key_path)
        client.login(keys)
    return client, keys


@click.group()
def cli():
    """Telechain: permissioned telemedicine ledger."""


@cli.command()
@click.option("--home", default=None, help="data directory (TELECHAIN_HOME)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8440, show_default=True, type=int)
@click.option("--seed", default=None, type=int, help="deterministic network seed")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="genesis override, e.g. --set policy.threshold=2")
@click.option("--console", "console_dir", default=None,
              help="directory with the built web console to serve at /console")
def serve(home, host, port, seed, overrides, console_dir):
    """Start (or resume) a node and serve the HTTP API."""
    from .gateway.api import serve as serve_api
    from .gateway.core import GatewayCore

    home = _home(home)
    if os.path.exists(os.path.join(home, "network_keys.bin")):
        core = GatewayCore.open(home)
        click.echo(f"resumed node at height {core.store.height()} from {home}")
    else:
        core = GatewayCore.create(home, _genesis_overrides(overrides), seed)
        click.echo(f"created network in {home} (admin key: {home}/admin.key)")
    click.echo(f"listening on http://{host}:{port}")
    try:
        serve_api(core, host, port, console_dir)
    finally:
        core.close()


@cli.command()
@click.option("--url", default="http://127.0.0.1:8440", show_default=True)
@click.option("--key", "key_path", required=True,
              help="admin key file (seed+cert hex lines)")
@click.option("--id", "subject_id", required=True)
@click.option("--role", required=True,
              type=click.Choice([r.value for r in Role]))
@click.option("--out", "out_path", default=None,
              help="write the new identity's key file here")
def enroll(url, key_path, subject_id, role, out_path):
    """Enroll a subject (admin operation); key material is printed once."""
    client, _ = _client(url, key_path)
    result = client.enroll(subject_id, role)
    click.echo(f"enrolled {subject_id} role={role}")
    click.echo("certificate: " + result["certificate"])
    if "private_key" in result:
        if out_path:
            save_keys(out_path, bytes.fromhex(result["private_key"]), result["certificate"])
            click.echo(f"key file written to {out_path}")
        else:
            click.echo("private key (shown once): " + result["private_key"])


@cli.command()
@click.option("--url", default="http://127.0.0.1:8440", show_default=True)
@click.option("--key", "key_path", required=True)
@click.argument("contract")
@click.argument("function")
@click.argument("args", nargs=-1)
def submit(url, key_path, contract, function, args):
    """Submit a signed transaction.  Args are hex, or str:<text>."""
    client, keys = _client(url, key_path)
    raw_args = []
    for arg in args:
        if arg.startswith("str:"):
            raw_args.append(arg[4:].encode())
        else:
            raw_args.append(bytes.fromhex(arg))
    result = client.submit(keys, contract, function, raw_args,
                           client_time=int(time.time()))
    click.echo(json.dumps(result, indent=2))
    if result.get("status") != "VALID":
        sys.exit(EXIT_VERIFY)


@cli.command()
@click.option("--url", default="http://127.0.0.1:8440", show_default=True)
@click.option("--key", "key_path", required=True)
@click.argument("what", type=click.Choice(
    ["records", "messages", "grants", "consents", "payments", "balance"]))
@click.option("--patient", default=None, help="patient id for records")
@click.option("--since", default=0, type=int, help="messages since logical time")
def query(url, key_path, what, patient, since):
    """Query committed state through the gateway."""
    client, keys = _client(url, key_path)
    if what == "records":
        result = client.get("/state/records", patient_id=patient or keys.subject_id)
    elif what == "messages":
        result = client.get("/state/messages", since=since)
    elif what == "balance":
        result = client.get("/state/balance")
    else:
        result = client.get(f"/state/{what}")
    click.echo(json.dumps(result, indent=2))


@cli.command()
@click.option("--url", default="http://127.0.0.1:8440", show_default=True)
@click.option("--key", "key_path", required=True)
@click.option("--patient", required=True)
@click.option("--from", "from_height", default=0, type=int)
@click.option("--to", "to_height", default=None, type=int)
def audit(url, key_path, patient, from_height, to_height):
    """Print the patient's audit trail (patient or admin token)."""
    client, _ = _client(url, key_path)
    params = {"patient_id": patient, "from_height": from_height}
    if to_height is not None:
        params["to_height"] = to_height
    click.echo(json.dumps(client.get("/audit", **params), indent=2))


@cli.command()
@click.option("--url", default=None, help="gateway URL (remote mode)")
@click.option("--key", "key_path", default=None, help="admin key file (remote mode)")
@click.option("--home", default=None, help="data directory (local mode)")
def metrics(url, key_path, home):
    """Node counters: height, tx counts by code, commit latency."""
    if url:
        client, _ = _client(url, key_path)
        click.echo(json.dumps(client.get("/metrics"), indent=2))
        return
    from .gateway.audit import metrics_from_blocks
    home = _home(home)
    store = DirectoryBlockStore(os.path.join(home, "ledger"))
    out = metrics_from_blocks(store.blocks())
    report_path = os.path.join(home, "metrics.report")
    if os.path.exists(report_path):
        with open(report_path) as fh:
            out["bench"] = json.load(fh)
    click.echo(json.dumps(out, indent=2))


@cli.command("verify-chain")
@click.option("--home", default=None)
def verify_chain_cmd(home):
    """Verify the local block store and replay it against the snapshot."""
    home = _home(home)
    store = DirectoryBlockStore(os.path.join(home, "ledger"))
    cfg = store.read_genesis_config()
    blocks = list(store.blocks())
    report = verify_chain(blocks, genesis_cfg=cfg)
    if not report:
        click.echo(f"FAIL block {report.height}: {report.reason}")
        sys.exit(EXIT_VERIFY)
    state = replay(cfg, blocks, verify=False)
    click.echo(f"OK height={report.height} state_keys={len(state.entries)} "
               f"state_digest={state.digest().hex()}")


@cli.command("run-scenario")
@click.argument("script", type=click.Path(exists=True))
@click.option("--home", default=None, help="persist peer0's ledger here")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--transcript", "transcript_path", default=None,
              help="write the canonical transcript to this file (.txt dump beside it)")
def run_scenario_cmd(script, home, seed, overrides, transcript_path):
    """Run a scenario script deterministically."""
    from .network.scenario import run_scenario

    with open(script) as fh:
        text = fh.read()
    data_dir = os.path.join(_home(home), "ledger") if home else None
    transcript = run_scenario(text, _genesis_overrides(overrides), seed, data_dir)
    if transcript_path:
        with open(transcript_path, "wb") as fh:
            fh.write(transcript.to_canonical_bytes())
        with open(transcript_path + ".txt", "w") as fh:
            fh.write(transcript.to_text())
    click.echo(json.dumps(transcript.metrics.to_json(), indent=2))
    if not transcript.ok:
        for failure in transcript.failures:
            click.echo("ASSERT FAIL " + failure, err=True)
        sys.exit(EXIT_VERIFY)


@cli.command()
@click.option("--home", default=None)
@click.option("--txs", default=10_000, show_default=True, type=int)
@click.option("--accounts", default=100, show_default=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
def bench(home, txs, accounts, seed, overrides):
    """Desk-scale throughput run: enroll accounts, fund them, spray payments.

    Writes metrics.report into the home directory so `telechain metrics`
    serves wall-clock throughput alongside chain-derived counters.
    """
    from .network.sim import NetworkConfig, SimNetwork

    home = _home(home)
    os.makedirs(home, exist_ok=True)
    cfg = _genesis_overrides(overrides)
    half = accounts // 2
    if half < cfg.block_max_txs:
        raise click.UsageError(
            f"--accounts must be >= 2 * block.max_txs ({2 * cfg.block_max_txs}) "
            "so a block never touches one account twice")
    network = SimNetwork(NetworkConfig(genesis=cfg, seed=seed,
                                       data_dir=os.path.join(home, "ledger")))
    for index in range(accounts):
        network.enroll(f"acct{index:04d}", Role.PATIENT)
        network.submit("admin", "payments", "credit_account",
                       [f"acct{index:04d}".encode(), b"1000000"])
    started = time.perf_counter()
    start_tick = network.now
    handles = []
    # payers and payees are disjoint halves cycling with period >= max_txs,
    # so no block reads a balance an earlier tx in the block wrote
    for index in range(txs):
        payer = f"acct{index % half:04d}"
        payee = f"acct{half + index % half:04d}"
        handles.append(network.submit_async(payer, "payments", "make_payment",
                                            [payee.encode(), b"1", b"bench"]))
    network.drain()
    elapsed = time.perf_counter() - started
    network.close()
    valid = sum(1 for h in handles if h.status == "VALID")
    latencies = []  # logical commit latency comes from the chain itself
    report = {
        "submitted": txs,
        "valid": valid,
        "elapsed_s": round(elapsed, 3),
        "tx_per_s": round(valid / elapsed, 1) if elapsed > 0 else 0.0,
        "ticks": network.now - start_tick,
        "accounts": accounts,
        "peers": cfg.n_peers,
        "threshold": cfg.policy_threshold,
    }
    with open(os.path.join(home, "metrics.report"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    click.echo(json.dumps(report, indent=2))
    if valid != txs:
        click.echo(f"warning: {txs - valid} submissions did not commit VALID", err=True)
        sys.exit(EXIT_VERIFY)


def main():
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except ClientError as exc:
        if exc.code == "NETWORK":
            click.echo(f"network error: {exc.message}", err=True)
            sys.exit(EXIT_NETWORK)
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VERIFY)
    except TelechainError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VERIFY)
    except SystemExit:
        raise
    except ValueError as exc:
        click.echo(f"usage error: {exc}", err=True)
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
