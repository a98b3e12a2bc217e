"""Single entry binary exposing every module's operation for scripting and CI.

Exit codes are a stable contract: 0 success, 1 check failed (verification or
scan found problems), 2 configuration error, 3 FIPS gate failure, 4
trust/admission fatal, 5 bundle cache-miss, 6 signature failure.
"""

from __future__ import annotations

import asyncio
import functools
import json
import os
import sys
from typing import Any, Callable

import click

from . import admission as admission_mod
from . import audit as audit_mod
from . import boot as bootstrap_mod
from . import classification as cls_mod
from . import control_api as control_api_mod
from . import dlp as dlp_mod
from . import policy as policy_mod
from . import prompt_shield as shield_mod
from . import proxy as proxy_mod
from . import signing as signing_mod
from . import txbuffer as tx_mod
from .formal import bundle as bundle_mod
from .formal import skills as skills_mod
from .errors import (
    AdmissionFatalError,
    ConfigurationError,
    EnclawedError,
    FipsGateError,
    PathTraversalError,
    SchemeLoadError,
    SchemeValidationError,
    TrustRootError,
    TrustRootLockedError,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_FIPS = 3
EXIT_TRUST = 4
EXIT_CACHE_MISS = 5
EXIT_SIGNATURE = 6


def _exit_code_for(exc: EnclawedError) -> int:
    if isinstance(exc, FipsGateError):
        return EXIT_FIPS
    if isinstance(exc, (AdmissionFatalError, TrustRootError, TrustRootLockedError)):
        return EXIT_TRUST
    if isinstance(
        exc, (ConfigurationError, SchemeLoadError, SchemeValidationError, PathTraversalError)
    ):
        return EXIT_CONFIG
    return EXIT_CHECK_FAILED


def handles_errors(fn: Callable) -> Callable:
    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any):
        try:
            return fn(*args, **kwargs)
        except EnclawedError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code_for(exc))

    return wrapper


def _emit(payload: Any, as_json: bool, human: str | None = None) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2, default=str))
    else:
        click.echo(human if human is not None else json.dumps(payload, indent=2, default=str))


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    with open(source, "r", encoding="utf-8") as fh:
        return fh.read()


json_option = click.option("--json", "as_json", is_flag=True, help="machine-readable output")


@click.group()
def main() -> None:
    """Regulated-enclave hardening toolkit."""


# ---------------------------------------------------------------- scheme


@main.group()
def scheme() -> None:
    """Classification scheme validation and inspection."""


@scheme.command("validate")
@click.argument("path")
@json_option
@handles_errors
def scheme_validate(path: str, as_json: bool) -> None:
    loaded = cls_mod.load_scheme_by_name(path)
    payload = {
        "id": loaded.id,
        "levels": [
            {"rank": lv.rank, "canonicalName": lv.canonical_name, "aliases": list(lv.aliases)}
            for lv in loaded.levels
        ],
    }
    _emit(payload, as_json, f"scheme '{loaded.id}' valid: {len(loaded.levels)} levels")


@scheme.command("show")
@click.argument("name")
@json_option
@handles_errors
def scheme_show(name: str, as_json: bool) -> None:
    loaded = cls_mod.load_scheme_by_name(name)
    rows = [f"{lv.rank}  {lv.canonical_name}" + (f"  (aliases: {', '.join(lv.aliases)})" if lv.aliases else "") for lv in loaded.levels]
    payload = {
        "id": loaded.id,
        "description": loaded.description,
        "levels": [
            {"rank": lv.rank, "canonicalName": lv.canonical_name, "aliases": list(lv.aliases)}
            for lv in loaded.levels
        ],
    }
    _emit(payload, as_json, "\n".join([loaded.id] + rows))


# ---------------------------------------------------------------- label


@main.group()
def label() -> None:
    """Label formatting, parsing, and lattice checks."""


def _scheme_opt(fn: Callable) -> Callable:
    return click.option("--scheme", "scheme_name", default="enclawed-default", show_default=True)(fn)


@label.command("parse")
@click.argument("text")
@_scheme_opt
@json_option
@handles_errors
def label_parse(text: str, scheme_name: str, as_json: bool) -> None:
    active = cls_mod.load_scheme_by_name(scheme_name)
    lab = cls_mod.parse_label(text, active)
    payload = {"rank": lab.rank, "compartments": list(lab.compartments), "releasability": list(lab.releasability)}
    _emit(payload, as_json, f"rank={lab.rank} compartments={list(lab.compartments)} releasability={list(lab.releasability)}")


@label.command("format")
@click.argument("rank", type=int)
@click.option("--compartment", "-c", "compartments", multiple=True)
@click.option("--releasability", "-r", "releasability", multiple=True)
@_scheme_opt
@json_option
@handles_errors
def label_format(rank: int, compartments: tuple[str, ...], releasability: tuple[str, ...], scheme_name: str, as_json: bool) -> None:
    active = cls_mod.load_scheme_by_name(scheme_name)
    lab = cls_mod.make_label(rank, compartments, releasability, active)
    text = cls_mod.format_label(lab, active)
    _emit({"label": text}, as_json, text)


@label.command("check")
@click.argument("mode", type=click.Choice(["read", "write"]))
@click.argument("subject")
@click.argument("obj", metavar="OBJECT")
@_scheme_opt
@json_option
@handles_errors
def label_check(mode: str, subject: str, obj: str, scheme_name: str, as_json: bool) -> None:
    active = cls_mod.load_scheme_by_name(scheme_name)
    subj = cls_mod.parse_label(subject, active)
    objl = cls_mod.parse_label(obj, active)
    allowed = cls_mod.access_check(mode, subj, objl)
    _emit({"allowed": allowed}, as_json, "allow" if allowed else "deny")
    if not allowed:
        sys.exit(EXIT_CHECK_FAILED)


@label.command("lub")
@click.argument("a")
@click.argument("b")
@_scheme_opt
@json_option
@handles_errors
def label_lub(a: str, b: str, scheme_name: str, as_json: bool) -> None:
    active = cls_mod.load_scheme_by_name(scheme_name)
    combined = cls_mod.lub(cls_mod.parse_label(a, active), cls_mod.parse_label(b, active))
    text = cls_mod.format_label(combined, active)
    _emit({"label": text}, as_json, text)


# ---------------------------------------------------------------- audit


@main.group()
def audit() -> None:
    """Hash-chained audit log operations."""


@audit.command("verify")
@click.argument("path")
@json_option
@handles_errors
def audit_verify(path: str, as_json: bool) -> None:
    result = audit_mod.verify_chain(path)
    payload = {"ok": result.ok, "count": result.count, "brokenAt": result.broken_at, "note": result.note}
    human = (
        f"ok: {result.count} records (note: {result.note})"
        if result.ok
        else f"BROKEN at record {result.broken_at} of {result.count}"
    )
    _emit(payload, as_json, human)
    if not result.ok:
        sys.exit(EXIT_CHECK_FAILED)


@audit.command("tail")
@click.argument("path")
@click.option("-n", "count", default=10, show_default=True)
@json_option
@handles_errors
def audit_tail(path: str, count: int, as_json: bool) -> None:
    rows = audit_mod.tail(path, count)
    human = "\n".join(
        f"{r.get('seq', '?'):>5}  {r.get('type', '?'):<28} {r.get('actor', '')}" for r in rows
    )
    _emit(rows, as_json, human)


@audit.command("append")
@click.option("--path", default=None, help="defaults to ENCLAWED_AUDIT_PATH")
@click.option("--type", "record_type", default="cli.test")
@click.option("--actor", default="cli")
@click.option("--level", default="")
@click.option("--payload", default="{}")
@json_option
@handles_errors
def audit_append(path: str | None, record_type: str, actor: str, level: str, payload: str, as_json: bool) -> None:
    """Test utility: append one record."""
    target = path or audit_mod.default_audit_path()
    try:
        parsed = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"--payload is not valid JSON: {exc}") from exc
    with audit_mod.AuditLog(target) as log:
        record = log.append(record_type, actor, level, parsed)
    _emit(record.to_dict(), as_json, f"appended seq={record.seq} to {target}")


# ---------------------------------------------------------------- dlp


@main.group()
def dlp() -> None:
    """Sensitive-data scanning and redaction."""


@dlp.command("scan")
@click.argument("source")
@click.option("--max-bytes", default=dlp_mod.MAX_BYTES_DEFAULT, show_default=True)
@click.option("--on-oversize", type=click.Choice(["throw", "truncate"]), default="throw")
@json_option
@handles_errors
def dlp_scan(source: str, max_bytes: int, on_oversize: str, as_json: bool) -> None:
    text = _read_text(source)
    findings = dlp_mod.scan(text, dlp_mod.ScanOptions(max_bytes=max_bytes, on_oversize=on_oversize))
    payload = [
        {"patternId": f.pattern_id, "family": f.family, "severity": f.severity, "span": list(f.span)}
        for f in findings
    ]
    human = "\n".join(f"{f.pattern_id}  {f.severity}  [{f.span[0]},{f.span[1]})" for f in findings)
    _emit(payload, as_json, human if findings else "no findings")
    if findings:
        sys.exit(EXIT_CHECK_FAILED)


@dlp.command("redact")
@click.argument("source")
@click.option("--threshold", type=click.Choice(["low", "medium", "high", "critical"]), default="high", show_default=True)
@click.option("--max-bytes", default=dlp_mod.MAX_BYTES_DEFAULT, show_default=True)
@click.option("--on-oversize", type=click.Choice(["throw", "truncate"]), default="throw")
@handles_errors
def dlp_redact(source: str, threshold: str, max_bytes: int, on_oversize: str) -> None:
    text = _read_text(source)
    click.echo(
        dlp_mod.redact(text, threshold, dlp_mod.ScanOptions(max_bytes=max_bytes, on_oversize=on_oversize)),
        nl=False,
    )


# ---------------------------------------------------------------- prompt


@main.group()
def prompt() -> None:
    """Prompt-shield sanitization and injection detection."""


@prompt.command("sanitize")
@click.argument("source")
@handles_errors
def prompt_sanitize(source: str) -> None:
    click.echo(shield_mod.sanitize_for_prompt(_read_text(source)), nl=False)


@prompt.command("detect")
@click.argument("source")
@json_option
@handles_errors
def prompt_detect(source: str, as_json: bool) -> None:
    findings = shield_mod.detect_injection(_read_text(source))
    payload = [{"id": f.id, "span": list(f.span) if f.span else None} for f in findings]
    _emit(payload, as_json, "\n".join(f.id for f in findings) if findings else "clean")
    if findings:
        sys.exit(EXIT_CHECK_FAILED)


# ---------------------------------------------------------------- manifest


@main.group()
def manifest() -> None:
    """Module manifest signing and verification."""


@manifest.command("sign")
@click.argument("path")
@click.option("--key", "key_path", required=True, help="Ed25519 private key (PEM)")
@click.option("--key-id", required=True)
@click.option("--out", "out_path", default=None, help="defaults to in-place")
@json_option
@handles_errors
def manifest_sign(path: str, key_path: str, key_id: str, out_path: str | None, as_json: bool) -> None:
    man = signing_mod.load_manifest(path)
    key = signing_mod.load_private_key(key_path)
    signed = signing_mod.sign_manifest(man, key, key_id)
    destination = out_path or path
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(signed.to_dict(), fh, indent=2)
        fh.write("\n")
    _emit(signed.to_dict(), as_json, f"signed {signed.id} -> {destination}")


@manifest.command("verify")
@click.argument("path")
@click.option("--trust-root", "trust_root_path", required=True)
@click.option("--scheme", "scheme_name", default=None)
@click.option("--required-clearance", default=None)
@json_option
@handles_errors
def manifest_verify(
    path: str, trust_root_path: str, scheme_name: str | None, required_clearance: str | None, as_json: bool
) -> None:
    man = signing_mod.load_manifest(path)
    root = signing_mod.load_trust_root(trust_root_path)
    active = cls_mod.load_scheme_by_name(scheme_name) if scheme_name else None
    result = signing_mod.verify_manifest(man, root, scheme=active, required_clearance=required_clearance)
    _emit(
        {"ok": result.ok, "reasons": list(result.reasons)},
        as_json,
        "verified" if result.ok else f"FAILED: {', '.join(result.reasons)}",
    )
    if not result.ok:
        sys.exit(EXIT_SIGNATURE)


@manifest.command("keygen")
@click.option("--out-dir", required=True)
@click.option("--key-id", required=True)
@json_option
@handles_errors
def manifest_keygen(out_dir: str, key_id: str, as_json: bool) -> None:
    """Development helper: a fresh Ed25519 keypair plus a trust-root stanza."""
    os.makedirs(out_dir, exist_ok=True)
    private, public = signing_mod.generate_keypair()
    key_path = os.path.join(out_dir, f"{key_id}.pem")
    signing_mod.save_private_key(private, key_path)
    stanza = {
        "keyId": key_id,
        "publicKeyBase64": signing_mod.public_key_b64(public),
        "approvedClearances": [],
    }
    _emit(
        {"privateKey": key_path, "signer": stanza},
        as_json,
        f"private key: {key_path}\ntrust-root stanza:\n{json.dumps(stanza, indent=2)}",
    )


# ---------------------------------------------------------------- trust


@main.group()
def trust() -> None:
    """Trust root inspection and locking."""


@trust.command("show")
@click.option("--trust-root", "trust_root_path", default=None, help="defaults to ENCLAWED_TRUST_ROOT")
@json_option
@handles_errors
def trust_show(trust_root_path: str | None, as_json: bool) -> None:
    path = trust_root_path or os.environ.get(policy_mod.ENV_TRUST_ROOT, "")
    if not path:
        raise ConfigurationError("no trust root path (give --trust-root or set ENCLAWED_TRUST_ROOT)")
    root = signing_mod.load_trust_root(path)
    payload = root.to_document()
    human = "\n".join(
        f"{s['keyId']}: clearances {', '.join(s['approvedClearances']) or '(none)'}"
        for s in payload["signers"]
    )
    _emit(payload, as_json, human or "(no signers)")


@trust.command("lock")
@click.option("--trust-root", "trust_root_path", default=None)
@json_option
@handles_errors
def trust_lock(trust_root_path: str | None, as_json: bool) -> None:
    """Demonstrate the lock lifecycle on a loaded root (process-lifetime state)."""
    path = trust_root_path or os.environ.get(policy_mod.ENV_TRUST_ROOT, "")
    if not path:
        raise ConfigurationError("no trust root path (give --trust-root or set ENCLAWED_TRUST_ROOT)")
    holder = signing_mod.TrustRootHolder(signing_mod.load_trust_root(path))
    holder.lock()
    try:
        holder.set(signing_mod.TrustRoot(signers={}))
    except TrustRootLockedError:
        _emit({"locked": True}, as_json, "trust root locked; mutation raises TrustRootLockedError")
        return
    raise AdmissionFatalError("lock did not hold")


# ---------------------------------------------------------------- admission


@main.group()
def admission() -> None:
    """Module admission decisions."""


@admission.command("check")
@click.argument("root_dir")
@click.option("--flavor", "flavor_name", default=None, help="defaults to ENCLAWED_FLAVOR")
@click.option("--trust-root", "trust_root_path", default=None)
@click.option("--scheme", "scheme_name", default="enclawed-default", show_default=True)
@json_option
@handles_errors
def admission_check(
    root_dir: str, flavor_name: str | None, trust_root_path: str | None, scheme_name: str, as_json: bool
) -> None:
    flavor = policy_mod.parse_flavor(flavor_name or os.environ.get(policy_mod.ENV_FLAVOR))
    root = None
    path = trust_root_path or os.environ.get(policy_mod.ENV_TRUST_ROOT, "")
    if path:
        root = signing_mod.load_trust_root(path)
    active = cls_mod.load_scheme_by_name(scheme_name)
    decisions = admission_mod.preload_module_decisions(root_dir, flavor, root, active)
    payload = {mid: {"verdict": d.verdict, "reasons": list(d.reasons)} for mid, d in decisions.items()}
    human = "\n".join(
        f"{mid:<24} {d.verdict:<6} {', '.join(d.reasons)}" for mid, d in sorted(decisions.items())
    )
    _emit(payload, as_json, human or "(no module directories)")
    if any(d.verdict == "deny" for d in decisions.values()):
        sys.exit(EXIT_CHECK_FAILED)


# ---------------------------------------------------------------- bundle


@main.group()
def bundle() -> None:
    """Formal-evidence bundle operations and module-tree reports."""


@bundle.command("report")
@click.argument("root_dir")
@click.option("--trust-root", "trust_root_path", default=None)
@click.option("--scheme", "scheme_name", default="enclawed-default", show_default=True)
@json_option
@handles_errors
def bundle_report(root_dir: str, trust_root_path: str | None, scheme_name: str, as_json: bool) -> None:
    root = None
    path = trust_root_path or os.environ.get(policy_mod.ENV_TRUST_ROOT, "")
    if path:
        root = signing_mod.load_trust_root(path)
    active = cls_mod.load_scheme_by_name(scheme_name)
    counts = admission_mod.bundle_report(root_dir, root, active)
    payload = {
        "signed": counts.signed,
        "gated": counts.gated,
        "noMetadata": counts.no_metadata,
        "modules": {mid: category for mid, category in counts.per_module},
    }
    human = (
        f"signed: {counts.signed}  gated-unsigned: {counts.gated}  no-metadata: {counts.no_metadata}"
    )
    _emit(payload, as_json, human)


@bundle.command("verify")
@click.argument("bundle_dir")
@click.option("--skill", "skill_dir", required=True)
@click.option("--trust-root", "trust_root_path", required=True)
@json_option
@handles_errors
def bundle_verify(bundle_dir: str, skill_dir: str, trust_root_path: str, as_json: bool) -> None:
    root = signing_mod.load_trust_root(trust_root_path)
    result = bundle_mod.verify_formal_bundle(bundle_dir, skill_dir, root)
    _emit(
        {"ok": result.ok, "reasons": list(result.reasons)},
        as_json,
        "bundle verified; skill eligible for level formal" if result.ok else f"FAILED: {', '.join(result.reasons)}",
    )
    if result.ok:
        return
    if any("cache-miss" in r for r in result.reasons):
        sys.exit(EXIT_CACHE_MISS)
    if any(r in (bundle_mod.REASON_SIGNER, bundle_mod.REASON_SIGNATURE, bundle_mod.REASON_TAMPERED) for r in result.reasons):
        sys.exit(EXIT_SIGNATURE)
    sys.exit(EXIT_CHECK_FAILED)


@main.command("skills-formal-verify")
@click.argument("skill_dir")
@click.option("--key", "key_path", required=True, help="Ed25519 private key (PEM)")
@click.option("--key-id", required=True)
@click.option("--out", "out_dir", required=True)
@click.option("--bmc-bound", default=bundle_mod.DEFAULT_BUNDLE_BMC_BOUND, show_default=True)
@json_option
@handles_errors
def skills_formal_verify(skill_dir: str, key_path: str, key_id: str, out_dir: str, bmc_bound: int, as_json: bool) -> None:
    """Run Methods A/B/C and emit the signed four-file bundle."""
    key = signing_mod.load_private_key(key_path)
    manifest_obj = skills_mod.parse_skill_manifest(skill_dir)
    verdict = bundle_mod.produce_evidence(skill_dir, manifest=manifest_obj, bmc_bound=bmc_bound)
    static_doc = verdict[0]
    if not static_doc["contained"]:
        _emit(
            {"ok": False, "union": static_doc["union"], "declared": static_doc["declared"]},
            as_json,
            f"effect containment FAILED: union {static_doc['union']} vs declared {static_doc['declared']}",
        )
        sys.exit(EXIT_CHECK_FAILED)
    out = bundle_mod.sign_bundle(skill_dir, key, key_id, out_dir, bmc_bound=bmc_bound)
    _emit({"ok": True, "bundle": out}, as_json, f"bundle written to {out}")


# ---------------------------------------------------------------- services


@main.group()
def proxy() -> None:
    """Egress-enforcing forward proxy."""


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigurationError(f"--bind must be host:port, got {bind!r}")
    return host, int(port)


@proxy.command("serve")
@click.option("--bind", default="127.0.0.1:8888", show_default=True)
@click.option("--policy", "policy_path", default=None, help="policy override JSON (else ENCLAWED_POLICY_PATH)")
@click.option("--modules", "modules_dir", default=None, help="modules tree to preload")
@handles_errors
def proxy_serve(bind: str, policy_path: str | None, modules_dir: str | None) -> None:
    env = dict(os.environ)
    if policy_path:
        env[policy_mod.ENV_POLICY_PATH] = policy_path
    runtime = bootstrap_mod.bootstrap(env, modules_dir)
    server = proxy_mod.serve_proxy(runtime.egress, _parse_bind(bind), background=False)
    click.echo(f"proxy listening on {server.address[0]}:{server.address[1]} ({runtime.flavor.value})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


@main.group()
def hitl() -> None:
    """HITL control service."""


@hitl.command("serve")
@click.option("--bind", default="127.0.0.1:8787", show_default=True)
@click.option("--console-dir", default=None, help="serve the operator console from this directory")
@click.option("--demo", is_flag=True, help="spawn demo agent sessions")
@handles_errors
def hitl_serve(bind: str, console_dir: str | None, demo: bool) -> None:
    from .hitl import HitlController

    runtime = bootstrap_mod.bootstrap(dict(os.environ), None)
    host, port = _parse_bind(bind)

    async def run() -> None:
        controller = HitlController(audit=runtime.audit)
        server = await control_api_mod.serve_control_api(
            controller,
            audit_path=runtime.audit.path,
            host=host,
            port=port,
            console_dir=console_dir,
        )
        click.echo(f"hitl control api on http://{host}:{port} ({runtime.flavor.value})")
        if demo:
            asyncio.ensure_future(_demo_agents(controller))
        await server.serve_forever()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass


async def _demo_agents(controller: "Any") -> None:
    """A few always-busy sessions so the console has something to show."""
    import contextlib

    from .errors import AgentStoppedError, ApprovalDeniedError, EnclawedError

    async def agent(session: Any) -> None:
        step = 0
        try:
            while True:
                await session.checkpoint()
                step += 1
                if step % 3 == 0:
                    await session.propose_action(
                        "fs.write.irrev", {"path": f"/tmp/demo-{session.agent_id}-{step}"}
                    )
                await asyncio.sleep(0.4)
        except ApprovalDeniedError:
            with contextlib.suppress(EnclawedError):
                session.fail("approval denied")
        except AgentStoppedError:
            pass

    for i in range(3):
        session = controller.create_session(f"demo-agent-{i}", approval_required={"fs.write.irrev"})
        session.start()
        asyncio.ensure_future(agent(session))


# ---------------------------------------------------------------- tx-demo


@main.command("tx-demo")
@click.option("--records", default=5, show_default=True)
@json_option
@handles_errors
def tx_demo(records: int, as_json: bool) -> None:
    """Scripted demonstration of the rollback buffer."""
    state: list[str] = []
    buffer = tx_mod.TransactionBuffer(max_bytes=1 << 20)
    for i in range(records):
        name = f"item-{i}"
        state.append(name)
        buffer.record(f"append {name}", lambda n=name: state.remove(n), approx_bytes=128)
    rolled = buffer.rollback(max(1, records // 2))
    verify = buffer.verify()
    payload = {
        "recorded": records,
        "rolledBack": rolled.rolled_back,
        "errors": list(rolled.errors),
        "remainingState": state,
        "chainOk": verify.ok,
    }
    _emit(
        payload,
        as_json,
        f"recorded {records}, rolled back {rolled.rolled_back}, chain ok: {verify.ok}, state: {state}",
    )


if __name__ == "__main__":
    main()
