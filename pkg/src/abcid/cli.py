"""Command-line surface: file-based issuer / holder / verifier / gate flows.

Message exchange is offline by design: every handshake step reads and
writes JSON documents, so the whole protocol can be scripted and diffed.
Exit codes: 0 success (or Permit / valid proof), 1 Deny or invalid proof,
2 usage, parse, or file format errors. Errors go to stderr as one line
`error[<Code>]: <message>`; there is never a traceback.

`--seed` makes every command deterministic and exists for tests and
reproducible demos; real deployments must leave it unset so keys and
proofs draw from the OS entropy pool.
"""

from __future__ import annotations

import argparse
import random
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import anoncred, gate, wire
from .anoncred import AbcError, CredentialMetadata, EncodingError, ParameterError
from .model import Claim, Unsatisfiable, select_credentials
from .policy import AccessRequest, ParseError, TimeWindow, decompose_policy, parse_policy, serialize_policy
from .wallet import Wallet, wallet_load, wallet_save
from .wire import FormatError


def build_rng(seed: int | None) -> anoncred.Rng:
    return random.Random(seed) if seed is not None else random.SystemRandom()


def _parse_at(text: str) -> datetime:
    try:
        at = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise FormatError(f"--at must be an RFC3339 UTC timestamp, got {text!r}") from None
    if at.tzinfo is None:
        at = at.replace(tzinfo=timezone.utc)
    return at.astimezone(timezone.utc)


def _nonce_arg(text: str) -> bytes:
    return wire.nonce_from_hex(text)


def _load_public_key(path: str) -> anoncred.IssuerPublicKey:
    return wire.public_key_from_json(wire.load(path))


# -- issuer ------------------------------------------------------------------

def cmd_issuer_init(args) -> int:
    rng = build_rng(args.seed)
    pk, sk = anoncred.setup_issuer(args.attrs, args.l_n, rng, args.issuer_id)
    wire.save(wire.secret_key_to_json(sk), args.key)
    wire.save(wire.public_key_to_json(pk), args.issuer_pub)
    print(f"issuer {args.issuer_id}: wrote secret key {args.key} and public key {args.issuer_pub}")
    return 0


def _claims_from_file(path: str, issuer_id: str) -> tuple[tuple[Claim, ...], CredentialMetadata]:
    doc = wire.load(path)
    claims = []
    for c in doc.get("claims", []):
        if isinstance(c, dict):
            c = dict(c)
            c.setdefault("issuer_id", issuer_id)
            c.setdefault("schema_id", doc.get("schema_id", ""))
        claims.append(wire.claim_from_json(c))
    if "issued_at" not in doc:
        raise FormatError("claims file needs an issued_at date")
    md = wire.metadata_from_json(
        {
            "issuer_id": issuer_id,
            "schema_id": doc.get("schema_id", ""),
            "issued_at": doc.get("issued_at"),
            "expires_at": doc.get("expires_at"),
            "credential_id": doc.get("credential_id", ""),
        }
    )
    return tuple(claims), md


def cmd_issuer_issue(args) -> int:
    rng = build_rng(args.seed)
    sk = wire.secret_key_from_json(wire.load(args.key))
    pk = _load_public_key(args.issuer_pub)
    req = wire.request_from_json(wire.load(args.infile))
    if args.nonce is not None and req.nonce != args.nonce:
        raise anoncred.NonceMismatch("request is bound to a different issuer nonce")
    claims, metadata = _claims_from_file(args.claims, pk.issuer_id)
    pre = anoncred.issue(sk, pk, req, claims, metadata, rng)
    wire.save(wire.pre_credential_to_json(pre), args.out)
    print(f"issued pre-credential {metadata.credential_id or '(unlabeled)'} -> {args.out}")
    return 0


# -- holder ------------------------------------------------------------------

def cmd_holder_keygen(args) -> int:
    rng = build_rng(args.seed)
    pk = _load_public_key(args.issuer_pub)
    wallet = Wallet(holder_secret=anoncred.holder_keygen(rng, pk.params.l_m))
    wallet_save(wallet, args.wallet)
    print(f"new wallet with holder secret -> {args.wallet}")
    return 0


def _wallet_with_secret(path: str) -> Wallet:
    wallet = wallet_load(path)
    if wallet.holder_secret is None:
        raise FormatError("wallet has no holder secret; run `holder keygen` first")
    return wallet


def cmd_holder_request(args) -> int:
    rng = build_rng(args.seed)
    wallet = _wallet_with_secret(args.wallet)
    pk = _load_public_key(args.issuer_pub)
    req, state = anoncred.begin_issuance(pk, wallet.holder_secret, args.nonce, rng)
    wire.save(wire.request_to_json(req), args.out)
    wire.save(wire.holder_state_to_json(state), args.state)
    print(f"issuance request -> {args.out} (keep {args.state} until completion)")
    return 0


def cmd_holder_complete(args) -> int:
    wallet = _wallet_with_secret(args.wallet)
    pk = _load_public_key(args.issuer_pub)
    state = wire.holder_state_from_json(wire.load(args.state), pk)
    pre = wire.pre_credential_from_json(wire.load(args.infile))
    cred = anoncred.complete_credential(pre, state, wallet.holder_secret)
    wallet.add_credential(cred, label=args.label or "")
    wallet_save(wallet, args.wallet)
    print(f"credential {cred.metadata.credential_id or '(unlabeled)'} added to {args.wallet}")
    return 0


def cmd_holder_list(args) -> int:
    wallet = wallet_load(args.wallet)
    if not wallet.credentials:
        print("wallet is empty")
        return 0
    for cred in wallet.credentials:
        names = ", ".join(f"{c.attribute.name}={c.attribute.value}" for c in cred.claims)
        label = wallet.labels.get(cred.metadata.credential_id, "")
        suffix = f"  # {label}" if label else ""
        print(
            f"{cred.metadata.credential_id}: [{names}] "
            f"issuer={cred.metadata.issuer_id} schema={cred.metadata.schema_id} "
            f"issued={cred.metadata.issued_at.isoformat()}{suffix}"
        )
    return 0


def cmd_holder_present(args) -> int:
    rng = build_rng(args.seed)
    wallet = _wallet_with_secret(args.wallet)
    pk = _load_public_key(args.issuer_pub)
    try:
        cred = wallet.find(args.credential)
    except KeyError:
        raise FormatError(f"no credential {args.credential!r} in wallet") from None
    names = [n for n in (args.disclose or "").split(",") if n]
    indices: set[int] = set()
    for name in names:
        matches = [i for i, c in enumerate(cred.claims, start=1) if c.attribute.name == name]
        if not matches:
            raise FormatError(f"credential {args.credential!r} has no attribute {name!r}")
        indices.update(matches)
    pres = anoncred.present(
        pk, cred, wallet.holder_secret, indices, args.nonce, args.context, rng
    )
    wire.save(wire.presentation_to_json(pres), args.out)
    print(f"presentation disclosing {sorted(names)} -> {args.out}")
    return 0


# -- verifier ------------------------------------------------------------------

def cmd_verifier_verify(args) -> int:
    pk = _load_public_key(args.issuer_pub)
    pres = wire.presentation_from_json(wire.load(args.infile))
    claims = anoncred.verify_presentation(pk, pres, args.nonce, args.context)
    print(f"valid presentation from issuer {pk.issuer_id}")
    for c in sorted(claims, key=lambda c: c.attribute.name):
        print(f"  {c.attribute.name}={c.attribute.value} (certified by {c.issuer_id})")
    return 0


# -- policy ------------------------------------------------------------------

def cmd_policy_lint(args) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    policy = parse_policy(text)
    parts = decompose_policy(policy)
    subjects = ", ".join(
        t.name if t.value is None else f'{t.name}="{t.value}"'
        for t in sorted(parts.subjects, key=lambda t: (t.name, t.value or ""))
    )
    print(f"subjects: {subjects}")
    print(f"objects:  {parts.objects.describe()}")
    print(f"action:   {parts.action}")
    if parts.context:
        conds = []
        for c in parts.context:
            if isinstance(c, TimeWindow):
                conds.append(f"time {c.start // 60:02d}:{c.start % 60:02d}-{c.end // 60:02d}:{c.end % 60:02d}")
            else:
                conds.append("days " + ",".join(d for d in ("mon", "tue", "wed", "thu", "fri", "sat", "sun") if d in c.days))
        print(f"context:  {'; '.join(conds)}")
    else:
        print("context:  unconditional")
    print(f"domain:   {parts.domain}")
    return 0


# -- gate ----------------------------------------------------------------------

def cmd_gate_eval(args) -> int:
    registry, digests, _files = gate.registry_from_json(wire.load(args.registry))
    for path in args.issuer_pub or []:
        gate.attach_trusted_key(registry, _load_public_key(path), digests)
    for path in args.policy or []:
        gate.register_policy(registry, Path(path).stem, parse_policy(Path(path).read_text(encoding="utf-8")))
    presentations = [wire.presentation_from_json(wire.load(p)) for p in args.presentation or []]
    req = AccessRequest(
        action=args.action,
        resource_type=args.rtype,
        resource_name=args.rname,
        domain_id=args.domain,
        at=_parse_at(args.at),
    )
    outcome = gate.access(registry, args.domain, req, presentations, args.nonce)
    decision = outcome.decision
    print(f"{decision.outcome}  reasons: {', '.join(decision.reasons) or '(none)'}")
    if decision.matched_policy:
        print(f"matched policy: {decision.matched_policy}")
    if outcome.verified:
        pooled = ", ".join(sorted({c.attribute.name for c in outcome.verified}))
        print(f"verified attributes: {pooled}")
    for idx, code in outcome.presentation_errors:
        print(f"presentation[{idx}] rejected: {code}", file=sys.stderr)
    return 0 if decision.outcome == "Permit" else 1


# -- fixture -------------------------------------------------------------------

def cmd_fixture_emit(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fx = gate.reference_fixture(seed=args.seed if args.seed is not None else 20260101)

    policy_files = {pid: f"policies/{pid}.pol" for pid in gate.FIXTURE_POLICY_TEXTS}
    (out / "policies").mkdir(exist_ok=True)
    for pid, text in gate.FIXTURE_POLICY_TEXTS.items():
        (out / policy_files[pid]).write_text(serialize_policy(parse_policy(text)) + "\n", encoding="utf-8")

    wire.save(gate.registry_to_json(fx.registry, policy_files), out / "registry.json")
    for issuer_id, (pk, sk) in sorted(fx.issuer_keys.items()):
        wire.save(wire.public_key_to_json(pk), out / f"{issuer_id}.pub.json")
        wire.save(wire.secret_key_to_json(sk), out / f"{issuer_id}.key.json")
    wallet_save(fx.wallet, out / "wallet.json")
    wire.save(
        {
            "attributes": {code: {"name": a.name, "value": a.value} for code, a in sorted(fx.attributes.items())},
            "credentials": {cid: list(codes) for cid, codes in sorted(gate.CREDENTIAL_ATTRS.items())},
            "domains": {d: list(codes) for d, codes in sorted(gate.DOMAIN_ATTRS.items())},
        },
        out / "attributes.json",
    )

    print(f"fixture written to {out}")
    for domain_id in sorted(gate.DOMAIN_ATTRS):
        required = fx.required_names(domain_id)
        picked = select_credentials(required, fx.wallet.summaries())
        listed = ", ".join(gate.REFERENCE_CREDENTIAL_SETS[domain_id])
        print(f"  {domain_id}: requires {sorted(required)} -> select {picked} (reference set: {listed})")
    return 0


# -- wiring --------------------------------------------------------------------

def _add_common_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abcid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="group", required=True)

    issuer = sub.add_parser("issuer", help="issuer-side operations").add_subparsers(
        dest="cmd", required=True
    )
    p = issuer.add_parser("init", help="generate an issuer key pair")
    p.add_argument("--issuer-id", required=True)
    p.add_argument("--attrs", type=int, required=True, help="claims per credential")
    p.add_argument("--l-n", type=int, default=2048, choices=sorted(anoncred.PROFILES))
    p.add_argument("--key", required=True, help="secret key output file")
    p.add_argument("--issuer-pub", required=True, help="public key output file")
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_issuer_init)

    p = issuer.add_parser("issue", help="sign a blinded issuance request")
    p.add_argument("--key", required=True)
    p.add_argument("--issuer-pub", required=True)
    p.add_argument("--in", dest="infile", required=True, help="issuance request file")
    p.add_argument("--claims", required=True, help="claims + metadata JSON file")
    p.add_argument("--nonce", type=_nonce_arg, help="expected issuer nonce (32 hex)")
    p.add_argument("--seed", type=int)
    _add_common_output(p)
    p.set_defaults(fn=cmd_issuer_issue)

    holder = sub.add_parser("holder", help="wallet-side operations").add_subparsers(
        dest="cmd", required=True
    )
    p = holder.add_parser("keygen", help="create a wallet with a fresh holder secret")
    p.add_argument("--wallet", required=True)
    p.add_argument("--issuer-pub", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_holder_keygen)

    p = holder.add_parser("request", help="start a blinded issuance")
    p.add_argument("--wallet", required=True)
    p.add_argument("--issuer-pub", required=True)
    p.add_argument("--nonce", type=_nonce_arg, required=True)
    p.add_argument("--state", required=True, help="issuance state output file")
    p.add_argument("--seed", type=int)
    _add_common_output(p)
    p.set_defaults(fn=cmd_holder_request)

    p = holder.add_parser("complete", help="turn a pre-credential into a credential")
    p.add_argument("--wallet", required=True)
    p.add_argument("--issuer-pub", required=True)
    p.add_argument("--in", dest="infile", required=True, help="pre-credential file")
    p.add_argument("--state", required=True)
    p.add_argument("--label")
    p.set_defaults(fn=cmd_holder_complete)

    p = holder.add_parser("list", help="list wallet credentials")
    p.add_argument("--wallet", required=True)
    p.set_defaults(fn=cmd_holder_list)

    p = holder.add_parser("present", help="create a selective-disclosure presentation")
    p.add_argument("--wallet", required=True)
    p.add_argument("--issuer-pub", required=True)
    p.add_argument("--credential", required=True, help="credential id in the wallet")
    p.add_argument("--disclose", default="", help="comma-separated attribute names")
    p.add_argument("--nonce", type=_nonce_arg, required=True)
    p.add_argument("--context", required=True)
    p.add_argument("--seed", type=int)
    _add_common_output(p)
    p.set_defaults(fn=cmd_holder_present)

    verifier = sub.add_parser("verifier", help="verifier-side operations").add_subparsers(
        dest="cmd", required=True
    )
    p = verifier.add_parser("verify", help="check a presentation transcript")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--issuer-pub", required=True)
    p.add_argument("--nonce", type=_nonce_arg, required=True)
    p.add_argument("--context", required=True)
    p.set_defaults(fn=cmd_verifier_verify)

    policy = sub.add_parser("policy", help="policy tooling").add_subparsers(
        dest="cmd", required=True
    )
    p = policy.add_parser("lint", help="parse a .pol file and show its parts")
    p.add_argument("file")
    p.set_defaults(fn=cmd_policy_lint)

    gatep = sub.add_parser("gate", help="domain gate").add_subparsers(dest="cmd", required=True)
    p = gatep.add_parser("eval", help="decide one access request")
    p.add_argument("--registry", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--action", required=True)
    p.add_argument("--rtype", required=True)
    p.add_argument("--rname", default="")
    p.add_argument("--at", required=True, help="RFC3339 UTC timestamp")
    p.add_argument("--nonce", type=_nonce_arg, required=True)
    p.add_argument("--presentation", action="append", help="presentation file (repeatable)")
    p.add_argument("--issuer-pub", action="append", help="trusted issuer key file (repeatable)")
    p.add_argument("--policy", action="append", help=".pol file (repeatable; id = file stem)")
    p.set_defaults(fn=cmd_gate_eval)

    fixture = sub.add_parser("fixture", help="reference scenario").add_subparsers(
        dest="cmd", required=True
    )
    p = fixture.add_parser("emit", help="write the reference fixture to a directory")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_fixture_emit)

    return parser


def run(argv: list[str]) -> int:
    """Entry point used by tests; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"error[ParseError]: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, EncodingError) as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except AbcError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except Unsatisfiable as exc:
        print(f"error[Unsatisfiable]: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"error[FormatError]: {exc}", file=sys.stderr)
        return 2
    except gate.GateError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[IoError]: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error[ValueError]: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
