"""JSON message files exchanged between issuer, holder, verifier and gate.

Conventions: integers are lowercase hex strings with a 0x prefix (-0x for
negatives), nonces are 32 bare hex chars, dates are ISO YYYY-MM-DD, and
key order inside each document is fixed so identical values always
produce identical bytes.
"""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path
from typing import Any

from .anoncred import (
    NONCE_LEN,
    Credential,
    CredentialMetadata,
    HolderIssuanceState,
    HolderSecret,
    IssuanceRequest,
    IssuerPublicKey,
    IssuerSecretKey,
    PreCredential,
    Presentation,
    PresentationProof,
    SystemParams,
)
from .model import Attribute, Claim


class FormatError(Exception):
    """A document does not match its schema or version."""

    code = "FormatError"


def int_to_hex(x: int) -> str:
    return ("-0x" if x < 0 else "0x") + format(abs(x), "x")


def hex_to_int(s: Any) -> int:
    if not isinstance(s, str):
        raise FormatError(f"expected hex string, got {type(s).__name__}")
    neg = s.startswith("-")
    body = s[1:] if neg else s
    if not body.startswith("0x") or len(body) == 2:
        raise FormatError(f"not a 0x-hex integer: {s!r}")
    try:
        value = int(body, 16)
    except ValueError:
        raise FormatError(f"not a 0x-hex integer: {s!r}") from None
    return -value if neg else value


def nonce_to_hex(nonce: bytes) -> str:
    return bytes(nonce).hex()


def nonce_from_hex(s: Any) -> bytes:
    if not isinstance(s, str) or len(s) != 2 * NONCE_LEN:
        raise FormatError(f"nonce must be {2 * NONCE_LEN} hex chars")
    try:
        return bytes.fromhex(s)
    except ValueError:
        raise FormatError("nonce is not valid hex") from None


def _need(doc: Any, key: str, kind: type) -> Any:
    if not isinstance(doc, dict):
        raise FormatError(f"expected object, got {type(doc).__name__}")
    if key not in doc:
        raise FormatError(f"missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise FormatError(f"field {key!r} has wrong type")
    return value


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def save(doc: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def load(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    return doc


# -- claims and metadata ----------------------------------------------------

def claim_to_json(c: Claim) -> dict:
    return {
        "name": c.attribute.name,
        "value": c.attribute.value,
        "issuer_id": c.issuer_id,
        "schema_id": c.schema_id,
    }


def claim_from_json(doc: Any) -> Claim:
    try:
        return Claim(
            attribute=Attribute(_need(doc, "name", str), _need(doc, "value", str)),
            issuer_id=_need(doc, "issuer_id", str),
            schema_id=_need(doc, "schema_id", str),
        )
    except ValueError as exc:
        raise FormatError(f"bad claim: {exc}") from None


def metadata_to_json(md: CredentialMetadata) -> dict:
    return {
        "issuer_id": md.issuer_id,
        "schema_id": md.schema_id,
        "issued_at": md.issued_at.isoformat(),
        "expires_at": md.expires_at.isoformat() if md.expires_at else None,
        "credential_id": md.credential_id,
    }


def _parse_date(s: Any, field: str) -> date:
    if not isinstance(s, str):
        raise FormatError(f"field {field!r} must be a date string")
    try:
        return date.fromisoformat(s)
    except ValueError:
        raise FormatError(f"field {field!r} is not YYYY-MM-DD") from None


def metadata_from_json(doc: Any) -> CredentialMetadata:
    expires = doc.get("expires_at") if isinstance(doc, dict) else None
    return CredentialMetadata(
        issuer_id=_need(doc, "issuer_id", str),
        schema_id=_need(doc, "schema_id", str),
        issued_at=_parse_date(_need(doc, "issued_at", str), "issued_at"),
        expires_at=_parse_date(expires, "expires_at") if expires is not None else None,
        credential_id=_need(doc, "credential_id", str),
    )


# -- key material -----------------------------------------------------------

def params_to_json(p: SystemParams) -> dict:
    return {
        "l_n": p.l_n,
        "l_m": p.l_m,
        "l_e": p.l_e,
        "l_e_prime": p.l_e_prime,
        "l_v": p.l_v,
        "l_stat": p.l_stat,
        "l_h": p.l_h,
    }


def params_from_json(doc: Any) -> SystemParams:
    return SystemParams(*(_need(doc, k, int) for k in (
        "l_n", "l_m", "l_e", "l_e_prime", "l_v", "l_stat", "l_h"
    )))


def public_key_to_json(pk: IssuerPublicKey) -> dict:
    return {
        "n": int_to_hex(pk.n),
        "s": int_to_hex(pk.S),
        "z": int_to_hex(pk.Z),
        "r": [int_to_hex(r) for r in pk.R],
        "params": params_to_json(pk.params),
        "issuer_id": pk.issuer_id,
    }


def public_key_from_json(doc: Any) -> IssuerPublicKey:
    r = _need(doc, "r", list)
    if len(r) < 2:
        raise FormatError("public key needs the holder base plus one attribute base")
    return IssuerPublicKey(
        n=hex_to_int(_need(doc, "n", str)),
        S=hex_to_int(_need(doc, "s", str)),
        Z=hex_to_int(_need(doc, "z", str)),
        R=tuple(hex_to_int(x) for x in r),
        params=params_from_json(_need(doc, "params", dict)),
        issuer_id=_need(doc, "issuer_id", str),
    )


def secret_key_to_json(sk: IssuerSecretKey) -> dict:
    return {"p": int_to_hex(sk.p), "q": int_to_hex(sk.q)}


def secret_key_from_json(doc: Any) -> IssuerSecretKey:
    return IssuerSecretKey(p=hex_to_int(_need(doc, "p", str)), q=hex_to_int(_need(doc, "q", str)))


# -- issuance messages ------------------------------------------------------

def request_to_json(req: IssuanceRequest) -> dict:
    return {
        "u": int_to_hex(req.U),
        "proof": {
            "c": int_to_hex(req.c),
            "s_v": int_to_hex(req.s_v),
            "s_k": int_to_hex(req.s_k),
        },
        "nonce": nonce_to_hex(req.nonce),
    }


def request_from_json(doc: Any) -> IssuanceRequest:
    proof = _need(doc, "proof", dict)
    return IssuanceRequest(
        U=hex_to_int(_need(doc, "u", str)),
        c=hex_to_int(_need(proof, "c", str)),
        s_v=hex_to_int(_need(proof, "s_v", str)),
        s_k=hex_to_int(_need(proof, "s_k", str)),
        nonce=nonce_from_hex(_need(doc, "nonce", str)),
    )


def holder_state_to_json(state: HolderIssuanceState) -> dict:
    return {
        "v_prime": int_to_hex(state.v_prime),
        "issuer_key_digest": state.pk.digest().hex(),
    }


def holder_state_from_json(doc: Any, pk: IssuerPublicKey) -> HolderIssuanceState:
    digest = _need(doc, "issuer_key_digest", str)
    if digest != pk.digest().hex():
        raise FormatError("issuance state belongs to a different issuer key")
    return HolderIssuanceState(v_prime=hex_to_int(_need(doc, "v_prime", str)), pk=pk)


def pre_credential_to_json(pre: PreCredential) -> dict:
    return {
        "a": int_to_hex(pre.A),
        "e": int_to_hex(pre.e),
        "v_dprime": int_to_hex(pre.v_dprime),
        "claims": [claim_to_json(c) for c in pre.claims],
        "metadata": metadata_to_json(pre.metadata),
    }


def pre_credential_from_json(doc: Any) -> PreCredential:
    return PreCredential(
        A=hex_to_int(_need(doc, "a", str)),
        e=hex_to_int(_need(doc, "e", str)),
        v_dprime=hex_to_int(_need(doc, "v_dprime", str)),
        claims=tuple(claim_from_json(c) for c in _need(doc, "claims", list)),
        metadata=metadata_from_json(_need(doc, "metadata", dict)),
    )


# -- credentials and presentations ------------------------------------------

def credential_to_json(cred: Credential) -> dict:
    return {
        "a": int_to_hex(cred.A),
        "e": int_to_hex(cred.e),
        "v": int_to_hex(cred.v),
        "claims": [claim_to_json(c) for c in cred.claims],
        "metadata": metadata_to_json(cred.metadata),
    }


def credential_from_json(doc: Any) -> Credential:
    return Credential(
        A=hex_to_int(_need(doc, "a", str)),
        e=hex_to_int(_need(doc, "e", str)),
        v=hex_to_int(_need(doc, "v", str)),
        claims=tuple(claim_from_json(c) for c in _need(doc, "claims", list)),
        metadata=metadata_from_json(_need(doc, "metadata", dict)),
    )


def _index_key(key: str) -> int:
    if not key.isdigit():
        raise FormatError(f"attribute index must be a decimal string, got {key!r}")
    return int(key)


def presentation_to_json(pres: Presentation) -> dict:
    return {
        "a_prime": int_to_hex(pres.a_prime),
        "disclosed": {str(i): claim_to_json(c) for i, c in sorted(pres.disclosed.items())},
        "proof": {
            "c": int_to_hex(pres.proof.c),
            "s_e": int_to_hex(pres.proof.s_e),
            "s_v": int_to_hex(pres.proof.s_v),
            "s_k": int_to_hex(pres.proof.s_k),
            "s_m": {str(i): int_to_hex(s) for i, s in sorted(pres.proof.s_m.items())},
        },
        "nonce": nonce_to_hex(pres.nonce),
        "context": pres.context,
        "issuer_id": pres.issuer_id,
        "schema_id": pres.schema_id,
    }


def presentation_from_json(doc: Any) -> Presentation:
    proof = _need(doc, "proof", dict)
    return Presentation(
        a_prime=hex_to_int(_need(doc, "a_prime", str)),
        disclosed={
            _index_key(k): claim_from_json(v)
            for k, v in _need(doc, "disclosed", dict).items()
        },
        proof=PresentationProof(
            c=hex_to_int(_need(proof, "c", str)),
            s_e=hex_to_int(_need(proof, "s_e", str)),
            s_v=hex_to_int(_need(proof, "s_v", str)),
            s_k=hex_to_int(_need(proof, "s_k", str)),
            s_m={
                _index_key(k): hex_to_int(v)
                for k, v in _need(proof, "s_m", dict).items()
            },
        ),
        nonce=nonce_from_hex(_need(doc, "nonce", str)),
        context=_need(doc, "context", str),
        issuer_id=_need(doc, "issuer_id", str),
        schema_id=_need(doc, "schema_id", str),
    )


# -- wallet ------------------------------------------------------------------

WALLET_VERSION = 1


def wallet_to_json(holder_secret: HolderSecret | None, credentials: list[Credential], labels: dict[str, str]) -> dict:
    return {
        "version": WALLET_VERSION,
        "holder_secret": {"k": int_to_hex(holder_secret.k)} if holder_secret else None,
        "credentials": [credential_to_json(c) for c in credentials],
        "labels": dict(labels),
    }


def wallet_from_json(doc: Any) -> tuple[HolderSecret | None, list[Credential], dict[str, str]]:
    version = _need(doc, "version", int)
    if version != WALLET_VERSION:
        raise FormatError(f"unsupported wallet version {version}")
    hs_doc = doc.get("holder_secret")
    hs = HolderSecret(k=hex_to_int(_need(hs_doc, "k", str))) if hs_doc is not None else None
    creds = [credential_from_json(c) for c in _need(doc, "credentials", list)]
    labels_doc = _need(doc, "labels", dict)
    labels = {}
    for k, v in labels_doc.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise FormatError("labels must map strings to strings")
        labels[k] = v
    ids = [c.metadata.credential_id for c in creds]
    if len(set(ids)) != len(ids):
        raise FormatError("wallet credential ids must be unique")
    return hs, creds, labels
