"""Identity data model: attributes, certified claims, partial and digital
identities, and credential selection for a domain's attribute requirements.

Everything is a frozen dataclass and every operation is a pure function,
so values are safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

TOKEN_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
MAX_NAME_LEN = 64

_FIELD_SEP = b"\x1f"


def is_token(s: str) -> bool:
    return bool(TOKEN_RE.match(s))


@dataclass(frozen=True)
class Attribute:
    """A named characteristic of an entity. Equality is exact on the
    (name, value) pair; values are opaque UTF-8 strings and may be empty."""

    name: str
    value: str = ""

    def __post_init__(self) -> None:
        if not is_token(self.name) or len(self.name) > MAX_NAME_LEN:
            raise ValueError(f"invalid attribute name: {self.name!r}")
        if not isinstance(self.value, str):
            raise ValueError("attribute value must be a string")


@dataclass(frozen=True)
class Claim:
    """An attribute certified by an issuer.

    Two claims are the same fact when (name, value, issuer_id) match;
    the schema under which the fact was certified does not split identity.
    """

    attribute: Attribute
    issuer_id: str
    schema_id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not is_token(self.issuer_id):
            raise ValueError(f"claim needs a certifying issuer, got {self.issuer_id!r}")
        if self.schema_id and not is_token(self.schema_id):
            raise ValueError(f"invalid schema id: {self.schema_id!r}")


def claim_bytes(claim: Claim) -> bytes:
    """Canonical byte serialization of a claim, used wherever claims are
    hashed: each field UTF-8, 4-byte big-endian length prefix, fields
    joined by 0x1F."""
    parts = []
    for text in (claim.attribute.name, claim.attribute.value, claim.issuer_id):
        raw = text.encode("utf-8")
        parts.append(len(raw).to_bytes(4, "big") + raw)
    return _FIELD_SEP.join(parts)


@dataclass(frozen=True)
class EntityRef:
    """Local wallet label for the entity a claim set belongs to. Never
    serialized into any presentation transcript."""

    entity_id: str


@dataclass(frozen=True)
class PartialIdentity:
    """The subset of an entity's claims visible to one domain."""

    domain_id: str
    claims: frozenset[Claim] = frozenset()

    def __post_init__(self) -> None:
        if not is_token(self.domain_id):
            raise ValueError(f"invalid domain id: {self.domain_id!r}")
        object.__setattr__(self, "claims", frozenset(self.claims))


@dataclass(frozen=True)
class DigitalIdentity:
    """Union of an entity's partial identities. Partials may overlap."""

    partials: frozenset[PartialIdentity] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "partials", frozenset(self.partials))

    def claim_union(self) -> frozenset[Claim]:
        out: set[Claim] = set()
        for p in self.partials:
            out |= p.claims
        return frozenset(out)


def union_partial_identities(partials: Iterable[PartialIdentity]) -> DigitalIdentity:
    """Combine per-domain partial identities into one digital identity."""
    return DigitalIdentity(frozenset(partials))


def project_partial_identity(di: DigitalIdentity, domain_id: str) -> PartialIdentity:
    """The view of `di` from one domain: exactly the claims registered for
    that domain, never the cross-domain union. Unknown domains project to
    an empty partial identity."""
    claims: set[Claim] = set()
    for p in di.partials:
        if p.domain_id == domain_id:
            claims |= p.claims
    return PartialIdentity(domain_id, frozenset(claims))


@dataclass(frozen=True)
class CredentialSummary:
    """What credential selection needs to know about a wallet entry."""

    credential_id: str
    attribute_names: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attribute_names", frozenset(self.attribute_names))


class Unsatisfiable(Exception):
    """The wallet cannot jointly cover the required attributes."""

    def __init__(self, missing: Iterable[str]):
        self.missing = frozenset(missing)
        super().__init__(f"attributes not covered by wallet: {sorted(self.missing)}")


def select_credentials(required: Iterable[str], wallet: Sequence[CredentialSummary]) -> list[str]:
    """Pick credentials whose attributes jointly cover `required`.

    Greedy cover: repeatedly take the credential certifying the most
    still-uncovered required attributes; ties go to the credential with
    the fewest attributes overall (disclose no more than needed), then to
    the lexicographically smallest id. Deterministic, and minimal on the
    reference fixture; a brute-force cover can occasionally be smaller.
    """
    ids = [c.credential_id for c in wallet]
    if len(set(ids)) != len(ids):
        raise ValueError("wallet credential ids must be distinct")
    uncovered = set(required)
    reachable: set[str] = set()
    for c in wallet:
        reachable |= c.attribute_names
    if not uncovered <= reachable:
        raise Unsatisfiable(uncovered - reachable)

    chosen: list[str] = []
    remaining = list(wallet)
    while uncovered:
        best = min(
            remaining,
            key=lambda c: (
                -len(c.attribute_names & uncovered),
                len(c.attribute_names),
                c.credential_id,
            ),
        )
        if not best.attribute_names & uncovered:
            raise Unsatisfiable(uncovered)  # unreachable after the pre-check
        chosen.append(best.credential_id)
        uncovered -= best.attribute_names
        remaining.remove(best)
    return chosen
