"""CL-style anonymous credentials over a strong-RSA group.

A credential has four parts: a binding to its holder's secret key, the
certified claims, the issuer's signature, and metadata. The signature is
a Camenisch-Lysyanskaya triple (A, e, v) over a special RSA modulus n
with quadratic-residue bases S, Z, R_0..R_L, where R_0 is reserved for
the holder secret k and R_1..R_L carry the encoded claims:

    Z == A^e * S^v * R_0^k * prod_i R_i^(m_i)   (mod n)

Issuance is blinded: the holder commits U = S^v' R_0^k with a proof of
knowledge, the issuer completes the signature on U without ever seeing k,
and the holder folds its blinding v' back in. A presentation re-randomizes
the signature (A' = A S^rA) and proves knowledge of (e, v - e*rA, k, and
every undisclosed m_i) via a Fiat-Shamir sigma protocol, so any chosen
subset of claims can be disclosed while the rest stay hidden. Fresh
randomness per show makes transcripts pairwise unlinkable; binding to a
verifier nonce and context string stops replays.

All operations take an explicit randomness source (``random.Random`` for
reproducible tests, ``random.SystemRandom`` for real use) and are pure
given that source. The 512-bit profile exists to keep tests fast; it is
NOT a secure parameter set.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from datetime import date
from hashlib import sha256
from typing import Iterable, Mapping, Sequence

from .hashing import (
    TAG_ISSUE,
    TAG_PK,
    TAG_PRESENT,
    challenge_from_digest,
    int_signed_bytes,
    transcript_hash,
)
from .model import Claim, claim_bytes
from .primes import random_prime_in_interval, safe_prime

NONCE_LEN = 16

Rng = random.Random  # random.SystemRandom quacks the same

DEFAULT_L_M = 256


class AbcError(Exception):
    """Base class; `code` is the stable machine-readable identifier."""

    code = "AbcError"


class ParameterError(AbcError):
    code = "ParameterError"


class ProofInvalid(AbcError):
    code = "ProofInvalid"


class EncodingError(AbcError):
    code = "EncodingError"


class SignatureInvalid(AbcError):
    code = "SignatureInvalid"


class NonceMismatch(AbcError):
    code = "NonceMismatch"


class ContextMismatch(AbcError):
    code = "ContextMismatch"


class LengthCheckFailed(AbcError):
    code = "LengthCheckFailed"


@dataclass(frozen=True)
class SystemParams:
    """Bit-length profile for the scheme (Idemix-style relations)."""

    l_n: int  # modulus
    l_m: int  # attribute messages and holder secret
    l_e: int  # signature prime exponent
    l_e_prime: int  # width of the prime sampling interval
    l_v: int  # signature blinding exponent
    l_stat: int  # statistical zero-knowledge slack
    l_h: int  # Fiat-Shamir challenge

    def __post_init__(self) -> None:
        if self.l_e <= self.l_m + 2:
            raise ParameterError("l_e must exceed l_m + 2")
        if self.l_v < self.l_n + self.l_m + 2 * self.l_stat:
            raise ParameterError("l_v too small for statistical hiding")
        if self.l_m > 257:
            raise ParameterError("attribute encoding supports l_m <= 257")

    @property
    def e_interval(self) -> tuple[int, int]:
        lo = 1 << (self.l_e - 1)
        return lo, lo + (1 << self.l_e_prime)


# l_v follows l_n + l_m + l_h + 2*l_stat + 4; only the 512 profile is meant
# for tests and CI.
PROFILES: dict[int, SystemParams] = {
    512: SystemParams(512, 256, 597, 120, 1188, 80, 256),
    1024: SystemParams(1024, 256, 597, 120, 1700, 80, 256),
    2048: SystemParams(2048, 256, 597, 120, 2724, 80, 256),
}


@dataclass(frozen=True)
class IssuerPublicKey:
    n: int
    S: int
    Z: int
    R: tuple[int, ...]  # R[0] binds the holder secret
    params: SystemParams
    issuer_id: str

    @property
    def L(self) -> int:
        return len(self.R) - 1

    def digest(self) -> bytes:
        p = self.params
        elems = [
            TAG_PK,
            self.issuer_id.encode("utf-8"),
            int_signed_bytes(self.L),
            int_signed_bytes(p.l_n),
            int_signed_bytes(p.l_m),
            int_signed_bytes(p.l_e),
            int_signed_bytes(p.l_e_prime),
            int_signed_bytes(p.l_v),
            int_signed_bytes(p.l_stat),
            int_signed_bytes(p.l_h),
            int_signed_bytes(self.n),
            int_signed_bytes(self.S),
            int_signed_bytes(self.Z),
        ]
        elems.extend(int_signed_bytes(r) for r in self.R)
        return transcript_hash(elems)


@dataclass(frozen=True)
class IssuerSecretKey:
    p: int
    q: int

    @property
    def n(self) -> int:
        return self.p * self.q

    @property
    def group_order(self) -> int:
        return ((self.p - 1) // 2) * ((self.q - 1) // 2)


@dataclass(frozen=True)
class HolderSecret:
    k: int


@dataclass(frozen=True)
class IssuanceRequest:
    """Blinded commitment U = S^v' R_0^k plus a Fiat-Shamir proof of
    knowledge of (v', k), bound to the issuer's nonce."""

    U: int
    c: int
    s_v: int
    s_k: int
    nonce: bytes


@dataclass(frozen=True)
class HolderIssuanceState:
    v_prime: int
    pk: IssuerPublicKey


@dataclass(frozen=True)
class CredentialMetadata:
    issuer_id: str
    schema_id: str
    issued_at: date
    expires_at: date | None = None
    credential_id: str = ""


@dataclass(frozen=True)
class PreCredential:
    A: int
    e: int
    v_dprime: int
    claims: tuple[Claim, ...]
    metadata: CredentialMetadata


@dataclass(frozen=True)
class Credential:
    A: int
    e: int
    v: int
    claims: tuple[Claim, ...]
    metadata: CredentialMetadata


@dataclass(frozen=True)
class PresentationProof:
    c: int
    s_e: int
    s_v: int
    s_k: int
    s_m: Mapping[int, int]  # responses for undisclosed attribute indices

    def __post_init__(self) -> None:
        object.__setattr__(self, "s_m", dict(self.s_m))


@dataclass(frozen=True)
class Presentation:
    a_prime: int
    disclosed: Mapping[int, Claim]
    proof: PresentationProof
    nonce: bytes
    context: str
    issuer_id: str
    schema_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "disclosed", dict(self.disclosed))


def encode_attribute(claim: Claim, params: SystemParams) -> int:
    """Message integer for a claim: the first l_m - 1 bits of SHA-256 over
    the claim's canonical serialization."""
    if not isinstance(claim, Claim):
        raise EncodingError(f"not a claim: {claim!r}")
    digest = sha256(claim_bytes(claim)).digest()
    return int.from_bytes(digest, "big") >> (256 - (params.l_m - 1))


def _random_qr(n: int, rng: Rng) -> int:
    while True:
        x = rng.randrange(2, n - 1)
        s = x * x % n
        if 2 <= s <= n - 2:
            return s


def _qr_power(base: int, n: int, order: int, rng: Rng) -> int:
    while True:
        y = pow(base, rng.randrange(2, order), n)
        if 2 <= y <= n - 2:
            return y


def setup_issuer_from_primes(
    L: int,
    p: int,
    q: int,
    params: SystemParams,
    rng: Rng,
    issuer_id: str = "issuer",
) -> tuple[IssuerPublicKey, IssuerSecretKey]:
    """Key pair from caller-supplied safe primes (test hook; `setup_issuer`
    generates the primes for you)."""
    if L < 1:
        raise ParameterError("need at least one attribute base")
    if p == q:
        raise ParameterError("p and q must differ")
    if p % 4 != 3 or q % 4 != 3:
        raise ParameterError("p and q must be = 3 (mod 4)")
    n = p * q
    if n.bit_length() != params.l_n:
        raise ParameterError(
            f"modulus has {n.bit_length()} bits, profile wants {params.l_n}"
        )
    order = ((p - 1) // 2) * ((q - 1) // 2)
    S = _random_qr(n, rng)
    Z = _qr_power(S, n, order, rng)
    R = tuple(_qr_power(S, n, order, rng) for _ in range(L + 1))
    return (
        IssuerPublicKey(n=n, S=S, Z=Z, R=R, params=params, issuer_id=issuer_id),
        IssuerSecretKey(p=p, q=q),
    )


def setup_issuer(
    L: int, l_n: int, rng: Rng, issuer_id: str = "issuer"
) -> tuple[IssuerPublicKey, IssuerSecretKey]:
    """Provision an issuer for credentials carrying exactly L claims."""
    params = PROFILES.get(l_n)
    if params is None:
        raise ParameterError(f"unsupported modulus size {l_n}, pick one of {sorted(PROFILES)}")
    half = l_n // 2
    while True:
        p = safe_prime(half, rng)
        q = safe_prime(half, rng)
        if p != q and (p * q).bit_length() == l_n:
            return setup_issuer_from_primes(L, p, q, params, rng, issuer_id)


def holder_keygen(rng: Rng, l_m: int = DEFAULT_L_M) -> HolderSecret:
    """Secret key of the credential owner, uniform in [1, 2^l_m)."""
    return HolderSecret(k=rng.randrange(1, 1 << l_m))


def _issue_challenge(pk: IssuerPublicKey, U: int, T: int, nonce: bytes) -> int:
    digest = transcript_hash(
        [TAG_ISSUE, pk.digest(), int_signed_bytes(U), int_signed_bytes(T), nonce]
    )
    return challenge_from_digest(digest, pk.params.l_h)


def begin_issuance(
    pk: IssuerPublicKey, hs: HolderSecret, issuer_nonce: bytes, rng: Rng
) -> tuple[IssuanceRequest, HolderIssuanceState]:
    """Holder side, step one: blind the secret key into U and prove
    knowledge of the blinding and the key."""
    _check_nonce(issuer_nonce)
    p = pk.params
    n = pk.n
    v_prime = rng.getrandbits(p.l_n + p.l_stat)
    U = pow(pk.S, v_prime, n) * pow(pk.R[0], hs.k, n) % n

    r_v = rng.getrandbits(p.l_n + 2 * p.l_stat + p.l_h)
    r_k = rng.getrandbits(p.l_m + p.l_stat + p.l_h)
    T = pow(pk.S, r_v, n) * pow(pk.R[0], r_k, n) % n
    c = _issue_challenge(pk, U, T, issuer_nonce)
    req = IssuanceRequest(
        U=U, c=c, s_v=r_v + c * v_prime, s_k=r_k + c * hs.k, nonce=issuer_nonce
    )
    return req, HolderIssuanceState(v_prime=v_prime, pk=pk)


def verify_issuance_request(pk: IssuerPublicKey, req: IssuanceRequest) -> None:
    """Issuer-side check of the request proof; raises ProofInvalid."""
    p = pk.params
    n = pk.n
    if not 2 <= req.U <= n - 2:
        raise ProofInvalid("U out of range")
    if req.s_v < 0 or req.s_v.bit_length() > p.l_n + 2 * p.l_stat + p.l_h + 1:
        raise ProofInvalid("response s_v fails its length bound")
    if req.s_k < 0 or req.s_k.bit_length() > p.l_m + p.l_stat + p.l_h + 1:
        raise ProofInvalid("response s_k fails its length bound")
    try:
        T_hat = (
            pow(pk.S, req.s_v, n) * pow(pk.R[0], req.s_k, n) * pow(req.U, -req.c, n)
        ) % n
    except ValueError:  # U not invertible mod n
        raise ProofInvalid("degenerate commitment") from None
    if _issue_challenge(pk, req.U, T_hat, req.nonce) != req.c:
        raise ProofInvalid("issuance request proof does not verify")


def issue(
    sk: IssuerSecretKey,
    pk: IssuerPublicKey,
    req: IssuanceRequest,
    claims: Sequence[Claim],
    metadata: CredentialMetadata,
    rng: Rng,
) -> PreCredential:
    """Issuer side: sign the blinded commitment together with the claims."""
    verify_issuance_request(pk, req)
    if len(claims) != pk.L:
        raise EncodingError(f"issuer key fits exactly {pk.L} claims, got {len(claims)}")
    p = pk.params
    n = pk.n
    ms = [encode_attribute(c, p) for c in claims]

    lo, hi = p.e_interval
    while True:
        e = random_prime_in_interval(lo, hi, rng)
        if math.gcd(e, sk.group_order) == 1:
            break
    v_dprime = rng.getrandbits(p.l_v)

    acc = req.U * pow(pk.S, v_dprime, n) % n
    for base, m in zip(pk.R[1:], ms):
        acc = acc * pow(base, m, n) % n
    try:
        Q = pk.Z * pow(acc, -1, n) % n
    except ValueError:
        raise ProofInvalid("degenerate commitment") from None
    A = pow(Q, pow(e, -1, sk.group_order), n)
    return PreCredential(A=A, e=e, v_dprime=v_dprime, claims=tuple(claims), metadata=metadata)


def signature_holds(pk: IssuerPublicKey, A: int, e: int, v: int, k: int, ms: Sequence[int]) -> bool:
    """The CL verification equation Z == A^e S^v R0^k prod Ri^mi (mod n)."""
    n = pk.n
    acc = pow(A, e, n) * pow(pk.S, v, n) % n * pow(pk.R[0], k, n) % n
    for base, m in zip(pk.R[1:], ms):
        acc = acc * pow(base, m, n) % n
    return acc == pk.Z


def complete_credential(
    pre: PreCredential, state: HolderIssuanceState, hs: HolderSecret
) -> Credential:
    """Holder side, final step: fold the blinding back in and check the
    signature equation (the issuer is not otherwise trusted)."""
    pk = state.pk
    p = pk.params
    v = state.v_prime + pre.v_dprime
    lo, hi = p.e_interval
    if not lo <= pre.e <= hi:
        raise SignatureInvalid("e outside its prescribed interval")
    ms = [encode_attribute(c, p) for c in pre.claims]
    if not signature_holds(pk, pre.A, pre.e, v, hs.k, ms):
        raise SignatureInvalid("credential fails the verification equation")
    return Credential(A=pre.A, e=pre.e, v=v, claims=pre.claims, metadata=pre.metadata)


def _check_nonce(nonce: bytes) -> None:
    if not isinstance(nonce, (bytes, bytearray)) or len(nonce) != NONCE_LEN:
        raise ParameterError(f"nonce must be {NONCE_LEN} bytes")


def _present_challenge(
    pk: IssuerPublicKey,
    a_prime: int,
    T: int,
    disclosed: Mapping[int, Claim],
    nonce: bytes,
    context: str,
) -> int:
    elems = [
        TAG_PRESENT,
        pk.digest(),
        int_signed_bytes(a_prime),
        int_signed_bytes(T),
        int_signed_bytes(len(disclosed)),
    ]
    for i in sorted(disclosed):
        elems.append(int_signed_bytes(i))
        elems.append(claim_bytes(disclosed[i]))
    elems.append(bytes(nonce))
    elems.append(context.encode("utf-8"))
    return challenge_from_digest(transcript_hash(elems), pk.params.l_h)


def disclosed_base(pk: IssuerPublicKey, disclosed_ms: Mapping[int, int]) -> int:
    """Z with the disclosed attribute terms divided out: the public value
    the hidden witnesses must account for."""
    acc = 1
    for i, m in disclosed_ms.items():
        acc = acc * pow(pk.R[i], m, pk.n) % pk.n
    return pk.Z * pow(acc, -1, pk.n) % pk.n


def present(
    pk: IssuerPublicKey,
    cred: Credential,
    hs: HolderSecret,
    disclose: Iterable[int],
    nonce: bytes,
    context: str,
    rng: Rng,
) -> Presentation:
    """One-show transcript disclosing the chosen claim indices (1-based).

    The credential can be shown as many times as needed; every call
    re-randomizes the signature and the proof. The holder secret index 0
    can never be disclosed. A presentation made with the wrong holder
    secret is well-formed but will not verify.
    """
    _check_nonce(nonce)
    disclose = set(disclose)
    L_c = len(cred.claims)
    if any(i < 1 or i > L_c for i in disclose) or 0 in disclose:
        raise IndexError(f"disclosure indices must lie in 1..{L_c}")
    p = pk.params
    n = pk.n

    r_A = rng.getrandbits(p.l_n + p.l_stat)
    a_prime = cred.A * pow(pk.S, r_A, n) % n
    v_bar = cred.v - cred.e * r_A

    ms = {i: encode_attribute(c, p) for i, c in enumerate(cred.claims, start=1)}
    hidden = sorted(set(ms) - disclose)

    r_e = rng.getrandbits(p.l_e + p.l_stat + p.l_h)
    r_v = rng.getrandbits(p.l_v + p.l_stat + p.l_h)
    r_k = rng.getrandbits(p.l_m + p.l_stat + p.l_h)
    r_m = {i: rng.getrandbits(p.l_m + p.l_stat + p.l_h) for i in hidden}

    T = pow(a_prime, r_e, n) * pow(pk.S, r_v, n) % n * pow(pk.R[0], r_k, n) % n
    for i in hidden:
        T = T * pow(pk.R[i], r_m[i], n) % n

    disclosed = {i: cred.claims[i - 1] for i in sorted(disclose)}
    c = _present_challenge(pk, a_prime, T, disclosed, nonce, context)
    proof = PresentationProof(
        c=c,
        s_e=r_e + c * cred.e,
        s_v=r_v + c * v_bar,
        s_k=r_k + c * hs.k,
        s_m={i: r_m[i] + c * ms[i] for i in hidden},
    )
    return Presentation(
        a_prime=a_prime,
        disclosed=disclosed,
        proof=proof,
        nonce=bytes(nonce),
        context=context,
        issuer_id=cred.metadata.issuer_id,
        schema_id=cred.metadata.schema_id,
    )


def _check_response_bound(value: int, bits: int, label: str) -> None:
    if abs(value).bit_length() > bits + 1:
        raise LengthCheckFailed(f"response {label} fails its length bound")


def verify_presentation(
    pk: IssuerPublicKey,
    pres: Presentation,
    expected_nonce: bytes,
    expected_context: str,
) -> frozenset[Claim]:
    """Check a presentation transcript; returns exactly the disclosed claims.

    Rejections carry distinct codes: NonceMismatch / ContextMismatch for
    binding failures, LengthCheckFailed for out-of-range responses, and
    ProofInvalid for everything that breaks the sigma-protocol equation.
    """
    if bytes(pres.nonce) != bytes(expected_nonce):
        raise NonceMismatch("presentation bound to a different nonce")
    if pres.context != expected_context:
        raise ContextMismatch("presentation bound to a different context")

    p = pk.params
    n = pk.n
    proof = pres.proof

    if pres.issuer_id != pk.issuer_id:
        raise ProofInvalid("presentation names a different issuer")
    if not 1 <= pres.a_prime <= n - 1:
        raise ProofInvalid("A' out of range")
    indices = set(pres.disclosed) | set(proof.s_m)
    if set(pres.disclosed) & set(proof.s_m):
        raise ProofInvalid("index both disclosed and hidden")
    if 0 in indices:
        raise ProofInvalid("holder secret index can never be disclosed")
    if indices != set(range(1, len(indices) + 1)) or len(indices) > pk.L:
        raise ProofInvalid("attribute indices do not form a credential layout")
    if not 0 <= proof.c < (1 << p.l_h):
        raise ProofInvalid("challenge out of range")

    _check_response_bound(proof.s_e, p.l_e + p.l_stat + p.l_h, "s_e")
    _check_response_bound(proof.s_v, p.l_v + p.l_stat + p.l_h, "s_v")
    _check_response_bound(proof.s_k, p.l_m + p.l_stat + p.l_h, "s_k")
    for i, s in proof.s_m.items():
        _check_response_bound(s, p.l_m + p.l_stat + p.l_h, f"s_m[{i}]")

    disclosed_ms = {i: encode_attribute(c, p) for i, c in pres.disclosed.items()}
    try:
        z_d = disclosed_base(pk, disclosed_ms)
        T_hat = (
            pow(pres.a_prime, proof.s_e, n)
            * pow(pk.S, proof.s_v, n)
            % n
            * pow(pk.R[0], proof.s_k, n)
            % n
        )
        for i, s in proof.s_m.items():
            T_hat = T_hat * pow(pk.R[i], s, n) % n
        T_hat = T_hat * pow(z_d, -proof.c, n) % n
    except ValueError:  # some transcript value is not invertible mod n
        raise ProofInvalid("degenerate transcript value") from None

    if _present_challenge(pk, pres.a_prime, T_hat, pres.disclosed, pres.nonce, pres.context) != proof.c:
        raise ProofInvalid("transcript equation does not verify")
    return frozenset(pres.disclosed.values())
