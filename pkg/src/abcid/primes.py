"""Number theory for the strong-RSA credential group.

Plain Python integers throughout; ``pow()`` does the modular heavy
lifting, so everything here is reproducible on any platform. Primality
is Miller-Rabin with witnesses derived deterministically from the
candidate, which keeps seeded key generation bit-stable.
"""

from __future__ import annotations

import random
from typing import Iterable


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * limit
    flags[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(flags[i * i :: i]))
    return [i for i in range(limit) if flags[i]]


SMALL_PRIMES = _sieve(2000)

# Deterministic for all n < 3.3e24 (Sorenson & Webster); larger candidates
# get extra witnesses seeded from n itself.
_FIXED_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_EXTRA_ROUNDS = 28


def _miller_rabin_round(n: int, a: int, d: int, r: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin primality test, deterministic per candidate."""
    if n < 2:
        return False
    for p in SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _FIXED_WITNESSES:
        if not _miller_rabin_round(n, a, d, r):
            return False
    if n.bit_length() > 81:
        extra = random.Random(n)
        for _ in range(_EXTRA_ROUNDS):
            if not _miller_rabin_round(n, extra.randrange(2, n - 1), d, r):
                return False
    return True


def is_safe_prime(p: int) -> bool:
    return p > 5 and is_probable_prime(p) and is_probable_prime((p - 1) // 2)


def _survives_sieve(candidates: Iterable[int]) -> bool:
    for c in candidates:
        for p in SMALL_PRIMES:
            if c % p == 0 and c != p:
                return False
    return True


def safe_prime(bits: int, rng: random.Random) -> int:
    """Random safe prime p = 2p' + 1 with exactly `bits` bits.

    p' odd forces p = 3 (mod 4), which the scheme relies on. Candidates
    failing trial division on either p or p' are discarded before any
    Miller-Rabin work.
    """
    if bits < 8:
        raise ValueError("safe prime size must be at least 8 bits")
    while True:
        # Top two bits forced so products of two such primes keep full size.
        q = rng.getrandbits(bits - 3) | (0b11 << (bits - 3)) | 1
        p = 2 * q + 1
        if not _survives_sieve((q, p)):
            continue
        # Cheap pre-check: 2^q mod p in {1, p-1} is implied for safe p.
        if pow(2, q, p) not in (1, p - 1):
            continue
        if is_probable_prime(q) and is_probable_prime(p):
            return p


def random_prime_in_interval(lo: int, hi: int, rng: random.Random) -> int:
    """Uniformly sampled prime in [lo, hi]."""
    if hi < lo:
        raise ValueError("empty interval")
    while True:
        e = rng.randrange(lo, hi + 1) | 1
        if e > hi:
            continue
        if _survives_sieve((e,)) and is_probable_prime(e):
            return e


def legendre(a: int, p: int) -> int:
    """Legendre symbol a|p for odd prime p (0, 1, or p-1)."""
    return pow(a, (p - 1) // 2, p)


def is_quadratic_residue(x: int, p: int, q: int) -> bool:
    """QR test modulo n = p*q, available only to whoever knows the factors."""
    return legendre(x % p, p) == 1 and legendre(x % q, q) == 1
