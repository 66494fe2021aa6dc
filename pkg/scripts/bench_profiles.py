#!/usr/bin/env python3
"""Timing of the credential lifecycle per parameter profile.

The 512-bit profile is the CI/test profile; 2048 is the intended default
for anything real. Pure-Python safe-prime generation dominates setup at
the larger sizes, so expect minutes for a 2048-bit issuer.
"""

import argparse
import random
import time

from abcid.anoncred import (
    begin_issuance,
    complete_credential,
    holder_keygen,
    issue,
    present,
    setup_issuer,
    verify_presentation,
)
from abcid.model import Attribute, Claim
from abcid.anoncred import CredentialMetadata
from datetime import date


def bench(l_n: int, attrs: int, rounds: int, seed: int) -> None:
    rng = random.Random(seed)
    t0 = time.monotonic()
    pk, sk = setup_issuer(attrs, l_n, rng, "bench")
    t_setup = time.monotonic() - t0

    claims = tuple(
        Claim(Attribute(f"attr_{i}", "v"), "bench", "bench_v1") for i in range(attrs)
    )
    md = CredentialMetadata("bench", "bench_v1", date(2026, 1, 1), None, "c_bench")
    hs = holder_keygen(rng, pk.params.l_m)
    nonce = rng.getrandbits(128).to_bytes(16, "big")

    t_issue = t_present = t_verify = 0.0
    for _ in range(rounds):
        t0 = time.monotonic()
        req, state = begin_issuance(pk, hs, nonce, rng)
        pre = issue(sk, pk, req, claims, md, rng)
        cred = complete_credential(pre, state, hs)
        t_issue += time.monotonic() - t0

        t0 = time.monotonic()
        pres = present(pk, cred, hs, {1}, nonce, "bench|r|n|read", rng)
        t_present += time.monotonic() - t0

        t0 = time.monotonic()
        verify_presentation(pk, pres, nonce, "bench|r|n|read")
        t_verify += time.monotonic() - t0

    print(
        f"l_n={l_n:4d} attrs={attrs}: setup {t_setup:7.2f}s | per round: "
        f"issue {t_issue / rounds:6.3f}s  present {t_present / rounds:6.3f}s  "
        f"verify {t_verify / rounds:6.3f}s"
    )


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 1024])
    ap.add_argument("--attrs", type=int, default=3)
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    for l_n in args.sizes:
        bench(l_n, args.attrs, args.rounds, args.seed)
