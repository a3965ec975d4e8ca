"""Low-level constructors: plaintext block -> Container."""
from __future__ import annotations

from dataclasses import dataclass

from sklearn.utils import check_random_state

from .. import crypto
from ..environment import KeyFinderSpec, derive_env_key, env_key
from ..toyvm.codec import serialize_block
from ..toyvm.vm import _block_malicious
from . import container as C

EBOWLA = "EBOWLA"
FIXED = "FIXED"


def seal_base64(block) -> C.Container:
    return C.Container(C.BASE64, ct=serialize_block(block, base64_text=True),
                       sealed_malicious=_block_malicious(block))


def seal_xor1(block, key: bytes) -> C.Container:
    plain = serialize_block(block)
    return C.Container(C.XOR1, ct=crypto.xor_apply(key, plain), embedded_key=bytes(key),
                       sealed_malicious=_block_malicious(block))


def seal_cipher_embedded(block, key: bytes, rng=None) -> C.Container:
    plain = serialize_block(block)
    return C.Container(C.CIPHER_EMBEDDED, ct=crypto.enc(key, plain, rng),
                       embedded_key=bytes(key), sealed_malicious=_block_malicious(block))


def seal_htd_random(block, keyspace_bits: int, rng=None) -> C.Container:
    rng = check_random_state(rng)
    key = crypto.random_keyspace_key(keyspace_bits, rng)
    return C.Container(
        C.HTD_RANDOM,
        ct=crypto.enc(key, serialize_block(block), rng),
        digest=C.Digest(C.H_OF_KEY, crypto.hash(key)),
        keyspace_bits=keyspace_bits,
        sealed_malicious=_block_malicious(block),
    )


def seal_htd_env(block, variant: str, spec: KeyFinderSpec, target_profile,
                 offset: int = 0, index: int | None = None, rng=None) -> C.Container:
    if variant not in (EBOWLA, FIXED):
        raise ValueError(f"variant must be {EBOWLA!r} or {FIXED!r}, got {variant!r}")
    if offset and variant != EBOWLA:
        raise ValueError("a hashing offset only applies to the EBOWLA variant")
    key = env_key(derive_env_key(spec, target_profile, index))
    plain = serialize_block(block)
    if not 0 <= offset < len(plain):
        raise ValueError(f"offset must lie in [0, {len(plain)})")
    ct = crypto.enc(key, plain, rng)
    if variant == EBOWLA:
        digest = C.Digest(C.H_OF_BLOCK, crypto.hash(plain[:len(plain) - offset]), offset)
        kind = C.HTD_ENV_EBOWLA
    else:
        digest = C.Digest(C.H_OF_KEY, crypto.hash(key))
        kind = C.HTD_ENV_FIXED
    return C.Container(kind, ct=ct, digest=digest, keyfinder=spec,
                       sealed_malicious=_block_malicious(block))


@dataclass(frozen=True)
class DeniablePair:
    cover: bytes   # P
    hidden: bytes  # M
    k1: bytes
    k2: bytes
    ct: bytes      # C = M ^ K1 = P ^ K2


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def deniable_pair(hidden: bytes, cover: bytes, rng=None) -> DeniablePair:
    """One-time-pad pair with two valid openings. The shorter plaintext is
    padded with spaces, which the block parser ignores."""
    n = max(len(hidden), len(cover))
    hidden, cover = hidden.ljust(n, b" "), cover.ljust(n, b" ")
    k1 = check_random_state(rng).bytes(n)
    ct = _xor(hidden, k1)
    return DeniablePair(cover, hidden, k1, _xor(ct, cover), ct)


def seal_deniable_xor(hidden_block, cover_block, available_from: int, rng=None):
    pair = deniable_pair(serialize_block(hidden_block), serialize_block(cover_block), rng)
    container = C.Container(
        C.DENIABLE_XOR, ct=pair.ct, embedded_key=pair.k2,
        schedule=C.Schedule(pair.k1, int(available_from)),
        sealed_malicious=_block_malicious(hidden_block) or _block_malicious(cover_block),
    )
    return container, pair


def seal_deniable_dual(hidden_block, cover_block, spec_mal: KeyFinderSpec,
                       target_profile, spec_benign: KeyFinderSpec, cover_profile,
                       rng=None) -> C.Container:
    rng = check_random_state(rng)
    branches = []
    for block, spec, profile in ((hidden_block, spec_mal, target_profile),
                                 (cover_block, spec_benign, cover_profile)):
        key = env_key(derive_env_key(spec, profile))
        branches.append(C.Branch(crypto.enc(key, serialize_block(block), rng),
                                 C.Digest(C.H_OF_KEY, crypto.hash(key)), spec))
    return C.Container(
        C.DENIABLE_DUAL, branches=tuple(branches),
        sealed_malicious=_block_malicious(hidden_block) or _block_malicious(cover_block),
    )
