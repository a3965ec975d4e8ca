"""Execution semantics of containers inside the toy VM.

Cost model: every candidate-key trial, hash call, cipher/codec call and
remote key fetch costs one step; hash-puzzle work inside a key finder is
charged per hash.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .. import crypto
from ..environment import env_key, iter_candidates_with_cost
from ..toyvm.codec import parse_block
from . import container as C

_CHUNK = 8192


def execute(c: C.Container, machine) -> None:
    handler = _HANDLERS[c.kind]
    handler(c, machine)


def _decrypt(key: bytes, ct: bytes) -> bytes:
    try:
        return crypto.dec(key, ct)
    except crypto.CryptoError as exc:
        raise C.MalformedContainerError(str(exc)) from None


def _base64(c, m):
    m.charge(1)
    m.exec(parse_block(c.ct, base64_text=True))


def _xor1(c, m):
    m.charge(1)
    m.exec(parse_block(crypto.xor_apply(c.embedded_key, c.ct)))


def _cipher_embedded(c, m):
    m.charge(1)
    m.exec(parse_block(_decrypt(c.embedded_key, c.ct)))


def keyfinder_seed(c: C.Container, x: str) -> int:
    """Seed of the random key finder; fixed by the container and the input
    so that runs stay deterministic."""
    h = hashlib.sha256(b"htd-random\x00" + c.ct + b"\x00" + x.encode()).digest()
    return int.from_bytes(h[:8], "big")


def _htd_random(c, m):
    bits = c.keyspace_bits
    klen = crypto.keyspace_key_len(bits)
    mask = bytearray(b"\xff" * klen)
    crypto._mask_top(mask, bits)
    mask_arr = None if all(b == 0xFF for b in mask) else np.frombuffer(bytes(mask), np.uint8)
    rng = np.random.default_rng(keyfinder_seed(c, m.input))
    target = c.digest.value
    sha = hashlib.sha256
    while True:
        affordable = (m.budget - m.steps) // 2
        if affordable == 0:
            m.charge(2)  # raises: budget exhausted mid-search
        n = min(affordable, _CHUNK)
        raw = rng.bytes(n * klen)
        if mask_arr is not None:
            arr = np.frombuffer(raw, np.uint8).reshape(n, klen) & mask_arr
            raw = arr.tobytes()
        for i in range(n):
            start = i * klen
            kb = raw[start:start + klen]
            if sha(kb).digest() == target:
                m.steps += 2 * (i + 1)
                m.charge(1)
                m.exec(parse_block(_decrypt(kb, c.ct)))
                return
        m.steps += 2 * n


def _htd_env(c, m):
    lock = c.locks[0]
    for candidate, work in iter_candidates_with_cost(lock.keyfinder, m.profile):
        if work:
            m.charge(work)
        m.charge(2)  # trial + H(candidate)
        key = env_key(candidate)
        if c.kind == C.HTD_ENV_FIXED:
            m.charge(1)
            if crypto.hash(key) == lock.digest.value:
                m.charge(1)
                m.exec(parse_block(_decrypt(key, lock.ct)))
                return
        else:
            m.charge(2)  # Dec + H(B')
            plain = _decrypt(key, lock.ct)
            if crypto.hash(plain[:len(plain) - lock.digest.offset]) == lock.digest.value:
                m.exec(parse_block(plain))
                return


def _deniable_xor(c, m):
    if m.clock >= c.schedule.available_from:
        m.charge(1)  # fetch K1 from the remote
        key = c.schedule.k1
    else:
        key = c.embedded_key
    m.charge(1)
    m.exec(parse_block(crypto.xor_apply(key, c.ct)))


def _deniable_dual(c, m):
    for lock in c.branches:
        for candidate, work in iter_candidates_with_cost(lock.keyfinder, m.profile):
            if work:
                m.charge(work)
            m.charge(3)  # trial + H(candidate) + H(k)
            key = env_key(candidate)
            hk = crypto.hash(key)
            for branch in c.branches:
                if hk == branch.digest.value:
                    m.charge(1)
                    m.exec(parse_block(_decrypt(key, branch.ct)))
                    return


_HANDLERS = {
    C.BASE64: _base64,
    C.XOR1: _xor1,
    C.CIPHER_EMBEDDED: _cipher_embedded,
    C.HTD_RANDOM: _htd_random,
    C.HTD_ENV_EBOWLA: _htd_env,
    C.HTD_ENV_FIXED: _htd_env,
    C.DENIABLE_XOR: _deniable_xor,
    C.DENIABLE_DUAL: _deniable_dual,
}
