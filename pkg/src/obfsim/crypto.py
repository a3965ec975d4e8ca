"""Primitive layer: hash, unauthenticated cipher, Base64 and XOR codecs, keys.

Hash is SHA-256 (FIPS 180-4). The cipher is AES in CTR mode
(NIST SP 800-38A) with a 16-byte random initial counter block prepended to
the ciphertext. CTR is deliberately unauthenticated: decrypting with the
wrong key returns garbage instead of failing, and key correctness is always
checked externally through a digest comparison.
"""
from __future__ import annotations

import base64
import binascii
import hashlib

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from sklearn.utils import check_random_state

DIGEST_SIZE = 32
NONCE_SIZE = 16
MIN_KEY_LEN = 2
MAX_KEY_LEN = 32


class CryptoError(ValueError):
    """Raised on malformed keys, ciphertexts or encodings."""


def hash(data: bytes) -> bytes:  # noqa: A001 - mirrors the primitive name
    return hashlib.sha256(data).digest()


def leading_zero_bits(digest: bytes) -> int:
    n = 0
    for byte in digest:
        if byte == 0:
            n += 8
            continue
        return n + 8 - byte.bit_length()
    return n


def check_key(key: bytes) -> bytes:
    if not isinstance(key, (bytes, bytearray)):
        raise CryptoError(f"key must be bytes, got {type(key).__name__}")
    if not MIN_KEY_LEN <= len(key) <= MAX_KEY_LEN:
        raise CryptoError(
            f"key length {len(key)} outside [{MIN_KEY_LEN}, {MAX_KEY_LEN}] bytes"
        )
    return bytes(key)


def _aes_key(key: bytes) -> bytes:
    # Short experiment keys are zero-padded up to the next AES key size.
    for size in (16, 24, 32):
        if len(key) <= size:
            return key.ljust(size, b"\x00")
    raise CryptoError("key too long")  # pragma: no cover - guarded by check_key


def _ctr(key: bytes, nonce: bytes, data: bytes) -> bytes:
    ctx = Cipher(algorithms.AES(_aes_key(key)), modes.CTR(nonce)).encryptor()
    return ctx.update(data) + ctx.finalize()


def enc(key: bytes, plaintext: bytes, rng=None) -> bytes:
    """Encrypt under ``key``; output is ``nonce || AES-CTR(plaintext)``."""
    key = check_key(key)
    nonce = check_random_state(rng).bytes(NONCE_SIZE)
    return nonce + _ctr(key, nonce, bytes(plaintext))


def dec(key: bytes, ct: bytes) -> bytes:
    key = check_key(key)
    if len(ct) < NONCE_SIZE:
        raise CryptoError(
            f"malformed ciphertext: {len(ct)} bytes, shorter than the "
            f"{NONCE_SIZE}-byte nonce prefix"
        )
    return _ctr(key, ct[:NONCE_SIZE], ct[NONCE_SIZE:])


def base64_encode(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def base64_decode(s: str) -> bytes:
    try:
        return base64.b64decode(s, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise CryptoError(f"invalid base64: {exc}") from None


def xor_apply(key: bytes, data: bytes) -> bytes:
    """Repeating-key XOR: ``data[i] ^ key[i % len(key)]``."""
    if not key:
        raise CryptoError("XOR key must be nonempty")
    if len(key) == 1:
        k = key[0]
        return bytes(b ^ k for b in data)
    n = len(key)
    return bytes(b ^ key[i % n] for i, b in enumerate(data))


def random_key(length: int, rng=None) -> bytes:
    if not MIN_KEY_LEN <= length <= MAX_KEY_LEN:
        raise CryptoError(
            f"key length {length} outside [{MIN_KEY_LEN}, {MAX_KEY_LEN}] bytes"
        )
    return check_random_state(rng).bytes(length)


def keyspace_key_len(bits: int) -> int:
    """Byte length used to encode keys drawn from a ``bits``-bit keyspace."""
    if not 1 <= bits <= 8 * MAX_KEY_LEN:
        raise CryptoError(f"keyspace_bits {bits} outside [1, {8 * MAX_KEY_LEN}]")
    return max(MIN_KEY_LEN, -(-bits // 8))


def random_keyspace_key(bits: int, rng=None) -> bytes:
    """Uniform key from ``{0, ..., 2**bits - 1}``, big-endian encoded."""
    length = keyspace_key_len(bits)
    raw = bytearray(check_random_state(rng).bytes(length))
    _mask_top(raw, bits)
    return bytes(raw)


def _mask_top(raw: bytearray, bits: int) -> None:
    excess = 8 * len(raw) - bits
    for i in range(len(raw)):
        if excess >= 8:
            raw[i] = 0
            excess -= 8
        else:
            raw[i] &= 0xFF >> excess
            break
