"""Obfuscators as scikit-learn transformers over programs.

``transform`` maps a ``ProgramSet`` to a ``ProgramSet`` (labels and probes
kept) or a list of programs to a list. All obfuscators are stateless;
``fit`` only validates its input.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state

from .. import crypto
from ..environment import KeyFinderSpec
from ..toyvm.population import ProgramSet
from ..toyvm.program import MAL_PREFIX, ContainerOp, Emit, EmitIf, Program
from ..validation import check_programs
from . import sealing

ALL = "all"
DESIGNATED = "designated"
COVER_PREFIX = "BEN:"


def sealable_ranges(program: Program, blocks: str) -> list:
    """Half-open instruction ranges an obfuscator seals, in order."""
    if blocks not in (ALL, DESIGNATED):
        raise ValueError(f"blocks must be {ALL!r} or {DESIGNATED!r}, got {blocks!r}")
    if blocks == DESIGNATED and program.block is not None:
        return [program.block]
    return [(i, i + 1) for i, ins in enumerate(program.instructions)
            if isinstance(ins, (Emit, EmitIf))]


def replace_ranges(program: Program, ranges, seal) -> Program:
    """Replace each range by ``ContainerOp(seal(instructions))``."""
    out, new_index = [], {}
    cursor = 0
    for start, stop in ranges:
        for i in range(cursor, start):
            new_index[i] = len(out)
            out.append(program.instructions[i])
        for i in range(start, stop):
            new_index[i] = len(out)
        out.append(ContainerOp(seal(program.instructions[start:stop])))
        cursor = stop
    for i in range(cursor, len(program.instructions)):
        new_index[i] = len(out)
        out.append(program.instructions[i])
    block = program.block
    if block is not None:
        block = (new_index[block[0]], new_index[block[1] - 1] + 1)
    return program.replace(instructions=tuple(out), block=block)


def benign_cover(block) -> tuple:
    """Same-shape block with every ``MAL:`` string rewritten to ``BEN:``."""
    out = []
    for ins in block:
        if isinstance(ins, (Emit, EmitIf)) and ins.text.startswith(MAL_PREFIX):
            text = COVER_PREFIX + ins.text[len(MAL_PREFIX):]
            ins = Emit(text) if isinstance(ins, Emit) else EmitIf(ins.predicate, text)
        out.append(ins)
    return tuple(out)


def _as_spec(spec):
    if spec is None or isinstance(spec, KeyFinderSpec):
        return spec
    return KeyFinderSpec.from_dict(spec)


class BaseObfuscator(TransformerMixin, BaseEstimator):
    def __sklearn_is_fitted__(self):
        return True

    def fit(self, X, y=None):
        check_programs(X)
        return self

    def transform(self, X):
        programs, _, _ = check_programs(X)
        rng = check_random_state(getattr(self, "random_state", None))
        out = [self._obfuscate(p, rng) for p in programs]
        if isinstance(X, ProgramSet):
            return X.with_programs(out)
        return out

    def obfuscate(self, program: Program) -> Program:
        return self.transform([program])[0]

    def _obfuscate(self, program, rng):  # pragma: no cover - abstract
        raise NotImplementedError


class IdentityObfuscator(BaseObfuscator):
    """Prints its input program unchanged."""

    def _obfuscate(self, program, rng):
        return program


class Base64Obfuscator(BaseObfuscator):
    def __init__(self, blocks=ALL):
        self.blocks = blocks

    def _obfuscate(self, program, rng):
        return replace_ranges(program, sealable_ranges(program, self.blocks),
                              sealing.seal_base64)


class Xor1Obfuscator(BaseObfuscator):
    """Single-byte XOR with the key stored next to the ciphertext."""

    def __init__(self, blocks=ALL, key=None, random_state=None):
        self.blocks = blocks
        self.key = key
        self.random_state = random_state

    def _obfuscate(self, program, rng):
        def seal(block):
            key = bytes([self.key]) if self.key is not None else rng.bytes(1)
            return sealing.seal_xor1(block, key)

        return replace_ranges(program, sealable_ranges(program, self.blocks), seal)


class CipherEmbeddedObfuscator(BaseObfuscator):
    """AES-CTR under a fresh key that ships inside the container."""

    def __init__(self, key_len=16, blocks=ALL, random_state=None):
        self.key_len = key_len
        self.blocks = blocks
        self.random_state = random_state

    def _obfuscate(self, program, rng):
        def seal(block):
            return sealing.seal_cipher_embedded(
                block, crypto.random_key(self.key_len, rng), rng)

        return replace_ranges(program, sealable_ranges(program, self.blocks), seal)


class HtdRandomObfuscator(BaseObfuscator):
    """Hash-then-decrypt with a random key; only ``H(k)`` is kept."""

    def __init__(self, keyspace_bits=128, blocks=DESIGNATED, random_state=None):
        self.keyspace_bits = keyspace_bits
        self.blocks = blocks
        self.random_state = random_state

    def _obfuscate(self, program, rng):
        return replace_ranges(
            program, sealable_ranges(program, self.blocks),
            lambda block: sealing.seal_htd_random(block, self.keyspace_bits, rng))


class HtdEnvObfuscator(BaseObfuscator):
    """Environment-keyed hash-then-decrypt.

    ``variant="EBOWLA"`` stores ``H(B)`` (optionally of ``B`` minus its last
    ``offset`` bytes); ``variant="FIXED"`` stores ``H(H(envkey))``.
    ``index`` is the sealed suffix for INDEX_SUFFIX key finders; when omitted
    a small one is drawn from ``random_state``.
    """

    def __init__(self, variant=sealing.FIXED, keyfinder=None, target_profile=None,
                 offset=0, index=None, blocks=DESIGNATED, random_state=None):
        self.variant = variant
        self.keyfinder = keyfinder
        self.target_profile = target_profile
        self.offset = offset
        self.index = index
        self.blocks = blocks
        self.random_state = random_state

    def _obfuscate(self, program, rng):
        spec = _as_spec(self.keyfinder)
        if spec is None or self.target_profile is None:
            raise ValueError("HtdEnvObfuscator needs keyfinder and target_profile")
        missing = [v for v in spec.vars if v not in self.target_profile]
        if missing:
            raise ValueError(f"target profile lacks key-finder variables {missing}")

        def seal(block):
            index = self.index
            if spec.strategy == "INDEX_SUFFIX" and index is None:
                index = int(rng.randint(1, min(spec.m, 16) + 1))
            return sealing.seal_htd_env(block, self.variant, spec, self.target_profile,
                                        self.offset, index, rng)

        return replace_ranges(program, sealable_ranges(program, self.blocks), seal)


class DeniableXorObfuscator(BaseObfuscator):
    """Seals the payload block so that ``K2`` opens a benign cover and the
    remotely scheduled ``K1`` (from clock step ``available_from``) opens the
    original block."""

    def __init__(self, available_from=100, blocks=DESIGNATED, random_state=None):
        self.available_from = available_from
        self.blocks = blocks
        self.random_state = random_state

    def _obfuscate(self, program, rng):
        def seal(block):
            container, _ = sealing.seal_deniable_xor(
                block, benign_cover(block), self.available_from, rng)
            return container

        return replace_ranges(program, sealable_ranges(program, self.blocks), seal)


class DeniableDualObfuscator(BaseObfuscator):
    """Two independently keyed ciphertexts: the original block under the
    target key, a benign cover under a broadly matching key."""

    def __init__(self, spec_mal=None, target_profile=None, spec_benign=None,
                 cover_profile=None, blocks=DESIGNATED, random_state=None):
        self.spec_mal = spec_mal
        self.target_profile = target_profile
        self.spec_benign = spec_benign
        self.cover_profile = cover_profile
        self.blocks = blocks
        self.random_state = random_state

    def _obfuscate(self, program, rng):
        spec_mal, spec_benign = _as_spec(self.spec_mal), _as_spec(self.spec_benign)
        if None in (spec_mal, spec_benign, self.target_profile, self.cover_profile):
            raise ValueError("DeniableDualObfuscator needs both specs and both profiles")
        return replace_ranges(
            program, sealable_ranges(program, self.blocks),
            lambda block: sealing.seal_deniable_dual(
                block, benign_cover(block), spec_mal, self.target_profile,
                spec_benign, self.cover_profile, rng))


# Functional forms of the single-program transforms.

def obf_identity(program):
    return IdentityObfuscator().obfuscate(program)


def obf_base64(program):
    return Base64Obfuscator().obfuscate(program)


def obf_xor1(program, rng=None):
    return Xor1Obfuscator(random_state=rng).obfuscate(program)


def obf_cipher_embedded(program, rng=None):
    return CipherEmbeddedObfuscator(random_state=rng).obfuscate(program)


def obf_htd_random(program, keyspace_bits=128, rng=None):
    return HtdRandomObfuscator(keyspace_bits, random_state=rng).obfuscate(program)


def obf_htd_env(program, variant, spec, target_profile, offset=0, index=None, rng=None):
    return HtdEnvObfuscator(variant, spec, target_profile, offset, index,
                            random_state=rng).obfuscate(program)


def obf_deniable_xor(malware_block, cover_block, available_from, rng=None):
    return sealing.seal_deniable_xor(malware_block, cover_block, available_from, rng)


def obf_deniable_dual(malware_block, cover_block, spec_benign, spec_mal,
                      cover_profile, target_profile, rng=None):
    return sealing.seal_deniable_dual(malware_block, cover_block, spec_mal,
                                      target_profile, spec_benign, cover_profile, rng)


OBFUSCATORS = {
    "identity": IdentityObfuscator,
    "base64": Base64Obfuscator,
    "xor1": Xor1Obfuscator,
    "cipher_embedded": CipherEmbeddedObfuscator,
    "htd_random": HtdRandomObfuscator,
    "htd_env": HtdEnvObfuscator,
    "deniable_xor": DeniableXorObfuscator,
    "deniable_dual": DeniableDualObfuscator,
}
