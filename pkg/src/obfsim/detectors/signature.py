"""Signature store over previously seen malicious plaintext blocks."""
from __future__ import annotations

from .. import crypto
from ..obfuscators.container import HTD_ENV_EBOWLA
from ..obfuscators.transforms import ALL, DESIGNATED, sealable_ranges
from ..toyvm.codec import serialize_block
from ..toyvm.program import ContainerOp, Label
from .base import BaseDetector


class SignatureDetector(BaseDetector):
    """Matches stored block hashes against the ``H(B)`` of Ebowla containers.

    ``fit`` catalogues the plaintext blocks of the malware in ``X`` (both the
    designated payload block and every single instruction), hashing each
    with its tail cut at 0 and at every offset in ``known_offsets``.
    ``known_blocks`` adds raw plaintext blocks to the catalogue.
    """

    def __init__(self, known_offsets=(), known_blocks=()):
        self.known_offsets = known_offsets
        self.known_blocks = known_blocks

    def _fit(self, X, programs, y):
        blocks = set(self.known_blocks)
        if y is not None:
            for program, label in zip(programs, y):
                if label != Label.MALWARE:
                    continue
                for mode in (DESIGNATED, ALL):
                    for start, stop in sealable_ranges(program, mode):
                        blocks.add(serialize_block(program.instructions[start:stop]))
        offsets = {0, *self.known_offsets}
        self.signatures_ = frozenset(
            crypto.hash(b[: len(b) - t]) for b in blocks for t in offsets if t < len(b)
        )

    def _proba(self, program):
        for ins in program.instructions:
            if (isinstance(ins, ContainerOp) and ins.container.kind == HTD_ENV_EBOWLA
                    and ins.container.digest.value in self.signatures_):
                return 1.0
        return 0.0
