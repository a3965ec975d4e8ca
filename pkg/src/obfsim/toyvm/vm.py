"""Interpreter, ground-truth labeling and input-output fingerprints."""
from __future__ import annotations

import hashlib
import json
from typing import Mapping, Sequence

from .. import crypto
from .program import (ContainerOp, Emit, EmitIf, ExecTrace, Label, Program,
                      ProgramError, check_bits, emits_malicious)

DEFAULT_BUDGET = 100_000


class _Exhausted(Exception):
    pass


class Machine:
    """Mutable execution state for a single ``run``."""

    def __init__(self, x: str, profile: Mapping[str, str], budget: int, clock: int):
        self.input = x
        self.profile = profile
        self.budget = budget
        self.clock = clock
        self.steps = 0
        self.outputs: list[str] = []

    def charge(self, n: int = 1) -> None:
        if self.steps + n > self.budget:
            self.steps = self.budget
            raise _Exhausted
        self.steps += n

    def exec(self, instructions) -> None:
        from ..obfuscators.runtime import execute

        for ins in instructions:
            self.charge(1)
            if isinstance(ins, Emit):
                self.outputs.append(ins.text)
            elif isinstance(ins, EmitIf):
                if ins.predicate(self.input):
                    self.outputs.append(ins.text)
            else:
                execute(ins.container, self)


def run(program: Program, x: str, profile: Mapping[str, str] | None = None,
        budget: int = DEFAULT_BUDGET, clock: int = 0) -> ExecTrace:
    """Execute ``program`` on input bitstring ``x`` under an environment profile.

    ``clock`` is the simulation time seen by remotely scheduled keys.
    Raises ``MalformedContainerError`` on an undecodable container payload.
    """
    check_bits(x, program.input_len)
    if budget <= 0:
        raise ProgramError("budget must be positive")
    m = Machine(x, {} if profile is None else profile, budget, clock)
    try:
        m.exec(program.instructions)
    except _Exhausted:
        return ExecTrace(tuple(m.outputs), m.steps, False)
    return ExecTrace(tuple(m.outputs), m.steps, True)


class GroundTruthUnavailable(ValueError):
    """A sealed block whose plaintext label was not recorded and cannot be opened."""


def _open_embedded(c):
    from ..obfuscators import container as C
    from .codec import parse_block

    if c.kind == C.BASE64:
        return [parse_block(c.ct, base64_text=True)]
    if c.kind == C.XOR1:
        return [parse_block(crypto.xor_apply(c.embedded_key, c.ct))]
    if c.kind == C.CIPHER_EMBEDDED:
        return [parse_block(crypto.dec(c.embedded_key, c.ct))]
    if c.kind == C.DENIABLE_XOR:
        return [parse_block(crypto.xor_apply(k, c.ct))
                for k in (c.embedded_key, c.schedule.k1)]
    return None


def _block_malicious(instructions) -> bool:
    for ins in instructions:
        if emits_malicious(ins):
            return True
        if isinstance(ins, ContainerOp):
            c = ins.container
            if c.sealed_malicious is not None:
                if c.sealed_malicious:
                    return True
                continue
            blocks = _open_embedded(c)
            if blocks is None:
                raise GroundTruthUnavailable(
                    f"{c.kind} container carries no recorded label"
                )
            if any(_block_malicious(b) for b in blocks):
                return True
    return False


def is_malicious_ground_truth(program: Program) -> Label:
    """MALWARE iff some instruction, sealed ones included, emits a ``MAL:`` string.

    Sealed plaintexts are labeled when they are sealed; this never searches keys.
    """
    return Label.MALWARE if _block_malicious(program.instructions) else Label.BENIGN


def fingerprint(program: Program, probes: Sequence[str],
                profile: Mapping[str, str] | None = None,
                budget: int = DEFAULT_BUDGET, clock: int = 0) -> bytes:
    """SHA-256 over the ordered ``(q, outputs)`` pairs for ``q`` in ``probes``."""
    pairs = [[q, list(run(program, q, profile, budget, clock).outputs)] for q in probes]
    data = json.dumps(pairs, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(data.encode("utf-8")).digest()
