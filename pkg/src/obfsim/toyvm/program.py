"""Program model of the toy language."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

if TYPE_CHECKING:  # pragma: no cover
    from ..obfuscators.container import Container

MAL_PREFIX = "MAL:"
MAX_TEXT_BYTES = 4096


class Label(enum.IntEnum):
    BENIGN = 0
    MALWARE = 1


class ProgramError(ValueError):
    """Malformed program, instruction or input."""


def check_bits(bits: str, length: int | None = None) -> str:
    if not isinstance(bits, str) or any(c not in "01" for c in bits):
        raise ProgramError(f"not a bitstring: {bits!r}")
    if length is not None and len(bits) != length:
        raise ProgramError(f"input has {len(bits)} bits, program expects {length}")
    return bits


def _check_text(text: str) -> None:
    if not isinstance(text, str):
        raise ProgramError(f"emitted text must be str, got {type(text).__name__}")
    if len(text.encode("utf-8")) > MAX_TEXT_BYTES:
        raise ProgramError(f"emitted text longer than {MAX_TEXT_BYTES} bytes")


@dataclass(frozen=True)
class InputPredicate:
    kind: str  # "EQUALS" | "PREFIX"
    pattern: str

    def __post_init__(self):
        if self.kind not in ("EQUALS", "PREFIX"):
            raise ProgramError(f"unknown predicate kind {self.kind!r}")
        check_bits(self.pattern)

    def __call__(self, x: str) -> bool:
        if self.kind == "EQUALS":
            return x == self.pattern
        return x.startswith(self.pattern)

    def witness(self, input_len: int) -> str:
        """Smallest input of length ``input_len`` satisfying the predicate."""
        return self.pattern.ljust(input_len, "0")


@dataclass(frozen=True)
class Emit:
    text: str

    def __post_init__(self):
        _check_text(self.text)


@dataclass(frozen=True)
class EmitIf:
    predicate: InputPredicate
    text: str

    def __post_init__(self):
        _check_text(self.text)


@dataclass(frozen=True)
class ContainerOp:
    container: "Container"


Instruction = Union[Emit, EmitIf, ContainerOp]


@dataclass(frozen=True)
class Program:
    """An ordered instruction list over ``input_len``-bit inputs.

    ``block`` optionally marks the half-open instruction range obfuscators
    seal by default (the payload block).
    """

    id: str
    instructions: tuple
    input_len: int = 16
    block: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.input_len < 1:
            raise ProgramError("input_len must be positive")
        if self.block is not None:
            start, stop = (int(b) for b in self.block)
            if not 0 <= start < stop <= len(self.instructions):
                raise ProgramError(f"block {self.block} out of range")
            object.__setattr__(self, "block", (start, stop))
        for ins in self.instructions:
            if not isinstance(ins, (Emit, EmitIf, ContainerOp)):
                raise ProgramError(f"not an instruction: {ins!r}")
            if isinstance(ins, EmitIf) and len(ins.predicate.pattern) > self.input_len:
                raise ProgramError("predicate pattern longer than the input")

    def replace(self, **changes) -> "Program":
        fields = dict(id=self.id, instructions=self.instructions,
                      input_len=self.input_len, block=self.block)
        fields.update(changes)
        return Program(**fields)


@dataclass(frozen=True)
class ExecTrace:
    outputs: tuple = ()
    steps_used: int = 0
    terminated: bool = True

    @property
    def malicious(self) -> bool:
        return any(o.startswith(MAL_PREFIX) for o in self.outputs)


def emits_malicious(ins) -> bool:
    return isinstance(ins, (Emit, EmitIf)) and ins.text.startswith(MAL_PREFIX)
