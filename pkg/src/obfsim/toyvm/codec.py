"""JSON encoding of instructions and sealed blocks."""
from __future__ import annotations

import json

from .. import crypto
from .program import ContainerOp, Emit, EmitIf, InputPredicate, ProgramError


def instruction_to_dict(ins) -> dict:
    if isinstance(ins, Emit):
        return {"op": "EMIT", "text": ins.text}
    if isinstance(ins, EmitIf):
        return {
            "op": "EMIT_IF",
            "predicate": {"kind": ins.predicate.kind, "pattern": ins.predicate.pattern},
            "text": ins.text,
        }
    if isinstance(ins, ContainerOp):
        return {"op": "CONTAINER", "container": ins.container.to_dict()}
    raise ProgramError(f"not an instruction: {ins!r}")


def instruction_from_dict(d):
    op = d.get("op") if isinstance(d, dict) else None
    if op == "EMIT":
        return Emit(d["text"])
    if op == "EMIT_IF":
        p = d["predicate"]
        return EmitIf(InputPredicate(p["kind"], p["pattern"]), d["text"])
    if op == "CONTAINER":
        from ..obfuscators.container import Container

        return ContainerOp(Container.from_dict(d["container"]))
    raise ProgramError(f"unknown instruction encoding: {d!r}")


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def serialize_block(instructions, base64_text: bool = False) -> bytes:
    """Canonical plaintext bytes of an instruction list.

    With ``base64_text`` every emitted string is stored Base64-encoded, the
    way string-encoding obfuscators hide literals.
    """
    items = []
    for ins in instructions:
        d = instruction_to_dict(ins)
        if base64_text and "text" in d:
            d["text"] = crypto.base64_encode(d["text"].encode("utf-8"))
        items.append(d)
    return _canonical(items)


def parse_block(data: bytes, base64_text: bool = False) -> tuple:
    from ..obfuscators.container import MalformedContainerError

    try:
        items = json.loads(data.decode("utf-8"))
        if not isinstance(items, list):
            raise ValueError("sealed block is not a list")
        out = []
        for d in items:
            if base64_text and isinstance(d, dict) and "text" in d:
                d = dict(d, text=crypto.base64_decode(d["text"]).decode("utf-8"))
            out.append(instruction_from_dict(d))
        return tuple(out)
    except MalformedContainerError:
        raise
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise MalformedContainerError(f"undecodable sealed block: {exc!r}") from None
