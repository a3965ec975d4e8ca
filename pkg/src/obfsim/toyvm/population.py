"""Labeled program sets and their seeded generator."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.utils import check_random_state

from .codec import instruction_from_dict, instruction_to_dict
from .program import Emit, EmitIf, InputPredicate, Label, Program, ProgramError
from .vm import run

FORMAT_VERSION = 1
MAX_PROGRAMS = 10_000


class PopulationError(ValueError):
    """Infeasible population configuration or inconsistent program set."""


def bits_to_hex(bits: str) -> str:
    width = -(-len(bits) // 4)
    return format(int(bits, 2), f"0{width}x")


def hex_to_bits(h: str, input_len: int) -> str:
    value = int(h, 16)
    if value >> input_len:
        raise PopulationError(f"probe {h!r} exceeds {input_len} bits")
    return format(value, f"0{input_len}b")


@dataclass(frozen=True)
class ProgramSet:
    """Programs with labels, a probe input set Q and sampling weights."""

    programs: tuple
    labels: tuple
    probe_inputs: tuple
    sampling_weights: tuple = ()
    input_len: int = 16

    def __post_init__(self):
        object.__setattr__(self, "programs", tuple(self.programs))
        object.__setattr__(self, "labels", tuple(Label(int(y)) for y in self.labels))
        object.__setattr__(self, "probe_inputs", tuple(self.probe_inputs))
        if len(self.programs) != len(self.labels):
            raise PopulationError("programs and labels differ in length")
        if len(self.programs) > MAX_PROGRAMS:
            raise PopulationError(f"more than {MAX_PROGRAMS} programs")
        n = len(self.programs)
        weights = tuple(self.sampling_weights) or ((1.0 / n,) * n if n else ())
        if len(weights) != n or (n and not math.isclose(sum(weights), 1.0, abs_tol=1e-9)):
            raise PopulationError("sampling weights must match programs and sum to 1")
        object.__setattr__(self, "sampling_weights", tuple(float(w) for w in weights))
        for p in self.programs:
            if p.input_len != self.input_len:
                raise PopulationError(f"program {p.id} has input_len {p.input_len}")
        for q in self.probe_inputs:
            if len(q) != self.input_len:
                raise PopulationError(f"probe {q!r} has wrong length")

    def __len__(self) -> int:
        return len(self.programs)

    @property
    def y(self) -> np.ndarray:
        return np.array([int(lab) for lab in self.labels], dtype=int)

    def indices(self, label: Label) -> np.ndarray:
        return np.flatnonzero(self.y == int(label))

    def with_programs(self, programs: Sequence[Program]) -> "ProgramSet":
        return ProgramSet(tuple(programs), self.labels, self.probe_inputs,
                          self.sampling_weights, self.input_len)

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "input_len": self.input_len,
            "probe_inputs": [bits_to_hex(q) for q in self.probe_inputs],
            "sampling_weights": list(self.sampling_weights),
            "programs": [
                {
                    "id": p.id,
                    "label": lab.name,
                    "block": list(p.block) if p.block is not None else None,
                    "instructions": [instruction_to_dict(i) for i in p.instructions],
                }
                for p, lab in zip(self.programs, self.labels)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d) -> "ProgramSet":
        if d.get("version") != FORMAT_VERSION:
            raise PopulationError(f"unsupported program-set version {d.get('version')!r}")
        n = int(d["input_len"])
        programs, labels = [], []
        for entry in d["programs"]:
            block = entry.get("block")
            programs.append(Program(
                entry["id"],
                tuple(instruction_from_dict(i) for i in entry["instructions"]),
                n,
                tuple(block) if block is not None else None,
            ))
            labels.append(Label[entry["label"]])
        return cls(tuple(programs), tuple(labels),
                   tuple(hex_to_bits(h, n) for h in d["probe_inputs"]),
                   tuple(d.get("sampling_weights", ())), n)

    @classmethod
    def from_json(cls, text: str) -> "ProgramSet":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PopulationConfig:
    benign: int
    malware: int
    input_len: int = 16
    n_probes: int = 64
    paired: bool = False
    equivalent_classes: tuple = ()  # ((label_name, size), ...)
    prefix_len: tuple = (1, 3)
    suffix_len: tuple = (0, 2)
    max_programs: int = MAX_PROGRAMS

    def __post_init__(self):
        object.__setattr__(self, "equivalent_classes", tuple(
            (str(lab).upper(), int(size)) for lab, size in self.equivalent_classes
        ))
        object.__setattr__(self, "prefix_len", tuple(self.prefix_len))
        object.__setattr__(self, "suffix_len", tuple(self.suffix_len))

    @classmethod
    def from_dict(cls, d) -> "PopulationConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise PopulationError(f"unknown population keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "benign": self.benign, "malware": self.malware, "input_len": self.input_len,
            "n_probes": self.n_probes, "paired": self.paired,
            "equivalent_classes": [list(c) for c in self.equivalent_classes],
            "prefix_len": list(self.prefix_len), "suffix_len": list(self.suffix_len),
            "max_programs": self.max_programs,
        }


def _bits(rng, n: int) -> str:
    return "".join(rng.choice(["0", "1"], size=n)) if n else ""


def _token(rng, n: int = 8) -> str:
    return "".join(f"{b:02x}" for b in rng.bytes(n // 2))


def _predicate(rng, input_len: int) -> InputPredicate:
    if rng.random_sample() < 0.5 or input_len < 2:
        return InputPredicate("EQUALS", _bits(rng, input_len))
    return InputPredicate("PREFIX", _bits(rng, int(rng.randint(2, min(6, input_len) + 1))))


def _filler(rng, input_len: int, lo_hi) -> list:
    lo, hi = lo_hi
    out = []
    for _ in range(int(rng.randint(lo, hi + 1))):
        if rng.random_sample() < 0.3:
            out.append(EmitIf(_predicate(rng, input_len), f"log:{_token(rng, 6)}"))
        else:
            out.append(Emit(f"log:{_token(rng, 6)}"))
    return out


def _template(rng, cfg):
    """Shared skeleton: (prefix, predicate, token, suffix)."""
    return (_filler(rng, cfg.input_len, cfg.prefix_len), _predicate(rng, cfg.input_len),
            _token(rng), _filler(rng, cfg.input_len, cfg.suffix_len))


def _assemble(pid: str, template, label: Label, input_len: int) -> Program:
    prefix, pred, token, suffix = template
    # "BEN:" and "MAL:" have equal length, so twin blocks serialize to equal size.
    text = ("MAL:" if label == Label.MALWARE else "BEN:") + token
    instructions = tuple(prefix) + (EmitIf(pred, text),) + tuple(suffix)
    return Program(pid, instructions, input_len, (len(prefix), len(prefix) + 1))


def check_probe_completeness(programs, labels, probes) -> None:
    """Every benign/malware pair must differ on some probe."""
    traces = [tuple(run(p, q).outputs for q in probes) for p in programs]
    benign = {t for t, lab in zip(traces, labels) if lab == Label.BENIGN}
    malware = {t for t, lab in zip(traces, labels) if lab == Label.MALWARE}
    if benign & malware:
        raise PopulationError("probe set does not separate benign from malware")


def generate_population(config: PopulationConfig, seed: int) -> ProgramSet:
    if config.benign < 0 or config.malware < 0:
        raise PopulationError("counts must be nonnegative")
    total = config.benign + config.malware
    if total == 0:
        raise PopulationError("empty population: benign + malware = 0")
    if total > config.max_programs:
        raise PopulationError(f"{total} programs exceeds the cap of {config.max_programs}")
    if config.input_len < 1 or config.n_probes < 0:
        raise PopulationError("input_len must be positive and n_probes nonnegative")
    if config.paired and config.benign != config.malware:
        raise PopulationError("paired mode needs equal benign and malware counts")
    if config.paired and config.equivalent_classes:
        raise PopulationError("equivalent classes cannot be combined with paired mode")
    rng = check_random_state(seed)
    n = config.input_len

    if config.paired:
        templates = [_template(rng, config) for _ in range(config.benign)]
        benign = [_assemble(f"B{k:05d}", t, Label.BENIGN, n) for k, t in enumerate(templates)]
        malware = [_assemble(f"M{k:05d}", t, Label.MALWARE, n) for k, t in enumerate(templates)]
    else:
        benign = [_assemble(f"B{k:05d}", _template(rng, config), Label.BENIGN, n)
                  for k in range(config.benign)]
        malware = [_assemble(f"M{k:05d}", _template(rng, config), Label.MALWARE, n)
                   for k in range(config.malware)]

    # Equivalent classes: consecutive slots copy the first slot's instructions.
    cursor = {Label.BENIGN: 0, Label.MALWARE: 0}
    pools = {Label.BENIGN: benign, Label.MALWARE: malware}
    for name, size in config.equivalent_classes:
        try:
            label = Label[name]
        except KeyError:
            raise PopulationError(f"unknown class label {name!r}") from None
        pool, start = pools[label], cursor[label]
        if size < 2 or start + size > len(pool):
            raise PopulationError(f"cannot place a {name} class of size {size}")
        head = pool[start]
        for k in range(start + 1, start + size):
            pool[k] = head.replace(id=pool[k].id)
        cursor[label] = start + size

    programs = benign + malware
    labels = [Label.BENIGN] * len(benign) + [Label.MALWARE] * len(malware)
    patterns = {
        ins.predicate.witness(n)
        for p in programs for ins in p.instructions if isinstance(ins, EmitIf)
    }
    random_probes = {_bits(rng, n) for _ in range(config.n_probes)}
    probes = tuple(sorted(patterns | random_probes))
    if benign and malware and not probes:
        raise PopulationError("no probe inputs to separate inequivalent programs")
    check_probe_completeness(programs, labels, probes)
    return ProgramSet(tuple(programs), tuple(labels), probes, (), n)
