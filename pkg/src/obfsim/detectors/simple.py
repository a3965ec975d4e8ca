"""Program-independent and static detectors."""
from __future__ import annotations

import numpy as np

from ..obfuscators.container import BASE64
from ..toyvm.program import ContainerOp
from ..toyvm.vm import GroundTruthUnavailable, is_malicious_ground_truth
from .base import BaseDetector


class TrivialDetector(BaseDetector):
    """Outputs 1 with probability ``p``, whatever the program."""

    def __init__(self, p=0.5):
        self.p = p

    def _fit(self, X, programs, y):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    def _proba(self, program):
        return float(self.p)


class FlipDetector(BaseDetector):
    """Complements ``base`` verdict for verdict, on the same coins."""

    def __init__(self, base=None):
        self.base = base

    def _fit(self, X, programs, y):
        self.base_ = self._fit_sub(self.base or TrivialDetector(0.5), X, y)

    def _proba(self, program):
        return 1.0 - self.base_._proba(program)

    def threshold(self, p1, coins):
        return 1 - self.base_.threshold(1.0 - np.asarray(p1), coins)


class GroundTruthDetector(BaseDetector):
    """Oracle lookup of the synthetic label, optionally wrong on the
    programs listed in ``mislabel`` (by id)."""

    def __init__(self, mislabel=()):
        self.mislabel = mislabel

    def _fit(self, X, programs, y):
        self.known_ = {} if y is None else {p.id: int(v) for p, v in zip(programs, y)}

    def _proba(self, program):
        try:
            label = int(is_malicious_ground_truth(program))
        except GroundTruthUnavailable:
            label = self.known_[program.id]
        if program.id in set(self.mislabel):
            label = 1 - label
        return float(label)


def imports_crypto(program) -> bool:
    return any(isinstance(ins, ContainerOp) and ins.container.kind != BASE64
               for ins in program.instructions)


class ImportFlagDetector(BaseDetector):
    """Flags any program carrying a cipher-using container; else defers to ``base``."""

    def __init__(self, base=None):
        self.base = base

    def _fit(self, X, programs, y):
        self.base_ = self._fit_sub(self.base or TrivialDetector(0.0), X, y)

    def _proba(self, program):
        return 1.0 if imports_crypto(program) else self.base_._proba(program)
