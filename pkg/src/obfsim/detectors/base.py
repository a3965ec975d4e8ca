"""Detector protocol: scikit-learn classifiers over programs.

A detector exposes ``predict_proba(X)[:, 1]``, the probability that its
verdict on each program is 1, and turns uniform coins into verdicts with
``threshold``. Keeping the coin explicit lets evaluation replay the same
coins before and after obfuscation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils import check_random_state

from ..validation import check_labels, check_programs


@dataclass(frozen=True)
class DetectorBudget:
    """Explicit resource caps: steps per run, profiles, key candidates, probes."""

    max_steps: int = 10_000
    max_profiles: Optional[int] = None
    max_key_candidates: int = 2**16
    max_probes: Optional[int] = None

    def __post_init__(self):
        for name in ("max_steps", "max_profiles", "max_key_candidates", "max_probes"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"budget {name} must be nonnegative")

    @classmethod
    def from_dict(cls, d) -> "DetectorBudget":
        return cls(**(d or {}))

    def to_dict(self) -> dict:
        return {"max_steps": self.max_steps, "max_profiles": self.max_profiles,
                "max_key_candidates": self.max_key_candidates,
                "max_probes": self.max_probes}

    def probes(self, probe_inputs):
        probes = tuple(probe_inputs or ())
        return probes if self.max_probes is None else probes[: self.max_probes]


def as_budget(budget) -> DetectorBudget:
    if budget is None:
        return DetectorBudget()
    if isinstance(budget, DetectorBudget):
        return budget
    return DetectorBudget.from_dict(budget)


class BaseDetector(ClassifierMixin, BaseEstimator):
    """Subclasses implement ``_fit`` (optional) and ``_proba(program)``."""

    def fit(self, X, y=None):
        programs, set_labels, probes = check_programs(X)
        y = check_labels(set_labels if y is None else y, len(programs))
        self.classes_ = np.array([0, 1])
        self.probe_inputs_ = tuple(getattr(self, "probe_inputs", None) or probes or ())
        self._fit(X, programs, y)
        return self

    def _fit(self, X, programs, y):
        pass

    def _fit_sub(self, detector, X, y):
        return None if detector is None else clone(detector).fit(X, y)

    def predict_proba(self, X) -> np.ndarray:
        programs, _, _ = check_programs(X)
        p1 = np.array([self._proba(prog) for prog in programs], dtype=float)
        return np.column_stack([1.0 - p1, p1])

    def threshold(self, p1, coins) -> np.ndarray:
        """Verdicts from P(1) values and uniform coins in [0, 1)."""
        return (np.asarray(coins) < np.asarray(p1)).astype(int)

    def predict(self, X, random_state=None) -> np.ndarray:
        p1 = self.predict_proba(X)[:, 1]
        coins = check_random_state(random_state).random_sample(len(p1))
        return self.threshold(p1, coins)

    def _proba(self, program) -> float:  # pragma: no cover - abstract
        raise NotImplementedError
