"""Input-output fingerprint detector built over an unobfuscated set."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from sklearn.utils import check_random_state

from ..obfuscators.container import MalformedContainerError
from ..toyvm.vm import fingerprint
from .base import BaseDetector, as_budget
from .simple import TrivialDetector


@dataclass(frozen=True)
class FingerprintStore:
    """Digest -> (class size, number of members the base labelled 1)."""

    classes: dict

    def rate(self, digest):
        size, ones = self.classes[digest]
        return ones / size

    def mixed(self) -> dict:
        return {d: c for d, c in self.classes.items() if 0 < c[1] < c[0]}


class FingerprintDetector(BaseDetector):
    """Remembers the base detector's labels by input-output behaviour.

    ``fit`` runs ``base`` once over the unobfuscated programs and groups them
    by their fingerprint over the probe inputs; a program's verdict is 1 with
    probability ``j/|S_i|`` for its class ``S_i`` (so a uniformly labelled
    class returns its stored label). Unknown fingerprints defer to ``base``.
    Runs use the universe's modal profile, or the empty profile.
    """

    def __init__(self, base=None, budget=None, universe=None, probe_inputs=None,
                 random_state=None):
        self.base = base
        self.budget = budget
        self.universe = universe
        self.probe_inputs = probe_inputs
        self.random_state = random_state

    def _fit(self, X, programs, y):
        self.budget_ = as_budget(self.budget)
        self.base_ = self._fit_sub(self.base or TrivialDetector(0.5), X, y)
        self.probes_ = self.budget_.probes(self.probe_inputs_)
        self.profile_ = {} if self.universe is None else self.universe.modal_profile()
        self.labels_ = self.base_.predict(programs, check_random_state(self.random_state))
        classes = defaultdict(lambda: [0, 0])
        for program, label in zip(programs, self.labels_):
            entry = classes[self._digest(program)]
            entry[0] += 1
            entry[1] += int(label)
        self.store_ = FingerprintStore({d: tuple(c) for d, c in classes.items()})

    def _digest(self, program):
        return fingerprint(program, self.probes_, self.profile_, self.budget_.max_steps)

    def _proba(self, program):
        try:
            digest = self._digest(program)
        except MalformedContainerError:
            return self.base_._proba(program)
        if digest in self.store_.classes:
            return self.store_.rate(digest)
        return self.base_._proba(program)
