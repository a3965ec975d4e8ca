"""Dynamic analysis: run the program and watch for malicious output."""
from __future__ import annotations

from sklearn.utils import check_random_state

from ..environment import sample_profile
from ..obfuscators.container import MalformedContainerError
from ..toyvm.vm import run
from .base import BaseDetector, as_budget
from .simple import TrivialDetector


def observe_malicious(program, probes, profiles, max_steps, clock=0) -> bool:
    for profile in profiles:
        for q in probes:
            if run(program, q, profile, max_steps, clock).malicious:
                return True
    return False


class DynamicDetector(BaseDetector):
    """Runs the program on every probe under ``profiles_to_try`` sampled
    profiles, with the simulation clock at ``horizon``. Verdict 1 on any
    ``MAL:`` output, otherwise defers to ``base``. Undecodable containers
    count as suspicious."""

    def __init__(self, base=None, profiles_to_try=1, horizon=0, universe=None,
                 budget=None, probe_inputs=None, random_state=None):
        self.base = base
        self.profiles_to_try = profiles_to_try
        self.horizon = horizon
        self.universe = universe
        self.budget = budget
        self.probe_inputs = probe_inputs
        self.random_state = random_state

    def _fit(self, X, programs, y):
        self.budget_ = as_budget(self.budget)
        self.base_ = self._fit_sub(self.base or TrivialDetector(0.0), X, y)
        n = self.profiles_to_try
        if self.budget_.max_profiles is not None:
            n = min(n, self.budget_.max_profiles)
        rng = check_random_state(self.random_state)
        if self.universe is None:
            self.profiles_ = [{}] * min(n, 1)
        else:
            self.profiles_ = [sample_profile(self.universe, rng) for _ in range(n)]
        self.probes_ = self.budget_.probes(self.probe_inputs_)

    def _proba(self, program):
        try:
            if observe_malicious(program, self.probes_, self.profiles_,
                                 self.budget_.max_steps, self.horizon):
                return 1.0
        except MalformedContainerError:
            return 1.0
        return self.base_._proba(program)
