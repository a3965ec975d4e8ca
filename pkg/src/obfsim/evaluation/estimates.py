"""Error-rate estimation, evasion and utility decisions."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import clone
from sklearn.utils import check_random_state

from ..toyvm.population import ProgramSet
from ..toyvm.program import Emit, EmitIf, Label
from ..toyvm.vm import run
from ..validation import derive_seed

Z95 = 1.96
DEFAULT_TRIALS = 10_000

EVADES = "EVADES"
NOT_EVADES = "NOT_EVADES"
INCONCLUSIVE = "INCONCLUSIVE"


def ci_halfwidth(p: float, trials: int) -> float:
    return Z95 * math.sqrt(p * (1.0 - p) / trials)


@dataclass(frozen=True)
class ErrorEstimate:
    alpha_hat: float
    beta_hat: float
    trials: int
    alpha_ci: float
    beta_ci: float

    @property
    def total(self) -> float:
        return self.alpha_hat + self.beta_hat

    def to_dict(self) -> dict:
        return asdict(self)


def _class_draws(weights, idx, u):
    w = np.asarray(weights)[idx]
    cdf = np.cumsum(w / w.sum())
    pos = np.searchsorted(cdf, u, side="right")
    return idx[np.minimum(pos, len(idx) - 1)]


def estimate_errors(detector, pset: ProgramSet, trials: int = DEFAULT_TRIALS,
                    random_state=None) -> ErrorEstimate:
    """Monte Carlo estimate of (alpha, beta) for a fitted detector.

    Each trial draws one benign and one malware program by sampling weight
    and a detector coin. Both classes share the program-draw uniform and
    the coin, so aligned twin lists yield matched draws, and the same
    ``random_state`` replays identical draws on an obfuscated copy.
    """
    benign, malware = pset.indices(Label.BENIGN), pset.indices(Label.MALWARE)
    if len(benign) == 0 or len(malware) == 0:
        raise ValueError("estimate_errors needs programs of both classes")
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = check_random_state(random_state)
    u = rng.random_sample(trials)
    coins = rng.random_sample(trials)
    p1 = detector.predict_proba(pset)[:, 1]
    b_draw = _class_draws(pset.sampling_weights, benign, u)
    m_draw = _class_draws(pset.sampling_weights, malware, u)
    alpha = float(np.mean(detector.threshold(p1[b_draw], coins) == 1))
    beta = float(np.mean(detector.threshold(p1[m_draw], coins) == 0))
    return ErrorEstimate(alpha, beta, trials, ci_halfwidth(alpha, trials),
                         ci_halfwidth(beta, trials))


ABOVE, BELOW, EQUAL, OVERLAP = "ABOVE", "BELOW", "EQUAL", "OVERLAP"


def compare(post: float, post_ci: float, pre: float, pre_ci: float) -> str:
    """Position of ``post`` relative to ``pre`` given 95% half-widths."""
    if post == pre:
        return EQUAL
    if post - post_ci > pre + pre_ci:
        return ABOVE
    if post + post_ci < pre - pre_ci:
        return BELOW
    return OVERLAP


@dataclass(frozen=True)
class EvasionVerdict:
    pre: ErrorEstimate
    post: ErrorEstimate
    verdict: str
    alpha_relation: str
    beta_relation: str

    def to_dict(self) -> dict:
        return {"pre": self.pre.to_dict(), "post": self.post.to_dict(),
                "verdict": self.verdict, "alpha_relation": self.alpha_relation,
                "beta_relation": self.beta_relation}


def decide_evasion(pre: ErrorEstimate, post: ErrorEstimate) -> EvasionVerdict:
    """Evasion holds iff ``alpha_post <= alpha`` implies ``beta_post > beta``.

    Bands that overlap without exact equality leave a comparison
    unresolved; the verdict is INCONCLUSIVE unless the implication is
    settled by the resolved side alone.
    """
    a = compare(post.alpha_hat, post.alpha_ci, pre.alpha_hat, pre.alpha_ci)
    b = compare(post.beta_hat, post.beta_ci, pre.beta_hat, pre.beta_ci)
    antecedent = None if a == OVERLAP else a in (EQUAL, BELOW)
    consequent = None if b == OVERLAP else b == ABOVE
    if antecedent is False or consequent is True:
        verdict = EVADES
    elif antecedent is True and consequent is False:
        verdict = NOT_EVADES
    else:
        verdict = INCONCLUSIVE
    return EvasionVerdict(pre, post, verdict, a, b)


def evasion_run(obfuscator, detector, pset: ProgramSet, trials: int = DEFAULT_TRIALS,
                random_state=None):
    """Pre-pass on the unobfuscated set, then matched-draw estimates before
    and after obfuscating every program of both classes.

    Returns ``(EvasionVerdict, obfuscated_set, fitted_detector)``.
    """
    seed = derive_seed(random_state)
    det = clone(detector).fit(pset)
    pre = estimate_errors(det, pset, trials, seed)
    obfuscated = clone(obfuscator).fit(pset).transform(pset)
    post = estimate_errors(det, obfuscated, trials, seed)
    return decide_evasion(pre, post), obfuscated, det


def evasion_test(obfuscator, detector, pset: ProgramSet, trials: int = DEFAULT_TRIALS,
                 random_state=None) -> EvasionVerdict:
    return evasion_run(obfuscator, detector, pset, trials, random_state)[0]


@dataclass(frozen=True)
class UtilityReport:
    fractions: dict = field(default_factory=dict)  # program id -> fraction

    @property
    def min_fraction(self) -> float:
        return min(self.fractions.values()) if self.fractions else 1.0

    @property
    def mean_fraction(self) -> float:
        vals = list(self.fractions.values())
        return float(np.mean(vals)) if vals else 1.0

    @property
    def useful(self) -> bool:
        return self.min_fraction == 1.0

    def to_dict(self) -> dict:
        return {"fractions": dict(self.fractions), "min": self.min_fraction,
                "mean": self.mean_fraction, "useful": self.useful}


def block_inputs(program, probes) -> list:
    """Probe inputs on which the designated block emits something."""
    if program.block is None:
        return []
    block = program.instructions[program.block[0]:program.block[1]]
    out = []
    for q in probes:
        if any(isinstance(i, Emit) or (isinstance(i, EmitIf) and i.predicate(q))
               for i in block):
            out.append(q)
    return out


def block_targets(pset: ProgramSet, profile=None, label=Label.MALWARE,
                  per_program=None) -> dict:
    """``{id: (X(P), profile)}`` with X(P) = the block-reaching probes."""
    targets = {}
    for program, lab in zip(pset.programs, pset.labels):
        if label is not None and lab != label:
            continue
        xs = block_inputs(program, pset.probe_inputs)
        if per_program is not None:
            xs = xs[:per_program]
        if xs:
            targets[program.id] = (xs, {} if profile is None else profile)
    return targets


def utility_test(obfuscator, pset: ProgramSet, targets: dict, budget: int,
                 clock: int = 0) -> UtilityReport:
    """Fraction of each program's target inputs on which the obfuscated
    program reproduces the original outputs under the target profile."""
    obfuscated = clone(obfuscator).fit(pset).transform(pset)
    by_id = {p.id: (p, q) for p, q in zip(pset.programs, obfuscated.programs)}
    fractions = {}
    for pid, (xs, profile) in targets.items():
        original, obf = by_id[pid]
        if not xs:
            continue
        same = sum(
            run(original, x, profile, budget, clock).outputs
            == run(obf, x, profile, budget, clock).outputs
            for x in xs
        )
        fractions[pid] = same / len(xs)
    return UtilityReport(fractions)
