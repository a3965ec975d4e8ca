"""Detector family with explicit resource budgets."""
from .base import BaseDetector, DetectorBudget, as_budget
from .bruteforce import EnvBruteforceDetector, SearchResult, dovetail, program_locks
from .config import DETECTORS, DetectorConfigError, build_detector, describe
from .dynamic import DynamicDetector, observe_malicious
from .fingerprint import FingerprintDetector, FingerprintStore
from .signature import SignatureDetector
from .simple import (FlipDetector, GroundTruthDetector, ImportFlagDetector,
                     TrivialDetector, imports_crypto)


def det_trivial(p):
    return TrivialDetector(p)


def det_flip(base):
    return FlipDetector(base)


def det_import_flag(base):
    return ImportFlagDetector(base)


def det_signature(known_offsets=(), known_blocks=()):
    return SignatureDetector(known_offsets, known_blocks)


def det_fingerprint(base, budget=None, **kwargs):
    return FingerprintDetector(base, budget, **kwargs)


def det_env_bruteforce(universe, base, budget=None, **kwargs):
    return EnvBruteforceDetector(universe, base, budget=budget, **kwargs)


def det_dynamic(profiles_to_try, base, budget=None, **kwargs):
    return DynamicDetector(base, profiles_to_try, budget=budget, **kwargs)


__all__ = [name for name in dir() if not name.startswith("_")]
