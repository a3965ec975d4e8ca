"""Build detectors from JSON: ``{"type", "params", "budget", "fallback"}``.

``fallback`` is the nested delegate (the ``base`` of wrapper detectors).
``params.on_exhausted`` of ``env_bruteforce`` is itself a detector config.
A ``universe`` param may be inline JSON; otherwise the caller's universe is used.
"""
from __future__ import annotations

from ..environment import ProfileUniverse
from .bruteforce import EnvBruteforceDetector
from .base import as_budget
from .dynamic import DynamicDetector
from .fingerprint import FingerprintDetector
from .signature import SignatureDetector
from .simple import (FlipDetector, GroundTruthDetector, ImportFlagDetector,
                     TrivialDetector)

DETECTORS = {
    "trivial": TrivialDetector,
    "flip": FlipDetector,
    "oracle": GroundTruthDetector,
    "import_flag": ImportFlagDetector,
    "signature": SignatureDetector,
    "fingerprint": FingerprintDetector,
    "dynamic": DynamicDetector,
    "env_bruteforce": EnvBruteforceDetector,
}
_WRAPPERS = {"flip", "import_flag", "fingerprint", "dynamic", "env_bruteforce"}
_BUDGETED = {"fingerprint", "dynamic", "env_bruteforce"}
_UNIVERSE = {"fingerprint", "dynamic", "env_bruteforce"}


class DetectorConfigError(ValueError):
    pass


def build_detector(config: dict, universe: ProfileUniverse | None = None):
    try:
        kind = config["type"]
    except (KeyError, TypeError):
        raise DetectorConfigError(f"detector config needs a 'type': {config!r}") from None
    if kind not in DETECTORS:
        raise DetectorConfigError(
            f"unknown detector {kind!r}; valid: {', '.join(sorted(DETECTORS))}")
    params = dict(config.get("params") or {})
    if "universe" in params:
        params["universe"] = ProfileUniverse.from_dict(params["universe"])
    elif kind in _UNIVERSE and universe is not None:
        params["universe"] = universe
    if "on_exhausted" in params:
        params["on_exhausted"] = build_detector(params["on_exhausted"], universe)
    if "mislabel" in params:
        params["mislabel"] = tuple(params["mislabel"])
    if "known_offsets" in params:
        params["known_offsets"] = tuple(params["known_offsets"])
    if config.get("fallback") is not None:
        if kind not in _WRAPPERS:
            raise DetectorConfigError(f"detector {kind!r} takes no fallback")
        params["base"] = build_detector(config["fallback"], universe)
    if config.get("budget") is not None:
        if kind not in _BUDGETED:
            raise DetectorConfigError(f"detector {kind!r} takes no budget")
        params["budget"] = as_budget(config["budget"])
    try:
        return DETECTORS[kind](**params)
    except TypeError as exc:
        raise DetectorConfigError(f"bad params for {kind!r}: {exc}") from None


def describe(detector) -> str:
    """Short stable name, e.g. ``import_flag(dynamic(trivial(p=0.0)))``."""
    names = {cls: name for name, cls in DETECTORS.items()}
    name = names.get(type(detector), type(detector).__name__)
    if isinstance(detector, TrivialDetector):
        return f"{name}(p={detector.p})"
    inner = getattr(detector, "base", None)
    return f"{name}({describe(inner)})" if inner is not None else name
