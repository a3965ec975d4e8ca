"""Input validation for the estimator API."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_random_state

from .toyvm.population import ProgramSet
from .toyvm.program import Label, Program


def check_programs(X):
    """Normalize ``X`` to ``(programs, labels_or_None, probes_or_None)``.

    Accepts a ``ProgramSet``, a single ``Program`` or a sequence of programs.
    """
    if isinstance(X, ProgramSet):
        return list(X.programs), X.y, X.probe_inputs
    if isinstance(X, Program):
        return [X], None, None
    try:
        programs = list(X)
    except TypeError:
        raise TypeError(
            f"expected a ProgramSet or a sequence of Program, got {type(X).__name__}"
        ) from None
    for p in programs:
        if not isinstance(p, Program):
            raise TypeError(f"expected Program, got {type(p).__name__}")
    return programs, None, None


def check_labels(y, n: int):
    if y is None:
        return None
    y = np.asarray([int(v) for v in y], dtype=int)
    if y.shape != (n,):
        raise ValueError(f"y has {y.shape[0]} labels for {n} programs")
    if not np.isin(y, (Label.BENIGN, Label.MALWARE)).all():
        raise ValueError("labels must be 0 (benign) or 1 (malware)")
    return y


def derive_seed(random_state) -> int:
    """Integer seed from an int, None or RandomState, for matched sub-streams."""
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    return int(check_random_state(random_state).randint(0, 2**31 - 1))
