"""Synthetic program model: instructions, interpreter, populations."""
from .codec import parse_block, serialize_block
from .population import (PopulationConfig, PopulationError, ProgramSet,
                         check_probe_completeness, generate_population)
from .program import (MAL_PREFIX, ContainerOp, Emit, EmitIf, ExecTrace,
                      InputPredicate, Label, Program, ProgramError)
from .vm import (DEFAULT_BUDGET, GroundTruthUnavailable, fingerprint,
                 is_malicious_ground_truth, run)

__all__ = [
    "MAL_PREFIX", "ContainerOp", "DEFAULT_BUDGET", "Emit", "EmitIf", "ExecTrace",
    "GroundTruthUnavailable", "InputPredicate", "Label", "PopulationConfig",
    "PopulationError", "Program", "ProgramError", "ProgramSet",
    "check_probe_completeness", "fingerprint", "generate_population",
    "is_malicious_ground_truth", "parse_block", "run", "serialize_block",
]
