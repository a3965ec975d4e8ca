"""Simulation framework for cryptographic obfuscation of toy programs
against budgeted detectors."""
from . import crypto, detectors, environment, evaluation, obfuscators, toyvm

__version__ = "0.1.0"

__all__ = ["crypto", "detectors", "environment", "evaluation", "obfuscators", "toyvm"]
