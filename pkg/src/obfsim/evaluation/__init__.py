"""Error-rate estimation, evasion and utility tests, proposition suites."""
from .estimates import (DEFAULT_TRIALS, EVADES, INCONCLUSIVE, NOT_EVADES, Z95,
                        ErrorEstimate, EvasionVerdict, UtilityReport, block_inputs,
                        block_targets, ci_halfwidth, compare, decide_evasion,
                        estimate_errors, evasion_run, evasion_test, utility_test)
from .props import SUITES, p3_battery, run_proposition_suite
from .report import CSV_COLUMNS, ReportError, emit_report, result_row

__all__ = [
    "DEFAULT_TRIALS", "EVADES", "INCONCLUSIVE", "NOT_EVADES", "Z95", "ErrorEstimate",
    "EvasionVerdict", "UtilityReport", "block_inputs", "block_targets", "ci_halfwidth",
    "compare", "decide_evasion", "estimate_errors", "evasion_run", "evasion_test",
    "utility_test", "SUITES", "p3_battery", "run_proposition_suite", "CSV_COLUMNS",
    "ReportError", "emit_report", "result_row",
]
