"""JSON and CSV emission for evaluation matrices."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

CSV_COLUMNS = ("obfuscator", "detector", "alpha", "beta", "alpha_O", "beta_O",
               "verdict", "trials", "seed")


class ReportError(OSError):
    pass


def result_row(obfuscator: str, detector: str, verdict, seed: int) -> dict:
    """Flatten an ``EvasionVerdict`` into one report record."""
    return {
        "obfuscator": obfuscator,
        "detector": detector,
        "alpha": verdict.pre.alpha_hat,
        "beta": verdict.pre.beta_hat,
        "alpha_O": verdict.post.alpha_hat,
        "beta_O": verdict.post.beta_hat,
        "verdict": verdict.verdict,
        "trials": verdict.post.trials,
        "seed": seed,
        "detail": verdict.to_dict(),
    }


def _csv_text(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in results:
        writer.writerow([_cell(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def emit_report(results, out_dir, stem: str = "report") -> tuple[Path, Path]:
    """Write ``<stem>.json`` and ``<stem>.csv`` under ``out_dir``.

    Output depends only on ``results``, so identical inputs give identical bytes.
    """
    results = list(results)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        json_path = out / f"{stem}.json"
        csv_path = out / f"{stem}.csv"
        json_path.write_text(json.dumps(results, indent=1, sort_keys=True) + "\n",
                             encoding="utf-8")
        csv_path.write_text(_csv_text(results), encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc
    return json_path, csv_path
