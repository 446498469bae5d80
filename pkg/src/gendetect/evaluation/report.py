"""Report emission: delimited summary table plus per-row ROC point files."""

import json
from pathlib import Path

from .experiment import EvalReport, EvalRow

SUMMARY_HEADER = "setup,detector,auroc,tnr95,n,seen"
REPORT_JSON = "report.json"
SUMMARY_CSV = "summary.csv"


def _roc_filename(row):
    return f"roc_{row.setup}_{row.detector}.txt"


def emit_report(report, out_dir):
    """Write summary.csv, roc_*.txt point files and a full report.json.

    Float fields use repr so that parsing them back reproduces the stored
    values exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [SUMMARY_HEADER]
    for row in report.rows:
        lines.append(
            f"{row.setup},{row.detector},{row.auroc!r},{row.tnr95!r},{row.n},{int(row.seen)}"
        )
    (out / SUMMARY_CSV).write_text("\n".join(lines) + "\n")
    roc_dir = out / "roc"
    roc_dir.mkdir(exist_ok=True)
    written = [out / SUMMARY_CSV]
    for row in report.rows:
        path = roc_dir / _roc_filename(row)
        path.write_text("".join(f"{fpr!r} {tpr!r}\n" for fpr, tpr in row.roc))
        written.append(path)
    doc = {
        "format_version": "gendetect-report-1",
        "seed": report.seed,
        "meta": report.meta,
        "rows": [
            {
                "setup": r.setup,
                "detector": r.detector,
                "auroc": r.auroc,
                "tnr95": r.tnr95,
                "n": r.n,
                "seen": r.seen,
                "roc": [[float(f), float(t)] for f, t in r.roc],
            }
            for r in report.rows
        ],
    }
    (out / REPORT_JSON).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    written.append(out / REPORT_JSON)
    return written


def load_report(path):
    """Read a report.json back into an EvalReport."""
    doc = json.loads(Path(path).read_text())
    rows = [
        EvalRow(
            setup=r["setup"],
            detector=r["detector"],
            auroc=r["auroc"],
            tnr95=r["tnr95"],
            n=r["n"],
            seen=r["seen"],
            roc=[(f, t) for f, t in r["roc"]],
        )
        for r in doc["rows"]
    ]
    return EvalReport(rows=rows, seed=doc["seed"], meta=doc["meta"])


def parse_summary(path):
    """Parse summary.csv rows back into typed dicts."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != SUMMARY_HEADER:
        raise ValueError(f"unexpected summary header: {lines[:1]}")
    rows = []
    for line in lines[1:]:
        setup, detector, a, t, n, seen = line.split(",")
        rows.append(
            {
                "setup": setup,
                "detector": detector,
                "auroc": float(a),
                "tnr95": float(t),
                "n": int(n),
                "seen": bool(int(seen)),
            }
        )
    return rows
