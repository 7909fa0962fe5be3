import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import pandas as pd

from utils.errors import MissingFile, SchemaError

OUTCOMES = ("target", "unaffected", "disrupted", "failed", "other")
CLEAN_METRICS = ("add_c", "pea_c", "dpe2_c")
POISON_METRICS = ("add_p", "pea_p", "dpe2_p", "asr")
COLUMN_NAMES = {
    "add_c": "ADD-C", "pea_c": "PEA-C", "dpe2_c": "2DPE-C",
    "add_p": "ADD-P", "pea_p": "PEA-P", "dpe2_p": "2DPE-P", "asr": "ASR",
}


@dataclass(frozen=True)
class EvalReport:
    """
    Percentages in [0, 100]. "-C" metrics cover clean samples only, "-P"
    metrics and ASR triggered samples only.
    """
    add_c: float = 0.0
    pea_c: float = 0.0
    dpe2_c: float = 0.0
    add_p: float = 0.0
    pea_p: float = 0.0
    dpe2_p: float = 0.0
    asr: float = 0.0
    n_clean: int = 0
    n_poisoned: int = 0
    n_failed: int = 0
    outcomes: dict = field(default_factory=lambda: {name: 0 for name in OUTCOMES})
    thresholds: dict = field(default_factory=dict)
    degradation: dict = None

    def with_degradation(self, degradation):
        return replace(self, degradation=dict(degradation))

    def to_dict(self):
        return asdict(self)

    def to_frame(self):
        """One-row table in the clean | triggered column layout."""
        row = {COLUMN_NAMES[m]: f"{getattr(self, m):.2f}%" for m in CLEAN_METRICS + POISON_METRICS}
        row["N-C"] = self.n_clean
        row["N-P"] = self.n_poisoned
        return pd.DataFrame([row])

    def to_table(self):
        lines = [
            "Evaluation on clean samples | Evaluation on triggered samples",
            self.to_frame().to_string(index=False),
        ]
        if self.n_poisoned:
            outcomes = pd.DataFrame([self.outcomes], columns=list(OUTCOMES))
            lines += ["", "Triggered-sample outcomes", outcomes.to_string(index=False)]
        if self.degradation is not None:
            degradation = pd.DataFrame([{
                COLUMN_NAMES[m]: f"{v:.2f}%" for m, v in self.degradation.items()
            }])
            lines += ["", "Clean-utility degradation vs baseline", degradation.to_string(index=False)]
        return "\n".join(lines) + "\n"


def report_from_dict(obj):
    try:
        values = {k: obj[k] for k in EvalReport.__dataclass_fields__ if k in obj}
        return EvalReport(**values)
    except TypeError as e:
        raise SchemaError("report", str(e))


def save_report(report, json_path, table_path=None, provenance=None):
    payload = report.to_dict()
    if provenance is not None:
        payload = {"provenance": provenance, **payload}
    Path(json_path).write_text(json.dumps(payload, indent=1) + "\n")
    if table_path is not None:
        Path(table_path).write_text(report.to_table())


def load_report(path):
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"report not found: {path}")
    return report_from_dict(json.loads(path.read_text()))


def clean_degradation(baseline, report):
    """
    Relative drop (percent of the baseline value) of each clean metric. A
    zero baseline yields 0.
    """
    out = {}
    for metric in CLEAN_METRICS:
        base = getattr(baseline, metric)
        out[metric] = 100.0 * (base - getattr(report, metric)) / base if base > 0 else 0.0
    return out
