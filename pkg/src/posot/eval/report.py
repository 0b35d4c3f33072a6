"""Experiment reports: JSON document and an aligned text table."""

import json
import math
from dataclasses import dataclass

from ..stats import paired_ttest

REPORT_FORMAT = "posot.experiment_report"
REPORT_VERSION = 1


def _num(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)


@dataclass(frozen=True)
class ReportRow:
    name: str
    regime: str
    classifier: str
    seeds: tuple
    f1_mean: float
    f1_std: float
    auroc_mean: float | None
    auroc_std: float | None
    n_runs: int
    per_seed_f1: tuple
    per_seed_auroc: tuple
    partitions_checked: int
    compare_to: str | None = None
    t_f1: float | None = None
    p_f1: float | None = None
    p_auroc: float | None = None

    def to_dict(self):
        d = dict(self.__dict__)
        d["seeds"] = list(self.seeds)
        d["per_seed_f1"] = [_num(v) for v in self.per_seed_f1]
        d["per_seed_auroc"] = [_num(v) for v in self.per_seed_auroc]
        for k in ("f1_mean", "f1_std", "auroc_mean", "auroc_std", "t_f1", "p_f1", "p_auroc"):
            d[k] = _num(d[k])
        return d


def _row(result):
    f1_mean, f1_std, n = result.summary("f1")
    au_mean, au_std, _ = result.summary("auroc")
    spec = result.spec
    return ReportRow(spec.label, spec.regime, spec.classifier, spec.seeds, f1_mean, f1_std,
                     au_mean, au_std, n, tuple(result.per_seed("f1")),
                     tuple(result.per_seed("auroc")), result.partitions_checked)


def _compare(row, base):
    if base is None or base.seeds != row.seeds or base is row:
        return row
    out = {"compare_to": base.name}
    try:
        res = paired_ttest(row.per_seed_f1, base.per_seed_f1)
        out["t_f1"], out["p_f1"] = res.t, res.p
    except ValueError:
        pass
    a = [v for v in row.per_seed_auroc]
    b = [v for v in base.per_seed_auroc]
    if not any(math.isnan(v) for v in a + b):
        try:
            out["p_auroc"] = paired_ttest(a, b).p
        except ValueError:
            pass
    return ReportRow(**{**row.__dict__, **out})


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    baseline: str | None = None

    @classmethod
    def build(cls, results, baseline=None):
        """Summarize regime results; p-values are paired over seeds vs. the baseline row.

        A row's own ``compare_to`` overrides the report-wide ``baseline``; the
        comparison row must use the same classifier and seed list.
        """
        rows = [_row(r) for r in results]
        index = {(r.name, r.classifier): r for r in rows}
        out = []
        for res, row in zip(results, rows):
            target = res.spec.compare_to or baseline
            base = index.get((target, row.classifier)) if target else None
            out.append(_compare(row, base))
        return cls(tuple(out), baseline)

    def row(self, name, classifier):
        for r in self.rows:
            if r.name == name and r.classifier == classifier:
                return r
        raise KeyError((name, classifier))

    def to_dict(self):
        return {"format": REPORT_FORMAT, "version": REPORT_VERSION, "baseline": self.baseline,
                "rows": [r.to_dict() for r in self.rows]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self):
        """Regime rows by classifier columns, each cell ``F1 mean±std  AUROC mean±std``."""
        names = list(dict.fromkeys(r.name for r in self.rows))
        clfs = list(dict.fromkeys(r.classifier for r in self.rows))
        cell = {(r.name, r.classifier): r for r in self.rows}

        def fmt(mean, std):
            if mean is None or math.isnan(mean):
                return "-"
            return f"{mean:.2f}±{std:.2f}"

        def text(r):
            if r is None:
                return "", ""
            f1 = fmt(r.f1_mean, r.f1_std)
            if r.p_f1 is not None:
                f1 += "*" if r.p_f1 < 0.05 else ""
            return f1, fmt(r.auroc_mean, r.auroc_std)

        def versus(n):
            refs = {r.compare_to for r in self.rows if r.name == n and r.compare_to}
            return ", ".join(sorted(refs))

        header = ["Regime"] + [f"{c} {m}" for c in clfs for m in ("F1", "AUROC")] + ["vs"]
        body = [[n] + [x for c in clfs for x in text(cell.get((n, c)))] + [versus(n)]
                for n in names]
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        lines = ["  ".join(v.ljust(w) for v, w in zip(header, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in body]
        lines.append("* paired t-test over seeds, p < 0.05 against the row named under vs")
        return "\n".join(lines) + "\n"
