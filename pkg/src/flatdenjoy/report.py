"""Certificate tables as CSV text and the condition margin table."""

from __future__ import annotations

from pathlib import Path

from .construction import Certificate, ConditionReport
from .csvio import csv_text, fmt


def decay_rows(cert: Certificate):
    return [(j, k, L, bound, 0.0 < L < bound) for j, k, L, bound in cert.decay]


def certificate_tables(cert: Certificate, config_hash: str | None = None) -> dict:
    """File name to CSV text.  Timings are left out so reruns are byte-identical."""
    conds = [(r.stage, c.index, c.name, c.passed, c.margin)
             for r in cert.reports for c in r.conditions]
    budgets = [(i + 1, b.delta, b.sigma, b.split_amplitude, b.split_side, b.split_norm,
                b.beta, b.reflatten_norm, b.translation, b.hit_time, b.target,
                b.table_order, b.lemma_order) for i, b in enumerate(cert.budgets)]
    summary = [("K", cert.K), ("eps", cert.eps), ("rho", cert.rho), ("l", cert.l),
               ("schedule", " ".join(map(str, cert.schedule))),
               ("limit_length", cert.limit_length), ("final_length", cert.final_length),
               ("ok", cert.ok)]
    return {
        "decay.csv": csv_text(["j", "k", "length", "bound", "pass"], decay_rows(cert),
                              config_hash),
        "cauchy.csv": csv_text(["i", "norm", "bound", "pass"],
                               [(i, v, b, v <= b) for i, v, b in cert.cauchy], config_hash),
        "conditions.csv": csv_text(["stage", "condition", "name", "pass", "margin"], conds,
                                   config_hash),
        "budgets.csv": csv_text(["stage", "delta", "sigma", "split_amplitude", "split_side",
                                 "split_norm", "beta", "reflatten_norm", "translation",
                                 "hit_time", "target", "table_order", "lemma_order"],
                                budgets, config_hash),
        "summary.csv": csv_text(["key", "value"],
                                [(k, v if isinstance(v, str) else fmt(v)) for k, v in summary],
                                config_hash),
    }


def write_certificate(cert: Certificate, directory, config_hash: str | None = None):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in certificate_tables(cert, config_hash).items():
        p = d / name
        p.write_text(text)
        paths.append(p)
    return paths


def margin_table(report: ConditionReport) -> str:
    """Ten-row text table of a stage's conditions."""
    lines = [f"stage {report.stage}",
             f"{'#':>2}  {'condition':<22} {'pass':<5} margin"]
    for c in report.conditions:
        lines.append(f"{c.index:>2}  {c.name:<22} {'yes' if c.passed else 'NO':<5} "
                     f"{fmt(c.margin)}" + (f"  ({c.note})" if c.note else ""))
    for n in report.notes:
        lines.append(f"note: {n}")
    return "\n".join(lines)
