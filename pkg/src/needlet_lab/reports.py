"""Stable JSON/CSV serialization of experiment reports.

Field names and ordering are part of the contract: identical configs and
seeds must produce byte-identical files regardless of worker count.  Floats
go through repr (JSON) or %.17g (CSV), both locale-free with '.' decimals.
"""
from __future__ import annotations

import json

import numpy as np

from .cltlab import CltReport


def _jsonify(value):
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def report_json(report: CltReport) -> str:
    return json.dumps(_jsonify(report.to_dict()), indent=2) + "\n"


def write_report_json(report: CltReport, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(report_json(report))


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.17g}"


def sweep_rows(report: CltReport) -> list[tuple[str, float, float | None, float | None]]:
    """Fixed (metric, empirical, bound-or-comparator, se) rows per kind."""
    emp, orc, bnd = report.empirical, report.oracle, report.bounds
    kind = report.context["kind"]
    if kind in ("coeff_1d_raw", "coeff_1d_normalized", "fdd_1d"):
        return [
            ("d_w", emp["d_w"], bnd.get("wasserstein"), emp["d_w_se"]),
            ("d_kol", emp["d_kol"], bnd.get("kolmogorov"), None),
            ("cum4", emp["cum4"], orc["cum4_exact"], emp["cum4_se"]),
        ]
    if kind in ("coeff_multi_raw", "coeff_multi_normalized", "fdd_multi"):
        d = len(emp["component_cum4"])
        cov_tol = 5.0 * d / report.reps**0.5
        return [
            ("cov_error_fro", emp["cov_error_fro"], cov_tol, None),
            ("cov_error_rel", emp["cov_error_rel"], None, None),
            ("cum4_mean", sum(emp["component_cum4"]) / d, sum(orc["cum4_exact"]) / d, None),
        ]
    return [
        ("norm_sq_mean", emp["norm_sq_mean"], orc["m2"], emp["norm_sq_mean_se"]),
        ("norm_sq_mean_sq", emp["norm_sq_mean_sq"], orc["m4"], emp["norm_sq_mean_sq_se"]),
        ("identity_residual", orc["identity_residual"], orc["four_pi_over_nu"], None),
    ]


def write_sweep_csv(reports: list[CltReport], path) -> None:
    """Long-format sweep table: j, nu_t, metric, empirical, bound, se."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("j,nu_t,metric,empirical,bound,se\n")
        for rep in reports:
            j = rep.context["j"]
            nu = rep.context["nu_t"]
            for metric, empirical, bound, se in sweep_rows(rep):
                fh.write(f"{j},{_fmt(nu)},{metric},{_fmt(empirical)},{_fmt(bound)},{_fmt(se)}\n")
