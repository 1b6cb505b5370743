"""Bit-stable CSV and JSON renderings of reports.

All renderers take the plain-dict (JSON) form of reports, so the same code
serves both the service responses and in-process results via ``to_dict()``.
Floats are written with 10 significant digits in their shortest form so the
same numbers always produce the same bytes; every experiment row carries the
config hash and base seed for provenance.
"""

from __future__ import annotations

import io
import json
from typing import Iterable, Sequence

EXPERIMENT_COLUMNS = (
    "policy",
    "M",
    "K",
    "L",
    "c",
    "seed",
    "trials",
    "pe_hat",
    "pe_bound",
    "mean_tau",
    "tau_ci95",
    "bayes_risk",
    "rate_I",
    "rate_Istar",
    "truncation_rate",
    "config_hash",
)

SWEEP_COLUMNS = EXPERIMENT_COLUMNS[:-1] + ("delay_ratio", "risk_ratio", "config_hash")

RATES_COLUMNS = (
    "cell",
    "d_gf",
    "d_fg",
    "f_bar",
    "k_tilde",
    "i_m_dgfi",
    "u_star",
    "i_m_star",
    "optimal",
    "i_dgfi",
    "i_star",
    "pathological_k",
    "config_hash",
)

ORACLE_COLUMNS = (
    "cell",
    "kappa",
    "horizon",
    "oracle_speed",
    "predicted_rate",
    "rel_error",
    "config_hash",
)


def format_float(x: float) -> str:
    """Shortest representation with at most 10 significant digits."""
    return f"{x:.10g}"


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _write_rows(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _report_fields(report: dict) -> list:
    return [
        report["policy"],
        report["M"],
        report["K"],
        report["L"],
        float(report["c"]),
        report["seed"],
        report["trials"],
        float(report["pe_hat"]),
        float(report["pe_bound"]),
        float(report["mean_tau"]),
        float(report["tau_ci95"]),
        float(report["bayes_risk"]),
        float(report["rate_I"]),
        float(report["rate_Istar"]),
        float(report["truncation_rate"]),
    ]


def experiment_csv(reports: Sequence[dict], config_hash: str) -> str:
    rows = [_report_fields(r) + [config_hash] for r in reports]
    return _write_rows(EXPERIMENT_COLUMNS, rows)


def sweep_csv(points: Sequence[dict], config_hash: str) -> str:
    rows = [
        _report_fields(p["report"])
        + [float(p["delay_ratio"]), float(p["risk_ratio"]), config_hash]
        for p in points
    ]
    return _write_rows(SWEEP_COLUMNS, rows)


def rates_csv(report: dict, config_hash: str) -> str:
    patho = "|".join(str(k) for k in report["pathological_k"])
    rows = []
    for m in range(report["M"]):
        rows.append(
            [
                m,
                float(report["d_gf"][m]),
                float(report["d_fg"][m]),
                float(report["f_bar"][m]),
                float(report["k_tilde"][m]),
                float(report["i_m_dgfi"][m]),
                float(report["u_star"][m]),
                float(report["i_m_star"][m]),
                bool(report["optimal"][m]),
                float(report["i_dgfi"]),
                float(report["i_star"]),
                patho,
                config_hash,
            ]
        )
    return _write_rows(RATES_COLUMNS, rows)


def oracle_csv(rows: Sequence[dict], config_hash: str) -> str:
    return _write_rows(
        ORACLE_COLUMNS,
        [
            [
                r["cell"],
                r["kappa"],
                r["horizon"],
                float(r["oracle_speed"]),
                float(r["predicted_rate"]),
                float(r["rel_error"]),
                config_hash,
            ]
            for r in rows
        ],
    )


def trace_csv(rows: Sequence[dict], m: int, config_hash: str) -> str:
    columns = ["trial", "step", "probes"] + [f"s{i}" for i in range(m)] + ["config_hash"]
    out = []
    for r in rows:
        out.append(
            [r["trial"], r["step"], "|".join(str(p) for p in r["probes"])]
            + [float(s) for s in r["sums"]]
            + [config_hash]
        )
    return _write_rows(columns, out)


def to_json(payload) -> str:
    """Canonical JSON rendering (sorted keys, two-space indent)."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
