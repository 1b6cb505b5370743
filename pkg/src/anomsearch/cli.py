"""Command-line interface: a thin client of the HTTP service.

Requests go through the FastAPI app either in-process (default) or against
a remote server given with --server.  Exit codes: 0 success, 2 invalid
configuration, 3 truncation rate above the accepted threshold.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx
from pydantic import ValidationError

from .config import ConfigError, load_config
from .reporting import (
    experiment_csv,
    oracle_csv,
    rates_csv,
    sweep_csv,
    to_json,
    trace_csv,
)

EXIT_CONFIG = 2
EXIT_TRUNCATION = 3


class ServiceClient:
    """POSTs to the service, in-process by default."""

    def __init__(self, server: str | None) -> None:
        self.server = server

    def post(self, path: str, payload: dict) -> dict:
        if self.server:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(self._post_inprocess(path, payload))
        if response.status_code in (400, 422):
            detail = response.json().get("detail", response.text)
            click.echo(f"invalid configuration: {detail}", err=True)
            sys.exit(EXIT_CONFIG)
        response.raise_for_status()
        return response.json()

    @staticmethod
    async def _post_inprocess(path: str, payload: dict) -> httpx.Response:
        from .service import app  # deferred: keeps plain config errors fast

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://anomsearch.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)


def _load(config_path: str, **overrides) -> dict:
    try:
        config = load_config(config_path)
    except (ConfigError, ValidationError, OSError) as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    updates = {k: v for k, v in overrides.items() if v is not None}
    if updates:
        try:
            config = config.model_copy(update=updates)
            config = type(config).model_validate(config.model_dump(mode="json"))
        except ValidationError as exc:
            click.echo(f"invalid configuration: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    return json.loads(config.model_dump_json())


def _write(path: str | None, text: str) -> None:
    if path:
        with Path(path).open("w", newline="") as fh:
            fh.write(text)


def _check_truncation(reports: list[dict], max_truncation: float) -> None:
    worst = max((r["truncation_rate"] for r in reports), default=0.0)
    if worst > max_truncation:
        click.echo(
            f"truncation rate {worst} exceeds threshold {max_truncation}", err=True
        )
        sys.exit(EXIT_TRUNCATION)


def common_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False), help="JSON experiment config.")(fn)
    fn = click.option("--server", default=None, help="Remote service URL (default: in-process).")(fn)
    fn = click.option("--out", "out_path", default=None, help="CSV output path.")(fn)
    fn = click.option("--json-out", "json_path", default=None, help="JSON output path.")(fn)
    return fn


def run_options(fn):
    fn = click.option("--policy", type=click.Choice(["dgfi", "chernoff"]), default=None, help="Override the configured policy.")(fn)
    fn = click.option("--trials", type=int, default=None, help="Override the trial count.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the base seed.")(fn)
    fn = click.option("--workers", type=int, default=1, show_default=True, help="Parallel trial workers (results are worker-count invariant).")(fn)
    fn = click.option("--max-horizon", type=int, default=None, help="Override the truncation horizon.")(fn)
    fn = click.option("--max-truncation", type=float, default=1e-4, show_default=True, help="Exit 3 if the truncation rate exceeds this.")(fn)
    return fn


@click.group()
def main() -> None:
    """Active anomaly search: simulate, compare, and analyze probing policies."""


@main.command()
@common_options
@run_options
@click.option("--trace", is_flag=True, default=False, help="Record per-step sum LLR traces.")
def simulate(config_path, server, out_path, json_path, policy, trials, seed, workers, max_horizon, max_truncation, trace) -> None:
    """Run one Monte Carlo experiment and report error/delay/risk."""
    config = _load(config_path, policy=policy, trials=trials, seed=seed,
                   max_horizon=max_horizon, trace=trace or None)
    data = ServiceClient(server).post("/simulate", {"config": config, "workers": workers})
    report = data["report"]
    _write(out_path, experiment_csv([report], data["config_hash"]))
    _write(json_path, to_json(data))
    if config["trace"] and data.get("trace") is not None:
        trace_path = f"{out_path}.trace.csv" if out_path else "trace.csv"
        _write(trace_path, trace_csv(data["trace"], report["M"], data["config_hash"]))
    click.echo(
        f"{report['policy']}: M={report['M']} trials={report['trials']} "
        f"pe_hat={report['pe_hat']:.6g} (bound {report['pe_bound']:.6g}) "
        f"mean_tau={report['mean_tau']:.6g} bayes_risk={report['bayes_risk']:.6g}"
    )
    _check_truncation([report], max_truncation)


@main.command()
@common_options
@run_options
def compare(config_path, server, out_path, json_path, policy, trials, seed, workers, max_horizon, max_truncation) -> None:
    """Run both policies on one instance and report them side by side."""
    config = _load(config_path, policy=policy, trials=trials, seed=seed, max_horizon=max_horizon)
    data = ServiceClient(server).post("/compare", {"config": config, "workers": workers})
    reports = [data["dgfi"], data["chernoff"]]
    _write(out_path, experiment_csv(reports, data["config_hash"]))
    _write(json_path, to_json(data))
    for r in reports:
        click.echo(
            f"{r['policy']}: mean_tau={r['mean_tau']:.6g} pe_hat={r['pe_hat']:.6g} "
            f"bayes_risk={r['bayes_risk']:.6g}"
        )
    click.echo(f"delay gap (chernoff - dgfi): {data['delay_gap']:.6g}")
    _check_truncation(reports, max_truncation)


@main.command()
@common_options
@click.option("--policy", type=click.Choice(["dgfi", "chernoff"]), default=None, help="chernoff adds per-hypothesis maximin values and distributions.")
def rates(config_path, server, out_path, json_path, policy) -> None:
    """Emit the full rate report (per-cell rates, verdicts, aggregates)."""
    config = _load(config_path, policy=policy)
    payload = {"config": config, "include_chernoff": policy == "chernoff"}
    data = ServiceClient(server).post("/rates", payload)
    _write(out_path, rates_csv(data["rates"], data["config_hash"]))
    _write(json_path, to_json(data))
    r = data["rates"]
    for m in range(r["M"]):
        click.echo(
            f"cell {m}: I_m={r['i_m_dgfi'][m]:.6g} I*_m={r['i_m_star'][m]:.6g} "
            f"optimal={r['optimal'][m]}"
        )
    click.echo(f"I={r['i_dgfi']:.6g} I*={r['i_star']:.6g} pathological_K={r['pathological_k']}")


@main.command("check-optimality")
@common_options
def check_optimality(config_path, server, out_path, json_path) -> None:
    """Report per-cell optimality verdicts and pathological probe budgets."""
    config = _load(config_path)
    data = ServiceClient(server).post("/check-optimality", {"config": config})
    _write(json_path, to_json(data))
    if out_path:
        _write(out_path, to_json(data))
    click.echo(f"optimal per cell: {data['optimal']}")
    click.echo(f"pathological K: {data['pathological_k']}")


@main.command()
@common_options
@click.option("--cell", "cells", type=int, multiple=True, help="Cells to check (default: cell 0).")
@click.option("--all-cells", is_flag=True, default=False, help="Check every cell.")
@click.option("--kappa", "kappas", type=int, multiple=True, help="Probe budgets (default: 1 2 3).")
@click.option("--horizon", type=int, default=100_000, show_default=True)
def oracle(config_path, server, out_path, json_path, cells, all_cells, kappas, horizon) -> None:
    """Race the brute-force car oracle against the capped harmonic rate."""
    config = _load(config_path)
    if all_cells:
        if not config["instance"].get("cells"):
            click.echo("invalid configuration: --all-cells needs explicit cells", err=True)
            sys.exit(EXIT_CONFIG)
        probe_cells = list(range(len(config["instance"]["cells"])))
    else:
        probe_cells = list(cells) if cells else None
    payload = {
        "config": config,
        "cells": probe_cells,
        "kappas": list(kappas) if kappas else [1, 2, 3],
        "horizon": horizon,
    }
    data = ServiceClient(server).post("/oracle", payload)
    _write(out_path, oracle_csv(data["rows"], data["config_hash"]))
    _write(json_path, to_json(data))
    for row in data["rows"]:
        click.echo(
            f"cell {row['cell']} kappa={row['kappa']}: oracle={row['oracle_speed']:.6g} "
            f"predicted={row['predicted_rate']:.6g} rel_err={row['rel_error']:.3g}"
        )


@main.command()
@common_options
@run_options
def sweep(config_path, server, out_path, json_path, policy, trials, seed, workers, max_horizon, max_truncation) -> None:
    """Run the configured parameter sweep and emit the series with ratios."""
    config = _load(config_path, policy=policy, trials=trials, seed=seed, max_horizon=max_horizon)
    if config.get("sweep") is None:
        click.echo("invalid configuration: config has no sweep section", err=True)
        sys.exit(EXIT_CONFIG)
    data = ServiceClient(server).post("/sweep", {"config": config, "workers": workers})
    _write(out_path, sweep_csv(data["points"], data["config_hash"]))
    _write(json_path, to_json(data))
    for p in data["points"]:
        r = p["report"]
        click.echo(
            f"{config['sweep']['axis']}={p['value']:.6g}: mean_tau={r['mean_tau']:.6g} "
            f"pe_hat={r['pe_hat']:.6g} delay_ratio={p['delay_ratio']:.6g}"
        )
    _check_truncation([p["report"] for p in data["points"]], max_truncation)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
