"""HTTP surface: every endpoint, happy paths and error mapping."""

import pytest
from fastapi.testclient import TestClient

from anomsearch.service import app

from test_config import fig_config_dict

client = TestClient(app)


def small_config(**extra):
    overrides = {"trials": 120, **extra}
    return fig_config_dict(m=4, c=1e-2, **overrides)


class TestHealth:
    def test_health(self):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}


class TestSimulate:
    def test_report_fields(self):
        response = client.post("/simulate", json={"config": small_config()})
        assert response.status_code == 200
        data = response.json()
        report = data["report"]
        assert report["policy"] == "dgfi"
        assert report["M"] == 4
        assert report["trials"] == 120
        assert 0.0 <= report["pe_hat"] <= 1.0
        assert report["bayes_risk"] == pytest.approx(
            report["pe_hat"] + report["c"] * report["mean_tau"]
        )
        assert len(data["config_hash"]) == 12
        assert len(report["per_hypothesis"]) == 4

    def test_chernoff_policy(self):
        config = small_config()
        config["policy"] = "chernoff"
        response = client.post("/simulate", json={"config": config})
        assert response.status_code == 200
        assert response.json()["report"]["policy"] == "chernoff"

    def test_trace_rows(self):
        config = small_config(trials=3, trace=True)
        response = client.post("/simulate", json={"config": config})
        assert response.status_code == 200
        trace = response.json()["trace"]
        assert trace and {"trial", "step", "probes", "sums"} <= set(trace[0])
        assert max(row["trial"] for row in trace) <= 2

    def test_trace_cap_enforced(self):
        config = small_config(trials=5000, trace=True)
        response = client.post("/simulate", json={"config": config})
        assert response.status_code == 400

    def test_unknown_field_is_422(self):
        config = small_config()
        config["instance"]["warp"] = 9
        response = client.post("/simulate", json={"config": config})
        assert response.status_code == 422

    def test_deterministic_across_calls(self):
        body = {"config": small_config(), "workers": 1}
        a = client.post("/simulate", json=body).json()
        b = client.post("/simulate", json=body).json()
        assert a == b


class TestCompare:
    def test_both_policies_reported(self):
        response = client.post("/compare", json={"config": small_config()})
        assert response.status_code == 200
        data = response.json()
        assert data["dgfi"]["policy"] == "dgfi"
        assert data["chernoff"]["policy"] == "chernoff"
        assert data["delay_gap"] == pytest.approx(
            data["chernoff"]["mean_tau"] - data["dgfi"]["mean_tau"]
        )


class TestRates:
    def test_rate_report(self):
        response = client.post("/rates", json={"config": small_config()})
        assert response.status_code == 200
        rates = response.json()["rates"]
        assert rates["M"] == 4
        assert all(
            lo <= hi + 1e-12 for lo, hi in zip(rates["i_m_dgfi"], rates["i_m_star"])
        )

    def test_chernoff_distributions_included(self):
        response = client.post(
            "/rates", json={"config": small_config(), "include_chernoff": True}
        )
        data = response.json()
        assert data["chernoff"] is not None
        first = data["chernoff"][0]
        assert sum(first["weights"]) == pytest.approx(1.0, abs=1e-9)
        assert first["value"] > 0


class TestOptimality:
    def test_single_probe_always_optimal(self):
        response = client.post("/check-optimality", json={"config": small_config()})
        data = response.json()
        assert data["all_optimal"] is True
        assert data["pathological_k"] == [] or 1 not in data["pathological_k"]


class TestOracle:
    def test_rows_match_prediction(self):
        body = {
            "config": small_config(),
            "cells": [0],
            "kappas": [1],
            "horizon": 20000,
        }
        response = client.post("/oracle", json=body)
        assert response.status_code == 200
        row = response.json()["rows"][0]
        assert row["rel_error"] <= 0.01

    def test_cell_out_of_range_is_400(self):
        body = {"config": small_config(), "cells": [9], "kappas": [1]}
        assert client.post("/oracle", json=body).status_code == 400


class TestSweep:
    def test_cost_axis_points(self):
        config = small_config(sweep={"axis": "c", "values": [0.05, 0.01]})
        response = client.post("/sweep", json={"config": config})
        assert response.status_code == 200
        points = response.json()["points"]
        assert [p["value"] for p in points] == [0.05, 0.01]
        assert all(p["delay_ratio"] > 0 for p in points)

    def test_size_axis_with_generator(self):
        config = {
            "instance": {"K": 1, "L": 1, "c": 1e-2},
            "trials": 80,
            "seed": 4,
            "sweep": {
                "axis": "M",
                "values": [4, 6],
                "generator": {
                    "kind": "exponential",
                    "lambda_f": 0.0188,
                    "lambda_g_offset": 9.0,
                },
            },
        }
        response = client.post("/sweep", json={"config": config})
        assert response.status_code == 200
        points = response.json()["points"]
        assert [p["report"]["M"] for p in points] == [4, 6]
        # delay grows with the number of cells to sweep
        assert points[0]["report"]["mean_tau"] < points[1]["report"]["mean_tau"]

    def test_missing_sweep_is_400(self):
        response = client.post("/sweep", json={"config": small_config()})
        assert response.status_code == 400
