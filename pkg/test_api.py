"""
Тесты HTTP API: поиск по PDDL тексту, значения эвристик, лаборатория бандитов.
"""
import math

import pytest
from fastapi.testclient import TestClient

from app.config import Settings
from app.main import app

client = TestClient(app)

UNSOLVABLE_CHAIN = """
(define (problem chain-cut)
  (:domain chain)
  (:objects n1 n2 - node)
  (:init (first n1))
  (:goal (done n2)))
"""


@pytest.fixture
def gripper_text(fixtures_dir):
    return {
        "domain": (fixtures_dir / "gripper" / "domain.pddl").read_text(encoding="utf-8"),
        "problem": (fixtures_dir / "gripper" / "p01.pddl").read_text(encoding="utf-8"),
    }


def test_health():
    body = client.get("/").json()
    assert body["status"] == "ok"
    assert "guct-normal2-star" in body["algorithms"]
    assert body["heuristics"] == ["ff", "add", "hmax", "gc", "blind"]
    assert client.get("/health").json()["status"] == "healthy"


# ─────────────────────────────────────────────
# 1. /search
# ─────────────────────────────────────────────
@pytest.mark.parametrize("algorithm", ["gbfs", "gbfs-tree", "guct", "guct-normal2", "guct01-star"])
def test_run_returns_valid_plan(gripper_text, algorithm):
    response = client.post("/api/v1/search/run", json={**gripper_text, "algorithm": algorithm, "budget": 5000})
    assert response.status_code == 200
    body = response.json()
    assert body["result"]["outcome"] == "plan"
    assert body["valid"] is True
    assert len(body["plan"]) == body["result"]["plan_length"]
    assert all(label.startswith("(") for label in body["plan"])


def test_run_budget_reached(fixtures_dir):
    request = {
        "domain": (fixtures_dir / "gripper" / "domain.pddl").read_text(encoding="utf-8"),
        "problem": (fixtures_dir / "gripper" / "p02.pddl").read_text(encoding="utf-8"),
        "heuristic": "blind",
        "budget": 2,
    }
    body = client.post("/api/v1/search/run", json=request).json()
    assert body["result"]["outcome"] == "budget_reached"
    assert body["plan"] is None
    assert body["valid"] is None


def test_run_unknown_algorithm(gripper_text):
    response = client.post("/api/v1/search/run", json={**gripper_text, "algorithm": "astar"})
    assert response.status_code == 422


def test_run_unsupported_feature(gripper_text):
    response = client.post(
        "/api/v1/search/run",
        json={**gripper_text, "domain": "(define (domain d) (:requirements :strips :negative-preconditions))"},
    )
    assert response.status_code == 422
    assert response.json()["detail"]["feature"] == ":negative-preconditions"


def test_run_syntax_error(gripper_text):
    response = client.post("/api/v1/search/run", json={**gripper_text, "problem": "(define (problem p"})
    assert response.status_code == 422
    assert isinstance(response.json()["detail"], str)


def test_heuristic_values(gripper_text):
    body = client.post("/api/v1/search/heuristic", json=gripper_text).json()
    assert body["facts"] == 12
    assert body["operators"] == 20
    assert body["unsolvable"] is False
    assert body["values"] == {"ff": 5, "add": 6, "hmax": 2, "gc": 2, "blind": 1}


def test_heuristic_dead_end(fixtures_dir):
    request = {
        "domain": (fixtures_dir / "chain" / "domain.pddl").read_text(encoding="utf-8"),
        "problem": UNSOLVABLE_CHAIN,
    }
    body = client.post("/api/v1/search/heuristic", json=request).json()
    assert body["unsolvable"] is True
    assert body["values"]["ff"] is None
    assert body["values"]["hmax"] is None
    assert body["values"]["gc"] == 1


# ─────────────────────────────────────────────
# 2. /bandits
# ─────────────────────────────────────────────
def test_simulate():
    request = {
        "arms": [{"mu": 0.0, "sigma": 1.0}, {"mu": 1.0, "sigma": 1.0}],
        "policies": [{"kind": "ucb1", "c": 1.0}, {"kind": "ucb1_normal2"}],
        "horizon": 200,
        "seeds": 3,
        "warmup": 2,
    }
    response = client.post("/api/v1/bandits/simulate", json=request)
    assert response.status_code == 200
    summary = response.json()["summary"]
    assert [row["policy"] for row in summary] == ["ucb1(c=1)", "ucb1_normal2"]
    assert summary[0]["bound"] is None
    assert summary[1]["bound"] > 0
    assert all(row["seeds"] == 3 and row["horizon"] == 200 for row in summary)


def test_simulate_horizon_shorter_than_warmup():
    request = {
        "arms": [{"mu": 0.0, "sigma": 1.0}, {"mu": 1.0, "sigma": 1.0}],
        "policies": [{"kind": "ucb1"}],
        "horizon": 3,
        "warmup": 2,
    }
    assert client.post("/api/v1/bandits/simulate", json=request).status_code == 400


def test_simulate_validates_arms():
    request = {"arms": [{"mu": 0.0, "sigma": -1.0}], "policies": [{"kind": "ucb1"}]}
    assert client.post("/api/v1/bandits/simulate", json=request).status_code == 422


def test_verify():
    body = client.get("/api/v1/bandits/verify").json()
    assert [row["sigma"] for row in body["subgaussian_norm"]] == [1.0, 2.0]
    for row in body["subgaussian_norm"] + body["chi2_df2"]:
        assert row["value"] == pytest.approx(row["expected"], abs=1e-6)
    assert body["chi2_df2"][2]["value"] == pytest.approx(4.0)
    assert math.isclose(body["chi2_df2"][0]["expected"], 2 * math.log(2))


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("PLANNER_DEFAULT_BUDGET", "77")
    monkeypatch.setenv("PLANNER_KEEP_LOCKED_LEAVES", "true")
    settings = Settings()
    assert settings.default_budget == 77
    assert settings.keep_locked_leaves is True
    assert "debug" not in Settings.model_fields
