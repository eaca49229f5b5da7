"""
Тесты бенчмарка и командной строки: JSONL записи, возобновление, гистограмма,
сравнение, коды выхода.
"""
from pathlib import Path

import orjson
import pandas as pd
import pytest
from typer.testing import CliRunner

from app.cli import app
from app.errors import UnknownAlgorithmError
from app.models.bench import BenchRecord, RunConfig
from app.models.search import Algorithm
from app.services import bench_service

runner = CliRunner()

FIXTURES = Path(__file__).parent / "fixtures"

UNSOLVABLE_CHAIN = """
(define (problem chain-cut)
  (:domain chain)
  (:objects n1 n2 - node)
  (:init (first n1))
  (:goal (done n2)))
"""


def _lines(path):
    return [orjson.loads(line) for line in path.read_bytes().splitlines() if line.strip()]


@pytest.fixture(scope="module")
def bench_file(tmp_path_factory):
    """Прогон bench по fixtures/: gbfs и guct-normal2, пять зёрен."""
    out = tmp_path_factory.mktemp("bench") / "records.jsonl"
    result = runner.invoke(
        app,
        ["bench", str(FIXTURES), "--out", str(out), "--algo", "gbfs", "--algo", "guct-normal2", "--seeds", "0,1,2,3,4"],
    )
    assert result.exit_code == 0, result.output
    return out


# ─────────────────────────────────────────────
# 1. run
# ─────────────────────────────────────────────
def test_run_writes_record_per_seed(fixtures_dir, tmp_path):
    out = tmp_path / "run.jsonl"
    result = runner.invoke(
        app,
        ["run", str(fixtures_dir / "chain" / "domain.pddl"), str(fixtures_dir / "chain" / "p01.pddl"),
         "--seeds", "0,1", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    records = [BenchRecord.model_validate(r) for r in _lines(out)]
    assert [r.seed for r in records] == [0, 1]
    for record in records:
        assert (record.domain, record.problem, record.algorithm) == ("chain", "p01", "gbfs")
        assert record.outcome == "plan"
        assert record.plan_length == 2
        assert record.c is None


def test_run_gripper_gbfs_ff(fixtures_dir, tmp_path):
    out = tmp_path / "run.jsonl"
    result = runner.invoke(
        app,
        ["run", str(fixtures_dir / "gripper" / "domain.pddl"), str(fixtures_dir / "gripper" / "p01.pddl"),
         "--algo", "gbfs", "--heuristic", "ff", "--seeds", "0", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    (record,) = _lines(out)
    # Посчитано вручную: init, pick ball1, pick ball2, move, drop ball1
    assert (record["outcome"], record["expansions"], record["plan_length"]) == ("plan", 5, 5)


def test_run_records_c_only_when_used(fixtures_dir, tmp_path):
    out = tmp_path / "run.jsonl"
    result = runner.invoke(
        app,
        ["run", str(fixtures_dir / "gripper" / "domain.pddl"), str(fixtures_dir / "gripper" / "p01.pddl"),
         "--algo", "guct", "--algo", "guct-normal2", "--c", "0.5", "--seeds", "0", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    by_algorithm = {r["algorithm"]: r for r in _lines(out)}
    assert by_algorithm["guct"]["c"] == 0.5
    assert by_algorithm["guct-normal2"]["c"] is None


def test_run_missing_file(fixtures_dir, tmp_path):
    result = runner.invoke(app, ["run", str(tmp_path / "nope.pddl"), str(fixtures_dir / "chain" / "p01.pddl")])
    assert result.exit_code == 2


def test_run_syntax_error(fixtures_dir, tmp_path):
    broken = tmp_path / "domain.pddl"
    broken.write_text("(define (domain broken)\n  (:predicates (a))\n  (:action x", encoding="utf-8")
    result = runner.invoke(app, ["run", str(broken), str(fixtures_dir / "chain" / "p01.pddl")])
    assert result.exit_code == 3


def test_run_unsupported_feature(fixtures_dir, tmp_path):
    adl = tmp_path / "domain.pddl"
    adl.write_text("(define (domain d) (:requirements :adl))", encoding="utf-8")
    result = runner.invoke(app, ["run", str(adl), str(fixtures_dir / "chain" / "p01.pddl")])
    assert result.exit_code == 4


def test_run_exhausted(fixtures_dir, tmp_path):
    problem = tmp_path / "p09.pddl"
    problem.write_text(UNSOLVABLE_CHAIN, encoding="utf-8")
    out = tmp_path / "run.jsonl"
    result = runner.invoke(
        app,
        ["run", str(fixtures_dir / "chain" / "domain.pddl"), str(problem), "--seeds", "0", "--out", str(out)],
    )
    assert result.exit_code == 1
    assert _lines(out)[0]["outcome"] == "exhausted"


def test_run_not_utf8(fixtures_dir, tmp_path):
    problem = tmp_path / "p01.pddl"
    problem.write_bytes(b"(define (problem \xff\xfe))")
    result = runner.invoke(app, ["run", str(fixtures_dir / "chain" / "domain.pddl"), str(problem)])
    assert result.exit_code == 3


@pytest.mark.parametrize("flags", [["--seeds", "a"], ["--seeds", "0,x"], ["--deadline-s", "0"], ["--c", "-1"]])
def test_run_bad_arguments(fixtures_dir, flags):
    result = runner.invoke(
        app,
        ["run", str(fixtures_dir / "chain" / "domain.pddl"), str(fixtures_dir / "chain" / "p01.pddl"), *flags],
    )
    assert result.exit_code == 2
    assert not isinstance(result.exception, (ValueError, TypeError))


def test_run_unknown_algorithm(fixtures_dir):
    result = runner.invoke(
        app,
        ["run", str(fixtures_dir / "chain" / "domain.pddl"), str(fixtures_dir / "chain" / "p01.pddl"), "--algo", "astar"],
    )
    assert result.exit_code == 5


# ─────────────────────────────────────────────
# 2. bench
# ─────────────────────────────────────────────
def test_discover_suite(fixtures_dir, tmp_path):
    instances = bench_service.discover_suite(fixtures_dir)
    assert [(d.parent.name, p.stem) for d, p in instances] == [
        ("chain", "p01"), ("chain", "p02"), ("chain", "p03"),
        ("gripper", "p01"), ("gripper", "p02"), ("gripper", "p03"),
    ]
    assert len(bench_service.discover_suite(fixtures_dir / "gripper")) == 3
    assert bench_service.discover_suite(tmp_path) == []


def test_bench_full_grid(bench_file):
    records = bench_service.read_records(bench_file)
    assert len(records) == 6 * 2 * 5
    assert len({r.key for r in records}) == 60
    assert all(r.solved for r in records)


def test_bench_is_resumable(bench_file, tmp_path):
    copy = tmp_path / "records.jsonl"
    lines = bench_file.read_bytes().splitlines(keepends=True)
    copy.write_bytes(b"".join(lines[:-7]))
    config = RunConfig(algorithms=[Algorithm.gbfs, Algorithm.guct_normal2])
    assert bench_service.bench(config, FIXTURES, copy) == 7
    assert bench_service.bench(config, FIXTURES, copy) == 0
    assert len(bench_service.read_records(copy)) == 60


def test_bench_records_errors(fixtures_dir, tmp_path):
    suite = tmp_path / "suite" / "chain"
    suite.mkdir(parents=True)
    (suite / "domain.pddl").write_text((fixtures_dir / "chain" / "domain.pddl").read_text(encoding="utf-8"), encoding="utf-8")
    (suite / "p01.pddl").write_text((fixtures_dir / "chain" / "p01.pddl").read_text(encoding="utf-8"), encoding="utf-8")
    (suite / "p02.pddl").write_text("(define (problem broken)", encoding="utf-8")
    out = tmp_path / "out.jsonl"
    written = bench_service.bench(RunConfig(seeds=[0]), suite, out)
    assert written == 2
    by_problem = {r.problem: r for r in bench_service.read_records(out)}
    assert by_problem["p01"].outcome == "plan"
    assert by_problem["p02"].outcome == "error"
    assert by_problem["p02"].error


def test_bench_records_undecodable_problem(fixtures_dir, tmp_path):
    suite = tmp_path / "chain"
    suite.mkdir()
    for name in ("domain.pddl", "p01.pddl"):
        (suite / name).write_text((fixtures_dir / "chain" / name).read_text(encoding="utf-8"), encoding="utf-8")
    (suite / "p02.pddl").write_bytes(b"(define (problem \xff\xfe p02))")
    out = tmp_path / "out.jsonl"
    assert bench_service.bench(RunConfig(seeds=[0]), suite, out) == 2
    by_problem = {r.problem: r for r in bench_service.read_records(out)}
    assert by_problem["p01"].outcome == "plan"
    assert by_problem["p02"].outcome == "error"
    assert "UTF-8" in by_problem["p02"].error


def test_bench_empty_suite(tmp_path):
    out = tmp_path / "out.jsonl"
    result = runner.invoke(app, ["bench", str(tmp_path), "--out", str(out)])
    assert result.exit_code == 0
    assert bench_service.read_records(out) == []


def test_malformed_lines_are_skipped(tmp_path):
    record = BenchRecord(
        domain="chain", problem="p01", algorithm="gbfs", heuristic="ff",
        seed=0, outcome="plan", expansions=2, plan_length=2, elapsed_ms=1,
    )
    path = tmp_path / "mixed.jsonl"
    path.write_bytes(
        bench_service.dumps_record(record)
        + b"{not json\n"
        + b'{"domain": "chain", "outcome": "plan"}\n'
        + b"\n"
        + bench_service.dumps_record(record)
    )
    assert bench_service.read_records(path) == [record, record]


def test_record_requires_plan_length_for_plan():
    with pytest.raises(ValueError):
        BenchRecord(domain="d", problem="p", algorithm="gbfs", heuristic="ff", seed=0,
                    outcome="plan", expansions=1, elapsed_ms=0)


# ─────────────────────────────────────────────
# 3. Анализ
# ─────────────────────────────────────────────
def test_histogram_cli(bench_file, tmp_path):
    out = tmp_path / "hist.csv"
    result = runner.invoke(app, ["histogram", str(bench_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out)
    assert list(table.columns) == ["threshold", "gbfs", "guct-normal2"]
    assert len(table) == 41
    assert table["threshold"].iloc[0] == pytest.approx(1.0)
    assert table["threshold"].iloc[-1] == pytest.approx(10000.0)
    for column in ("gbfs", "guct-normal2"):
        assert table[column].is_monotonic_increasing
        assert table[column].iloc[-1] == 6


def test_histogram_counts_only_fully_solved():
    def record(seed, outcome, expansions):
        return BenchRecord(
            domain="d", problem="p", algorithm="gbfs", heuristic="ff", seed=seed, outcome=outcome,
            expansions=expansions, plan_length=3 if outcome == "plan" else None, elapsed_ms=0,
        )

    table = bench_service.histogram([record(0, "plan", 10), record(1, "budget_reached", 100)], budget=100, bins=3)
    assert list(table["gbfs"]) == [0, 0, 0]
    table = bench_service.histogram([record(0, "plan", 10), record(1, "plan", 1000)], budget=1000, bins=4)
    # среднее геометрическое 10 и 1000 равно 100
    assert list(table["gbfs"]) == [0, 0, 1, 1]


def test_compare_cli(bench_file, tmp_path):
    out = tmp_path / "compare.csv"
    result = runner.invoke(app, ["compare", str(bench_file), "gbfs", "guct-normal2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out)
    assert list(table.columns) == bench_service.COMPARE_COLUMNS
    assert len(table) == 6
    assert (table["expansions_a"] >= 1).all()
    assert (table["plan_length_b"] >= 1).all()


def test_compare_unknown_algorithm(bench_file):
    result = runner.invoke(app, ["compare", str(bench_file), "gbfs", "guct-lcb"])
    assert result.exit_code == 5
    with pytest.raises(UnknownAlgorithmError):
        bench_service.compare([], "gbfs", "nope")


# ─────────────────────────────────────────────
# 4. regret / verify
# ─────────────────────────────────────────────
def test_regret_cli(tmp_path):
    curves = tmp_path / "curves.csv"
    summary = tmp_path / "summary.csv"
    result = runner.invoke(
        app,
        ["regret", "--arms", "0:1,1:1", "--policy", "ucb1", "--policy", "ucb1_normal2",
         "--horizon", "200", "--seeds", "3", "--stride", "50", "--out", str(curves), "--summary", str(summary)],
    )
    assert result.exit_code == 0, result.output
    curves_df = pd.read_csv(curves)
    assert list(curves_df.columns) == ["policy", "seed", "t", "cum_regret"]
    assert len(curves_df) == 2 * 3 * 4
    summary_df = pd.read_csv(summary)
    assert list(summary_df["policy"]) == ["ucb1(c=1)", "ucb1_normal2"]


def test_regret_cli_bad_arms():
    result = runner.invoke(app, ["regret", "--arms", "0:-1", "--horizon", "10", "--seeds", "1"])
    assert result.exit_code == 3


def test_verify_cli():
    result = runner.invoke(app, ["verify", "--sigma", "2"])
    assert result.exit_code == 0, result.output
    rows = [orjson.loads(line) for line in result.output.splitlines() if line.startswith("{")]
    assert [r["check"] for r in rows] == ["subgaussian_norm", "chi2_df2", "chi2_df2", "chi2_df2"]
    for row in rows:
        assert row["value"] == pytest.approx(row["expected"], abs=1e-6)
