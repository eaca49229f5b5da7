"""
Командная строка: run / bench / regret / verify / histogram / compare / serve.
Данные (JSONL, CSV) идут в stdout или в --out, логи - в stderr.

Коды выхода: 2 - файл не найден или неверный аргумент, 3 - синтаксис или граундинг,
4 - неподдерживаемая возможность PDDL, 5 - неизвестный алгоритм,
1 - поиск исчерпал пространство состояний.
"""
import math
from pathlib import Path
from typing import List, Optional

import orjson
import pandas as pd
import typer
from pydantic import ValidationError

from app.config import get_settings
from app.errors import GroundingError, PDDLError, UnknownAlgorithmError, UnsupportedFeatureError
from app.logger import get_logger, setup_logging
from app.models.bandit import BoundPolicy, GaussianArm, PolicyKind
from app.models.bench import RunConfig
from app.models.search import Algorithm
from app.services import bench_service, regret_lab
from app.services.heuristics import HeuristicName

settings = get_settings()
logger = get_logger(__name__)

app = typer.Typer(add_completion=False, help="GUCT планировщик и лаборатория бандитов")

EXIT_EXHAUSTED = 1
EXIT_MISSING_FILE = 2
EXIT_PARSE = 3
EXIT_UNSUPPORTED = 4
EXIT_UNKNOWN_ALGORITHM = 5


def _fail(message: str, code: int) -> typer.Exit:
    logger.error(message)
    return typer.Exit(code=code)


def _require_file(path: Path) -> Path:
    if not path.exists():
        raise _fail(f"Файл не найден: {path}", EXIT_MISSING_FILE)
    return path


def _parse_seeds(text: Optional[str]) -> List[int]:
    if not text:
        return list(settings.default_seeds)
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise typer.BadParameter(f"ожидался список целых через запятую, получено {text!r}", param_hint="--seeds")


def _run_config(**fields) -> RunConfig:
    """RunConfig из флагов; недопустимые значения - ошибка использования (код 2)."""
    try:
        return RunConfig(
            random_tiebreak=settings.random_tiebreak,
            check_backprop=settings.check_backprop,
            keep_locked_leaves=settings.keep_locked_leaves,
            **fields,
        )
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise typer.BadParameter(problems)


def _parse_algorithms(values: Optional[List[str]]) -> List[Algorithm]:
    try:
        return [Algorithm(v) for v in values] if values else [Algorithm.gbfs]
    except ValueError as e:
        raise _fail(str(e), EXIT_UNKNOWN_ALGORITHM)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _emit_csv(df: pd.DataFrame, out: Optional[Path]) -> None:
    _emit(df.to_csv(index=False), out)


@app.callback()
def main(log_level: str = typer.Option(settings.log_level, "--log-level", help="Уровень логирования")):
    setup_logging(log_level)


@app.command()
def run(
    domain: Path = typer.Argument(..., help="domain.pddl"),
    problem: Path = typer.Argument(..., help="pNN.pddl"),
    algo: Optional[List[str]] = typer.Option(None, "--algo", help="Алгоритм (можно несколько раз)"),
    heuristic: HeuristicName = typer.Option(HeuristicName.ff, "--heuristic"),
    c: float = typer.Option(settings.default_c, "--c"),
    budget: int = typer.Option(settings.default_budget, "--budget", min=1),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Список зёрен через запятую"),
    deadline_s: float = typer.Option(settings.deadline_s, "--deadline-s"),
    out: Optional[Path] = typer.Option(None, "--out", help="JSONL вместо stdout"),
):
    """Одна задача: по записи JSONL на каждое зерно."""
    _require_file(domain)
    _require_file(problem)
    config = _run_config(
        algorithms=_parse_algorithms(algo),
        heuristic=heuristic,
        c=c,
        budget=budget,
        seeds=_parse_seeds(seeds),
        deadline_s=deadline_s,
    )
    try:
        records = list(bench_service.run(config, domain, problem))
    except UnsupportedFeatureError as e:
        raise _fail(str(e), EXIT_UNSUPPORTED)
    except (PDDLError, GroundingError) as e:
        raise _fail(str(e), EXIT_PARSE)

    _emit("".join(bench_service.dumps_record(r).decode() for r in records), out)
    if any(r.outcome == "exhausted" for r in records):
        raise typer.Exit(code=EXIT_EXHAUSTED)


@app.command()
def bench(
    suite: Path = typer.Argument(..., help="Каталог задач или каталог доменов"),
    out: Path = typer.Option(..., "--out", help="JSONL с записями (дописывается)"),
    algo: Optional[List[str]] = typer.Option(None, "--algo"),
    heuristic: HeuristicName = typer.Option(HeuristicName.ff, "--heuristic"),
    c: float = typer.Option(settings.default_c, "--c"),
    budget: int = typer.Option(settings.default_budget, "--budget", min=1),
    seeds: Optional[str] = typer.Option(None, "--seeds"),
    deadline_s: float = typer.Option(settings.deadline_s, "--deadline-s"),
    jobs: int = typer.Option(settings.jobs, "--jobs", min=1),
):
    """Все задачи × алгоритмы × зёрна; уже записанные пропускаются."""
    _require_file(suite)
    config = _run_config(
        algorithms=_parse_algorithms(algo),
        heuristic=heuristic,
        c=c,
        budget=budget,
        seeds=_parse_seeds(seeds),
        deadline_s=deadline_s,
        jobs=jobs,
    )
    written = bench_service.bench(config, suite, out)
    logger.info(f"Записано {written} записей в {out}")


@app.command()
def regret(
    arms: str = typer.Option("0:1,1:1", "--arms", help="Ручки mu:sigma через запятую"),
    policy: Optional[List[PolicyKind]] = typer.Option(None, "--policy"),
    c: float = typer.Option(settings.default_c, "--c"),
    horizon: int = typer.Option(10000, "--horizon", min=1),
    seeds: int = typer.Option(100, "--seeds", min=1, help="Число зёрен 0..N-1"),
    warmup: int = typer.Option(2, "--warmup", min=1),
    stride: int = typer.Option(1, "--stride", min=1, help="Шаг по t в кривых"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV кривых: policy, seed, t, cum_regret"),
    summary: Optional[Path] = typer.Option(None, "--summary", help="CSV сводки по политикам"),
):
    """Симуляция регрета на гауссовских ручках."""
    kinds = policy or [PolicyKind.ucb1, PolicyKind.ucb1_normal, PolicyKind.ucb1_normal2]
    policies = [BoundPolicy(kind=k, c=c) for k in kinds]
    try:
        parsed_arms = [GaussianArm.parse(a) for a in arms.split(",") if a.strip()]
        table, curves = regret_lab.compare_policies(parsed_arms, policies, horizon, range(seeds), warmup, stride)
    except ValueError as e:
        raise _fail(str(e), EXIT_PARSE)
    _emit_csv(curves, out)
    if summary is not None:
        _emit_csv(table, summary)
    for row in table.itertuples():
        logger.info(f"{row.policy}: регрет {row.mean_final_regret:.2f} ± {row.std_final_regret:.2f}")


@app.command()
def verify(sigma: float = typer.Option(1.0, "--sigma")):
    """Численная проверка тождеств: норма суб-гауссовой величины и квантиль χ²₂."""
    rows = [
        {
            "check": "subgaussian_norm",
            "input": sigma,
            "value": regret_lab.verify_subgaussian_norm(sigma),
            "expected": math.sqrt(8.0 / 3.0) * sigma,
        }
    ]
    for alpha in (0.5, 0.05, math.exp(-2.0)):
        rows.append(
            {
                "check": "chi2_df2",
                "input": alpha,
                "value": regret_lab.verify_chi2_df2(alpha),
                "expected": -2.0 * math.log(alpha),
            }
        )
    _emit("".join(orjson.dumps(r).decode() + "\n" for r in rows), None)


@app.command()
def histogram(
    records: Path = typer.Argument(..., help="JSONL записи bench"),
    budget: int = typer.Option(settings.default_budget, "--budget", min=1),
    bins: int = typer.Option(settings.histogram_bins, "--bins", min=2),
    heuristic: Optional[str] = typer.Option(None, "--heuristic"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Кумулятивная гистограмма решённых задач по порогам раскрытий."""
    _require_file(records)
    table = bench_service.histogram(bench_service.iter_records(records), budget, bins, heuristic)
    _emit_csv(table, out)


@app.command()
def compare(
    records: Path = typer.Argument(...),
    algo_a: str = typer.Argument(...),
    algo_b: str = typer.Argument(...),
    heuristic: Optional[str] = typer.Option(None, "--heuristic"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Задачи, решённые обоими алгоритмами."""
    _require_file(records)
    try:
        table = bench_service.compare(bench_service.iter_records(records), algo_a, algo_b, heuristic)
    except UnknownAlgorithmError as e:
        raise _fail(str(e), EXIT_UNKNOWN_ALGORITHM)
    _emit_csv(table, out)


@app.command()
def serve(
    host: str = typer.Option("127.0.0.1", "--host"),
    port: int = typer.Option(8000, "--port"),
):
    """HTTP API (uvicorn)."""
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port, log_level=settings.log_level.lower())


if __name__ == "__main__":
    app()
