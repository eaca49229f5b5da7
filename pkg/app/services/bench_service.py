"""
Бенчмарк: запуск поиска по задачам и зёрнам, JSONL записи, анализ в CSV
(кумулятивная гистограмма решённых задач и сравнение двух алгоритмов).
"""
import time
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

import numpy as np
import orjson
import pandas as pd
from joblib import Parallel, delayed
from pydantic import ValidationError

from app.errors import PDDLSyntaxError, PlannerError, UnknownAlgorithmError
from app.logger import get_logger
from app.models.bandit import BoundPolicy
from app.models.bench import BenchRecord, RecordKey, RunConfig
from app.models.search import Algorithm, SearchResult
from app.models.task import GroundTask
from app.services.gbfs import gbfs_queue
from app.services.grounding import ground
from app.services.heuristics import get_heuristic
from app.services.mcts import mcts
from app.services.pddl_parser import parse_domain, parse_problem

logger = get_logger(__name__)

COMPARE_COLUMNS = ["domain", "problem", "expansions_a", "expansions_b", "plan_length_a", "plan_length_b"]
# Допуск сравнения с порогом: узлы geomspace не попадают в степени десяти точно
THRESHOLD_TOLERANCE = 1e-9

Instance = Tuple[Path, Path]


def _read_pddl(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise PDDLSyntaxError(f"{path}: файл не в UTF-8 (байт {e.start})") from e


def load_task(domain_path: Path, problem_path: Path) -> GroundTask:
    """Чтение (UTF-8), разбор и граундинг пары файлов."""
    return ground(parse_domain(_read_pddl(domain_path)), parse_problem(_read_pddl(problem_path)))


def run_search(task: GroundTask, algorithm: Algorithm, config: RunConfig, seed: int) -> SearchResult:
    """Запуск одного алгоритма по идентификатору."""
    heuristic = get_heuristic(config.heuristic.value)
    if algorithm is Algorithm.gbfs:
        return gbfs_queue(
            task,
            heuristic,
            config.budget,
            seed,
            deadline_s=config.deadline_s,
            random_tiebreak=config.random_tiebreak,
        )
    policy = BoundPolicy(kind=algorithm.policy_kind, c=config.c).minimizing()
    return mcts(
        task,
        heuristic,
        policy,
        config.budget,
        seed,
        variant=algorithm.variant,
        deadline_s=config.deadline_s,
        random_tiebreak=config.random_tiebreak,
        check=config.check_backprop,
        keep_locked=config.keep_locked_leaves,
    )


def _record(instance: Instance, algorithm: Algorithm, config: RunConfig, seed: int, **fields) -> BenchRecord:
    domain_path, problem_path = instance
    return BenchRecord(
        domain=domain_path.parent.name,
        problem=problem_path.stem,
        algorithm=algorithm.value,
        heuristic=config.heuristic.value,
        c=config.c_for(algorithm),
        seed=seed,
        **fields,
    )


def _result_record(instance: Instance, algorithm: Algorithm, config: RunConfig, seed: int, result: SearchResult) -> BenchRecord:
    return _record(
        instance,
        algorithm,
        config,
        seed,
        outcome=result.outcome.value,
        expansions=result.expansions,
        plan_length=result.plan_length,
        elapsed_ms=int(result.wall_notes.get("elapsed_ms", 0)),
    )


def run(config: RunConfig, domain_path: Path, problem_path: Path) -> Iterator[BenchRecord]:
    """
    Одна задача, каждый алгоритм конфигурации, по записи на зерно.
    Ошибки разбора и граундинга пробрасываются вызывающему (CLI решает код выхода).
    """
    instance = (Path(domain_path), Path(problem_path))
    task = load_task(*instance)
    for algorithm in config.algorithms:
        for seed in config.seeds:
            yield _result_record(instance, algorithm, config, seed, run_search(task, algorithm, config, seed))


def _bench_job(instance: Instance, algorithm: Algorithm, config: RunConfig, seeds: List[int]) -> List[BenchRecord]:
    """Работа воркера: все недостающие зёрна одной пары (задача, алгоритм)."""
    started = time.perf_counter()
    try:
        task = load_task(*instance)
    except PlannerError as e:
        logger.warning(f"{instance[1]}: {e}")
        elapsed = int((time.perf_counter() - started) * 1000)
        return [
            _record(instance, algorithm, config, seed, outcome="error", expansions=0, elapsed_ms=elapsed, error=str(e))
            for seed in seeds
        ]
    return [_result_record(instance, algorithm, config, seed, run_search(task, algorithm, config, seed)) for seed in seeds]


def discover_suite(suite: Path) -> List[Instance]:
    """
    Пары (domain.pddl, p*.pddl): либо каталог одного домена,
    либо каталог каталогов доменов.
    """
    suite = Path(suite)
    if not suite.is_dir():
        raise FileNotFoundError(suite)
    domain_dirs = [suite] if (suite / "domain.pddl").exists() else sorted(p for p in suite.iterdir() if p.is_dir())
    instances = []
    for directory in domain_dirs:
        domain_file = directory / "domain.pddl"
        if not domain_file.exists():
            continue
        instances.extend((domain_file, problem) for problem in sorted(directory.glob("p*.pddl")))
    return instances


def dumps_record(record: BenchRecord) -> bytes:
    return orjson.dumps(record.model_dump(mode="json")) + b"\n"


def iter_records(path: Path) -> Iterator[BenchRecord]:
    """Записи JSONL; испорченные строки пропускаются с предупреждением."""
    with Path(path).open("rb") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield BenchRecord.model_validate(orjson.loads(line))
            except (orjson.JSONDecodeError, ValidationError) as e:
                logger.warning(f"{path}:{number}: пропускаю запись ({e.__class__.__name__})")


def read_records(path: Path) -> List[BenchRecord]:
    return list(iter_records(path))


def bench(config: RunConfig, suite: Path, out_path: Path) -> int:
    """
    Все задачи × алгоритмы × зёрна в JSONL out_path. Уже записанные ключи
    пропускаются, ошибки отдельных задач записываются, а не прерывают прогон.
    Возвращает число новых записей.
    """
    out_path = Path(out_path)
    done: Set[RecordKey] = set()
    if out_path.exists():
        done = {r.key for r in iter_records(out_path)}

    jobs = []
    for instance in discover_suite(suite):
        for algorithm in config.algorithms:
            template = _record(instance, algorithm, config, 0, outcome="exhausted", expansions=0, elapsed_ms=0)
            missing = [s for s in config.seeds if template.key[:5] + (s,) not in done]
            if missing:
                jobs.append((instance, algorithm, missing))
    logger.info(f"bench: {len(jobs)} заданий, {len(done)} записей уже есть")

    written = 0
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("ab") as f:
        results = Parallel(n_jobs=config.jobs, return_as="generator_unordered")(
            delayed(_bench_job)(instance, algorithm, config, seeds) for instance, algorithm, seeds in jobs
        )
        for records in results:
            for record in records:
                f.write(dumps_record(record))
                written += 1
            f.flush()
    return written


def _instance_table(records: Iterable[BenchRecord], heuristic: Optional[str]) -> pd.DataFrame:
    """
    Агрегация по (algorithm, domain, problem): задача решена, если решены все
    зёрна; число раскрытий - среднее геометрическое max(expansions, 1).
    """
    rows = [r.model_dump() for r in records if heuristic is None or r.heuristic == heuristic]
    columns = ["algorithm", "domain", "problem", "solved", "expansions", "plan_length"]
    if not rows:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame(rows)
    df["solved"] = df["outcome"] == "plan"
    df["plan_length"] = pd.to_numeric(df["plan_length"], errors="coerce")
    df["log_expansions"] = np.log(df["expansions"].clip(lower=1))
    grouped = df.groupby(["algorithm", "domain", "problem"], sort=True).agg(
        solved=("solved", "all"),
        log_expansions=("log_expansions", "mean"),
        plan_length=("plan_length", "mean"),
    )
    grouped["expansions"] = np.exp(grouped["log_expansions"])
    return grouped.reset_index()[columns]


def histogram(
    records: Iterable[BenchRecord],
    budget: int = 10000,
    bins: int = 41,
    heuristic: Optional[str] = None,
) -> pd.DataFrame:
    """
    Кумулятивная гистограмма: для порогов geomspace(1, budget) - число задач,
    решённых алгоритмом не более чем за порог раскрытий. Колонки: threshold + алгоритмы.
    """
    table = _instance_table(records, heuristic)
    thresholds = np.geomspace(1, budget, bins)
    result: Dict[str, np.ndarray] = {"threshold": thresholds}
    for algorithm in sorted(table["algorithm"].unique()):
        solved = table[(table["algorithm"] == algorithm) & table["solved"]]["expansions"].to_numpy()
        values = np.sort(solved)
        result[algorithm] = np.searchsorted(values, thresholds * (1 + THRESHOLD_TOLERANCE), side="right")
    return pd.DataFrame(result)


def compare(
    records: Iterable[BenchRecord],
    algo_a: str,
    algo_b: str,
    heuristic: Optional[str] = None,
) -> pd.DataFrame:
    """Задачи, решённые обоими алгоритмами: раскрытия и длины планов для диаграммы рассеяния."""
    for algo in (algo_a, algo_b):
        try:
            Algorithm(algo)
        except ValueError:
            raise UnknownAlgorithmError(f"Неизвестный алгоритм: {algo}")
    table = _instance_table(records, heuristic)
    table = table[table["solved"]]
    keys = ["domain", "problem"]
    left = table[table["algorithm"] == algo_a][keys + ["expansions", "plan_length"]]
    right = table[table["algorithm"] == algo_b][keys + ["expansions", "plan_length"]]
    joined = left.merge(right, on=keys, how="inner", suffixes=("_a", "_b"))
    return joined[COMPARE_COLUMNS].sort_values(keys).reset_index(drop=True)
