"""
Лаборатория бандитов: симуляция псевдорегрета на гауссовских ручках
и численная проверка тождеств (норма суб-гауссовой величины, χ² с 2 степенями свободы).

Воспроизводимость: каждое зерно владеет своей таблицей наград
rewards[arm, k] = mu + sigma * z из numpy.random.default_rng(seed) (PCG64),
k-е вытягивание ручки берёт k-й столбец. Трасса зерна не зависит ни от
пакета, в котором она считается, ни от решений политики на других ручках.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, optimize, special

from app.errors import ContractViolation
from app.logger import get_logger
from app.models.bandit import BoundPolicy, GaussianArm, Mode, PolicyKind, PolicySummary, RegretTrace
from app.services.bandit_policies import bound_array

logger = get_logger(__name__)

DEFAULT_ALPHA = math.exp(-16.0 / 3.0)
CURVE_COLUMNS = ["policy", "seed", "t", "cum_regret"]
SUMMARY_COLUMNS = list(PolicySummary.model_fields)


def _reward_table(arms: Sequence[GaussianArm], horizon: int, seed: int) -> np.ndarray:
    mu = np.array([a.mu for a in arms])[:, None]
    sigma = np.array([a.sigma for a in arms])[:, None]
    return mu + sigma * np.random.default_rng(seed).standard_normal((len(arms), horizon))


def simulate_many(
    arms: Sequence[GaussianArm],
    policy: BoundPolicy,
    horizon: int,
    seeds: Sequence[int],
    warmup: int = 1,
) -> List[RegretTrace]:
    """
    Пакет независимых прогонов (по одному на зерно), векторизованный по зёрнам.
    Сначала каждая ручка вытягивается warmup раз по кругу, затем argmax границы
    с T = число вытягиваний до текущего шага.
    """
    k = len(arms)
    if k < 1:
        raise ContractViolation("Нужна хотя бы одна ручка")
    if warmup < 1 or horizon < k * warmup:
        raise ContractViolation(f"Горизонт {horizon} меньше разминки {k}×{warmup}")
    if policy.mode is not Mode.maximize:
        policy = policy.model_copy(update={"mode": Mode.maximize})

    seeds = list(seeds)
    s = len(seeds)
    rewards = np.stack([_reward_table(arms, horizon, seed) for seed in seeds])
    counts = np.zeros((s, k), dtype=np.int64)
    means = np.zeros((s, k))
    m2 = np.zeros((s, k))
    chosen = np.empty((s, horizon), dtype=np.int64)
    rows = np.arange(s)

    for t in range(horizon):
        if t < k * warmup:
            arm = np.full(s, t % k)
        else:
            arm = bound_array(policy, counts, means, m2, t).argmax(axis=1)
        n = counts[rows, arm]
        x = rewards[rows, arm, n]
        delta = x - means[rows, arm]
        mean = means[rows, arm] + delta / (n + 1)
        m2[rows, arm] += delta * (x - mean)
        means[rows, arm] = mean
        counts[rows, arm] = n + 1
        chosen[:, t] = arm

    mu = np.array([a.mu for a in arms])
    gaps = mu.max() - mu
    regret = np.cumsum(gaps[chosen], axis=1)
    optimal = gaps[chosen] == 0.0

    return [
        RegretTrace(
            policy=policy.tag(),
            horizon=horizon,
            seed=seed,
            cumulative_regret=regret[i].tolist(),
            pulls=counts[i].tolist(),
            optimal_fraction=float(optimal[i].mean()),
        )
        for i, seed in enumerate(seeds)
    ]


def simulate(
    arms: Sequence[GaussianArm],
    policy: BoundPolicy,
    horizon: int,
    seed: int = 0,
    warmup: int = 1,
) -> RegretTrace:
    """Один прогон; совпадает с соответствующей трассой simulate_many."""
    return simulate_many(arms, policy, horizon, [seed], warmup)[0]


def subgaussian_moment(sigma: float, t: float) -> float:
    """E[exp(x²/t²)] для x ~ N(0, σ²); inf при t² ≤ 2σ² (интеграл расходится)."""
    if t * t <= 2.0 * sigma * sigma:
        return math.inf
    # После замены x = σz подынтегральная функция - гауссиана с шириной 1/√(1 − 2σ²/t²)
    rate = 0.5 - sigma * sigma / (t * t)

    def integrand(z: float) -> float:
        return math.exp(-rate * z * z) / math.sqrt(2.0 * math.pi)

    value, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
    return value


def verify_subgaussian_norm(sigma: float, grid_points: int = 200) -> float:
    """
    Наименьшее t, при котором E[exp(x²/t²)] < 2: перебор по сетке
    от √2·σ вверх, затем уточнение brentq. Ожидается √(8/3)·σ.
    """
    if not sigma > 0:
        raise ContractViolation(f"sigma должна быть положительной, получено {sigma}")
    grid = np.geomspace(math.sqrt(2.0) * sigma * 1.001, 4.0 * sigma, grid_points)
    previous = grid[0]
    for t in grid:
        if subgaussian_moment(sigma, t) < 2.0:
            if t == grid[0]:
                return float(t)
            return float(optimize.brentq(lambda u: subgaussian_moment(sigma, u) - 2.0, previous, t, xtol=1e-14))
        previous = t
    raise ContractViolation("Пересечение с 2 не найдено на сетке")


def verify_chi2_df2(alpha: float) -> float:
    """Квантиль χ²₂ уровня 1 − α: корень 1 − exp(−x/2) = 1 − α. Ожидается −2 ln α."""
    if not 0.0 < alpha < 1.0:
        raise ContractViolation(f"alpha должна лежать в (0, 1), получено {alpha}")

    def gap(x: float) -> float:
        # CDF(x) − (1 − α), записанное без потери точности при α → 1
        return alpha - math.exp(-x / 2.0)

    upper = 1.0
    while gap(upper) <= 0.0:
        upper *= 2.0
    return float(optimize.brentq(gap, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def regret_bound_normal(sigma: float, delta: float, horizon: int) -> float:
    """Логарифмическая оценка регрета одной субоптимальной ручки UCB1-Normal."""
    if delta <= 0:
        return 0.0
    log_t = math.log(horizon)
    pulls = 256.0 * sigma * sigma * log_t / (delta * delta) + 1.0 + math.pi ** 2 / 2.0 + log_t
    return delta * pulls


def regret_bound_normal2(sigma: float, delta: float, horizon: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Полиномиальная оценка регрета одной субоптимальной ручки UCB1-Normal2, 0 < α < e⁻⁴."""
    if not 0.0 < alpha < math.exp(-4.0):
        raise ContractViolation(f"alpha должна лежать в (0, e^-4), получено {alpha}")
    if delta <= 0:
        return 0.0
    log_t = math.log(horizon)
    # C = Σ t^(3/4·ln α + 2) = ζ(−3/4·ln α − 2)
    const = float(special.zeta(-0.75 * math.log(alpha) - 2.0, 1))
    pulls = (
        -4.0 * math.log(alpha) * sigma * sigma * log_t / (delta * delta)
        + 1.0
        + 2.0 * const
        + alpha * horizon * (horizon + 1) * (2 * horizon + 1) / 3.0
    )
    return delta * pulls


def _policy_bound(arms: Sequence[GaussianArm], policy: BoundPolicy, horizon: int) -> Optional[float]:
    best = max(a.mu for a in arms)
    if policy.kind is PolicyKind.ucb1_normal:
        return sum(regret_bound_normal(a.sigma, best - a.mu, horizon) for a in arms)
    if policy.kind is PolicyKind.ucb1_normal2:
        return sum(regret_bound_normal2(a.sigma, best - a.mu, horizon) for a in arms)
    return None


def compare_policies(
    arms: Sequence[GaussianArm],
    policies: Sequence[BoundPolicy],
    horizon: int,
    seeds: Sequence[int],
    warmup: int = 1,
    stride: int = 1,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Сводка (среднее и стандартное отклонение финального регрета по зёрнам)
    и кривые регрета с шагом stride (последняя точка t = T всегда включена).
    """
    summary: List[dict] = []
    curves: List[pd.DataFrame] = []
    steps = np.arange(stride, horizon + 1, stride)
    if steps.size == 0 or steps[-1] != horizon:
        steps = np.append(steps, horizon)

    for policy in policies:
        traces = simulate_many(arms, policy, horizon, seeds, warmup)
        final = np.array([trace.final_regret for trace in traces])
        summary.append(
            PolicySummary(
                policy=policy.tag(),
                seeds=len(traces),
                horizon=horizon,
                mean_final_regret=float(final.mean()),
                std_final_regret=float(final.std(ddof=1)) if len(final) > 1 else 0.0,
                mean_optimal_fraction=float(np.mean([trace.optimal_fraction for trace in traces])),
                bound=_policy_bound(arms, policy, horizon),
            ).model_dump()
        )
        for trace in traces:
            regret = np.asarray(trace.cumulative_regret)
            curves.append(
                pd.DataFrame(
                    {"policy": trace.policy, "seed": trace.seed, "t": steps, "cum_regret": regret[steps - 1]}
                )
            )
        logger.debug(f"{policy.tag()}: средний финальный регрет {final.mean():.3f}")

    curves_df = pd.concat(curves, ignore_index=True) if curves else pd.DataFrame(columns=CURVE_COLUMNS)
    return pd.DataFrame(summary, columns=SUMMARY_COLUMNS), curves_df
