"""
Доверительные границы UCB1 / UCB1-01 / UCB1-Normal / UCB1-Normal2 и выбор ручки.
В режиме минимизации (LCB) меняется только знак члена исследования.
Логарифм везде натуральный.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.errors import ContractViolation
from app.models.bandit import BoundPolicy, Mode, PolicyKind
from app.services.running_stats import RunningStats

# (M, m) - максимум и минимум средних среди соседей
NormContext = Tuple[float, float]


@dataclass(frozen=True)
class ArmView:
    stats: RunningStats
    ctx: Optional[NormContext] = None


def normalized_mean(value: float, ctx: NormContext) -> float:
    """(μ̂ − m)/(M − m); при M = m все соседи равны и член считаем нулём."""
    upper, lower = ctx
    if upper <= lower:
        return 0.0
    return (value - lower) / (upper - lower)


def exploration(policy: BoundPolicy, stats: RunningStats, T: int) -> float:
    """Неотрицательная величина члена исследования."""
    n = stats.count
    if n < 1:
        raise ContractViolation("Граница для ручки без наблюдений")
    if T < n:
        raise ContractViolation(f"T={T} меньше числа наблюдений ручки {n}")
    kind = policy.kind
    if kind is PolicyKind.greedy:
        return 0.0
    log_t = math.log(T)
    if kind is PolicyKind.ucb1 or kind is PolicyKind.ucb1_01:
        return policy.c * math.sqrt(2.0 * log_t / n)
    if kind is PolicyKind.ucb1_normal:
        return stats.sigma_hat * math.sqrt(16.0 * log_t / n)
    # ucb1_normal2
    return stats.sigma_hat * math.sqrt(2.0 * log_t)


def bound(policy: BoundPolicy, stats: RunningStats, T: int, ctx: Optional[NormContext] = None) -> float:
    """
    Средний член ± член исследования.

    Args:
        policy: политика (вид, c, режим)
        stats: статистика ручки, n ≥ 1
        T: общее число наблюдений, T ≥ n
        ctx: (M, m) для ucb1_01
    """
    mean = stats.mean
    if policy.kind is PolicyKind.ucb1_01:
        if ctx is None:
            raise ContractViolation("ucb1_01 требует контекст нормализации (M, m)")
        mean = normalized_mean(mean, ctx)
    return mean + policy.sign * exploration(policy, stats, T)


def select(policy: BoundPolicy, arms: Sequence[ArmView], T: int) -> int:
    """argmax (maximize) / argmin (minimize) границы; ничьи - меньший индекс."""
    if not arms:
        raise ContractViolation("Пустой список ручек")
    default_ctx: Optional[NormContext] = None
    if policy.kind is PolicyKind.ucb1_01:
        means = [a.stats.mean for a in arms]
        default_ctx = (max(means), min(means))
    best = 0
    best_value = 0.0
    for i, arm in enumerate(arms):
        value = bound(policy, arm.stats, T, arm.ctx or default_ctx)
        if policy.mode is Mode.minimize:
            value = -value
        if i == 0 or value > best_value:
            best, best_value = i, value
    return best


def bound_array(policy: BoundPolicy, counts: np.ndarray, means: np.ndarray, m2: np.ndarray, T: np.ndarray) -> np.ndarray:
    """
    Векторная версия bound для пакета независимых бандитов.
    counts/means/m2 - (S, K), T - (S,) или скаляр; все counts ≥ 1.
    """
    log_t = np.log(np.asarray(T, dtype=float))
    if log_t.ndim:
        log_t = log_t[:, None]
    kind = policy.kind
    mean_term = means
    if kind is PolicyKind.ucb1_01:
        upper = means.max(axis=-1, keepdims=True)
        lower = means.min(axis=-1, keepdims=True)
        span = upper - lower
        mean_term = np.where(span > 0, (means - lower) / np.where(span > 0, span, 1.0), 0.0)
    if kind is PolicyKind.greedy:
        return mean_term.copy()
    if kind is PolicyKind.ucb1 or kind is PolicyKind.ucb1_01:
        explore = policy.c * np.sqrt(2.0 * log_t / counts)
    else:
        sigma = np.sqrt(np.where(counts > 1, m2 / np.maximum(counts - 1, 1), 0.0))
        if kind is PolicyKind.ucb1_normal:
            explore = sigma * np.sqrt(16.0 * log_t / counts)
        else:
            explore = sigma * np.sqrt(2.0 * log_t)
    return mean_term + policy.sign * explore
