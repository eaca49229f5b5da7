"""
Конфигурация приложения - читает переменные окружения (префикс PLANNER_) и .env файл.
"""
from pydantic_settings import BaseSettings
from functools import lru_cache
from typing import List


class Settings(BaseSettings):
    # Приложение
    app_name: str = "GUCT Planner API"
    app_version: str = "1.0.0"
    log_level: str = "INFO"

    # Протокол экспериментов: бюджет раскрытий, коэффициент c, сиды
    default_budget: int = 10000
    default_c: float = 1.0
    default_seeds: List[int] = [0, 1, 2, 3, 4]

    # Ограничение времени на одну задачу в секундах (15 минут)
    deadline_s: float = 900.0

    # Количество воркеров для bench
    jobs: int = 1

    # Количество порогов в кумулятивной гистограмме
    histogram_bins: int = 41

    # Отладка: сверять статистику дерева с пересчётом с нуля после каждой итерации
    check_backprop: bool = False

    # Оставлять заблокированные листья в L(n) (для экспериментов)
    keep_locked_leaves: bool = False

    # Случайный tie-break вместо порядка вставки
    random_tiebreak: bool = False

    class Config:
        env_prefix = "PLANNER_"
        env_file = ".env"
        env_file_encoding = "utf-8"


@lru_cache()
def get_settings() -> Settings:
    """Кешированный экземпляр настроек - создаётся один раз."""
    return Settings()
