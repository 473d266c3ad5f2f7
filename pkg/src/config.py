"""
Runtime settings.

Defaults live on ``Settings``; ``load_settings`` overlays the ``GPICERT_*`` environment variables.
Command-line flags are applied on top by ``src.main``.
"""

import os
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Tuple

from src.errors import DomainError

DEFAULT_OUTPUT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "output")


@dataclass(frozen=True)
class Settings:
    pairing_budget: int = 24
    sdp_tolerance: float = 1e-9
    max_iterations: int = 200
    step_fraction: float = 0.98
    max_gram_size: int = 400
    denominator_bounds: Tuple[int, ...] = (10 ** 3, 10 ** 6, 10 ** 9, 10 ** 12)
    solver_tolerances: Tuple[float, ...] = (1e-9, 1e-11)
    epsilon_floor: Fraction = Fraction(1, 10 ** 6)
    newton_polytope: bool = True
    time_budget: Optional[float] = 600.0
    workers: int = 1
    output_dir: str = DEFAULT_OUTPUT_DIR

    def with_overrides(self, **values):
        """Copy with every non-None value applied."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def _positive_int(name, raw):
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{name} must be an integer, got {raw!r}") from None
    if value < 1:
        raise DomainError(f"{name} must be positive, got {value}")
    return value


def _positive_float(name, raw):
    try:
        value = float(raw)
    except ValueError:
        raise DomainError(f"{name} must be a number, got {raw!r}") from None
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}")
    return value


def load_settings(environ=None):
    """
    Defaults overlaid with the environment.

    Args:
    environ (Mapping, optional): Defaults to ``os.environ``.

    Returns:
    Settings: The resulting settings.
    """
    environ = os.environ if environ is None else environ
    settings = Settings()
    if environ.get("GPICERT_WORKERS"):
        settings = replace(settings, workers=_positive_int("GPICERT_WORKERS", environ["GPICERT_WORKERS"]))
    if environ.get("GPICERT_OUTPUT_DIR"):
        settings = replace(settings, output_dir=environ["GPICERT_OUTPUT_DIR"])
    if environ.get("GPICERT_TIME_BUDGET"):
        settings = replace(settings, time_budget=_positive_float("GPICERT_TIME_BUDGET",
                                                                 environ["GPICERT_TIME_BUDGET"]))
    if environ.get("GPICERT_PAIRING_BUDGET"):
        settings = replace(settings, pairing_budget=_positive_int("GPICERT_PAIRING_BUDGET",
                                                                  environ["GPICERT_PAIRING_BUDGET"]))
    return settings
