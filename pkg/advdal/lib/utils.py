"""
Shared utility functions for advdal.

This module provides helpers used across the engine, strategies and
commands: option resolution, seed derivation and ordered worker fan-out.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def resolve_config_value(
    args: Any,
    config_manager: Any,
    arg_name: str,
    config_key: str,
    default_value: Optional[str] = None,
) -> Optional[str]:
    """Resolve configuration value with precedence: args > config > default.

    Parameters
    ----------
    args : Any
        Argument namespace from argparse
    config_manager : Any
        Configuration manager instance
    arg_name : str
        Name of the argument attribute
    config_key : str
        Configuration key to look up
    default_value : Optional[str]
        Default value if not found elsewhere

    Returns
    -------
    Optional[str]
        Resolved configuration value
    """
    arg_value = getattr(args, arg_name, None)
    if arg_value is not None:
        return str(arg_value)

    config_value = config_manager.get(config_key)
    if config_value is not None:
        return config_value

    return default_value


def resolve_workers(workers: int) -> int:
    """``0`` means one worker per available CPU."""
    if workers > 0:
        return workers
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply ``func`` to every item, returning results in input order.

    With ``workers <= 1`` the work runs inline; otherwise it is spread over a
    thread pool. Results are merged by position, so output never depends on
    the worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(func, items))
