"""Shared numeric plumbing: tolerances, compensated sums, parallel map.

All heavy lifting is vectorized numpy; the helpers here are the small
glue pieces used across modules.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EvalTolerance",
    "kahan_sum",
    "csum",
    "parallel_map",
    "EULER_GAMMA",
]

EULER_GAMMA = 0.5772156649015328606065120900824024

# environment knob for thread count; modules delegate through parallel_map
_THREADS_ENV = "EISENLAB_THREADS"


@dataclass(frozen=True)
class EvalTolerance:
    """Accuracy request for an iterative kernel.

    abs_tol / rel_tol: at least one must be positive; a result is accepted
    when err <= abs_tol or err <= rel_tol * scale.
    max_work: budget of refinement steps (panels, terms, ...).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_work: int = 20000

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one of abs_tol, rel_tol must be positive")
        if self.max_work <= 0:
            raise ValueError("max_work must be positive")

    def target(self, scale: float) -> float:
        """Acceptance threshold for a result of magnitude `scale`."""
        return max(self.abs_tol, self.rel_tol * abs(scale))

    def met(self, err: float, scale: float) -> bool:
        return err <= self.target(scale)

    def tighter(self, factor: float) -> "EvalTolerance":
        return EvalTolerance(self.abs_tol * factor, self.rel_tol * factor, self.max_work)


def kahan_sum(values) -> complex:
    """Compensated (Kahan) sum of an iterable of floats/complex.

    Used where term cancellation matters; for plain numpy arrays the
    exact fsum of real and imaginary parts is used instead.
    """
    s = 0.0 + 0.0j
    c = 0.0 + 0.0j
    for v in values:
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
    return s


def csum(arr: np.ndarray) -> complex:
    """Exactly-rounded sum of a numpy array via math.fsum on each component."""
    a = np.asarray(arr)
    if np.iscomplexobj(a):
        return complex(math.fsum(a.real.ravel()), math.fsum(a.imag.ravel()))
    return complex(math.fsum(a.ravel()), 0.0)


def thread_count() -> int:
    raw = os.environ.get(_THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def parallel_map(fn, items):
    """Map with optional thread pool (EISENLAB_THREADS), deterministic order.

    Results are always collected in input order so reductions downstream
    are bit-stable regardless of scheduling.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
