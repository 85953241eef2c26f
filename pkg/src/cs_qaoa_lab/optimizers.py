"""Derivative-free minimization: Powell (continuous) and simulated annealing (binary)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowellConfig:
    ftol: float = 1e-3
    xtol: float = 1e-4
    max_iter: int = 1000

    def __post_init__(self) -> None:
        if self.ftol <= 0:
            raise ValueError(f"ftol must be positive, got {self.ftol}")
        if self.xtol <= 0:
            raise ValueError(f"xtol must be positive, got {self.xtol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class SaConfig:
    """Geometric cooling T_t = T_i (T_f / T_i)^(t / (n_loop - 1))."""

    n_loop: int = 1000
    t_initial: float = 1.0
    t_final: float = 1e-3

    def __post_init__(self) -> None:
        if self.n_loop < 1:
            raise ValueError(f"n_loop must be >= 1, got {self.n_loop}")
        if not self.t_initial >= self.t_final > 0:
            raise ValueError(f"Temperatures need T_i >= T_f > 0, got T_i={self.t_initial}, T_f={self.t_final}")

    def temperatures(self) -> NDArray[np.float64]:
        if self.n_loop == 1:
            return np.array([self.t_initial])
        ratio = self.t_final / self.t_initial
        return self.t_initial * ratio ** (np.arange(self.n_loop) / (self.n_loop - 1))


@dataclass
class OptimizeResult:
    x: NDArray
    fun: float
    n_evaluations: int
    trace: list[float] = field(default_factory=list)


def powell_minimize(
    f: Callable[[NDArray[np.float64]], float],
    x0: Sequence[float] | NDArray[np.float64],
    config: PowellConfig | None = None,
) -> OptimizeResult:
    """Powell's conjugate-direction method with Brent line searches.

    Returns the best point evaluated; ``x0`` is kept unless something
    strictly better was found. A non-finite objective value aborts.
    """
    config = config or PowellConfig()
    start = np.asarray(x0, dtype=np.float64)
    best_x = start.copy()
    best_f = math.inf
    trace: list[float] = []

    def objective(x: NDArray[np.float64]) -> float:
        nonlocal best_x, best_f
        value = float(f(x))
        if not math.isfinite(value):
            raise ValueError(f"Objective returned non-finite value {value} at {np.array2string(x, precision=4)}")
        trace.append(value)
        if value < best_f:
            best_f, best_x = value, np.array(x, dtype=np.float64)
        return value

    f0 = objective(start)
    if start.size == 0:
        return OptimizeResult(start, f0, 1, trace)
    minimize(
        objective,
        start,
        method="Powell",
        options={"ftol": config.ftol, "xtol": config.xtol, "maxiter": config.max_iter},
    )
    if not best_f < f0:
        best_x, best_f = start, f0
    return OptimizeResult(best_x, best_f, len(trace), trace)


def anneal_binary(
    f: Callable[[NDArray[np.int8]], float],
    n_bits: int,
    config: SaConfig,
    rng: np.random.Generator,
    x0: Sequence[int] | NDArray | None = None,
) -> OptimizeResult:
    """Single-bit-flip Metropolis annealing, sweeping every position once per outer loop."""
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    bits = (
        rng.integers(0, 2, size=n_bits).astype(np.int8)
        if x0 is None
        else np.asarray(x0, dtype=np.int8).copy()
    )
    if bits.shape != (n_bits,):
        raise ValueError(f"Initial bitstring has {bits.size} entries, expected {n_bits}")

    current = float(f(bits))
    best_bits, best_f = bits.copy(), current
    evaluations = 1
    trace = [current]
    for temperature in config.temperatures():
        for position in range(n_bits):
            bits[position] ^= 1
            candidate = float(f(bits))
            evaluations += 1
            delta = candidate - current
            if delta <= 0.0 or rng.random() < math.exp(-delta / temperature):
                current = candidate
                if current < best_f:
                    best_bits, best_f = bits.copy(), current
            else:
                bits[position] ^= 1
        trace.append(current)
    logger.debug("Annealing finished after %d evaluations, best %.6g", evaluations, best_f)
    return OptimizeResult(best_bits, best_f, evaluations, trace)
