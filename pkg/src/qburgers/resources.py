"""
Query-count model for the full pipeline, evaluated with every asymptotic constant set to 1.

The formulas mirror the per-oracle accounting of the algorithm: each row is the
product of the per-step cost, the overlap-estimation repetition factor
``2**((n-2) m / 2) / eps`` and, for the state-preparation rows, the ``n`` copies
of the solution register.  ``polylog(1/eps)`` is modeled as ``log(1/eps)**2``;
all logarithms are natural.  Numbers produced here are scaling indicators, not
gate counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

UNIT_CONSTANTS = "unit-constant asymptotics"

ROW_INITIAL = "initial-encoding O_psi0"
ROW_SPARSE_A = "sparse-access A"
ROW_GATES_EVOLUTION = "fundamental gates (evolution)"
ROW_SPARSE_C = "sparse-access Ctilde"
ROW_GATES_C = "fundamental gates (Ctilde)"
ROW_GATES_C2 = "fundamental gates (C2)"

ROWS = (ROW_INITIAL, ROW_SPARSE_A, ROW_GATES_EVOLUTION, ROW_SPARSE_C, ROW_GATES_C, ROW_GATES_C2)


def log_plus(x: float) -> float:
    """``max(ln x, 0)``; keeps fractional log powers real when ``x < 1``."""
    return max(math.log(x), 0.0) if x > 0 else 0.0


def polylog(inv_eps: float) -> float:
    return log_plus(inv_eps) ** 2


def block_encoding_gates(n_x: int, eps2: float) -> float:
    """Gate count of the ``(6, n_x + 3, eps2)`` block-encoding of the Laplacian."""
    return n_x + log_plus(18.0 / eps2) ** 2.5


def overlap_factor(n: int, m: int) -> float:
    """Extra precision demanded of each overlap estimate, ``2**((n-2) m / 2)``."""
    return 2.0 ** ((n - 2) * m / 2.0)


def error_budget(eps1: float, eps2: float, eps3: float, tau: float, eps4: float = 0.0) -> float:
    """Composite ratio error ``eps1 + tau eps2 + eps3 + eps4``."""
    return eps1 + tau * eps2 + eps3 + eps4


@dataclass(frozen=True)
class CostBudget:
    counts: dict
    error_bound: float
    params: dict = field(default_factory=dict)
    ancilla: float | None = None
    classical_baseline: float | None = None
    total: float | None = None
    label: str = UNIT_CONSTANTS

    @property
    def quantum_advantage(self) -> bool | None:
        if self.total is None or self.classical_baseline is None:
            return None
        return self.total < self.classical_baseline

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "params": dict(self.params),
            "counts": dict(self.counts),
            "total": self.total,
            "ancilla": self.ancilla,
            "classical_baseline": self.classical_baseline,
            "quantum_advantage": self.quantum_advantage,
            "error_bound": self.error_bound,
        }


def _check_eps(name, eps):
    if not (0 < eps < 1):
        raise DomainError(f"{name} must lie in (0, 1), got {eps!r}")


def cost_table(n: int, n_x: int, m: int, tau: float, norm_ratio: float, eps: float) -> CostBudget:
    """Per-oracle counts and the end-to-end total for one ``P^(n)/I^(n)`` estimate.

    ``eps`` is the target error with ``eps1 = eps3 = eps4 = eps`` and ``tau * eps2 = eps``.
    For ``n = 2`` the correlator is built from cyclic shifts, so the
    sparse-access rows for ``Ctilde`` are absent and the ``n_x**2 / eps`` gate row
    replaces them.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"order n must be an integer >= 2, got {n!r}")
    if int(n_x) != n_x or n_x < 1:
        raise DomainError(f"n_x must be an integer >= 1, got {n_x!r}")
    if int(m) != m or not (1 <= m <= n_x):
        raise DomainError(f"m must satisfy 1 <= m <= n_x, got m={m!r}, n_x={n_x}")
    if tau < 0:
        raise DomainError("tau must be >= 0")
    if norm_ratio < 0:
        raise DomainError("norm_ratio must be >= 0")
    _check_eps("eps", eps)

    oe = overlap_factor(n, m) / eps
    per_copy = n * norm_ratio * oe
    pl = polylog(1.0 / eps)
    gates_evo = n_x + log_plus(tau / eps) ** 2.5

    counts = {
        ROW_INITIAL: per_copy,
        ROW_SPARSE_A: per_copy * tau * pl,
        ROW_GATES_EVOLUTION: per_copy * tau * gates_evo * pl,
    }
    if n >= 3:
        counts[ROW_SPARSE_C] = oe
        counts[ROW_GATES_C] = oe * (n * n_x + log_plus(math.factorial(n) / eps) ** 2.5)
    else:
        counts[ROW_GATES_C2] = n_x**2 / eps

    total = overlap_factor(n, m) * n * norm_ratio * (tau / eps) * pl * gates_evo
    eps4 = eps if n >= 3 else 0.0
    return CostBudget(
        counts=counts,
        error_bound=error_budget(eps, eps / tau if tau > 0 else 0.0, eps, tau, eps4),
        params={"n": n, "n_x": n_x, "m": m, "tau": tau, "norm_ratio": norm_ratio, "eps": eps},
        ancilla=gates_evo,
        classical_baseline=float(4**n_x),
        total=total,
    )


@dataclass(frozen=True)
class CrossoverScan:
    rows: list
    crossover_n_x: int | None

    def column(self, key):
        return np.array([r[key] for r in self.rows])


def crossover_scan(n, m, tau, norm_ratio, eps, n_x_range) -> CrossoverScan:
    """Quantum total vs the classical ``N_x**2`` baseline over a range of ``n_x``.

    ``m=None`` disables coarse-graining (``m = n_x``).  Otherwise ``m`` is capped
    at ``n_x`` for small grids.
    """
    n_x_values = list(n_x_range)
    if not n_x_values:
        raise DomainError("n_x_range is empty")
    rows = []
    first = None
    for n_x in n_x_values:
        m_used = n_x if m is None else min(m, n_x)
        b = cost_table(n, n_x, m_used, tau, norm_ratio, eps)
        wins = b.total < b.classical_baseline
        if wins and first is None:
            first = n_x
        rows.append(
            {"n_x": n_x, "m": m_used, "quantum": b.total, "classical": b.classical_baseline, "quantum_wins": wins}
        )
    return CrossoverScan(rows=rows, crossover_n_x=first)
