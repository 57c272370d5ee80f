"""
Discrete heat evolution ``d f / d tau = A f`` with the second-order Laplacian stencil.

On a periodic grid ``A`` is circulant with eigenvalues ``-2 + 2 cos(2 pi k / N_x)``,
so ``exp(A tau)`` is applied by FFT diagonalization.  Dirichlet grids fall back
to a dense matrix exponential.  ``block_encode`` builds the minimal one-ancilla
unitary dilation of ``A / 6`` as an exact stand-in for a sparse-oracle
block-encoding.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalGuardError
from .fields import GridSpec, PsiDerivField, PsiField
from .resources import CostBudget, block_encoding_gates, error_budget, polylog

DENSE_LIMIT = 1 << 12
DILATION_LIMIT = 1 << 10
VANISHING_NORM = 1e-30
ALPHA = 6.0


@dataclass(frozen=True)
class LaplacianMatrix:
    grid: GridSpec

    @property
    def N(self) -> int:
        return self.grid.N_x

    def matvec(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if self.grid.periodic:
            return np.roll(f, 1) - 2.0 * f + np.roll(f, -1)
        out = -2.0 * f
        out[1:] += f[:-1]
        out[:-1] += f[1:]
        return out

    def dense(self) -> np.ndarray:
        if self.N > DENSE_LIMIT:
            raise DomainError(f"dense form limited to N_x <= {DENSE_LIMIT}")
        N = self.N
        A = -2.0 * np.eye(N)
        idx = np.arange(N)
        if self.grid.periodic:
            # np.add.at accumulates, so N=2 gets both neighbour terms on one entry
            np.add.at(A, (idx, (idx + 1) % N), 1.0)
            np.add.at(A, (idx, (idx - 1) % N), 1.0)
        else:
            A[idx[:-1], idx[:-1] + 1] = 1.0
            A[idx[1:], idx[1:] - 1] = 1.0
        return A

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues ordered by Fourier index (periodic) or ascending (Dirichlet)."""
        N = self.N
        if self.grid.periodic:
            return -2.0 + 2.0 * np.cos(2.0 * np.pi * np.arange(N) / N)
        k = np.arange(1, N + 1)
        return np.sort(-2.0 + 2.0 * np.cos(np.pi * k / (N + 1)))

    def spectral_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues())))


def build_laplacian(g: GridSpec) -> LaplacianMatrix:
    return LaplacianMatrix(g)


def _check_tau(tau):
    if not (np.isfinite(tau) and tau >= 0):
        raise DomainError(f"tau must be finite and >= 0, got {tau!r}")


def heat_evolve(values: np.ndarray, tau: float, g: GridSpec) -> np.ndarray:
    """``exp(A tau) @ values`` for a real or complex grid vector."""
    _check_tau(tau)
    values = np.asarray(values)
    if tau == 0:
        return values.copy()
    A = build_laplacian(g)
    if g.periodic:
        decay = np.exp(A.eigenvalues() * tau)
        out = np.fft.ifft(np.fft.fft(values) * decay)
        return out.real if np.isrealobj(values) else out
    return scipy.linalg.expm(A.dense() * tau) @ values


def propagate(dpsi: PsiDerivField, tau: float) -> PsiDerivField:
    return PsiDerivField(dpsi.grid, heat_evolve(dpsi.values, tau, dpsi.grid))


def propagate_psi(psi: PsiField, tau: float) -> PsiField:
    """Evolve ``psi`` itself; the derivative commutes with the periodic stencil."""
    return PsiField(psi.grid, heat_evolve(psi.values, tau, psi.grid))


def norm_ratio(dpsi0: PsiDerivField | PsiField, tau: float) -> float:
    """``||f(0)|| / ||exp(A tau) f(0)||``, the amplification paid by the ODE solver."""
    f0 = dpsi0.values
    ft = heat_evolve(f0, tau, dpsi0.grid)
    n_t = float(np.linalg.norm(ft))
    if n_t < VANISHING_NORM:
        raise NumericalGuardError(f"evolved norm {n_t:.3e} has decayed below {VANISHING_NORM:g}")
    return float(np.linalg.norm(f0)) / n_t


@dataclass(frozen=True)
class UnitaryDilation:
    matrix: np.ndarray = field(repr=False)
    alpha: float
    ancilla_count: int
    epsilon2: float = 0.0

    @property
    def N(self) -> int:
        return self.matrix.shape[0] // 2

    def block(self) -> np.ndarray:
        """Top-left ``N x N`` block, i.e. ``A / alpha``."""
        return self.matrix[: self.N, : self.N]

    def unitarity_defect(self) -> float:
        U = self.matrix
        return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def block_encode(A: LaplacianMatrix, epsilon2: float = 0.0) -> UnitaryDilation:
    """Dilation ``[[B, S], [S, -B]]`` with ``B = A/6`` and ``S = sqrt(1 - B^2)``.

    ``B`` and ``S`` commute, so the result is exactly unitary up to round-off.
    ``ancilla_count`` records the ``n_x + 3`` ancillas of a sparse-access
    construction; the dilation itself uses one.
    """
    if A.N > DILATION_LIMIT:
        raise DomainError(f"dense dilation limited to N_x <= {DILATION_LIMIT}")
    B = A.dense() / ALPHA
    w, V = np.linalg.eigh(B)
    S = (V * np.sqrt(np.clip(1.0 - w**2, 0.0, None))) @ V.T
    S = 0.5 * (S + S.T)
    U = np.block([[B, S], [S, -B]])
    U.flags.writeable = False
    return UnitaryDilation(matrix=U, alpha=ALPHA, ancilla_count=A.grid.n_x + 3, epsilon2=epsilon2)


EVO_UA = "U_A queries"
EVO_OPSI = "O_psi0 queries"
EVO_GATES = "block-encoding gates"


def cost_of_evolution(norm_ratio: float, tau: float, eps1: float, eps2: float, n_x: int) -> CostBudget:
    """Query counts for preparing ``|d psi(tau)>`` once, with unit constants."""
    for name, e in (("eps1", eps1), ("eps2", eps2)):
        if not (0 < e < 1):
            raise DomainError(f"{name} must lie in (0, 1), got {e!r}")
    _check_tau(tau)
    counts = {
        EVO_UA: norm_ratio * tau * polylog(1.0 / eps1),
        EVO_OPSI: norm_ratio,
        EVO_GATES: block_encoding_gates(n_x, eps2),
    }
    return CostBudget(
        counts=counts,
        error_bound=error_budget(eps1, eps2, 0.0, tau),
        params={"norm_ratio": norm_ratio, "tau": tau, "eps1": eps1, "eps2": eps2, "n_x": n_x},
    )
