"""
Grid functions and the Cole-Hopf map between velocity ``u`` and the heat field ``psi``.

All fields live on a uniform grid of ``N_x = 2**n_x`` points ``x_j = j * dx`` on
``[0, L)``.  Field objects are frozen dataclasses holding read-only numpy arrays,
so they can be shared freely between threads and ensemble members.

The two initial-condition families used throughout the package are built here:

* ``make_random_ic``: ``psi = exp(xi_0 + sum_j xi_j cos(2 pi j x/L) + xi_{jmax+j} sin(2 pi j x/L))``
  with i.i.d. normal ``xi``.
* ``make_plane_wave_ic``: ``psi = 1 + delta_m sin(2 pi m x / L)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivisionHazardError, DomainError, InvalidFieldError, UnsupportedBoundaryError

PERIODIC = "periodic"
DIRICHLET = "dirichlet"
_BCS = (PERIODIC, DIRICHLET)

# |psi_j| below this is treated as a zero denominator
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    n_x: int
    L: float = 1.0
    bc: str = PERIODIC

    def __post_init__(self):
        if int(self.n_x) != self.n_x or self.n_x < 1:
            raise DomainError(f"n_x must be an integer >= 1, got {self.n_x!r}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise DomainError(f"L must be positive and finite, got {self.L!r}")
        if self.bc not in _BCS:
            raise DomainError(f"bc must be one of {_BCS}, got {self.bc!r}")
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "L", float(self.L))

    @property
    def N_x(self) -> int:
        return 1 << self.n_x

    @property
    def dx(self) -> float:
        # division by a power of two is exact, so dx * N_x == L
        return self.L / self.N_x

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N_x) * self.dx

    @property
    def periodic(self) -> bool:
        return self.bc == PERIODIC

    def require_periodic(self, what: str = "operation"):
        if not self.periodic:
            raise UnsupportedBoundaryError(f"{what} requires a periodic grid, got bc={self.bc!r}")


@dataclass(frozen=True)
class PhysicsParams:
    """Viscosity ``nu`` and normalized time ``tau = nu t / dx**2``."""

    nu: float
    tau: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise DomainError(f"nu must be positive, got {self.nu!r}")
        if not (np.isfinite(self.tau) and self.tau >= 0):
            raise DomainError(f"tau must be non-negative, got {self.tau!r}")

    def time(self, grid: GridSpec) -> float:
        """Physical time ``t`` corresponding to ``tau`` on ``grid``."""
        return self.tau * grid.dx**2 / self.nu

    @classmethod
    def from_time(cls, nu: float, t: float, grid: GridSpec) -> "PhysicsParams":
        return cls(nu=nu, tau=nu * t / grid.dx**2)


def _frozen_values(grid: GridSpec, values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (grid.N_x,):
        raise InvalidFieldError(f"expected {grid.N_x} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise InvalidFieldError(f"non-finite value at index {bad}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class _GridField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_values(self.grid, self.values))

    def __len__(self):
        return self.grid.N_x


class VelocityField(_GridField):
    """Velocity samples ``u_j``."""

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))


class PsiField(_GridField):
    """Cole-Hopf field samples ``psi_j``."""

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def fluctuation(self) -> np.ndarray:
        return self.values - self.mean


class PsiDerivField(_GridField):
    """Samples of ``d psi / dx``; ``raw_norm`` is the Euclidean norm used for amplitude encoding."""

    @property
    def raw_norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class RandomIC:
    sigma_xi: float
    j_max: int
    seed: int = 0

    def __post_init__(self):
        if self.sigma_xi < 0:
            raise DomainError("sigma_xi must be >= 0")
        if int(self.j_max) != self.j_max or self.j_max < 1:
            raise DomainError("j_max must be an integer >= 1")

    def draw(self) -> np.ndarray:
        """The ``2 j_max + 1`` coefficients ``xi_0 .. xi_{2 j_max}``."""
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.sigma_xi, size=2 * self.j_max + 1)


@dataclass(frozen=True)
class PlaneWaveIC:
    delta_m: float
    m: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError("mode number m must be a positive integer")


def derivative(psi: PsiField) -> PsiDerivField:
    """Second-order central difference ``(psi_{j+1} - psi_{j-1}) / (2 dx)``.

    The periodic wrap makes the output sum telescope to zero.  On a Dirichlet
    grid the missing neighbours are taken as zero.
    """
    g = psi.grid
    v = psi.values
    if g.periodic:
        d = np.roll(v, -1) - np.roll(v, 1)
    else:
        padded = np.concatenate(([0.0], v, [0.0]))
        d = padded[2:] - padded[:-2]
    return PsiDerivField(g, d / (2.0 * g.dx))


def cole_hopf_forward(u: VelocityField, p: PhysicsParams) -> PsiField:
    """``psi_j = exp(-(dx / 2 nu) sum_{k<j} u_k)`` with ``psi_0 = 1``."""
    g = u.grid
    g.require_periodic("cole_hopf_forward")
    partial = np.concatenate(([0.0], np.cumsum(u.values)[:-1]))
    return PsiField(g, np.exp(-(g.dx / (2.0 * p.nu)) * partial))


def cole_hopf_inverse_exact(psi: PsiField, p: PhysicsParams) -> VelocityField:
    """``u_j = -2 nu (d psi)_j / psi_j`` with the central-difference derivative."""
    small = np.abs(psi.values) < ZERO_TOL
    if np.any(small):
        j = int(np.flatnonzero(small)[0])
        raise DivisionHazardError(j, float(psi.values[j]))
    dpsi = derivative(psi).values
    return VelocityField(psi.grid, -2.0 * p.nu * dpsi / psi.values)


PREFACTORS = {"2nu": 2.0, "nu": 1.0}


def cole_hopf_inverse_approx(
    dpsi: PsiDerivField, psi_bar: float, p: PhysicsParams, prefactor: str = "2nu"
) -> VelocityField:
    """Linearized inversion ``u_j = -c nu (d psi)_j / psi_bar``.

    ``prefactor="2nu"`` (default) keeps the constant of the exact relation;
    ``prefactor="nu"`` uses ``c = 1``.  Ratios of moments do not depend on the choice.
    """
    if prefactor not in PREFACTORS:
        raise DomainError(f"prefactor must be one of {tuple(PREFACTORS)}, got {prefactor!r}")
    if psi_bar == 0 or not np.isfinite(psi_bar):
        raise DomainError(f"invalid baseline psi_bar={psi_bar!r}")
    c = PREFACTORS[prefactor]
    return VelocityField(dpsi.grid, -c * p.nu * dpsi.values / psi_bar)


def make_random_ic(g: GridSpec, ic: RandomIC) -> PsiField:
    xi = ic.draw()
    x = g.x
    j = np.arange(1, ic.j_max + 1)[:, None]
    phase = 2.0 * np.pi * j * x[None, :] / g.L
    exponent = xi[0] + xi[1 : ic.j_max + 1] @ np.cos(phase) + xi[ic.j_max + 1 :] @ np.sin(phase)
    return PsiField(g, np.exp(exponent))


def make_plane_wave_ic(g: GridSpec, ic: PlaneWaveIC) -> PsiField:
    if abs(ic.delta_m) >= 1:
        raise DomainError(f"|delta_m| must be < 1 to keep psi positive, got {ic.delta_m}")
    return PsiField(g, 1.0 + ic.delta_m * np.sin(2.0 * np.pi * ic.m * g.x / g.L))


def reynolds_diagnostic(u: VelocityField, p: PhysicsParams, l: float) -> float:
    """``Re = u_rms * l / nu`` for a caller-chosen length scale ``l``."""
    if not l > 0:
        raise DomainError(f"length scale must be positive, got {l!r}")
    return u.rms * l / p.nu
