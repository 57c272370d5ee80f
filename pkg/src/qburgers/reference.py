"""
Classical ground truth: direct multi-point sums, flatness, the exact-vs-linearized
inversion experiment, and closed forms for the plane-wave initial condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalGuardError
from .fields import (
    GridSpec,
    PhysicsParams,
    PlaneWaveIC,
    PsiField,
    RandomIC,
    cole_hopf_inverse_approx,
    cole_hopf_inverse_exact,
    derivative,
    make_plane_wave_ic,
    make_random_ic,
)
from .heat import propagate_psi

ASYMPTOTIC_BETA = -1.5
GRID_TIME = "grid"
DOMAIN_TIME = "domain"


def _values(u) -> np.ndarray:
    return np.asarray(getattr(u, "values", u), dtype=float)


def brute_force_Pn(u, r_offsets) -> float:
    """``(1/N) sum_k u_k prod_i u_{k + rho_i}``; offsets are wrapped periodically."""
    v = _values(u)
    prod = v.copy()
    for r in r_offsets:
        prod = prod * np.roll(v, -int(r))
    return float(np.mean(prod))


def brute_force_sweep(u, rho_vecs) -> np.ndarray:
    """``P^(n)(rho) / I^(n)`` for a batch of offset vectors by direct summation."""
    v = _values(u)
    N = v.shape[0]
    rhos = np.asarray(rho_vecs, dtype=np.int64)
    rhos = rhos.reshape(rhos.shape[0], -1) % N
    n = rhos.shape[1] + 1
    k = np.arange(N)
    out = np.empty(rhos.shape[0])
    step = max(1, (1 << 22) // (N * n))
    for lo in range(0, rhos.shape[0], step):
        r = rhos[lo : lo + step]
        prod = np.prod(v[(k[None, :, None] + r[:, None, :]) % N], axis=2) * v[None, :]
        out[lo : lo + step] = prod.mean(axis=1)
    return out / float(np.mean(v**n))


def brute_force_In(u, n: int) -> float:
    return brute_force_Pn(u, [0] * (n - 1))


def coarse_field(u, m: int) -> np.ndarray:
    """Block average of ``u`` over ``2**m`` equal cells."""
    v = _values(u)
    return v.reshape(1 << m, -1).mean(axis=1)


def brute_force_ratio(u, r_offsets) -> float:
    n = len(r_offsets) + 1
    return brute_force_Pn(u, r_offsets) / brute_force_In(u, n)


def ensemble_brute_force_ratio(fields, r_offsets, m: int | None = None, normalize: bool = True) -> float:
    """``sum_a P_a / sum_a I_a`` over members, optionally block-averaged to ``2**m`` cells.

    ``normalize=True`` scales every fine-grid member to unit Euclidean norm
    before coarse-graining, which is the weighting a superposed quantum
    register produces.
    """
    n = len(r_offsets) + 1
    num = den = 0.0
    for f in fields:
        v = _values(f)
        if normalize:
            v = v / np.linalg.norm(v)
        if m is not None:
            v = coarse_field(v, m)
        num += brute_force_Pn(v, r_offsets)
        den += brute_force_In(v, n)
    return num / den


def flatness(u) -> float:
    """``beta = I4 / I2**2 - 3``."""
    v = _values(u)
    i2 = float(np.mean(v**2))
    if i2 == 0:
        raise NumericalGuardError("flatness undefined for a zero field (I^(2) = 0)")
    return float(np.mean(v**4)) / i2**2 - 3.0


@dataclass
class FlatnessSeries:
    taus: list
    beta_exact: list
    beta_approx: list
    label: str = "single realization"
    time_unit: str = GRID_TIME
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.taus) == len(self.beta_exact) == len(self.beta_approx)):
            raise DomainError("series columns must have equal length")
        if np.any(np.diff(self.taus) <= 0):
            raise DomainError("taus must be strictly increasing")

    def columns(self):
        return ["tau", "beta_exact", "beta_approx"]

    def rows(self):
        return [list(r) for r in zip(self.taus, self.beta_exact, self.beta_approx)]

    def to_dict(self):
        return {
            "label": self.label,
            "time_unit": self.time_unit,
            "taus": list(self.taus),
            "beta_exact": list(self.beta_exact),
            "beta_approx": list(self.beta_approx),
            **self.meta,
        }


def to_grid_tau(theta: float, g: GridSpec, time_unit: str = GRID_TIME) -> float:
    """Convert a time coordinate to ``tau = nu t / dx**2``.

    ``time_unit="domain"`` reads ``theta`` as ``nu t / L**2``, the diffusive time
    across the whole box; then ``tau = theta * N_x**2``.
    """
    if time_unit == GRID_TIME:
        return float(theta)
    if time_unit == DOMAIN_TIME:
        return float(theta) * g.N_x**2
    raise DomainError(f"time_unit must be {GRID_TIME!r} or {DOMAIN_TIME!r}, got {time_unit!r}")


def initial_psi(g: GridSpec, ic) -> PsiField:
    if isinstance(ic, RandomIC):
        return make_random_ic(g, ic)
    if isinstance(ic, PlaneWaveIC):
        return make_plane_wave_ic(g, ic)
    if isinstance(ic, PsiField):
        return ic
    raise DomainError(f"unsupported initial condition {type(ic).__name__}")


def run_figure2(
    g: GridSpec,
    ic,
    p: PhysicsParams,
    taus,
    time_unit: str = GRID_TIME,
    prefactor: str = "2nu",
) -> FlatnessSeries:
    """Evolve ``psi`` exactly and compute ``beta`` through both inversions at each time."""
    taus = [float(t) for t in taus]
    if not taus:
        raise DomainError("taus must be non-empty")
    psi0 = initial_psi(g, ic)
    be, ba = [], []
    for t in taus:
        psi = propagate_psi(psi0, to_grid_tau(t, g, time_unit))
        u_exact = cole_hopf_inverse_exact(psi, p)
        u_approx = cole_hopf_inverse_approx(derivative(psi), psi.mean, p, prefactor)
        be.append(flatness(u_exact))
        ba.append(flatness(u_approx))
    return FlatnessSeries(taus, be, ba, time_unit=time_unit)


def run_figure2_batch(g, sigma_xi, j_max, seeds, p, taus, time_unit: str = GRID_TIME, prefactor: str = "2nu"):
    """One series per seed, plus the seed-median series."""
    runs = [run_figure2(g, RandomIC(sigma_xi, j_max, int(s)), p, taus, time_unit, prefactor) for s in seeds]
    med = FlatnessSeries(
        list(runs[0].taus),
        np.median([r.beta_exact for r in runs], axis=0).tolist(),
        np.median([r.beta_approx for r in runs], axis=0).tolist(),
        label=f"median over {len(runs)} seeds",
        time_unit=time_unit,
    )
    return runs, med


def decay_exponent(m: int, g: GridSpec, tau: float, kind: str = "continuum") -> float:
    """Decay rate times ``tau`` for Fourier mode ``m``: ``4 pi^2 m^2 / N^2`` or ``2 - 2 cos(2 pi m / N)``."""
    N = g.N_x
    if kind == "continuum":
        return 4.0 * math.pi**2 * m**2 * tau / N**2
    if kind == "discrete":
        return (2.0 - 2.0 * math.cos(2.0 * math.pi * m / N)) * tau
    raise DomainError(f"kind must be 'continuum' or 'discrete', got {kind!r}")


def analytic_psi_plane_wave(ic: PlaneWaveIC, g: GridSpec, p: PhysicsParams, tau: float, kind="continuum") -> PsiField:
    if abs(ic.delta_m) >= 1:
        raise DomainError("|delta_m| must be < 1")
    amp = ic.delta_m * math.exp(-decay_exponent(ic.m, g, tau, kind))
    return PsiField(g, 1.0 + amp * np.sin(2.0 * np.pi * ic.m * g.x / g.L))


def analytic_moments_plane_wave(ic: PlaneWaveIC, g: GridSpec, p: PhysicsParams, tau: float):
    """Leading-plus-first-correction ``<u^2>`` and ``<u^4>`` (continuum decay)."""
    e = math.exp(-2.0 * decay_exponent(ic.m, g, tau))
    a = 4.0 * math.pi * ic.m * p.nu * ic.delta_m / g.L
    d2 = ic.delta_m**2
    u2 = a**2 * 0.5 * e * (1.0 + 0.75 * d2 * e)
    u4 = a**4 * 0.375 * e**2 * (1.0 + (5.0 / 3.0) * d2 * e)
    return u2, u4


def analytic_beta_plane_wave(ic: PlaneWaveIC, g: GridSpec, tau: float) -> float:
    """``beta = -3/2 (1 - delta_m^2/6 exp(-8 pi^2 m^2 tau / N^2))``, valid for ``|delta_m| <~ 0.3``."""
    e = math.exp(-2.0 * decay_exponent(ic.m, g, tau))
    return ASYMPTOTIC_BETA * (1.0 - ic.delta_m**2 / 6.0 * e)
