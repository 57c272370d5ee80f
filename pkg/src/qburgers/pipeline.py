"""
End-to-end emulation: encode ``d psi(0)``, evolve, flip sign, coarse-grain, and
read out correlation ratios.
"""
from __future__ import annotations

from .correlators import ReadoutNoise, ratio_sweep
from .fields import PsiDerivField
from .qstate import (
    DEFAULT_MAX_QUBITS,
    AmplitudeState,
    U_n_qubits,
    amplitude_encode,
    apply_propagator,
    build_U_n,
    check_qubits,
    coarse_grain,
    ensemble_superpose,
    negate_to_velocity,
)


def velocity_state(dpsi0: PsiDerivField, tau: float) -> AmplitudeState:
    """``|u(tau)>`` under the linearized inversion, i.e. ``-|d psi(tau)>``."""
    return negate_to_velocity(apply_propagator(amplitude_encode(dpsi0), tau))


def readout_state(u_state: AmplitudeState, n: int, m: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> AmplitudeState:
    check_qubits(U_n_qubits(u_state.layout.n_x, n), max_qubits)
    return build_U_n(coarse_grain(u_state, m), n, max_qubits)


def correlate(
    dpsi0: PsiDerivField,
    tau: float,
    n: int,
    m: int,
    rho_vecs,
    noise: ReadoutNoise = ReadoutNoise(),
    max_qubits: int = DEFAULT_MAX_QUBITS,
    **kw,
):
    U = readout_state(velocity_state(dpsi0, tau), n, m, max_qubits)
    return ratio_sweep(U, n, m, rho_vecs, noise, L=dpsi0.grid.L, tau=tau, **kw)


def ensemble_readout_state(dpsi0s, tau, n, m, max_qubits: int = DEFAULT_MAX_QUBITS) -> AmplitudeState:
    dpsi0s = list(dpsi0s)
    n_en = max(len(dpsi0s).bit_length() - 1, 0)
    check_qubits(U_n_qubits(dpsi0s[0].grid.n_x, n, n_en), max_qubits)
    members = [readout_state(velocity_state(d, tau), n, m, max_qubits) for d in dpsi0s]
    return ensemble_superpose(members, max_qubits)


def correlate_ensemble(dpsi0s, tau, n, m, rho_vecs, noise: ReadoutNoise = ReadoutNoise(), max_qubits=DEFAULT_MAX_QUBITS, **kw):
    """Ensemble-averaged ratios; ``Ctilde (x) 1`` weights every member by ``1/N_en``."""
    s = ensemble_readout_state(dpsi0s, tau, n, m, max_qubits)
    return ratio_sweep(s, n, m, rho_vecs, noise, L=dpsi0s[0].grid.L, tau=tau, **kw)
