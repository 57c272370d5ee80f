"""
Statevector emulation of the registers used by the correlation-readout circuits.

Basis labels follow the big-endian convention: qubit 0 is the most significant
bit of the index.  For a velocity register of ``n_x`` qubits split by
coarse-graining, the leading ``m`` qubits label the coarse cell ``k`` and the
trailing ``n_x - m`` qubits are the sub-grid register, so cell ``k`` covers
indices ``[k * 2**(n_x-m), (k+1) * 2**(n_x-m))``.

Multi-register states are laid out as::

    copy_1 | copy_2 | ... | copy_c | [flag] | [ensemble label]

with the ensemble label as the least significant register.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import reduce
from pathlib import Path

import numpy as np

from .errors import DomainError, EncodingError, NumericalGuardError, ResourceLimitError
from .fields import GridSpec
from .heat import VANISHING_NORM, heat_evolve

NORM_TOL = 1e-10
DEFAULT_MAX_QUBITS = 26
_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class RegisterLayout:
    n_x: int
    m: int | None = None
    copies: int = 1
    flag: bool = False
    n_en: int = 0

    @property
    def n_qubits(self) -> int:
        return self.copies * self.n_x + int(self.flag) + self.n_en

    @property
    def is_main(self) -> bool:
        """A single uncoarsened velocity register with nothing appended."""
        return self.m is None and self.copies == 1 and not self.flag and self.n_en == 0

    @property
    def body_dim(self) -> int:
        """Dimension without the ensemble label register."""
        return 1 << (self.n_qubits - self.n_en)

    def describe(self) -> list:
        regs = []
        for c in range(self.copies):
            if self.m is None:
                regs.append((f"u{c}", self.n_x))
            else:
                regs += [(f"u{c}.coarse", self.m), (f"u{c}.sub", self.n_x - self.m)]
        if self.flag:
            regs.append(("flag", 1))
        if self.n_en:
            regs.append(("ensemble", self.n_en))
        return regs


def check_qubits(n_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS):
    if n_qubits > max_qubits:
        raise ResourceLimitError(n_qubits, max_qubits)


@dataclass(frozen=True, eq=False)
class AmplitudeState:
    """Unit-norm amplitudes plus the norm ``scale`` of the raw vector they encode.

    For single-register states ``scale * amps`` reproduces the raw data.  For
    tensor-product and ensemble states ``scale`` keeps the single-copy norm and
    ``member_scales`` the per-member norms.
    """

    amps: np.ndarray = field(repr=False)
    scale: float
    layout: RegisterLayout
    member_scales: tuple = ()
    gate_log: tuple = ()

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)
        if amps.shape != (1 << self.layout.n_qubits,):
            raise DomainError(f"{amps.shape[0]} amplitudes do not match {self.layout.n_qubits} qubits")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise DomainError(f"scale must be positive, got {self.scale!r}")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise DomainError(f"state norm {np.linalg.norm(amps)!r} is not 1")

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def raw(self) -> np.ndarray:
        return self.scale * self.amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def _evolve(self, amps, **changes):
        return replace(self, amps=amps, **changes)


def _require_main(s: AmplitudeState, what: str):
    if not s.layout.is_main:
        raise DomainError(f"{what} needs a bare velocity register, got layout {s.layout}")


def amplitude_encode(dpsi) -> AmplitudeState:
    """Encode a grid field (anything with ``.values`` and ``.grid``) as ``values / ||values||``."""
    v = np.asarray(dpsi.values, dtype=float)
    nrm = float(np.linalg.norm(v))
    if not nrm > 0:
        raise EncodingError("cannot encode a zero field")
    return AmplitudeState(v / nrm, nrm, RegisterLayout(dpsi.grid.n_x))


def apply_propagator(s: AmplitudeState, tau: float) -> AmplitudeState:
    """Normalize ``exp(A tau) |s>`` and fold the norm change into ``scale``."""
    _require_main(s, "apply_propagator")
    out = heat_evolve(s.amps, tau, GridSpec(s.layout.n_x))
    nrm = float(np.linalg.norm(out))
    if nrm * s.scale < VANISHING_NORM:
        raise NumericalGuardError(f"propagated norm {nrm * s.scale:.3e} has vanished")
    return s._evolve(out / nrm, scale=s.scale * nrm)


def negate_to_velocity(s: AmplitudeState) -> AmplitudeState:
    _require_main(s, "negate_to_velocity")
    return s._evolve(-s.amps)


def _walsh_hadamard(block: np.ndarray, k: int) -> np.ndarray:
    """Apply ``H^{(x)k}`` along the last axis (length ``2**k``) of a 2-D array."""
    rows = block.shape[0]
    h = block.reshape((rows,) + (2,) * k)
    for ax in range(1, k + 1):
        a0 = np.take(h, 0, axis=ax)
        a1 = np.take(h, 1, axis=ax)
        h = np.stack([a0 + a1, a0 - a1], axis=ax) * _SQRT1_2
    return h.reshape(rows, 1 << k)


def coarse_grain(s: AmplitudeState, m: int) -> AmplitudeState:
    """Hadamards on the trailing ``n_x - m`` qubits.

    The ``|k>|0>_ss`` amplitude becomes ``2**(-(n_x-m)/2)`` times the sum of the
    cell-``k`` amplitudes; everything else is garbage orthogonal to the
    ``|0>_ss`` projector.
    """
    _require_main(s, "coarse_grain")
    n_x = s.layout.n_x
    if int(m) != m or not (1 <= m <= n_x):
        raise DomainError(f"coarse level m must satisfy 1 <= m <= n_x={n_x}, got {m!r}")
    k = n_x - m
    amps = _walsh_hadamard(s.amps.reshape(1 << m, 1 << k), k).ravel()
    return s._evolve(amps, layout=replace(s.layout, m=int(m)), gate_log=s.gate_log + (("hadamard", k),))


def coarse_amplitudes(s: AmplitudeState) -> np.ndarray:
    """The ``|k>|0>_ss`` sector of a coarse-grained single register."""
    lay = s.layout
    if lay.m is None or lay.copies != 1 or lay.flag or lay.n_en:
        raise DomainError("coarse_amplitudes needs a single coarse-grained register")
    return s.amps.reshape(1 << lay.m, 1 << (lay.n_x - lay.m))[:, 0]


def garbage_weight(s: AmplitudeState) -> float:
    return 1.0 - float(np.sum(np.abs(coarse_amplitudes(s)) ** 2))


def cyclic_shift(s: AmplitudeState, rho: int) -> AmplitudeState:
    """``|j> -> |j + rho mod N_x>``; logs the ``n_x**2`` gate scaling of the adder."""
    _require_main(s, "cyclic_shift")
    N = 1 << s.layout.n_x
    rho = int(rho) % N
    return s._evolve(np.roll(s.amps, rho), gate_log=s.gate_log + (("cyclic_shift", s.layout.n_x**2),))


def u_copies(n: int) -> int:
    """Number of velocity-register copies in the ``n``-point readout state."""
    return (n + 1) // 2


def U_n_qubits(n_x: int, n: int, n_en: int = 0) -> int:
    return u_copies(n) * n_x + (n % 2) + n_en


def build_U_n(s_cg: AmplitudeState, n: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> AmplitudeState:
    """Readout state for the ``n``-point function.

    Even ``n = 2n'``: ``|u>_cg`` to the tensor power ``n'`` (``n = 2`` returns the
    register unchanged).  Odd ``n = 2n' + 1``::

        (|u>^{(n'+1)} |0> + |u>^{n'} |0...0> |1>) / sqrt(2)

    with the flag as the last qubit.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"order n must be an integer >= 2, got {n!r}")
    lay = s_cg.layout
    if lay.m is None or lay.copies != 1 or lay.flag or lay.n_en:
        raise DomainError("build_U_n needs a single coarse-grained register")
    check_qubits(U_n_qubits(lay.n_x, n), max_qubits)
    a = s_cg.amps
    half = n // 2
    if n % 2 == 0:
        amps = reduce(np.kron, [a] * half) if half > 1 else a
        return replace(s_cg, amps=amps, layout=replace(lay, copies=half))
    zero = np.zeros_like(a)
    zero[0] = 1.0
    base = reduce(np.kron, [a] * half)
    b0 = np.kron(base, a)
    b1 = np.kron(base, zero)
    amps = np.stack([b0, b1], axis=-1).ravel() * _SQRT1_2
    return replace(s_cg, amps=amps, layout=replace(lay, copies=half + 1, flag=True))


def ensemble_superpose(states, max_qubits: int = DEFAULT_MAX_QUBITS) -> AmplitudeState:
    """``2**(-n_en/2) sum_a |state_a>|a>`` with the label as the last register."""
    states = list(states)
    N = len(states)
    if N == 0 or N & (N - 1):
        raise DomainError(f"ensemble size must be a power of two, got {N}")
    lay = states[0].layout
    if lay.n_en:
        raise DomainError("states already carry an ensemble register")
    if any(s.layout != lay for s in states):
        raise DomainError("ensemble members must share one register layout")
    n_en = N.bit_length() - 1
    check_qubits(lay.n_qubits + n_en, max_qubits)
    amps = np.stack([s.amps for s in states], axis=-1).ravel() / math.sqrt(N)
    return AmplitudeState(
        amps,
        1.0,
        replace(lay, n_en=n_en),
        member_scales=tuple(float(s.scale) for s in states),
    )


def ensemble_members(s: AmplitudeState) -> np.ndarray:
    """Member amplitudes as rows, undoing the ``2**(-n_en/2)`` weight."""
    N = 1 << s.layout.n_en
    return s.amps.reshape(s.layout.body_dim, N).T * math.sqrt(N)


def save_state(path, s: AmplitudeState):
    """Write ``<path>`` (u64 LE count + little-endian complex128 pairs) and ``<path>.json``."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(np.uint64(s.dim).astype("<u8").tobytes())
        fh.write(s.amps.astype("<c16").tobytes())
    meta = {
        "n_qubits": s.n_qubits,
        "scale": s.scale,
        "layout": asdict(s.layout),
        "member_scales": list(s.member_scales),
    }
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_state(path) -> AmplitudeState:
    path = Path(path)
    raw = path.read_bytes()
    count = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    amps = np.frombuffer(raw[8:], dtype="<c16")
    if amps.shape[0] != count:
        raise DomainError(f"{path}: header says {count} amplitudes, found {amps.shape[0]}")
    meta = json.loads(Path(str(path) + ".json").read_text())
    return AmplitudeState(
        amps.copy(), meta["scale"], RegisterLayout(**meta["layout"]), member_scales=tuple(meta["member_scales"])
    )
