"""
Sparse correlator operators and the overlap-estimation readout of ``P^(n) / I^(n)``.

``C^(n)(rho)`` is the symmetrized shift tensor on the coarse index space:
``C_j = sum_sigma delta_{j - sigma} c_sigma`` where ``j - sigma`` must be a
constant vector modulo ``2**m`` and ``c`` spreads unit weight evenly over all
``n!`` orderings of ``(0, rho_1, ..., rho_{n-1})``.  Orderings that coincide
(repeated offsets) are merged with their multiplicity, so ``rho = 0`` gives a
unit diagonal.

``Ctilde^(n)`` rearranges ``C^(n)`` as a Hermitian off-diagonal block between the
two halves of the ``U^(n)`` register (or between the flag sectors for odd ``n``)
and inserts ``|0><0|`` on every sub-grid register, which removes the garbage
left by coarse-graining.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
import scipy.sparse

from .errors import DomainError, IllConditionedRatioError
from .fields import GridSpec
from .qstate import AmplitudeState, u_copies

EXACT, GAUSSIAN, SHOT = "exact", "gaussian", "shot"
MODES = (EXACT, GAUSSIAN, SHOT)

# round-off level of an expectation taken on a unit-norm state
EXACT_NOISE_FLOOR = 1e-14
GUARD_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class SparseCorrelator:
    shape: tuple
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    order_n: int
    offsets: tuple
    sparsity_bound: int
    m: int
    alpha: float = 1.0
    multi_index: np.ndarray | None = field(default=None, repr=False)

    @property
    def nnz(self) -> int:
        return self.values.shape[0]

    @property
    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def to_scipy(self):
        return scipy.sparse.csr_matrix((self.values, (self.rows, self.cols)), shape=self.shape)

    def dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def max_row_nnz(self) -> int:
        if self.nnz == 0:
            return 0
        return int(np.bincount(self.rows, minlength=self.shape[0]).max())

    def is_symmetric(self) -> bool:
        if self.shape[0] != self.shape[1]:
            return False
        M = self.to_scipy()
        return (M != M.T).nnz == 0

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.to_scipy() @ vec


def _merged(shape, rows, cols, vals, **kw) -> SparseCorrelator:
    M = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=shape)
    M.sum_duplicates()
    keep = M.data != 0
    order = np.lexsort((M.col[keep], M.row[keep]))
    return SparseCorrelator(
        shape=shape,
        rows=M.row[keep][order].astype(np.int64),
        cols=M.col[keep][order].astype(np.int64),
        values=M.data[keep][order].astype(float),
        **kw,
    )


def build_C2(g: GridSpec, rho: int) -> SparseCorrelator:
    """``(P^rho + P^-rho) / 2`` on the full grid, ``P`` the cyclic increment."""
    g.require_periodic("build_C2")
    N = g.N_x
    rho = int(rho) % N
    j = np.arange(N)
    rows = np.concatenate([(j + rho) % N, (j - rho) % N])
    cols = np.concatenate([j, j])
    vals = np.full(2 * N, 0.5)
    return _merged((N, N), rows, cols, vals, order_n=2, offsets=(rho,), sparsity_bound=2, m=g.n_x, alpha=1.0)


def _check_offsets(m: int, n: int, rho_vec) -> tuple:
    if int(n) != n or n < 2:
        raise DomainError(f"order n must be an integer >= 2, got {n!r}")
    rho = tuple(int(r) for r in np.atleast_1d(rho_vec))
    if len(rho) != n - 1:
        raise DomainError(f"order {n} needs {n - 1} offsets, got {len(rho)}")
    M = 1 << m
    if any(r < 0 or r >= M for r in rho):
        raise DomainError(f"offsets must lie in [0, {M}), got {rho}")
    return rho


def symmetrized_offsets(rho_vec) -> dict:
    """Weights of ``S[indicator at (0, rho)]``: distinct orderings -> multiplicity / n!."""
    base = (0,) + tuple(int(r) for r in rho_vec)
    counts = Counter(permutations(base))
    total = math.factorial(len(base))
    return {sigma: c / total for sigma, c in sorted(counts.items())}


def _flatten(idx: np.ndarray, radix_bits: int) -> np.ndarray:
    out = np.zeros(idx.shape[0], dtype=np.int64)
    for col in idx.T:
        out = (out << radix_bits) | col
    return out


def build_Cn(m: int, n: int, rho_vec) -> SparseCorrelator:
    """``C^(n)`` on ``(2**m)**n`` coarse indices, stored as a matrix over the
    first ``ceil(n/2)`` and last ``floor(n/2)`` indices; ``multi_index`` keeps
    the full ``(nnz, n)`` index list."""
    rho = _check_offsets(m, n, rho_vec)
    M = 1 << m
    weights = symmetrized_offsets(rho)
    sig = np.array(list(weights), dtype=np.int64)
    w = np.array(list(weights.values()))
    k = np.arange(M, dtype=np.int64)
    idx = ((sig[:, None, :] + k[None, :, None]) % M).reshape(-1, n)
    vals = np.repeat(w, M)
    lin = _flatten(idx, m)
    uniq, first, inv = np.unique(lin, return_index=True, return_inverse=True)
    merged = np.bincount(inv.ravel(), weights=vals)
    idx = idx[first]
    a = n - n // 2
    return SparseCorrelator(
        shape=(M**a, M ** (n - a)),
        rows=_flatten(idx[:, :a], m),
        cols=_flatten(idx[:, a:], m),
        values=merged,
        order_n=n,
        offsets=rho,
        sparsity_bound=math.factorial(n),
        m=m,
        alpha=float(math.factorial(n)),
        multi_index=idx,
    )


def Ctilde_dim(n_x: int, n: int) -> int:
    return 1 << (u_copies(n) * n_x + n % 2)


def build_Ctilde(m: int, n: int, rho_vec, n_x: int) -> SparseCorrelator:
    """``Ctilde^(n)`` on the ``U^(n)`` register of ``n_x``-qubit copies."""
    if int(n_x) != n_x or not (1 <= m <= n_x):
        raise DomainError(f"need 1 <= m <= n_x, got m={m!r}, n_x={n_x!r}")
    C = build_Cn(m, n, rho_vec)
    idx = C.multi_index
    sub = n_x - m
    # coarse index k on a copy with |0>_ss sits at k << sub
    full = idx << sub
    a = n - n // 2
    if n % 2 == 0:
        left = _flatten(full[:, :a], n_x)
        right = _flatten(full[:, a:], n_x)
    else:
        left = _flatten(full[:, :a], n_x) << 1
        padded = np.concatenate([full[:, a:], np.zeros((full.shape[0], 1), dtype=np.int64)], axis=1)
        right = (_flatten(padded, n_x) << 1) | 1
    dim = Ctilde_dim(n_x, n)
    half = 0.5 * C.values
    return _merged(
        (dim, dim),
        np.concatenate([left, right]),
        np.concatenate([right, left]),
        np.concatenate([half, half]),
        order_n=n,
        offsets=C.offsets,
        sparsity_bound=math.factorial(n),
        m=m,
        alpha=float(math.factorial(n)),
    )


@dataclass(frozen=True)
class ReadoutNoise:
    """How overlap estimates are emulated.

    ``gaussian`` adds zero-mean noise of standard deviation
    ``epsilon3 * 2**(-(n-2) m / 2)``.  ``shot`` averages Hadamard-test outcomes
    of ``<C> / alpha``; without explicit ``repetitions`` it uses enough shots
    for that same standard deviation.
    """

    epsilon3: float = 0.0
    mode: str = EXACT
    repetitions: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"readout mode must be one of {MODES}, got {self.mode!r}")
        if self.epsilon3 < 0:
            raise DomainError("epsilon3 must be >= 0")
        if self.epsilon3 == 0:
            object.__setattr__(self, "mode", EXACT)
        if self.mode == SHOT and self.repetitions is not None and self.repetitions <= 0:
            raise DomainError("shot mode needs repetitions >= 1")

    def target_std(self, n: int, m: int) -> float:
        return self.epsilon3 * 2.0 ** (-(n - 2) * m / 2.0)

    def shots(self, C: SparseCorrelator) -> int:
        return _shots(self, C.order_n, C.m, C.alpha)

    def noise_level(self, C: SparseCorrelator) -> float:
        return _noise_level(self, C.order_n, C.m, C.alpha)

    def rng(self):
        return np.random.default_rng(self.seed)


def _shots(noise: ReadoutNoise, n: int, m: int, alpha: float) -> int:
    if noise.repetitions is not None:
        return int(noise.repetitions)
    if noise.epsilon3 == 0:
        return 0
    return max(1, math.ceil((alpha / noise.target_std(n, m)) ** 2))


def _noise_level(noise: ReadoutNoise, n: int, m: int, alpha: float) -> float:
    if noise.mode == GAUSSIAN:
        return noise.target_std(n, m)
    if noise.mode == SHOT:
        return alpha / math.sqrt(_shots(noise, n, m, alpha))
    return 0.0


def _guarded_ratio(n: int, num: float, den: float, sigma: float) -> float:
    if abs(den) < GUARD_FACTOR * max(sigma, EXACT_NOISE_FLOOR):
        raise IllConditionedRatioError(
            f"I^({n}) estimate {den:.3e} is within {GUARD_FACTOR:g}x of its noise level {sigma:.3e}"
        )
    return num / den


def exact_expectation(s: AmplitudeState | np.ndarray, C: SparseCorrelator) -> float:
    """``<s| C (x) 1_ens |s>`` by direct summation over the stored entries."""
    amps = s.amps if isinstance(s, AmplitudeState) else np.asarray(s)
    D = C.shape[0]
    if C.shape[0] != C.shape[1]:
        raise DomainError("expectation needs a square operator")
    if amps.shape[0] % D:
        raise DomainError(f"state dimension {amps.shape[0]} does not match operator dimension {D}")
    A = amps.reshape(D, -1)
    val = np.sum(C.values[:, None] * np.conj(A[C.rows]) * A[C.cols])
    return float(val.real)


def _read_out(exact: float, alpha: float, n: int, m: int, noise: ReadoutNoise, shots: int, rng) -> float:
    """One emulated overlap estimate of a quantity whose exact value is ``exact``."""
    if noise.mode == EXACT:
        return exact
    if noise.mode == GAUSSIAN:
        return exact + rng.normal(0.0, noise.target_std(n, m))
    p = min(max(0.5 * (1.0 + exact / alpha), 0.0), 1.0)
    k = rng.binomial(shots, p)
    return alpha * (2.0 * k / shots - 1.0)


def expectation(s: AmplitudeState, C: SparseCorrelator, noise: ReadoutNoise = ReadoutNoise(), rng=None) -> float:
    exact = exact_expectation(s, C)
    if noise.mode == EXACT:
        return exact
    rng = noise.rng() if rng is None else rng
    shots = noise.shots(C) if noise.mode == SHOT else 0
    return _read_out(exact, C.alpha, C.order_n, C.m, noise, shots, rng)


_BATCH_ENTRIES = 1 << 22


def _sector_products(A, idx, wl, wr, odd):
    """``sum_ens conj(A[left]) A[right]`` for index tuples along the last axis."""
    a = wl.shape[0]
    left = idx[..., :a] @ wl
    right = idx[..., a:] @ wr
    if odd:
        right = right | 1
    return (np.conj(A[left]) * A[right]).real.sum(axis=-1)


def sweep_expectations(s: AmplitudeState, n: int, m: int, rho_vecs) -> np.ndarray:
    """Exact ``<s| Ctilde^(n)(rho) (x) 1_ens |s>`` for many offset vectors at once.

    Sums the same entries ``build_Ctilde`` stores, before duplicate merging:
    each of the ``n!`` orderings ``sigma`` of ``(0, rho)`` contributes weight
    ``1/n!`` at every cyclic translate ``sigma + k``.  The translate sum
    depends only on ``sigma - sigma_0``, so when ``(2**m)**n`` is small it is
    tabulated once and every ordering becomes a table lookup.
    """
    lay = s.layout
    if lay.m != m or lay.copies != u_copies(n) or lay.flag != bool(n % 2):
        raise DomainError(f"register layout {lay} does not hold a coarse-grained U^({n}) state")
    n_x, M = lay.n_x, 1 << m
    rhos = np.array([_check_offsets(m, n, r) for r in rho_vecs], dtype=np.int64).reshape(-1, n - 1)
    perms = np.array(list(permutations(range(n))), dtype=np.int64)
    P = perms.shape[0]
    a = n - n // 2
    sub = n_x - m
    odd = bool(n % 2)
    wl = np.array([1 << (n_x * (a - 1 - i)) for i in range(a)], dtype=np.int64) << (sub + odd)
    wr = np.array([1 << (n_x * (a - 1 - i)) for i in range(n - a)], dtype=np.int64) << (sub + odd)
    A = s.amps.reshape(lay.body_dim, -1)
    k = np.arange(M, dtype=np.int64)
    radix = M ** np.arange(n - 2, -1, -1, dtype=np.int64)
    table = None
    if M**n <= _BATCH_ENTRIES:
        grid = np.indices((M,) * (n - 1), dtype=np.int64).reshape(n - 1, -1).T
        base = np.concatenate([np.zeros((grid.shape[0], 1), dtype=np.int64), grid], axis=1)
        idx = (base[:, None, :] + k[None, :, None]) % M
        table = _sector_products(A, idx, wl, wr, odd).sum(axis=1)
    out = np.empty(rhos.shape[0])
    step = max(1, _BATCH_ENTRIES // (P * (1 if table is not None else M)))
    for lo in range(0, rhos.shape[0], step):
        r = rhos[lo : lo + step]
        base = np.concatenate([np.zeros((r.shape[0], 1), dtype=np.int64), r], axis=1)
        sig = base[:, perms]
        if table is not None:
            canon = (sig[..., 1:] - sig[..., :1]) % M
            out[lo : lo + step] = table[canon @ radix].sum(axis=1) / P
        else:
            idx = (sig[:, :, None, :] + k[None, None, :, None]) % M
            out[lo : lo + step] = _sector_products(A, idx, wl, wr, odd).reshape(r.shape[0], -1).sum(axis=1) / P
    return out


@dataclass
class CorrelationResult:
    order_n: int
    m: int
    n_x: int
    separations: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    numerators: list = field(default_factory=list)
    denominators: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    error_bound: float = 0.0
    noise_mode: str = EXACT
    ratio_std: list = field(default_factory=list)
    ensemble_size: int = 1

    def columns(self) -> list:
        k = self.order_n - 1
        return (
            ["n", "m"]
            + [f"rho_{i + 1}" for i in range(k)]
            + [f"r_{i + 1}" for i in range(k)]
            + ["numerator", "denominator", "ratio", "error_bound"]
        )

    def rows(self) -> list:
        out = []
        for rho, r, num, den, q in zip(self.separations, self.distances, self.numerators, self.denominators, self.ratios):
            out.append([self.order_n, self.m, *rho, *r, num, den, q, self.error_bound])
        return out

    def to_dict(self) -> dict:
        return {
            "order_n": self.order_n,
            "m": self.m,
            "n_x": self.n_x,
            "ensemble_size": self.ensemble_size,
            "noise_mode": self.noise_mode,
            "error_bound": self.error_bound,
            "separations": [list(r) for r in self.separations],
            "distances": [list(r) for r in self.distances],
            "numerators": list(self.numerators),
            "denominators": list(self.denominators),
            "ratios": list(self.ratios),
            "ratio_std": list(self.ratio_std),
        }

    def extend(self, other: "CorrelationResult"):
        for name in ("separations", "distances", "numerators", "denominators", "ratios", "ratio_std"):
            getattr(self, name).extend(getattr(other, name))
        return self


def correlator_for(s: AmplitudeState, n: int, m: int, rho_vec) -> SparseCorrelator:
    """The operator matching the register layout of ``s``."""
    lay = s.layout
    if lay.m is None:
        if n != 2 or lay.copies != 1 or lay.flag:
            raise DomainError("only n = 2 can be read out from an uncoarsened register")
        (rho,) = _check_offsets(lay.n_x, 2, rho_vec)
        return build_C2(GridSpec(lay.n_x), rho)
    if lay.m != m:
        raise DomainError(f"state is coarse-grained at m={lay.m}, requested m={m}")
    if lay.copies != u_copies(n) or lay.flag != bool(n % 2):
        raise DomainError(f"register layout {lay} does not hold a U^({n}) state")
    return build_Ctilde(m, n, rho_vec, lay.n_x)


def _composite_bound(n, noise, eps1, eps2, tau, eps4):
    return eps1 + tau * eps2 + noise.epsilon3 + (eps4 if n >= 3 else 0.0)


def ratio_Pn_over_In(
    s: AmplitudeState,
    n: int,
    m: int,
    rho_vec,
    noise: ReadoutNoise = ReadoutNoise(),
    *,
    L: float = 1.0,
    eps1: float = 0.0,
    eps2: float = 0.0,
    tau: float = 0.0,
    eps4: float = 0.0,
    rng=None,
) -> CorrelationResult:
    """``<U|Ctilde(rho)|U> / <U|Ctilde(0)|U>`` with independent readouts of both terms."""
    C = correlator_for(s, n, m, rho_vec)
    C0 = correlator_for(s, n, m, [0] * (n - 1))
    if rng is None:
        num_ss, den_ss = np.random.SeedSequence(noise.seed).spawn(2)
        num_rng, den_rng = np.random.default_rng(num_ss), np.random.default_rng(den_ss)
    else:
        num_rng = den_rng = rng
    num = expectation(s, C, noise, num_rng)
    den = expectation(s, C0, noise, den_rng)
    sigma = noise.noise_level(C0)
    ratio = _guarded_ratio(n, num, den, sigma)
    n_x = s.layout.n_x
    cell = (1 << (n_x - m)) * L / (1 << n_x) if s.layout.m is not None else L / (1 << n_x)
    rho = C.offsets
    return CorrelationResult(
        order_n=n,
        m=m,
        n_x=n_x,
        separations=[tuple(rho)],
        distances=[tuple(r * cell for r in rho)],
        numerators=[num],
        denominators=[den],
        ratios=[ratio],
        error_bound=_composite_bound(n, noise, eps1, eps2, tau, eps4),
        noise_mode=noise.mode,
        ratio_std=[sigma * math.sqrt(1.0 + ratio**2) / abs(den)],
        ensemble_size=1 << s.layout.n_en,
    )


def _row_noise(noise: ReadoutNoise, child) -> ReadoutNoise:
    return ReadoutNoise(noise.epsilon3, noise.mode, noise.repetitions, int(child.generate_state(1)[0]))


def ratio_sweep(s, n, m, rho_vecs, noise: ReadoutNoise = ReadoutNoise(), **kw) -> CorrelationResult:
    """Ratios for several offset vectors; row ``i`` reads out with seed stream ``i``.

    Coarse-grained registers are read through ``sweep_expectations``, one batch
    for every numerator plus one shared exact denominator.
    """
    rho_vecs = [tuple(np.atleast_1d(r).tolist()) for r in rho_vecs]
    children = np.random.SeedSequence(noise.seed).spawn(len(rho_vecs)) if noise.mode != EXACT or s.layout.m is None else None
    if s.layout.m is None:
        result = None
        for child, rho in zip(children, rho_vecs):
            r = ratio_Pn_over_In(s, n, m, rho, _row_noise(noise, child), **kw)
            result = r if result is None else result.extend(r)
        return result
    exact_num = sweep_expectations(s, n, m, rho_vecs)
    exact_den = float(sweep_expectations(s, n, m, [(0,) * (n - 1)])[0])
    return _assemble(s, n, m, rho_vecs, exact_num, exact_den, children, noise, **kw)


def _assemble(s, n, m, rho_vecs, exact_num, exact_den, children, noise, *, L=1.0, eps1=0.0, eps2=0.0, tau=0.0, eps4=0.0):
    alpha = float(math.factorial(n))
    sigma = _noise_level(noise, n, m, alpha)
    shots = _shots(noise, n, m, alpha)
    n_x = s.layout.n_x
    cell = (1 << (n_x - m)) * L / (1 << n_x)
    res = CorrelationResult(
        order_n=n,
        m=m,
        n_x=n_x,
        error_bound=_composite_bound(n, noise, eps1, eps2, tau, eps4),
        noise_mode=noise.mode,
        ensemble_size=1 << s.layout.n_en,
    )
    for i, (rho, ex) in enumerate(zip(rho_vecs, exact_num)):
        num, den = float(ex), exact_den
        if noise.mode != EXACT:
            num_ss, den_ss = np.random.SeedSequence(_row_noise(noise, children[i]).seed).spawn(2)
            num = _read_out(num, alpha, n, m, noise, shots, np.random.default_rng(num_ss))
            den = _read_out(den, alpha, n, m, noise, shots, np.random.default_rng(den_ss))
        ratio = _guarded_ratio(n, num, den, sigma)
        res.separations.append(tuple(rho))
        res.distances.append(tuple(r * cell for r in rho))
        res.numerators.append(num)
        res.denominators.append(den)
        res.ratios.append(ratio)
        res.ratio_std.append(sigma * math.sqrt(1.0 + ratio**2) / abs(den))
    return res


def ensemble_ratio(s_en: AmplitudeState, n, m, rho_vec, noise: ReadoutNoise = ReadoutNoise(), **kw):
    """Ensemble-averaged ``<P^(n)> / <I^(n)>`` from a superposed register.

    ``Ctilde (x) 1`` acts block-diagonally over the label register, so each
    member contributes its own normalized expectation with weight ``1 / N_en``.
    Members therefore enter with unit norm, whatever their raw amplitude.
    """
    return ratio_Pn_over_In(s_en, n, m, rho_vec, noise, **kw)
