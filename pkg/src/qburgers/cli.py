"""
Command-line driver: ``qburgers {evolve,correlate,flatness,resources,ensemble} --config FILE``.

Configs are INI-style ``key = value`` sections or the equivalent nested JSON::

    [grid]
    n_x = 7
    L = 1.0
    bc = periodic

    [physics]
    nu = 0.01

    [ic]
    kind = random            # random | plane_wave | file
    sigma_xi = 0.3
    j_max = 5
    seed = 1

    [pipeline]
    taus = 0, 0.01, 0.02
    time_unit = domain       # grid: tau = nu t/dx^2, domain: nu t/L^2
    orders = 2, 3, 4
    m = 3
    rho = axis               # all | axis | explicit "1,2; 3,4"

    [readout]
    mode = exact             # exact | gaussian | shot
    epsilon3 = 0

    [output]
    directory = out
    formats = csv, json

Exit codes: 0 success, 2 config error, 3 qubit ceiling exceeded, 4 numerical guard.
"""
from __future__ import annotations

import argparse
import configparser
import itertools
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import resources
from .correlators import ReadoutNoise
from .errors import BurgersError, ConfigError, NumericalGuardError, ResourceLimitError
from .fields import (
    GridSpec,
    PhysicsParams,
    PlaneWaveIC,
    PsiField,
    RandomIC,
    cole_hopf_inverse_exact,
    derivative,
    reynolds_diagnostic,
)
from .heat import norm_ratio, propagate_psi
from .pipeline import correlate, correlate_ensemble
from .qstate import DEFAULT_MAX_QUBITS
from .reference import (
    ASYMPTOTIC_BETA,
    GRID_TIME,
    analytic_beta_plane_wave,
    brute_force_ratio,
    coarse_field,
    ensemble_brute_force_ratio,
    initial_psi,
    run_figure2,
    to_grid_tau,
)
from .serialize import config_hash, write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_NUMERICAL = 0, 2, 3, 4
MAX_SWEEP = 4096

# spawn-key components for seed derivation
_IC, _READOUT, _ENSEMBLE, _FLATNESS = 0, 1, 2, 3


def derive_seed(master: int, *key: int) -> int:
    """Independent 64-bit seed for component ``key`` of a master seed."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def _floats(v) -> list:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return [float(x) for x in str(v).replace(" ", "").split(",") if x]


def _ints(v) -> list:
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    return [int(x) for x in str(v).replace(" ", "").split(",") if x]


@dataclass
class RunConfig:
    grid: GridSpec
    nu: float
    ic: dict
    taus: list = field(default_factory=lambda: [0.0])
    time_unit: str = GRID_TIME
    orders: list = field(default_factory=lambda: [2])
    m: int = 1
    rho: object = "axis"
    prefactor: str = "2nu"
    readout: dict = field(default_factory=dict)
    ensemble: dict = field(default_factory=dict)
    resources: dict = field(default_factory=dict)
    out_dir: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])
    seed: int | None = None
    max_qubits: int = DEFAULT_MAX_QUBITS

    def as_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"n_x": self.grid.n_x, "L": self.grid.L, "bc": self.grid.bc}
        d.pop("out_dir")
        return d

    @property
    def hash(self) -> str:
        return config_hash(self.as_dict())

    def ic_object(self, seed_override: int | None = None):
        kind = self.ic.get("kind", "random")
        if kind == "random":
            seed = self.ic.get("seed", 0) if seed_override is None else seed_override
            return RandomIC(float(self.ic.get("sigma_xi", 0.3)), int(self.ic.get("j_max", 5)), int(seed))
        if kind == "plane_wave":
            return PlaneWaveIC(float(self.ic.get("delta_m", 0.1)), int(self.ic.get("m", 1)))
        if kind == "file":
            data = np.loadtxt(self.ic["path"], delimiter=",", comments="#", ndmin=2, skiprows=_header_rows(self.ic["path"]))
            return PsiField(self.grid, data[:, -1])
        raise ConfigError(f"unknown ic kind {kind!r}")

    def ic_seed(self) -> int:
        if self.seed is not None:
            return derive_seed(self.seed, _IC)
        return int(self.ic.get("seed", 0))

    def noise(self) -> ReadoutNoise:
        r = self.readout
        seed = derive_seed(self.seed, _READOUT) if self.seed is not None else int(r.get("seed", 0))
        reps = r.get("repetitions")
        return ReadoutNoise(
            epsilon3=float(r.get("epsilon3", 0.0)),
            mode=r.get("mode", "exact"),
            repetitions=None if reps in (None, "") else int(reps),
            seed=seed,
        )

    def error_terms(self) -> dict:
        r = self.readout
        return {k: float(r.get(k, 0.0)) for k in ("eps1", "eps2", "eps4")}

    def member_seeds(self) -> list:
        e = self.ensemble
        if "seeds" in e and e["seeds"] not in (None, ""):
            return _ints(e["seeds"])
        count = 1 << int(e.get("n_en", 0))
        base = self.seed if self.seed is not None else int(e.get("base_seed", self.ic.get("seed", 0)))
        return [derive_seed(base, _ENSEMBLE, a) for a in range(count)]


def _header_rows(path) -> int:
    first = [line for line in Path(path).read_text().splitlines() if not line.startswith("#")][:1]
    if not first:
        return 0
    try:
        [float(c) for c in first[0].split(",")]
        return 0
    except ValueError:
        return 1


def _read_raw(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".json":
        return json.loads(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    return {s: dict(cp[s]) for s in cp.sections()}


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = _read_raw(path)
    except (configparser.Error, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def _ratio(v):
    return "auto" if str(v).strip() == "auto" else float(v)


def _rho_spec(v):
    if isinstance(v, (list, tuple)):
        return "; ".join(",".join(str(int(x)) for x in np.atleast_1d(r)) for r in v)
    return str(v).strip()


# typed keys per section, so INI strings and JSON numbers hash identically
_SCHEMAS = {
    "ic": {"kind": str, "sigma_xi": float, "j_max": int, "seed": int, "delta_m": float, "m": int, "path": str},
    "readout": {"mode": str, "epsilon3": float, "repetitions": int, "seed": int, "eps1": float, "eps2": float, "eps4": float},
    "ensemble": {"n_en": int, "base_seed": int, "seeds": _ints},
    "resources": {"n": int, "n_x": int, "m": int, "tau": float, "eps": float, "norm_ratio": _ratio, "n_x_range": _ints},
}


def _typed(section: str, raw: dict) -> dict:
    schema = _SCHEMAS[section]
    out = {}
    for k, v in raw.items():
        if k not in schema:
            raise ConfigError(f"unknown key {section}.{k}")
        if v is None or (isinstance(v, str) and not v.strip()):
            continue
        out[k] = schema[k](v.strip() if isinstance(v, str) else v)
    return out


def config_from_dict(raw: dict, base_dir=None) -> RunConfig:
    try:
        g = raw.get("grid", {})
        grid = GridSpec(int(g.get("n_x", 7)), float(g.get("L", 1.0)), g.get("bc", "periodic"))
        nu = float(raw.get("physics", {}).get("nu", 1.0))
        PhysicsParams(nu)
        ic = _typed("ic", raw.get("ic", {"kind": "random"}))
        variants = [k for k in ("random", "plane_wave", "file") if ic.get("kind", "random") == k]
        if len(variants) != 1:
            raise ConfigError(f"ic.kind must be one of random, plane_wave, file; got {ic.get('kind')!r}")
        if ic.get("kind") == "file":
            p = Path(ic.get("path", ""))
            if base_dir is not None and not p.is_absolute():
                p = Path(base_dir) / p
            if not p.exists():
                raise ConfigError(f"initial-condition file does not exist: {p}")
            ic["path"] = str(p)
        pl = raw.get("pipeline", {})
        rho = _rho_spec(pl.get("rho", "axis"))
        out = raw.get("output", {})
        run = raw.get("run", {})
        formats = out.get("formats", ["csv", "json"])
        formats = [f.strip() for f in formats.split(",")] if isinstance(formats, str) else list(formats)
        cfg = RunConfig(
            grid=grid,
            nu=nu,
            ic=ic,
            taus=_floats(pl.get("taus", [0.0])),
            time_unit=pl.get("time_unit", GRID_TIME),
            orders=_ints(pl.get("orders", [2])),
            m=int(pl.get("m", min(3, grid.n_x))),
            rho=rho,
            prefactor=pl.get("prefactor", "2nu"),
            readout=_typed("readout", raw.get("readout", {})),
            ensemble=_typed("ensemble", raw.get("ensemble", {})),
            resources=_typed("resources", raw.get("resources", {})),
            out_dir=out.get("directory", "out"),
            formats=formats,
            seed=None if run.get("seed") in (None, "") else int(run["seed"]),
            max_qubits=int(run.get("max_qubits", DEFAULT_MAX_QUBITS)),
        )
    except BurgersError as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if not cfg.taus or any(t < 0 for t in cfg.taus) or np.any(np.diff(cfg.taus) <= 0):
        raise ConfigError("pipeline.taus must be non-negative and strictly increasing")
    if cfg.time_unit not in ("grid", "domain"):
        raise ConfigError(f"pipeline.time_unit must be grid or domain, got {cfg.time_unit!r}")
    if not (1 <= cfg.m <= cfg.grid.n_x):
        raise ConfigError(f"pipeline.m must lie in [1, n_x={cfg.grid.n_x}]")
    if any(n < 2 for n in cfg.orders):
        raise ConfigError("pipeline.orders must all be >= 2")
    if any(f not in ("csv", "json") for f in cfg.formats):
        raise ConfigError(f"output.formats must be csv and/or json, got {cfg.formats}")
    try:
        cfg.noise()
    except BurgersError as exc:
        raise ConfigError(str(exc)) from exc


def rho_sweep(spec, n: int, m: int) -> list:
    """Offset vectors for order ``n`` on ``2**m`` coarse cells."""
    M = 1 << m
    if spec == "all":
        if M ** (n - 1) > MAX_SWEEP:
            raise ConfigError(f"full rho sweep for n={n}, m={m} has {M ** (n - 1)} points (limit {MAX_SWEEP})")
        return [tuple(r) for r in itertools.product(range(M), repeat=n - 1)]
    if spec == "axis":
        return [(r,) + (0,) * (n - 2) for r in range(M)]
    vecs = []
    for part in str(spec).split(";"):
        v = tuple(_ints(part))
        if len(v) == n - 1:
            vecs.append(v)
    if not vecs:
        raise ConfigError(f"rho spec {spec!r} has no offset vectors of length {n - 1}")
    return vecs


class _Output:
    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.out_dir)
        self.hash = cfg.hash
        self.formats = cfg.formats
        self.written = []
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            probe = self.dir / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise OSError(f"cannot write to output directory {self.dir}: {exc}") from exc

    def csv(self, name, columns, rows):
        if "csv" in self.formats:
            self.written.append(write_csv(self.dir / f"{name}.csv", columns, rows, self.hash))

    def json(self, name, obj, always=False):
        if always or "json" in self.formats:
            self.written.append(write_json(self.dir / f"{name}.json", obj, self.hash))


def _physics(cfg):
    return PhysicsParams(cfg.nu)


def cmd_evolve(cfg: RunConfig) -> list:
    out = _Output(cfg)
    psi0 = initial_psi(cfg.grid, cfg.ic_object(cfg.ic_seed()))
    rows, snaps = [], []
    for t in cfg.taus:
        psi = propagate_psi(psi0, to_grid_tau(t, cfg.grid, cfg.time_unit))
        rows += [[t, x, v, psi.mean] for x, v in zip(cfg.grid.x, psi.values)]
        snaps.append({"tau": t, "psi": psi.values.tolist(), "psi_bar": psi.mean})
    out.csv("evolve", ["tau", "x", "psi", "psi_bar"], rows)
    out.json("evolve", {"time_unit": cfg.time_unit, "x": cfg.grid.x.tolist(), "snapshots": snaps})
    return out.written


def cmd_correlate(cfg: RunConfig) -> list:
    out = _Output(cfg)
    g = cfg.grid
    psi0 = initial_psi(g, cfg.ic_object(cfg.ic_seed()))
    dpsi0 = derivative(psi0)
    noise = cfg.noise()
    terms = cfg.error_terms()
    prov = {"seed": cfg.seed, "ic_seed": cfg.ic_seed(), "readout_seed": noise.seed, "time_unit": cfg.time_unit, "runs": []}
    for n in cfg.orders:
        rhos = rho_sweep(cfg.rho, n, cfg.m)
        rows, columns = [], None
        for i, t in enumerate(cfg.taus):
            tau = to_grid_tau(t, g, cfg.time_unit)
            local = replace(noise, seed=derive_seed(noise.seed, n, i))
            res = correlate(dpsi0, tau, n, cfg.m, rhos, local, cfg.max_qubits, eps1=terms["eps1"], eps2=terms["eps2"], eps4=terms["eps4"])
            columns = ["tau"] + res.columns()
            rows += [[t] + r for r in res.rows()]
            psi_t = propagate_psi(psi0, tau)
            ucg = coarse_field(derivative(psi_t), cfg.m)
            dev = max(abs(q - brute_force_ratio(ucg, rho)) for q, rho in zip(res.ratios, rhos))
            prov["runs"].append(
                {
                    "n": n,
                    "tau": t,
                    "readout_seed": local.seed,
                    "error_bound": res.error_bound,
                    "norm_ratio": norm_ratio(dpsi0, tau),
                    "max_deviation_from_classical": dev,
                }
            )
        out.csv(f"correlate_n{n}", columns, rows)
    out.json("correlate_provenance", prov, always=True)
    return out.written


def cmd_flatness(cfg: RunConfig) -> list:
    out = _Output(cfg)
    g, p = cfg.grid, _physics(cfg)
    kind = cfg.ic.get("kind", "random")
    seeds = _ints(cfg.ensemble["seeds"]) if kind == "random" and cfg.ensemble.get("seeds") else [cfg.ic_seed()]
    series = []
    for s in seeds:
        ic = cfg.ic_object(s)
        fs = run_figure2(g, ic, p, cfg.taus, cfg.time_unit, cfg.prefactor)
        if kind == "random" and len(seeds) > 1:
            fs.label = f"seed {s}"
        series.append((s, fs))
    summary = {"label": "seed-median" if len(series) > 1 else "single realization", "time_unit": cfg.time_unit}
    if len(series) == 1:
        fs = series[0][1]
        out.csv("flatness", fs.columns(), fs.rows())
    else:
        for s, fs in series:
            out.csv(f"flatness_seed{s}", fs.columns(), fs.rows())
        med_e = np.median([fs.beta_exact for _, fs in series], axis=0)
        med_a = np.median([fs.beta_approx for _, fs in series], axis=0)
        fs = series[0][1]
        out.csv("flatness_median", fs.columns(), [list(r) for r in zip(cfg.taus, med_e, med_a)])
    final_e = float(np.median([fs.beta_exact[-1] for _, fs in series]))
    final_a = float(np.median([fs.beta_approx[-1] for _, fs in series]))
    summary.update(
        seeds=seeds if kind == "random" else None,
        final_tau=cfg.taus[-1],
        beta_exact_final=final_e,
        beta_approx_final=final_a,
        distance_exact_to_asymptote=abs(final_e - ASYMPTOTIC_BETA),
        distance_approx_to_asymptote=abs(final_a - ASYMPTOTIC_BETA),
    )
    psi0 = initial_psi(g, cfg.ic_object(seeds[0]))
    u0 = cole_hopf_inverse_exact(psi0, p)
    summary["reynolds_initial"] = reynolds_diagnostic(u0, p, g.L)
    if kind == "plane_wave":
        ic = cfg.ic_object()
        summary["beta_series"] = [analytic_beta_plane_wave(ic, g, to_grid_tau(t, g, cfg.time_unit)) for t in cfg.taus]
    out.json("flatness_summary", summary, always=True)
    return out.written


def cmd_resources(cfg: RunConfig) -> list:
    out = _Output(cfg)
    r = cfg.resources
    n = int(r.get("n", max(cfg.orders)))
    n_x = int(r.get("n_x", cfg.grid.n_x))
    m = int(r.get("m", cfg.m))
    tau = float(r.get("tau", to_grid_tau(cfg.taus[-1], cfg.grid, cfg.time_unit)))
    eps = float(r.get("eps", 0.01))
    ratio = r.get("norm_ratio", "auto")
    if ratio == "auto":
        psi0 = initial_psi(cfg.grid, cfg.ic_object(cfg.ic_seed()))
        ratio = norm_ratio(derivative(psi0), to_grid_tau(cfg.taus[-1], cfg.grid, cfg.time_unit))
    ratio = float(ratio)
    lo, hi = _ints(r.get("n_x_range", "6, 30"))
    try:
        budget = resources.cost_table(n, n_x, m, tau, ratio, eps)
        scan = resources.crossover_scan(n, m, tau, ratio, eps, range(lo, hi + 1))
        penalty = resources.crossover_scan(n, None, tau, ratio, eps, range(lo, hi + 1))
    except BurgersError as exc:
        raise ConfigError(str(exc)) from exc
    out.csv("resources_cost", ["row", "count"], [[k, v] for k, v in budget.counts.items()] + [["total", budget.total]])
    out.json("resources_cost", budget.to_dict())
    cols = ["n_x", "m", "quantum", "classical", "quantum_wins", "quantum_no_coarse_graining"]
    rows = [
        [a["n_x"], a["m"], a["quantum"], a["classical"], a["quantum_wins"], b["quantum"]]
        for a, b in zip(scan.rows, penalty.rows)
    ]
    out.csv("resources_crossover", cols, rows)
    out.json("resources_crossover", {"crossover_n_x": scan.crossover_n_x, "label": resources.UNIT_CONSTANTS})
    return out.written


def cmd_ensemble(cfg: RunConfig) -> list:
    out = _Output(cfg)
    g = cfg.grid
    seeds = cfg.member_seeds()
    if len(seeds) & (len(seeds) - 1):
        raise ConfigError(f"ensemble size {len(seeds)} is not a power of two")
    psis = [initial_psi(g, cfg.ic_object(s)) for s in seeds]
    dpsi0s = [derivative(p) for p in psis]
    noise = cfg.noise()
    terms = cfg.error_terms()
    prov = {"seed": cfg.seed, "member_seeds": seeds, "readout_seed": noise.seed, "runs": []}
    for n in cfg.orders:
        rhos = rho_sweep(cfg.rho, n, cfg.m)
        rows, columns = [], None
        for i, t in enumerate(cfg.taus):
            tau = to_grid_tau(t, g, cfg.time_unit)
            local = replace(noise, seed=derive_seed(noise.seed, n, i))
            res = correlate_ensemble(dpsi0s, tau, n, cfg.m, rhos, local, cfg.max_qubits, eps1=terms["eps1"], eps2=terms["eps2"], eps4=terms["eps4"])
            fine = [derivative(propagate_psi(p, tau)) for p in psis]
            classical = [ensemble_brute_force_ratio(fine, rho, cfg.m) for rho in rhos]
            columns = ["tau"] + res.columns() + ["classical_ratio"]
            rows += [[t] + r + [c] for r, c in zip(res.rows(), classical)]
            prov["runs"].append({"n": n, "tau": t, "readout_seed": local.seed, "error_bound": res.error_bound})
        out.csv(f"ensemble_n{n}", columns, rows)
    out.json("ensemble_provenance", prov, always=True)
    return out.written


COMMANDS = {
    "evolve": cmd_evolve,
    "correlate": cmd_correlate,
    "flatness": cmd_flatness,
    "resources": cmd_resources,
    "ensemble": cmd_ensemble,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qburgers", description="Emulated quantum Burgers-turbulence statistics")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI or JSON run configuration")
    ap.add_argument("--seed", type=int, help="master seed (overrides config seeds)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", choices=["csv", "json"], help="write only this format")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
    mode.add_argument("--gaussian", dest="mode", action="store_const", const="gaussian")
    mode.add_argument("--shot", dest="mode", action="store_const", const="shot")
    ap.add_argument("--max-qubits", type=int, help=f"statevector ceiling (default {DEFAULT_MAX_QUBITS})")
    return ap


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        if not (0 <= args.seed < 2**64):
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    if args.format:
        cfg.formats = [args.format]
    if args.mode:
        cfg.readout = {**cfg.readout, "mode": args.mode}
    if args.max_qubits is not None:
        cfg.max_qubits = args.max_qubits
    _validate(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        written = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NumericalGuardError, ZeroDivisionError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BurgersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
