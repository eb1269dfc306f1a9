"""Experiment runners behind the command-line interface.

Every (d, seed) cell realizes its channels once from a seed derived from
``(seed, d)``, and every scheme in the cell sees that same ``ChannelSet``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import baselines
from .channel import Geometry, default_link_params, random_unit_channels, realize_channels
from .hho import HhoConfig, optimize
from .problem import (
    ProblemInstance,
    decode,
    fitness,
    fitness_batch,
    mrt_seed,
    project_feasible,
    received_power,
    search_bounds,
    snr_db,
)

log = logging.getLogger(__name__)

DEFAULT_D_LIST = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 48.0, 50.0, 51.0, 55.0, 60.0)
SCHEMES = ("no-irs", "ao", "hho")
SWEEP_HEADER = ["scheme", "d_m", "seed", "snr_db", "power_w", "wall_time_s", "Q", "T", "iterations"]
TIMING_COLUMNS = {"wall_time_s"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    M: int = 8
    N_x: int = 5
    N_y: int = 10
    p_ap_dbm: float = 5.0
    sigma2_dbm: float = -80.0
    mu: float = 1.0
    d_list: list = field(default_factory=lambda: list(DEFAULT_D_LIST))
    Q: int = 80
    T: int = 500
    seeds: list = field(default_factory=lambda: list(range(10)))
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    ap_user_exponent: float = 3.5
    ap_irs_exponent: float = 2.2
    irs_user_exponent: float = 2.8
    penetration_db: float = 10.0
    element_gain_dbi: float = 5.0
    los_mode: str = "geometric"
    wrap_phases: bool = True
    ao_tol: float = 1e-8
    ao_max_iter: int = 1000
    out: str = "results"
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    @property
    def N(self) -> int:
        return self.N_x * self.N_y

    def validate(self):
        if self.M < 1 or self.N_x < 0 or self.N_y < 1:
            raise ConfigError("M and N_y must be >= 1 and N_x >= 0")
        if self.Q < 2 or self.T < 1:
            raise ConfigError("population size Q must be >= 2 and iterations T >= 1")
        if self.mu <= 0:
            raise ConfigError("penalty factor mu must be positive")
        if not self.d_list or any(float(d) < 0 for d in self.d_list):
            raise ConfigError("d_list must be a non-empty list of non-negative distances")
        if not self.seeds or any(int(s) < 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown or not self.schemes:
            raise ConfigError(f"unknown schemes {sorted(unknown)}; choose from {SCHEMES}")
        if self.los_mode not in ("geometric", "random"):
            raise ConfigError("los_mode must be 'geometric' or 'random'")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def links(self) -> dict:
        return default_link_params(self.ap_user_exponent, self.ap_irs_exponent, self.irs_user_exponent,
                                   self.penetration_db, self.element_gain_dbi)


@dataclass
class ExperimentRecord:
    scheme: str
    d_m: float
    seed: int
    snr_db: float
    power_w: float
    wall_time_s: float
    Q: int
    T: int
    iterations: int

    def row(self) -> list:
        return [self.scheme, _fmt(self.d_m), str(self.seed), _fmt(self.snr_db), _fmt(self.power_w),
                _fmt(self.wall_time_s), str(self.Q), str(self.T), str(self.iterations)]


def _fmt(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    return repr(v)


def _d_key(d: float) -> int:
    return int(round(float(d) * 1000))


def channel_rng(seed: int, d: float) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), _d_key(d), 0]))


def hho_seed(seed: int, d: float) -> int:
    return int(np.random.SeedSequence([int(seed), _d_key(d), 1]).generate_state(1, np.uint64)[0])


def build_instance(config: ExperimentConfig, d: float, seed: int) -> ProblemInstance:
    geometry = Geometry.for_user_distance(d)
    channels = realize_channels(geometry, config.M, config.N, config.links(), channel_rng(seed, d),
                                config.los_mode, config.N_y)
    return ProblemInstance.from_dbm(channels, config.p_ap_dbm, config.sigma2_dbm, config.mu)


def phase_mask(instance: ProblemInstance) -> np.ndarray:
    """True for the argument and phase-shift coordinates of the search vector."""
    mask = np.ones(instance.dimension, dtype=bool)
    mask[:instance.M] = False
    return mask


def run_hho(instance: ProblemInstance, Q: int, T: int, rng_seed: int, wrap_phases: bool = True,
            batch: bool = True):
    """HHO on the beamforming fitness, seeded with the MRT beamformer.

    Returns ``(solution, optimize_result)``.  The reported beamformer is
    scaled onto the power ball if the best position is (slightly) infeasible.
    """
    lb, ub = search_bounds(instance)
    config = HhoConfig(Q, T, lb, ub, rng_seed=rng_seed,
                       periodic=phase_mask(instance) if wrap_phases else None)
    if batch:
        objective = lambda X: fitness_batch(X, instance)  # noqa: E731
    else:
        objective = lambda x: fitness(x, instance)  # noqa: E731
    result = optimize(config, objective, seeds=[mrt_seed(instance)], batch=batch)
    solution = project_feasible(decode(result.best_position, instance.M, instance.N), instance.p_ap)
    return solution, result


def run_scheme(scheme: str, instance: ProblemInstance, config: ExperimentConfig, d: float,
               seed: int) -> ExperimentRecord:
    start = time.perf_counter()
    Q = T = 0
    if scheme == "no-irs":
        res = baselines.no_irs_snr(instance.channels, instance.p_ap)
        power, iterations = res.power, 0
    elif scheme == "ao":
        res = baselines.alternating_optimize(instance.channels, instance.p_ap, config.ao_tol, config.ao_max_iter)
        power, iterations = res.power, res.iterations
    elif scheme == "hho":
        solution, _ = run_hho(instance, config.Q, config.T, hho_seed(seed, d), config.wrap_phases)
        power, iterations = received_power(instance.channels, solution), config.T
        Q, T = config.Q, config.T
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    elapsed = time.perf_counter() - start
    return ExperimentRecord(scheme, float(d), int(seed), snr_db(power, instance.sigma2), power,
                            elapsed, Q, T, iterations)


def _run_cell(config: ExperimentConfig, d: float, seed: int) -> list:
    instance = build_instance(config, d, seed)
    return [run_scheme(s, instance, config, d, seed) for s in config.schemes]


def sweep_distance(config: ExperimentConfig, path: Optional[str] = None) -> list:
    """Run every scheme for every (d, seed) cell; optionally write the sweep CSV."""
    cells = [(float(d), int(s)) for d in config.d_list for s in config.seeds]
    records = []
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            futures = [pool.submit(_run_cell, config, d, s) for d, s in cells]
            for fut in futures:
                records.extend(fut.result())
    else:
        for d, s in cells:
            log.info("sweep cell d=%s seed=%s", d, s)
            records.extend(_run_cell(config, d, s))
    records.sort(key=lambda r: (r.scheme, r.d_m, r.seed))
    if path is not None:
        write_csv(path, SWEEP_HEADER, [r.row() for r in records])
    return records


def write_csv(path, header: Sequence[str], rows) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_sweep(path) -> list:
    with open(path, newline="") as fh:
        return [ExperimentRecord(r["scheme"], float(r["d_m"]), int(r["seed"]), float(r["snr_db"]),
                                 float(r["power_w"]), float(r["wall_time_s"]), int(r["Q"]), int(r["T"]),
                                 int(r["iterations"]))
                for r in csv.DictReader(fh)]


def difference_report(records, scheme_a: str, scheme_b: str, path: Optional[str] = None) -> list:
    """Per-distance mean and std over seeds of ``snr_a - snr_b`` (dB).

    ``records`` is a list of ``ExperimentRecord`` or a path to a sweep CSV.
    """
    if isinstance(records, (str, os.PathLike)):
        records = read_sweep(records)
    table = {(r.scheme, r.d_m, r.seed): r.snr_db for r in records}
    cells = sorted({(r.d_m, r.seed) for r in records if r.scheme in (scheme_a, scheme_b)})
    missing = [c for c in cells if (scheme_a, *c) not in table or (scheme_b, *c) not in table]
    if missing or not cells:
        raise ValueError(f"schemes {scheme_a!r} and {scheme_b!r} are not paired for cells {missing[:5]}")
    rows = []
    for d in sorted({c[0] for c in cells}):
        diffs = np.array([table[(scheme_a, d, s)] - table[(scheme_b, d, s)] for dd, s in cells if dd == d])
        std = float(np.std(diffs, ddof=1)) if diffs.size > 1 else 0.0
        rows.append((d, float(np.mean(diffs)), std, int(diffs.size)))
    if path is not None:
        write_csv(path, ["d_m", "mean_diff_db", "std_diff_db", "n"],
                  [[_fmt(d), _fmt(m), _fmt(s), str(n)] for d, m, s, n in rows])
    return rows


def convergence_run(config: ExperimentConfig, d: float, seeds: Optional[Sequence[int]] = None,
                    path: Optional[str] = None) -> dict:
    """Best-so-far HHO fitness per iteration, one trace per seed."""
    seeds = config.seeds if seeds is None else seeds
    traces = {}
    for s in seeds:
        instance = build_instance(config, d, s)
        _, result = run_hho(instance, config.Q, config.T, hho_seed(s, d), config.wrap_phases)
        traces[int(s)] = result.trace
    if path is not None:
        rows = [[str(s), str(i + 1), _fmt(v)] for s, tr in traces.items() for i, v in enumerate(tr)]
        write_csv(path, ["seed", "iteration", "best_fitness"], rows)
    return traces


def timing_run(config: ExperimentConfig, grid: Sequence, d: float = 50.0, seed: int = 0,
               batch: bool = False, path: Optional[str] = None) -> list:
    """Wall time of one HHO run per ``(Q, T)`` grid point on a fixed instance.

    By default the fitness is evaluated one hawk at a time, the cost model of
    a black-box objective.
    """
    if not grid:
        raise ValueError("timing grid is empty")
    instance = build_instance(config, d, seed)
    rows = []
    for Q, T in grid:
        if Q < 2 or T < 1:
            raise ConfigError("timing grid needs Q >= 2 and T >= 1")
        _, result = run_hho(instance, int(Q), int(T), hho_seed(seed, d), config.wrap_phases, batch=batch)
        rows.append((int(Q), int(T), result.evaluations, result.wall_time))
    if path is not None:
        write_csv(path, ["Q", "T", "evaluations", "wall_time_s"],
                  [[str(q), str(t), str(e), _fmt(w)] for q, t, e, w in rows])
    return rows


def linear_fit_r2(x, y) -> float:
    """R^2 of an ordinary least-squares line ``y ~ a x + b``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(1.0 - resid @ resid / np.sum((y - y.mean()) ** 2))


@dataclass
class OracleSettings:
    n_list: tuple = (2, 4, 6)
    instances: int = 10
    seeds: int = 10
    Q: int = 50
    T: int = 500
    phase_levels: int = 64
    wrap_phases: bool = True
    ao_rtol: float = 1e-6
    brute_min: float = 0.995
    hho_min: float = 0.98


def oracle_instance(N: int, k: int) -> ProblemInstance:
    """Single-antenna instance with unit-variance Rayleigh links and unit power."""
    channels = random_unit_channels(1, N, np.random.default_rng(np.random.SeedSequence([int(N), int(k), 7])))
    return ProblemInstance(channels, 1.0, 1.0, 1.0)


def oracle_check(settings: Optional[OracleSettings] = None, path: Optional[str] = None):
    """Compare AO, brute force and HHO with the closed-form M = 1 optimum.

    Returns ``(rows, passed)`` where each row is a dict of per-instance ratios.
    """
    st = OracleSettings() if settings is None else settings
    if any(n > 6 or n < 1 for n in st.n_list):
        raise ConfigError("oracle check needs 1 <= N <= 6")
    rows = []
    for N in st.n_list:
        for k in range(st.instances):
            inst = oracle_instance(N, k)
            ch = inst.channels
            best = baselines.closed_form_optimum_m1(ch, inst.p_ap)
            ao = baselines.alternating_optimize(ch, inst.p_ap).power
            bf = baselines.brute_force(ch, inst.p_ap, st.phase_levels)
            hho = []
            for s in range(st.seeds):
                sol, _ = run_hho(inst, st.Q, st.T, hho_seed(s, 1000 * N + k), st.wrap_phases)
                hho.append(received_power(ch, sol) / best)
            rows.append({
                "N": N, "instance": k, "closed_form_w": best,
                "ao_ratio": ao / best, "brute_ratio": bf / best,
                "hho_median_ratio": float(np.median(hho)), "hho_min_ratio": float(np.min(hho)),
            })
    passed = all(abs(r["ao_ratio"] - 1) <= st.ao_rtol and st.brute_min <= r["brute_ratio"] <= 1 + 1e-12
                 and r["hho_median_ratio"] >= st.hho_min for r in rows)
    if path is not None:
        keys = list(rows[0])
        write_csv(path, keys, [[str(r[k]) if isinstance(r[k], int) else _fmt(r[k]) for k in keys] for r in rows])
    return rows, passed


def sphere(X):
    """Negated sphere, batch form; maximum 0 at the origin."""
    X = np.atleast_2d(X)
    return -np.sum(X * X, axis=1)


def rastrigin(X):
    """Negated Rastrigin, batch form; maximum 0 at the origin."""
    X = np.atleast_2d(X)
    return -(10.0 * X.shape[1] + np.sum(X * X - 10.0 * np.cos(2.0 * np.pi * X), axis=1))


SANITY_FUNCTIONS = {"sphere": (sphere, 100.0), "rastrigin": (rastrigin, 5.12)}


def hho_sanity(dimension: int = 30, Q: int = 30, T: int = 500, seeds: int = 20, tol: float = 1e-6,
               path: Optional[str] = None) -> list:
    """HHO on test functions with known optimum 0; one row per (function, seed)."""
    rows = []
    for name, (func, half_width) in SANITY_FUNCTIONS.items():
        lb = np.full(dimension, -half_width)
        for s in range(seeds):
            res = optimize(HhoConfig(Q, T, lb, -lb, rng_seed=s), func, batch=True)
            monotone = bool(np.all(np.diff(res.trace) >= 0))
            rows.append({"function": name, "seed": s, "gap": abs(res.best_fitness),
                         "success": abs(res.best_fitness) < tol, "monotone": monotone})
    if path is not None:
        write_csv(path, ["function", "seed", "gap", "success", "monotone"],
                  [[r["function"], str(r["seed"]), _fmt(r["gap"]), str(int(r["success"])), str(int(r["monotone"]))]
                   for r in rows])
    return rows
