"""Monte-Carlo experiments: NMSE sweeps, ALS convergence studies, cost tables.

Each trial draws its own random streams from ``SeedSequence(seed,
spawn_key=(trial,))``, so a trial's numbers depend only on the config and
its index. Results are gathered in trial order and reduced afterwards, which
keeps reports identical for any worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import partial
import logging
import time

import numpy as np

from ..channel_model import ArFadingConfig, draw_channel, ura_shape
from ..errors import ConfigError, IrsParafacError
from ..estimation import als_fit_normalized, krf_estimate, ls_estimate, nmse, nmse_per_block
from ..pilot_design import simulate_block, standard_design
from .config import ExperimentConfig

log = logging.getLogger(__name__)

ALGORITHMS = ("LS", "KRF", "ALS")


@dataclass
class ResultRow:
    algorithm: str
    snr_db: float
    nmse: float | None
    nmse_db: float | None
    iterations_median: float | None = None
    nonconverged_frac: float | None = None
    seed: int = 0
    nmse_per_block: float | None = None
    iterations_mean: float | None = None
    grid: str = ""
    grid_value: int | None = None
    status: str = "ok"


@dataclass
class ComplexityRow:
    algorithm: str
    M: int
    Q: int
    N: int
    K: int
    rank: int
    als_iter: float
    order: float
    order_with_ls: float


@dataclass
class RunReport:
    experiment: str
    config: ExperimentConfig
    rows: list[ResultRow] = field(default_factory=list)
    complexity: list[ComplexityRow] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    wall_clock_s: float = 0.0
    # largest e(i) - e(i-1) seen in any ALS run; <= 0 means monotone
    max_als_increase: float = -np.inf
    traces: dict = field(default_factory=dict)

    def row(self, algorithm: str, snr_db: float, grid_value=None) -> ResultRow:
        for r in self.rows:
            if r.algorithm == algorithm and r.snr_db == snr_db and r.grid_value == grid_value:
                return r
        raise KeyError((algorithm, snr_db, grid_value))


@dataclass
class TrialResult:
    nmse: np.ndarray  # (n_snr, 3), whole-tensor NMSE per algorithm
    nmse_block: np.ndarray  # (n_snr, 3), mean per-block NMSE
    iterations: np.ndarray  # (n_snr,)
    converged: np.ndarray  # (n_snr,)
    max_increase: float
    traces: list | None = None


def _design(cfg: ExperimentConfig):
    return standard_design(cfg.M, cfg.Q, cfg.N, cfg.T)


def preflight(cfg: ExperimentConfig) -> None:
    """Reject a scenario before any sampling happens."""
    cfg.identifiability().require()
    _design(cfg)


def run_trial(cfg: ExperimentConfig, trial: int, keep_traces: bool = False) -> TrialResult:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(trial,))
    chan_ss, *snr_ss = ss.spawn(1 + len(cfg.snr_grid_db))
    design = _design(cfg)
    ch = draw_channel(
        np.random.default_rng(chan_ss), cfg.M, cfg.Q, cfg.N, cfg.L1, cfg.L2,
        ArFadingConfig(cfg.ar_lambda, cfg.K),
    )
    R_true = ch.combined_tensor()

    n_snr = len(cfg.snr_grid_db)
    out = TrialResult(
        nmse=np.empty((n_snr, 3)),
        nmse_block=np.empty((n_snr, 3)),
        iterations=np.empty(n_snr, dtype=int),
        converged=np.empty(n_snr, dtype=bool),
        max_increase=-np.inf,
        traces=[] if keep_traces else None,
    )
    for i, (snr, s) in enumerate(zip(cfg.snr_grid_db, snr_ss)):
        rng = np.random.default_rng(s)
        received = [simulate_block(ch.G, ch.H[k], design, snr, rng, k).y for k in range(cfg.K)]
        ls = ls_estimate(received, design)
        krf = krf_estimate(ls, cfg.M, cfg.Q, cfg.N)
        rep = als_fit_normalized(ls.R_hat, cfg.rank, cfg.eps, cfg.i_max, rng, cfg.als_init)
        estimates = (ls.R_hat, krf.R_hat, rep.reconstruct())
        out.nmse[i] = [nmse(R_true, e) for e in estimates]
        out.nmse_block[i] = [nmse_per_block(R_true, e) for e in estimates]
        out.iterations[i] = rep.iterations
        out.converged[i] = rep.converged
        steps = np.diff([rep.initial_error] + rep.error_trace)
        if steps.size:
            out.max_increase = max(out.max_increase, float(steps.max()))
        if keep_traces:
            out.traces.append(list(rep.error_trace))
    return out


def run_trials(cfg: ExperimentConfig, keep_traces: bool = False) -> list[TrialResult]:
    work = partial(run_trial, cfg, keep_traces=keep_traces)
    if cfg.workers == 1:
        return [work(t) for t in range(cfg.trials)]
    chunk = max(1, cfg.trials // (4 * cfg.workers))
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(work, range(cfg.trials), chunksize=chunk))


def _db(x: float) -> float:
    return float(10.0 * np.log10(x)) if x > 0 else -np.inf


def _aggregate(cfg: ExperimentConfig, results: list[TrialResult], algorithms=ALGORITHMS,
               grid: str = "", grid_value=None) -> list[ResultRow]:
    nm = np.stack([r.nmse for r in results])  # (trials, n_snr, 3)
    nb = np.stack([r.nmse_block for r in results])
    its = np.stack([r.iterations for r in results])  # (trials, n_snr)
    conv = np.stack([r.converged for r in results])
    rows = []
    for a, name in enumerate(ALGORITHMS):
        if name not in algorithms:
            continue
        for i, snr in enumerate(cfg.snr_grid_db):
            mean = float(nm[:, i, a].mean())
            row = ResultRow(
                algorithm=name,
                snr_db=float(snr),
                nmse=mean,
                nmse_db=_db(mean),
                seed=cfg.seed,
                nmse_per_block=float(nb[:, i, a].mean()),
                grid=grid,
                grid_value=grid_value,
            )
            if name == "ALS":
                row.iterations_median = float(np.median(its[:, i]))
                row.iterations_mean = float(its[:, i].mean())
                row.nonconverged_frac = float(1.0 - conv[:, i].mean())
            rows.append(row)
    return rows


def run_nmse_sweep(cfg: ExperimentConfig, keep_traces: bool = False) -> RunReport:
    """NMSE of LS, KRF and ALS against training SNR, averaged over trials."""
    preflight(cfg)
    t0 = time.perf_counter()
    log.info("nmse sweep: %d trials x %d SNR points", cfg.trials, len(cfg.snr_grid_db))
    results = run_trials(cfg, keep_traces)
    report = RunReport("nmse-sweep", cfg, rows=_aggregate(cfg, results))
    report.max_als_increase = max(r.max_increase for r in results)
    if keep_traces:
        report.traces = {
            float(snr): [r.traces[i] for r in results] for i, snr in enumerate(cfg.snr_grid_db)
        }
    report.wall_clock_s = time.perf_counter() - t0
    return report


def single_run(cfg: ExperimentConfig) -> RunReport:
    """One trial (index 0) across the SNR grid, with the ALS error traces kept."""
    report = run_nmse_sweep(replace(cfg, trials=1, workers=1), keep_traces=True)
    report.experiment = "single-run"
    return report


def grid_variant(cfg: ExperimentConfig, vary: str, value: int) -> ExperimentConfig:
    if vary == "path_products":
        L1, L2 = ura_shape(value)
        return replace(cfg, L1=L1, L2=L2)
    if vary == "reflector_counts":
        return replace(cfg, N=value, T=cfg.Q * value)
    raise ConfigError(f"unknown convergence grid {vary!r}")


def run_convergence_study(cfg: ExperimentConfig, vary: str = "path_products") -> RunReport:
    """ALS iteration statistics over SNR for each point of one grid.

    ``vary="path_products"`` walks ``cfg.path_products`` (L1*L2, split into
    the most-square factor pair); ``vary="reflector_counts"`` walks
    ``cfg.reflector_counts`` with ``T = Q*N``. Points that fail
    identifiability or the pilot constraints are reported as skipped.
    """
    if vary not in ("path_products", "reflector_counts"):
        raise ConfigError(f"vary must be 'path_products' or 'reflector_counts', got {vary!r}")
    t0 = time.perf_counter()
    report = RunReport("convergence", cfg)
    for value in getattr(cfg, vary):
        variant = grid_variant(cfg, vary, value)
        try:
            preflight(variant)
        except IrsParafacError as exc:
            reason = f"{type(exc).__name__}: {exc}"
            log.warning("skipping %s=%d (%s)", vary, value, reason)
            report.skipped.append({"grid": vary, "value": value, "reason": reason})
            report.rows.append(ResultRow("ALS", float("nan"), None, None, seed=cfg.seed,
                                         grid=vary, grid_value=value, status="skipped"))
            continue
        log.info("convergence %s=%d: %d trials", vary, value, variant.trials)
        results = run_trials(variant)
        report.rows.extend(_aggregate(variant, results, ("ALS",), vary, value))
        report.max_als_increase = max(report.max_als_increase,
                                      max(r.max_increase for r in results))
    report.wall_clock_s = time.perf_counter() - t0
    return report


def complexity_orders(M: int, Q: int, N: int, K: int, rank: int, als_iter) -> dict:
    """Flop-order estimates of the three estimators.

    LS is ``K (MQN)^3``; KRF is ``K MQN``; ALS is
    ``K MQN iter rank^2 (1 + K/N + K/(MQ))``. KRF and ALS both consume the
    LS estimate, so their totals add the LS term.
    """
    mqn = M * Q * N
    ls = Fraction(K * mqn**3)
    krf = Fraction(K * mqn)
    als = (Fraction(K * mqn) * Fraction(als_iter) * rank**2
           * (1 + Fraction(K, N) + Fraction(K, M * Q)))
    return {
        "LS": (float(ls), float(ls)),
        "KRF": (float(krf), float(krf + ls)),
        "ALS": (float(als), float(als + ls)),
    }


def complexity_report(cfg: ExperimentConfig, als_iter: float | None = None) -> RunReport:
    """Cost table over ``cfg.complexity_n_grid`` with the other dimensions fixed."""
    als_iter = cfg.als_iter if als_iter is None else als_iter
    report = RunReport("complexity", cfg)
    for n in cfg.complexity_n_grid:
        for name, (own, total) in complexity_orders(
            cfg.M, cfg.Q, n, cfg.K, cfg.rank, als_iter
        ).items():
            report.complexity.append(
                ComplexityRow(name, cfg.M, cfg.Q, n, cfg.K, cfg.rank, float(als_iter), own, total)
            )
    return report


def measured_als_iterations(cfg: ExperimentConfig) -> float:
    """Median ALS iteration count over a sweep of ``cfg``."""
    preflight(cfg)
    its = np.concatenate([r.iterations for r in run_trials(cfg)])
    return float(np.median(its))


__all__ = [
    "ALGORITHMS",
    "ComplexityRow",
    "ResultRow",
    "RunReport",
    "TrialResult",
    "complexity_orders",
    "complexity_report",
    "grid_variant",
    "measured_als_iterations",
    "preflight",
    "run_convergence_study",
    "run_nmse_sweep",
    "run_trial",
    "run_trials",
    "single_run",
]
