"""Seeded experiment runs, grid search, aggregation and CSV output.

Replications of one (algorithm, merit, hyperparameter) triple run in
lockstep: the algorithm, environment and arm sampler each hold one random
stream per replication, so a batch of R runs produces exactly what R
separate runs with the same seeds would.
"""

from __future__ import annotations

import csv
import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .algos import ALGORITHMS, BanditAlgorithm, make_algorithm, theory_alpha
from .config import AlgorithmSpec, ExperimentConfig
from .envs import (
    Environment,
    LinearInstance,
    MabInstance,
    MultilabelEnv,
    ReplayEnv,
    chosen_context,
    load_multilabel,
    multilabel_to_linear,
    random_unit_vector,
    read_replay_log,
    split_rows,
)
from .fairpolicy import RegretTrace, average_exposure, average_optimal_exposure
from .merit import MeritFunction
from .optim import PgdConfig
from .oracle import FairOracle
from .rng import replication_seeds, sample_arms, split_streams

TEST_PHASE = 0
VALIDATION_PHASE = 1
BUILD_PHASE = 2

TRACE_FIELDS = ("round", "fr_cum", "rr_cum", "seed", "algo", "env", "merit_c")
EXPOSURE_FIELDS = ("arm", "avg_exposure", "optimal_exposure", "algo", "seed")
SUMMARY_FIELDS = ("algo", "merit_c", "T", "fr_mean", "fr_std", "rr_mean", "rr_std")


@dataclass
class RunResult:
    """One replication: regrets at each checkpoint plus exposure at the end.

    ``truncated`` marks replay runs whose log ran out before the horizon; their
    checkpoint lists stop at the last round actually reached.
    """

    seed: int
    checkpoints: np.ndarray
    fairness_regret: np.ndarray
    reward_regret: np.ndarray
    exposure: np.ndarray
    optimal_exposure: np.ndarray
    rounds: int
    truncated: bool = False
    wall_time: float = 0.0

    @property
    def final_fairness_regret(self) -> float:
        return float(self.fairness_regret[-1]) if self.fairness_regret.size else 0.0

    @property
    def final_reward_regret(self) -> float:
        return float(self.reward_regret[-1]) if self.reward_regret.size else 0.0


@dataclass
class Aggregate:
    checkpoints: np.ndarray
    fr_mean: np.ndarray
    fr_std: np.ndarray
    rr_mean: np.ndarray
    rr_std: np.ndarray
    n_runs: int


def default_checkpoints(horizon: int, count: int = 50) -> np.ndarray:
    """``count`` log-spaced rounds in ``[1, horizon]``, always including ``horizon``."""
    if horizon < 1:
        return np.zeros(0, np.int64)
    pts = np.unique(np.round(np.geomspace(1, horizon, count)).astype(np.int64))
    return np.union1d(pts, [horizon])


def resolve_checkpoints(spec, horizon: int) -> np.ndarray:
    if isinstance(spec, (int, np.integer)):
        return default_checkpoints(horizon, int(spec))
    pts = np.unique(np.asarray(spec, np.int64))
    pts = pts[(pts >= 1) & (pts <= horizon)]
    return np.union1d(pts, [horizon]) if horizon >= 1 else pts


AlgoFactory = Callable[..., BanditAlgorithm]


def run_batch(env: Environment, oracle: FairOracle, make_algo: AlgoFactory, horizon: int,
              seeds: Sequence[np.random.SeedSequence], checkpoints=None) -> list[RunResult]:
    """Run ``len(seeds)`` replications in lockstep.

    ``make_algo(rng=..., n_runs=...)`` builds the batched algorithm. Each loop
    iteration observes contexts, deploys the algorithm's policy, charges
    regret against the oracle, samples an arm and feeds back the reward.
    Rounds only count for replications whose event the environment accepts,
    which for replay means the sampled arm matched the logged one.
    """
    start = time.perf_counter()
    n = len(seeds)
    env_rng, algo_rng, sampler = split_streams(seeds)
    env.reset(env_rng, n)
    algo = make_algo(rng=algo_rng, n_runs=n)
    if algo.n_arms != env.n_arms:
        raise ValueError(f"algorithm has {algo.n_arms} arms but environment has {env.n_arms}")
    if algo.linear and algo.dim != env.dim:
        raise ValueError(f"algorithm dimension {algo.dim} != environment dimension {env.dim}")
    if oracle.linear != (env.dim is not None):
        raise ValueError("oracle and environment disagree on linear vs multi-armed")
    cps = resolve_checkpoints(50 if checkpoints is None else checkpoints, horizon)
    fr = np.full((n, cps.size), np.nan)
    rr = np.full((n, cps.size), np.nan)
    next_cp = np.zeros(n, np.int64)
    trace = RegretTrace.zeros(env.n_arms, (n,))
    rounds = np.zeros(n, np.int64)
    static = None if oracle.linear else (oracle.optimal_policy(), oracle.expected_rewards())
    rows = np.arange(n)

    while cps.size:
        active = (rounds < horizon) & ~env.exhausted()
        if not active.any():
            break
        contexts = env.observe()
        policy = algo.select(contexts)
        optimal, means = static or (oracle.optimal_policy(contexts), oracle.expected_rewards(contexts))
        arm = sample_arms(policy, sampler)
        reward, accepted = env.step(arm)
        accepted = accepted & active
        mask = None if accepted.all() else accepted
        trace.record(policy, optimal, means, arm, mask)
        algo.update(arm, reward, chosen_context(contexts, arm), mask)
        rounds += accepted
        idx = np.minimum(next_cp, cps.size - 1)
        hit = accepted & (next_cp < cps.size) & (rounds == cps[idx])
        if hit.any():
            fr[rows[hit], idx[hit]] = trace.cum_fairness_regret[hit]
            rr[rows[hit], idx[hit]] = trace.cum_reward_regret[hit]
            next_cp += hit

    wall = (time.perf_counter() - start) / max(n, 1)
    out = []
    for i in range(n):
        k = int(next_cp[i])
        reached = int(rounds[i])
        if reached:
            expo = trace.cum_policy_mass[i] / reached
            opt = trace.cum_optimal_mass[i] / reached
        else:
            expo = opt = np.full(env.n_arms, np.nan)
        out.append(RunResult(i, cps[:k].copy(), fr[i, :k].copy(), rr[i, :k].copy(), expo, opt,
                             reached, reached < horizon, wall))
    return out


def aggregate(results: Sequence[RunResult]) -> Aggregate:
    """Per-checkpoint mean and sample standard deviation (0 for a single run)."""
    if not results:
        raise ValueError("nothing to aggregate")
    cps = results[0].checkpoints
    for r in results[1:]:
        if not np.array_equal(r.checkpoints, cps):
            raise ValueError("results have misaligned checkpoints")
    fr = np.array([r.fairness_regret for r in results]).reshape(len(results), cps.size)
    rr = np.array([r.reward_regret for r in results]).reshape(len(results), cps.size)
    ddof = 1 if len(results) > 1 else 0
    return Aggregate(cps, fr.mean(0), fr.std(0, ddof=ddof), rr.mean(0), rr.std(0, ddof=ddof),
                     len(results))


# environment / oracle construction -----------------------------------------


@dataclass
class Setting:
    """Environment and oracle for one split and one merit."""

    env: Environment
    oracle: FairOracle
    label: str


def _build_seed(cfg: ExperimentConfig, purpose: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed, spawn_key=(BUILD_PHASE, purpose))


def build_setting(cfg: ExperimentConfig, merit: MeritFunction, split: str = "test") -> Setting:
    """Environment plus reference oracle for ``split`` ("validation" or "test").

    Synthetic environments are the same for both splits; datasets are split
    by a seeded row permutation and logs by day.
    """
    spec = dict(cfg.env)
    kind = spec.pop("kind")
    if split not in ("validation", "test"):
        raise ValueError(f"unknown split {split!r}")
    if kind == "mab":
        env = MabInstance(np.asarray(spec["means"], float), spec.get("noise", "bernoulli"),
                          float(spec.get("sigma", 1.0)), tuple(spec.get("reward_range", (-1.0, 1.0))))
        return Setting(env, FairOracle.known(env.means, merit), env.describe())
    if kind == "linear":
        theta = spec.get("theta_star")
        if theta is None:
            theta = random_unit_vector(spec["dim"], np.random.default_rng(_build_seed(cfg)))
        theta = np.asarray(theta, float)
        if theta.size != spec["dim"]:
            raise ValueError("theta_star length must equal dim")
        env = LinearInstance(theta, spec["n_arms"], float(spec.get("noise_sigma", 0.1)))
        return Setting(env, FairOracle.known(theta, merit, linear=True), env.describe())
    if kind == "multilabel":
        return _multilabel_setting(cfg, spec, merit, split)
    if kind == "replay":
        log = read_replay_log(cfg.resolve_path(spec["path"]))
        val, test = log.split_by_day(cfg.validation_fraction)
        part = val if split == "validation" else test
        name = os.path.splitext(os.path.basename(spec["path"]))[0]
        env = ReplayEnv(part, name)
        if part.contexts is None:
            means = np.array([part.rewards[part.arms == a].mean() if np.any(part.arms == a) else 0.0
                              for a in range(part.n_arms)])
            oracle = FairOracle("empirical_means", merit, means)
        else:
            x = part.contexts[np.arange(len(part)), part.arms]
            oracle = FairOracle.least_squares(x, part.rewards, merit)
        return Setting(env, oracle, name)
    raise ValueError(f"unknown env kind {kind!r}")


_DATASETS: dict[tuple, MultilabelEnv] = {}


def _multilabel_setting(cfg, spec, merit, split) -> Setting:
    path = cfg.resolve_path(spec["path"])
    mode = spec.get("mode", "mab")
    key = (path, mode, spec.get("rff_dim", 50), spec.get("rff_sigma"), spec.get("n_features"),
           spec.get("n_labels"), cfg.seed)
    if key not in _DATASETS:
        features, labels = load_multilabel(path, n_features=spec.get("n_features"),
                                           n_labels=spec.get("n_labels"))
        if mode == "mab":
            full = MultilabelEnv(features, labels, "mab")
        else:
            full = multilabel_to_linear(features, labels, spec.get("rff_dim", 50), spec.get("rff_sigma"),
                                        np.random.default_rng(_build_seed(cfg)), mode)
        full.name = os.path.splitext(os.path.basename(path))[0]
        _DATASETS[key] = full
    full = _DATASETS[key]
    val_rows, test_rows = split_rows(len(full.features), cfg.validation_fraction, _build_seed(cfg, 1))
    env = full.subset(val_rows if split == "validation" else test_rows)
    if mode == "mab":
        oracle = FairOracle.empirical_means(env.labels, merit)
    elif mode == "linear":
        oracle = FairOracle.from_gram(*env.full_information_gram(), merit)
    else:
        oracle = FairOracle.known(env.theta_ls, merit, linear=True)
    return Setting(env, oracle, env.describe())


def algorithm_factory(spec_name: str, params: dict[str, Any], setting: Setting, merit: MeritFunction,
                      horizon: int, pgd: PgdConfig | None = None) -> AlgoFactory:
    """Callable building the batched algorithm; ``alpha: theory`` uses the confidence-level width."""
    params = dict(params)
    if params.get("alpha") == "theory":
        params["alpha"] = theory_alpha(max(horizon, 1), setting.env.n_arms, float(params.pop("delta", 0.1)))
    cls = ALGORITHMS[spec_name]
    if pgd is not None and hasattr(cls, "optimistic_parameter"):
        params.setdefault("pgd", pgd)

    def make(*, rng, n_runs):
        return make_algorithm(spec_name, setting.env.n_arms, rng=rng, dim=setting.env.dim,
                              merit=merit, n_runs=n_runs, params=params)

    return make


def grid_points(spec: AlgorithmSpec) -> list[dict[str, Any]]:
    """Every combination of the grid, merged over the fixed params, in key order."""
    keys = sorted(spec.grid)
    return [{**spec.params, **dict(zip(keys, combo))}
            for combo in itertools.product(*(spec.grid[k] for k in keys))]


def _sort_key(params: dict[str, Any]) -> tuple:
    return tuple((k, repr(v) if not isinstance(v, (int, float)) else v) for k, v in sorted(params.items()))


def _job(args) -> list[RunResult]:
    cfg_dict, base_dir, algo_name, params, merit_index, split, phase = args
    cfg = ExperimentConfig.from_dict(cfg_dict, base_dir)
    _, merit = cfg.merits()[merit_index]
    setting = build_setting(cfg, merit, split)
    seeds = replication_seeds(cfg.seed, cfg.num_seeds, phase)
    pgd = PgdConfig(float(cfg.pgd["step_size"]), int(cfg.pgd["num_steps"]),
                    bool(cfg.pgd.get("vertex_start", True)))
    make = algorithm_factory(algo_name, params, setting, merit, cfg.horizon, pgd)
    return run_batch(setting.env, setting.oracle, make, cfg.horizon, seeds, cfg.checkpoints)


def run_jobs(cfg: ExperimentConfig, jobs: list[tuple[str, dict, int, str, int]],
             threads: int | None = None) -> list[list[RunResult]]:
    """Evaluate (algorithm, params, merit index, split, seed phase) jobs, optionally in processes."""
    threads = threads or int(os.environ.get("FAIRX_THREADS", cfg.threads))
    payload = [(cfg.to_dict(), cfg.base_dir, *job) for job in jobs]
    if threads <= 1 or len(payload) <= 1:
        return [_job(p) for p in payload]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_job, payload))


@dataclass
class GridOutcome:
    best: dict[str, Any]
    scores: list[tuple[dict[str, Any], float, float]] = field(default_factory=list)


def grid_search(cfg: ExperimentConfig, spec: AlgorithmSpec, merit_index: int = 0,
                threads: int | None = None) -> GridOutcome:
    """Pick the grid point with the lowest mean final fairness regret on the validation split.

    Ties go to the lower mean reward regret, then to the lexicographically
    smaller parameter assignment.
    """
    points = grid_points(spec)
    if not points:
        raise ValueError("empty grid")
    jobs = [(spec.name, p, merit_index, "validation", VALIDATION_PHASE) for p in points]
    scores = []
    for params, results in zip(points, run_jobs(cfg, jobs, threads)):
        agg_fr = float(np.mean([r.final_fairness_regret for r in results]))
        agg_rr = float(np.mean([r.final_reward_regret for r in results]))
        scores.append((params, agg_fr, agg_rr))
    best = min(scores, key=lambda s: (s[1], s[2], _sort_key(s[0])))
    return GridOutcome(best[0], scores)


@dataclass
class ExperimentResult:
    """Test-split results keyed by (algorithm, merit value)."""

    runs: dict[tuple[str, float | None], list[RunResult]]
    params: dict[tuple[str, float | None], dict[str, Any]]
    env_label: str
    horizon: int


def run_experiment(cfg: ExperimentConfig, tune: bool = False, threads: int | None = None) -> ExperimentResult:
    """Run every algorithm under every merit on the test split.

    With ``tune`` each algorithm's grid is searched on the validation split
    first; otherwise its fixed params are used as given.
    """
    merits = cfg.merits()
    chosen: dict[tuple[str, float | None], dict[str, Any]] = {}
    for spec, (mi, (value, _)) in itertools.product(cfg.algorithms, enumerate(merits)):
        if tune and spec.grid:
            chosen[(spec.name, value)] = grid_search(cfg, spec, mi, threads).best
        else:
            chosen[(spec.name, value)] = dict(spec.params)
    keys = list(chosen)
    index = {value: mi for mi, (value, _) in enumerate(merits)}
    jobs = [(name, chosen[(name, value)], index[value], "test", TEST_PHASE) for name, value in keys]
    runs = dict(zip(keys, run_jobs(cfg, jobs, threads)))
    label = build_setting(cfg, merits[0][1], "test").label
    return ExperimentResult(runs, chosen, label, cfg.horizon)


# CSV output ----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write(path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_traces(path, result: ExperimentResult) -> None:
    rows = (
        (int(cp), fr, rr, run.seed, algo, result.env_label, c)
        for (algo, c), runs in result.runs.items()
        for run in runs
        for cp, fr, rr in zip(run.checkpoints, run.fairness_regret, run.reward_regret)
    )
    _write(path, TRACE_FIELDS, rows)


def write_exposure(path, result: ExperimentResult) -> None:
    rows = (
        (arm, run.exposure[arm], run.optimal_exposure[arm], algo, run.seed)
        for (algo, _), runs in result.runs.items()
        for run in runs
        for arm in range(run.exposure.size)
    )
    _write(path, EXPOSURE_FIELDS, rows)


def write_summary(path, result: ExperimentResult) -> None:
    rows = []
    for (algo, c), runs in result.runs.items():
        fr = np.array([r.final_fairness_regret for r in runs])
        rr = np.array([r.final_reward_regret for r in runs])
        ddof = 1 if len(runs) > 1 else 0
        rows.append((algo, c, result.horizon, fr.mean(), fr.std(ddof=ddof), rr.mean(), rr.std(ddof=ddof)))
    _write(path, SUMMARY_FIELDS, rows)


def truncated_runs(result: ExperimentResult) -> list[tuple[str, float | None, int, int]]:
    """(algorithm, merit value, seed, rounds reached) for every truncated replay run."""
    return [(algo, c, r.seed, r.rounds) for (algo, c), runs in result.runs.items()
            for r in runs if r.truncated]
