"""Experiment orchestration: online loops, offline replays, metrics and CSV output.

Seeds: repeat ``i`` of an experiment with master seed ``s`` uses
``SeedSequence([s, i]).generate_state(1, uint64)[0]``, so every repeat is
reproducible on its own.  All randomness inside a run (pipage rounding,
random sets, independent rounding) comes from one PCG64 generator built
from that seed.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .datasets import InstanceSpec, generate, load_instance
from .matroid import Matroid
from .oco import make_policy
from .oracle import OracleConfig, second_stage_value
from .pipage import make_rng, pipage_round
from .relaxation import RelaxedReward

RAOCO = {"raoco-oga": "oga", "raoco-ftrl-l2": "ftrl-l2", "raoco-ftrl-h": "ftrl-h"}
ONLINE_BASELINES = ("1s-oga", "random")
OFFLINE_BASELINES = ("ofln-rgr", "ofln-co", "ofln-raoco")
ALGORITHMS = tuple(RAOCO) + ONLINE_BASELINES + OFFLINE_BASELINES
# algorithms whose behaviour depends on a learning rate
LEARNING = tuple(RAOCO) + ("1s-oga",)

CSV_COLUMNS = ["run_id", "seed", "algo", "eta", "t", "reward", "C_t", "oracle_mode", "step_ms"]
SUMMARY_COLUMNS = ["algo", "eta", "mean_CT", "std_CT", "repeats"]


def repeat_seed(master: int, i: int) -> int:
    return int(np.random.SeedSequence([int(master), int(i)]).generate_state(1, np.uint64)[0])


@dataclass
class RunRecord:
    algo: str
    eta: float | None
    seed: int
    rewards: list[float] = field(default_factory=list)
    modes: list[str] = field(default_factory=list)
    step_ms: list[float] = field(default_factory=list)
    x_frac: list[np.ndarray] = field(default_factory=list)
    x_int: list[np.ndarray] = field(default_factory=list)
    valid: bool = True
    error: str = ""
    run_id: str = ""

    @property
    def C(self) -> np.ndarray:
        """Cumulative average reward after each step."""
        r = np.asarray(self.rewards, dtype=float)
        return np.cumsum(r) / np.arange(1, len(r) + 1) if len(r) else r

    @property
    def C_T(self) -> float:
        return float(self.C[-1]) if self.rewards else float("nan")

    @property
    def total(self) -> float:
        return float(np.sum(self.rewards))


@dataclass
class ExperimentConfig:
    instance: str = "coverage"
    gen_seed: int = 0
    algos: list[str] = field(default_factory=lambda: ["raoco-oga"])
    eta: float = 0.1
    etas: dict = field(default_factory=dict)
    repeats: int = 5
    seed: int = 0
    out: str = "results"
    oracle: OracleConfig = field(default_factory=OracleConfig)
    timing: bool = False
    last: str = "random"
    lp_method: str = "auto"
    workers: int | None = None

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        unknown = [a for a in self.algos if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm(s) {unknown}; choose from {list(ALGORITHMS)}")

    def eta_for(self, algo: str) -> float | None:
        if algo not in LEARNING:
            return None
        return float(self.etas.get(algo, self.eta))

    def load(self) -> InstanceSpec:
        return load_instance(self.instance) if Path(self.instance).is_file() else generate(self.instance, self.gen_seed)


# -- runs ---------------------------------------------------------------------------


def run_raoco(
    inst: InstanceSpec,
    variant: str,
    eta: float,
    seed: int,
    oracle: OracleConfig = OracleConfig(),
    matroid: Matroid | None = None,
    T: int | None = None,
    timing: bool = False,
    last: str = "random",
    lp_method: str = "auto",
    algo: str | None = None,
) -> RunRecord:
    """The online loop: decide, round, collect the reward, then learn from the relaxation.

    ``matroid`` replaces the constraint the learner plans for (used by
    one-stage learning); rewards are always measured under the instance's
    own matroid.  A failing step stops the run and marks the record invalid.
    """
    T = inst.T if T is None else min(T, inst.T)
    plan = inst.matroid if matroid is None else matroid
    rec = RunRecord(algo or f"raoco-{variant}", eta, seed)
    policy = make_policy(variant, inst.n, inst.ell, eta)
    rng = make_rng(seed)
    relaxed: dict[int, RelaxedReward] = {}
    for t in range(T):
        start = time.perf_counter()
        try:
            idx = inst.sequence[t]
            f = inst.pool[idx]
            x_frac = policy.x.copy()
            x_int = pipage_round(x_frac, inst.ell, rng, last)
            res = second_stage_value(f, inst.matroid, x_int, oracle)
            if idx not in relaxed:
                relaxed[idx] = RelaxedReward(f, plan, lp_method)
            policy.update(relaxed[idx].supergradient(x_frac))
        except Exception as exc:  # keep the partial trajectory
            rec.valid = False
            rec.error = f"step {t + 1}: {type(exc).__name__}: {exc}"
            break
        rec.x_frac.append(x_frac)
        rec.x_int.append(x_int)
        rec.rewards.append(res.value)
        rec.modes.append(res.mode.value)
        rec.step_ms.append((time.perf_counter() - start) * 1e3)
    return rec


def _replay(inst, x, oracle, T, rec: RunRecord, start: float) -> RunRecord:
    setup_ms = (time.perf_counter() - start) * 1e3
    cache: dict[int, tuple[float, str]] = {}
    for t in range(T):
        t0 = time.perf_counter()
        idx = inst.sequence[t]
        if idx not in cache:
            res = second_stage_value(inst.pool[idx], inst.matroid, x, oracle)
            cache[idx] = (res.value, res.mode.value)
        value, mode = cache[idx]
        rec.x_int.append(x)
        rec.rewards.append(value)
        rec.modes.append(mode)
        rec.step_ms.append((time.perf_counter() - t0) * 1e3 + (setup_ms if t == 0 else 0.0))
    return rec


def run_baseline(
    inst: InstanceSpec,
    name: str,
    seed: int,
    eta: float | None = None,
    oracle: OracleConfig = OracleConfig(),
    T: int | None = None,
    timing: bool = False,
    last: str = "random",
    lp_method: str = "auto",
) -> RunRecord:
    """Online baselines act step by step; offline ones pick one set from the whole
    sequence in hindsight and replay it every step."""
    T = inst.T if T is None else min(T, inst.T)
    if name == "1s-oga":
        plan = baselines.one_stage_matroid(inst.n, inst.ell)
        return run_raoco(inst, "oga", 0.1 if eta is None else eta, seed, oracle, plan, T, timing, last, lp_method, name)
    rng = make_rng(seed)
    rec = RunRecord(name, None, seed)
    if name == "random":
        for _ in range(T):
            t0 = time.perf_counter()
            x = baselines.random_policy(inst.n, inst.ell, rng)
            res = second_stage_value(inst.function(len(rec.rewards)), inst.matroid, x, oracle)
            rec.x_int.append(x)
            rec.rewards.append(res.value)
            rec.modes.append(res.mode.value)
            rec.step_ms.append((time.perf_counter() - t0) * 1e3)
        return rec
    if name not in OFFLINE_BASELINES:
        raise ValueError(f"unknown baseline {name!r}")
    start = time.perf_counter()
    weights = inst.multiplicities(T)
    used = np.flatnonzero(weights)
    fs = [inst.pool[i] for i in used]
    w = weights[used]
    m = inst.matroid
    try:
        if name == "ofln-rgr":
            x, _ = baselines.replacement_greedy(fs, m, inst.ell, w)
        elif name == "ofln-co":
            if m.k <= 1:
                raise ValueError("ofln-co does not apply: continuous optimization requires k > 1")
            x = baselines.continuous_optimization(fs, m, inst.n, inst.ell, m.k, rng, weights=w, method=lp_method)
        else:
            x, x_star = baselines.offline_raoco(fs, m, inst.n, inst.ell, rng, w, lp_method, last)
            rec.x_frac.append(x_star)
    except ValueError:  # unsupported combination: the caller decides
        raise
    except Exception as exc:
        rec.valid = False
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    return _replay(inst, x, oracle, T, rec, start)


def run_one(inst: InstanceSpec, algo: str, eta, seed: int, cfg: ExperimentConfig, T=None) -> RunRecord:
    if algo in RAOCO:
        rec = run_raoco(inst, RAOCO[algo], eta, seed, cfg.oracle, None, T, cfg.timing, cfg.last, cfg.lp_method, algo)
    else:
        rec = run_baseline(inst, algo, seed, eta, cfg.oracle, T, cfg.timing, cfg.last, cfg.lp_method)
    rec.eta = eta
    return rec


# -- metrics --------------------------------------------------------------------------


def compute_alpha_regret(record: RunRecord, opt_value: float, alpha: float) -> float:
    """``alpha * opt_value - total reward``; ``opt_value`` is the offline optimum summed over steps."""
    return float(alpha * opt_value - record.total)


def summarize(records: list[RunRecord]) -> list[dict]:
    """Mean and sample standard deviation of the final ``C_T`` per (algorithm, eta)."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.algo, r.eta), []).append(r.C_T)
    rows = []
    for (algo, eta), vals in groups.items():
        v = np.asarray(vals)
        std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
        rows.append({"algo": algo, "eta": eta, "mean_CT": float(v.mean()), "std_CT": std, "repeats": len(v)})
    return rows


def best_etas(summary: list[dict]) -> dict[str, float]:
    """Per algorithm, the eta with the highest mean ``C_T`` (smallest eta on ties)."""
    best: dict[str, dict] = {}
    for row in summary:
        cur = best.get(row["algo"])
        if row["eta"] is None:
            continue
        if cur is None or row["mean_CT"] > cur["mean_CT"] or (
            row["mean_CT"] == cur["mean_CT"] and row["eta"] < cur["eta"]
        ):
            best[row["algo"]] = row
    return {a: r["eta"] for a, r in best.items()}


# -- CSV ------------------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_csv(records: list[RunRecord], timing: bool = False) -> str:
    """Per-step rows for all records.  ``step_ms`` stays blank unless ``timing`` is set,
    which keeps the file a pure function of the configuration."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in records:
        for t, (reward, c, mode) in enumerate(zip(r.rewards, r.C, r.modes), 1):
            ms = _fmt(float(r.step_ms[t - 1])) if timing else ""
            wr.writerow([r.run_id, r.seed, r.algo, _fmt(r.eta), t, _fmt(float(reward)), _fmt(float(c)), mode, ms])
    return buf.getvalue()


def summary_csv(rows: list[dict], columns=SUMMARY_COLUMNS) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for row in rows:
        wr.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


# -- orchestration -------------------------------------------------------------------------


def _workers(cfg: ExperimentConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get("O2SSM_THREADS")
    return max(1, int(env)) if env else 1


def _job(args):
    inst, algo, eta, seed, cfg, run_id = args
    rec = run_one(inst, algo, eta, seed, cfg)
    rec.run_id = run_id
    # trajectories are not needed after the run and are costly to ship between processes
    rec.x_frac, rec.x_int = [], []
    return rec


def execute(cfg: ExperimentConfig, plan: list[tuple[str, float | None]], inst: InstanceSpec | None = None):
    """Run every (algorithm, eta) in ``plan`` for all repeats; results keep plan order."""
    inst = cfg.load() if inst is None else inst
    jobs = []
    for algo, eta in plan:
        for i in range(cfg.repeats):
            seed = repeat_seed(cfg.seed, i)
            run_id = f"{algo}-eta{_fmt(eta) or 'na'}-r{i}"
            jobs.append((inst, algo, eta, seed, cfg, run_id))
    workers = _workers(cfg)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_job, jobs))
    return [_job(j) for j in jobs]


def _write(cfg: ExperimentConfig, records, stem: str, summary=None, columns=SUMMARY_COLUMNS) -> dict[str, Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"runs": out / f"{stem}.csv", "summary": out / f"{stem}_summary.csv"}
    paths["runs"].write_text(records_csv(records, cfg.timing))
    paths["summary"].write_text(summary_csv(summarize(records) if summary is None else summary, columns))
    return paths


def run(cfg: ExperimentConfig, inst: InstanceSpec | None = None):
    plan = [(a, cfg.eta_for(a)) for a in cfg.algos]
    records = execute(cfg, plan, inst)
    return records, _write(cfg, records, "runs")


def sweep(cfg: ExperimentConfig, etas: list[float], inst: InstanceSpec | None = None):
    """Every algorithm at every eta (algorithms without a learning rate run once)."""
    if not etas:
        raise ValueError("need at least one learning rate")
    plan = []
    for a in cfg.algos:
        plan += [(a, float(e)) for e in etas] if a in LEARNING else [(a, None)]
    records = execute(cfg, plan, inst)
    summary = summarize(records)
    best = best_etas(summary)
    for row in summary:
        row["best"] = row["eta"] is not None and best.get(row["algo"]) == row["eta"]
    return summary, _write(cfg, records, "sweep", summary, SUMMARY_COLUMNS + ["best"])
