"""Seeded Monte-Carlo sweeps over (n, p, rho) and small analysis helpers."""
from __future__ import annotations

import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .core import (
    STREAM_BASELINE,
    STREAM_SOLVER,
    ParameterError,
    ProblemParams,
    child_seed,
    sample_instance,
    substream,
)
from .estimators import SolverOptions, exhaustive_count, solve, stage_one_size
from .metrics import err, random_tuple_error

CSV_HEADER = "n,p,rho,solver,trials,mean_err,se_err,frac_exact,se_exact,mean_objective,wall_ms,seed"
SKIP = "skip"


class TrialOutcome(NamedTuple):
    err: float
    exact: bool
    objective: float


def run_trial(params: ProblemParams, solver: SolverOptions, trial_seed: int) -> TrialOutcome:
    """Sample one instance from ``trial_seed``, solve it and score against the truth."""
    inst = sample_instance(params, trial_seed)
    opts = replace(solver, seed=child_seed(trial_seed, STREAM_SOLVER))
    est = solve(inst.observed, opts, params)
    res = err(est.pi_hat, inst.pi_star)
    return TrialOutcome(res.err, res.matched == params.n * params.p, est.objective)


@dataclass
class SweepConfig:
    ns: list
    ps: list
    rhos: list
    trials: int
    solver: SolverOptions = field(default_factory=SolverOptions)
    master_seed: int = 0
    threads: int | None = None        # None: all available cores
    record_timing: bool = True        # False writes wall_ms = 0 for byte-stable output

    def __post_init__(self):
        if not (self.ns and self.ps and self.rhos):
            raise ParameterError("sweep grid must be nonempty in n, p and rho")
        if int(self.trials) < 1:
            raise ParameterError("trials must be >= 1")
        if self.threads is not None and int(self.threads) < 1:
            raise ParameterError("threads must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {"n", "p", "rho", "trials", "solver", "seed", "threads", "timing"}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        try:
            solver = SolverOptions(**d.get("solver", {}))
        except TypeError as exc:
            raise ParameterError(f"bad solver options: {exc}") from exc

        def as_list(v):
            return list(v) if isinstance(v, (list, tuple)) else [v]

        try:
            return cls(
                ns=[int(v) for v in as_list(d["n"])],
                ps=[int(v) for v in as_list(d["p"])],
                rhos=[float(v) for v in as_list(d["rho"])],
                trials=int(d.get("trials", 30)),
                solver=solver,
                master_seed=int(d.get("seed", 0)),
                threads=d.get("threads"),
                record_timing=bool(d.get("timing", True)),
            )
        except KeyError as exc:
            raise ParameterError(f"config is missing {exc}") from exc

    def to_dict(self) -> dict:
        return {"n": self.ns, "p": self.ps, "rho": self.rhos, "trials": self.trials,
                "solver": asdict(self.solver), "seed": self.master_seed,
                "threads": self.threads, "timing": self.record_timing}


@dataclass
class CellRecord:
    n: int
    p: int
    rho: float
    solver: str
    trials: int
    mean_err: float
    se_err: float
    frac_exact: float
    se_exact: float
    mean_objective: float
    wall_ms: float
    seed: int
    skip: str | None = None

    @property
    def skipped(self) -> bool:
        return self.skip is not None


def cell_seed(master_seed: int, i_n: int, i_p: int, i_r: int) -> int:
    return child_seed(master_seed, i_n, i_p, i_r)


def _infeasible(n: int, p: int, rho: float, solver: SolverOptions) -> str | None:
    try:
        ProblemParams(n, p, rho)
    except ParameterError as exc:
        return str(exc)
    if solver.kind == "exhaustive" and exhaustive_count(n, p) > solver.size_guard:
        return f"exhaustive search over {exhaustive_count(n, p)} tuples exceeds size_guard"
    if solver.kind == "two-stage":
        if rho <= 0:
            return "two-stage needs rho > 0"
        pp = stage_one_size(p, rho, solver.two_stage_C)
        if solver.inner == "exhaustive" and exhaustive_count(n, max(pp, 2)) > solver.size_guard:
            return "stage-one exhaustive search exceeds size_guard"
    if solver.kind == "pairwise" and solver.inner == "exhaustive" and exhaustive_count(n, 2) > solver.size_guard:
        return "pairwise exhaustive search exceeds size_guard"
    return None


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def run_phase_diagram(config: SweepConfig) -> list[CellRecord]:
    """One record per grid cell; results do not depend on ``config.threads``."""
    cells = []
    for i_n, n in enumerate(config.ns):
        for i_p, p in enumerate(config.ps):
            for i_r, rho in enumerate(config.rhos):
                cells.append((i_n, i_p, i_r, int(n), int(p), float(rho)))

    jobs = []
    records: dict[int, CellRecord] = {}
    for c, (i_n, i_p, i_r, n, p, rho) in enumerate(cells):
        seed = cell_seed(config.master_seed, i_n, i_p, i_r)
        reason = _infeasible(n, p, rho, config.solver)
        if reason is not None:
            nan = float("nan")
            records[c] = CellRecord(n, p, rho, config.solver.kind, 0, nan, nan, nan, nan, nan, 0.0, seed, reason)
            continue
        for t in range(config.trials):
            jobs.append((c, t, ProblemParams(n, p, rho), child_seed(seed, t)))

    def work(job):
        c, t, params, tseed = job
        t0 = time.perf_counter()
        out = run_trial(params, config.solver, tseed)
        return c, t, out, (time.perf_counter() - t0) * 1e3

    threads = config.threads or os.cpu_count() or 1
    if threads == 1:
        results = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))

    per_cell: dict[int, list] = {}
    for c, t, out, ms in results:
        per_cell.setdefault(c, []).append((t, out, ms))
    for c, rows in per_cell.items():
        rows.sort(key=lambda r: r[0])
        e = np.array([r[1].err for r in rows])
        x = np.array([float(r[1].exact) for r in rows])
        obj = np.array([r[1].objective for r in rows])
        wall = sum(r[2] for r in rows) if config.record_timing else 0.0
        i_n, i_p, i_r, n, p, rho = cells[c]
        records[c] = CellRecord(n, p, rho, config.solver.kind, len(rows), float(e.mean()), _se(e),
                                float(x.mean()), _se(x), float(obj.mean()), float(wall),
                                cell_seed(config.master_seed, i_n, i_p, i_r))
    return [records[c] for c in range(len(cells))]


# ---------------------------------------------------------------- CSV I/O

def _g(x: float) -> str:
    return format(float(x), ".10g")


def records_to_csv(records: Sequence[CellRecord]) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in records:
        if r.skipped:
            stats_cols = [SKIP] * 5
        else:
            stats_cols = [_g(r.mean_err), _g(r.se_err), _g(r.frac_exact), _g(r.se_exact), _g(r.mean_objective)]
        row = [str(r.n), str(r.p), _g(r.rho), r.solver, str(r.trials), *stats_cols, _g(r.wall_ms), str(r.seed)]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def write_csv(records: Sequence[CellRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(records_to_csv(records))


def read_csv(path) -> list[CellRecord]:
    import csv

    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            skipped = row["mean_err"] == SKIP

            def num(k):
                return float("nan") if skipped else float(row[k])
            out.append(CellRecord(int(row["n"]), int(row["p"]), float(row["rho"]), row["solver"],
                                  int(row["trials"]), num("mean_err"), num("se_err"), num("frac_exact"),
                                  num("se_exact"), num("mean_objective"), float(row["wall_ms"]),
                                  int(row["seed"]), SKIP if skipped else None))
    return out


# --------------------------------------------------------------- analysis

@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    points: int


def decay_fit(records: Sequence[CellRecord]) -> DecayFit:
    """Fit ``log(mean_err) ~ a + b * n * min(rho, p rho^2)`` over records with 0 < err < 1."""
    xs, ys = [], []
    for r in records:
        if r.skipped or not 0 < r.mean_err < 1:
            continue
        xs.append(r.n * min(r.rho, r.p * r.rho ** 2))
        ys.append(math.log(r.mean_err))
    if len(xs) < 3:
        raise ParameterError("decay fit needs at least 3 records with 0 < mean_err < 1")
    if len(set(xs)) < 2:
        raise ParameterError("decay fit needs at least two distinct abscissae")
    fit = stats.linregress(xs, ys)
    return DecayFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2), len(xs))


def random_baseline(n: int, p: int, trials: int, seed: int) -> tuple[float, float]:
    """Mean and SE of err between independent uniform tuples."""
    if trials < 100:
        raise ParameterError("random_baseline needs at least 100 trials")
    rng = substream(seed, STREAM_BASELINE)
    vals = np.array([random_tuple_error(n, p, rng) for _ in range(trials)])
    return float(vals.mean()), _se(vals)

