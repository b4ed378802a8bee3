"""Seeded Monte Carlo sweeps and result emission.

A sweep varies one of L, S, M or R over a list of values and, for every value,
runs each requested method for ``trials`` independent trials. Per-trial MSEs
are averaged linearly and only then converted to dB.

Methods:

``oas-<strategy>``   the adaptive loop with the named codeword selection
``lasso``            one-shot sensing + LASSO with per-trial oracle lambda
``mmse``             one-shot sensing + exact posterior mean (N <= 20)
``lasso-ref``        published asymptotic LASSO level (constant, no trials)
``mmse-ref``         published asymptotic MMSE level (constant, no trials)
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import reference
from .baselines import MMSE_MAX_N, lasso_oracle_mse, mmse_exact_small, one_shot_instance
from .engine import OASConfig, run_oas
from .errors import InvalidArgumentError, SingularMatrixError
from .estimators import SparseGaussianPrior
from .linalg import generate_codebook
from .selection import DEFAULT_EXHAUSTIVE_BUDGET, STRATEGIES

log = logging.getLogger(__name__)

SWEEP_PARAMS = ("L", "S", "M", "R")
BASELINES = ("lasso", "mmse", "reference")
CSV_FIELDS = ("swept_param", "value", "method", "mse_db", "stderr_db", "trials", "seconds")
NEG_INF_DB = -400.0
MAX_RETRIES = 3
INVALID_FAILURE_RATE = 0.10


def generate_signal(N: int, rho: float, seed) -> np.ndarray:
    """i.i.d. samples that are N(0, 1) with probability rho and zero otherwise."""
    if not 0.0 <= rho <= 1.0:
        raise InvalidArgumentError(f"rho must lie in [0, 1], got {rho}")
    rng = np.random.default_rng(seed)
    active = rng.random(N) < rho
    return np.where(active, rng.standard_normal(N), 0.0)


@dataclass(frozen=True)
class Settings:
    """One fully specified experimental point."""

    N: int = 200
    K: int = 50
    L: int = 25
    M: int = 60
    S: int = 1000
    sigma2: float = 0.01
    rho: float = 0.1
    signal_rho: Optional[float] = None
    codebook_variance: object = "1/K"

    @property
    def R(self) -> float:
        return self.N / self.K

    @property
    def entry_variance(self) -> float:
        v = self.codebook_variance
        if v == "1/K":
            return 1.0 / self.K
        if v == "1/sqrtK":
            return 1.0 / math.sqrt(self.K)
        return float(v)

    @property
    def true_rho(self) -> float:
        return self.rho if self.signal_rho is None else self.signal_rho

    def with_param(self, name: str, value) -> "Settings":
        if name == "R":
            K = self.N / value
            if K != int(K):
                raise InvalidArgumentError(f"R={value} does not divide N={self.N}")
            return replace(self, K=int(K))
        if name not in SWEEP_PARAMS:
            raise InvalidArgumentError(f"cannot sweep {name!r}; choose from {SWEEP_PARAMS}")
        return replace(self, **{name: int(value)})

    def validate(self):
        if not 1 <= self.L <= self.K <= self.S:
            raise InvalidArgumentError(f"need 1 <= L <= K <= S, got L={self.L}, K={self.K}, S={self.S}")
        if self.K > self.N:
            raise InvalidArgumentError(f"need K <= N, got K={self.K}, N={self.N}")
        if self.M < 1 or not self.sigma2 > 0 or not self.entry_variance > 0:
            raise InvalidArgumentError("need M >= 1, sigma2 > 0 and a positive codebook variance")
        SparseGaussianPrior(self.rho)
        SparseGaussianPrior(self.true_rho)


@dataclass
class ExperimentSpec:
    base: Settings = field(default_factory=Settings)
    sweep_param: Optional[str] = None
    sweep_values: Sequence = ()
    trials: int = 200
    strategies: Sequence[str] = ("random",)
    baselines: Sequence[str] = ()
    seed: int = 0
    fixed_codebook: bool = False
    workers: Optional[int] = None  # falls back to $OAS_WORKERS, then 1
    exhaustive_budget: Optional[int] = DEFAULT_EXHAUSTIVE_BUDGET
    name: str = "sweep"

    def points(self):
        """(swept value, Settings) pairs; a single point when nothing is swept."""
        if self.sweep_param is None:
            return [(None, self.base)]
        return [(v, self.base.with_param(self.sweep_param, v)) for v in self.sweep_values]

    def validate(self):
        if self.trials < 1:
            raise InvalidArgumentError(f"trials must be >= 1, got {self.trials}")
        if self.sweep_param is not None and not self.sweep_values:
            raise InvalidArgumentError("sweep has no values")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise InvalidArgumentError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
        for b in self.baselines:
            if b not in BASELINES:
                raise InvalidArgumentError(f"unknown baseline {b!r}; choose from {BASELINES}")
        for _, st in self.points():
            st.validate()
            if ("exhaustive" in self.strategies and self.exhaustive_budget is not None
                    and math.comb(st.S, st.K) > self.exhaustive_budget):
                raise InvalidArgumentError(
                    f"exhaustive selection over C({st.S}, {st.K}) subsets exceeds the budget "
                    f"of {self.exhaustive_budget}; use the stepwise strategy")
            if "mmse" in self.baselines and st.N > MMSE_MAX_N:
                raise InvalidArgumentError(f"exact MMSE baseline needs N <= {MMSE_MAX_N}, got N={st.N}")


@dataclass
class SweepRow:
    swept_param: str
    value: object
    method: str
    mse_db: float
    stderr_db: float
    trials: int
    seconds: float
    failed: int = 0

    @property
    def valid(self) -> bool:
        total = self.trials + self.failed
        return total == 0 or self.failed / total <= INVALID_FAILURE_RATE


@dataclass
class SweepResult:
    rows: List[SweepRow] = field(default_factory=list)

    @property
    def invalid_rows(self) -> List[SweepRow]:
        return [r for r in self.rows if not r.valid]


# --- seeding -----------------------------------------------------------------

def trial_seed(master: int, cell: str, t: int) -> int:
    """64-bit seed for trial t of a cell, a hash of (master, cell, t)."""
    digest = hashlib.blake2b(f"{master}|{cell}|{t}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _child_seeds(seed: int, n: int) -> List[int]:
    return [int(c.generate_state(1, np.uint64)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


def _codebook_seed(master: int, st: Settings) -> int:
    return trial_seed(master, f"codebook:S={st.S}:N={st.N}:var={st.entry_variance!r}", 0)


def cell_key(method: str, st: Settings) -> str:
    """Identifies what a cell computes; baselines ignore L and M."""
    common = f"N={st.N}:K={st.K}:S={st.S}:s2={st.sigma2!r}:rho={st.rho!r}:srho={st.true_rho!r}:var={st.entry_variance!r}"
    if method.startswith("oas-"):
        return f"{method}:{common}:L={st.L}:M={st.M}"
    return f"{method}:{common}"


# --- trials ------------------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    cell: str
    t: int
    method: str
    settings: Settings
    seed: int
    codebook_seed: Optional[int]


def _run_task(task: _Task):
    """Returns (cell, t, linear mse or None, seconds, error text)."""
    st = task.settings
    start = time.perf_counter()
    sig_seed, cb_seed, noise_seed, *select_seeds = _child_seeds(task.seed, 3 + MAX_RETRIES + 1)
    x = generate_signal(st.N, st.true_rho, sig_seed)
    codebook = generate_codebook(st.S, st.N, st.entry_variance,
                                 cb_seed if task.codebook_seed is None else task.codebook_seed)
    error = ""
    value = None
    if task.method.startswith("oas-"):
        strategy = task.method[4:]
        for attempt in range(MAX_RETRIES + 1):
            config = OASConfig(st.N, st.K, st.L, st.M, st.sigma2, SparseGaussianPrior(st.rho),
                               strategy, select_seeds[attempt], exhaustive_budget=None)
            # the budget was enforced once, when the spec was validated
            try:
                value = run_oas(config, x, codebook, noise_seed).mse
                break
            except SingularMatrixError as exc:
                error = (f"singular Q at subframe {exc.subframe} "
                         f"(cond ~ {exc.condition:.3g}, codewords {exc.source_indices})")
    else:
        inst = one_shot_instance(codebook, st.K, x, st.sigma2, noise_seed)
        if task.method == "lasso":
            value = lasso_oracle_mse(inst).mse
        elif task.method == "mmse":
            value = float(np.mean((mmse_exact_small(inst.A, inst.y, st.rho, st.sigma2) - x) ** 2))
        else:
            raise InvalidArgumentError(f"unknown method {task.method!r}")
    return task.cell, task.t, value, time.perf_counter() - start, error


def resolve_workers(workers: Optional[int]) -> int:
    if workers:
        return max(1, int(workers))
    env = os.environ.get("OAS_WORKERS")
    return max(1, int(env)) if env else 1


def to_db(mse: float) -> float:
    return 10.0 * math.log10(mse) if mse > 0 else -math.inf


def aggregate(mses: Sequence[float]):
    """(mean MSE in dB, standard error in dB) from linear per-trial MSEs.

    The dB standard error is the linear one mapped through the derivative of
    10 log10 at the mean.
    """
    n = len(mses)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(mses) / n
    if n == 1 or mean <= 0:
        return to_db(mean), 0.0
    var = math.fsum((m - mean) ** 2 for m in mses) / (n - 1)
    se = math.sqrt(var / n)
    return to_db(mean), 10.0 / math.log(10.0) * se / mean


def run_sweep(spec: ExperimentSpec, progress=None) -> SweepResult:
    """Execute every (value, method) cell of the sweep."""
    spec.validate()
    methods = [f"oas-{s}" for s in spec.strategies]
    methods += [b for b in spec.baselines if b in ("lasso", "mmse")]

    layout = []   # (value, method, cell or None, settings)
    tasks, seen = [], set()
    for value, st in spec.points():
        for method in methods:
            cell = cell_key(method, st)
            layout.append((value, method, cell, st))
            if cell in seen:
                continue
            seen.add(cell)
            cb_seed = _codebook_seed(spec.seed, st) if spec.fixed_codebook else None
            tasks += [_Task(cell, t, method, st, trial_seed(spec.seed, cell, t), cb_seed)
                      for t in range(spec.trials)]
        if "reference" in spec.baselines:
            for method in ("lasso-ref", "mmse-ref"):
                layout.append((value, method, None, st))

    outcomes: Dict[str, Dict[int, tuple]] = {}
    workers = resolve_workers(spec.workers)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stream = pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers)))
            _collect(stream, outcomes, progress)
    else:
        _collect(map(_run_task, tasks), outcomes, progress)

    param = spec.sweep_param or ""
    result = SweepResult()
    for value, method, cell, st in layout:
        if cell is None:
            ref = reference.benchmark_db(method[:-4], st.N, st.K, st.rho, st.sigma2)
            if ref is None:
                log.warning("no published %s level for N=%d K=%d rho=%g sigma2=%g",
                            method, st.N, st.K, st.rho, st.sigma2)
                continue
            result.rows.append(SweepRow(param, value, method, ref, 0.0, 0, 0.0))
            continue
        per_trial = [outcomes[cell][t] for t in sorted(outcomes[cell])]
        ok = [v for v, _, _ in per_trial if v is not None]
        errors = [e for v, _, e in per_trial if v is None]
        for e in errors[:3]:
            log.warning("%s: trial failed: %s", cell, e)
        mse_db, se_db = aggregate(ok)
        seconds = math.fsum(s for _, s, _ in per_trial)
        result.rows.append(SweepRow(param, value, method, mse_db, se_db, len(ok), seconds, len(errors)))
    return result


def _collect(stream, outcomes, progress):
    for cell, t, value, seconds, error in stream:
        outcomes.setdefault(cell, {})[t] = (value, seconds, error)
        if progress is not None:
            progress(cell, t)


# --- output ------------------------------------------------------------------

def _num(v: float) -> float:
    if v == -math.inf:
        return NEG_INF_DB
    return v


def row_dict(row: SweepRow) -> dict:
    value = row.value
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    return {
        "swept_param": row.swept_param,
        "value": "" if value is None else value,
        "method": row.method,
        "mse_db": _num(row.mse_db),
        "stderr_db": _num(row.stderr_db),
        "trials": row.trials,
        "seconds": round(row.seconds, 6),
    }


def format_results(result: SweepResult, fmt: str = "csv") -> str:
    records = [row_dict(r) for r in result.rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({"fields": list(CSV_FIELDS), "rows": records}, indent=2) + "\n"
    raise InvalidArgumentError(f"unknown format {fmt!r}; use csv or json")


def emit_results(result: SweepResult, fmt: str, path) -> Path:
    """Write the sweep as CSV or JSON; -inf dB is written as -400."""
    path = Path(path)
    text = format_results(result, fmt)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from exc
    return path


def read_results(path, fmt: Optional[str] = None) -> List[dict]:
    """Load rows written by :func:`emit_results` back as dicts."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".") or "csv"
    if fmt == "json":
        return json.loads(path.read_text())["rows"]
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("mse_db", "stderr_db", "seconds"):
            r[k] = float(r[k])
        r["trials"] = int(r["trials"])
        if r["value"] != "":
            v = float(r["value"])
            r["value"] = int(v) if v.is_integer() else v
    return rows


# --- specs from files --------------------------------------------------------

def spec_from_dict(d: dict) -> ExperimentSpec:
    d = dict(d)
    base = dict(d.pop("base", {}))
    if "R" in base:
        R = base.pop("R")
        N = base.get("N", Settings.N)
        if N % R:
            raise InvalidArgumentError(f"R={R} does not divide N={N}")
        base["K"] = N // R
    unknown = set(base) - set(Settings.__dataclass_fields__)
    if unknown:
        raise InvalidArgumentError(f"unknown base settings: {sorted(unknown)}")
    sweep = d.pop("sweep", None) or {}
    spec = ExperimentSpec(
        base=Settings(**base),
        sweep_param=sweep.get("param"),
        sweep_values=list(sweep.get("values", [])),
        **{k: v for k, v in d.items() if k in ExperimentSpec.__dataclass_fields__},
    )
    extra = set(d) - set(ExperimentSpec.__dataclass_fields__)
    if extra:
        raise InvalidArgumentError(f"unknown spec keys: {sorted(extra)}")
    spec.strategies = list(spec.strategies)
    spec.baselines = list(spec.baselines)
    return spec


def spec_to_dict(spec: ExperimentSpec) -> dict:
    out = asdict(spec)
    out["base"] = asdict(spec.base)
    out["sweep"] = {"param": out.pop("sweep_param"), "values": list(out.pop("sweep_values"))}
    return out


def load_spec(path) -> ExperimentSpec:
    """Read an experiment spec from YAML (JSON is accepted too)."""
    import yaml

    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"{path}: expected a mapping at top level")
    return spec_from_dict(data)
