"""Batch experiments: seeded channel generation, scoring against the oracle,
threshold calibration and scaling fits.

Every channel is determined by ``(master_seed, class, n, index)`` and every
estimator run by ``(master_seed, scheme, class, n, index)``, so the same
channels are used for both schemes and any single record can be recomputed
in isolation.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from ._utils import child_rng, split_seed
from .blackbox import NoisyGateBlackBox
from .channels import class_pa_channel, random_hs_channel
from .gfm import GfmConfig, run_gfm
from .oracle import exact_fmin
from .qpt import QptConfig, qpt_trajectory, run_qpt_estimation, stop_round

SCHEMES = ("gfm", "qpt")
CLASSES = ("hs", "pa")
UNCERTAIN_RETRY_FACTOR = 5

# Thresholds from `fidmin calibrate` at epsilon = 0.01 (seed 2024, 100 trial
# channels per cell for n <= 2, 40 for n = 3).
CALIBRATED_G_INIT = {
    ("hs", 1): 0.8,
    ("hs", 2): 0.565685424949,
    ("hs", 3): 0.8,
    ("pa", 1): 0.8,
    ("pa", 2): 0.8,
    ("pa", 3): 0.8,
}
CALIBRATED_G_THRES = {
    ("hs", 1): 0.000276213586401,
    ("hs", 2): 0.0001381067932,
    ("hs", 3): 0.05,
    ("pa", 1): 0.000552427172802,
    ("pa", 2): 0.000390625,
    ("pa", 3): 0.000276213586401,
}


class ConfigError(ValueError):
    """Invalid run configuration or record."""


# --------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class ExperimentRecord:
    scheme: str
    channel_class: str
    n_qubits: int
    index: int
    epsilon: float
    channel_seed: int
    run_seed: int
    f_min_true: float
    f_min_est: float
    abs_error: float
    success: bool
    channel_uses: int
    iterations_or_rounds: int
    converged: bool
    oracle_uncertain: bool
    wall_ms: int

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            key = "class" if f.name == "channel_class" else f.name
            out[key] = getattr(self, f.name)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(", ", ": "))

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentRecord":
        if not isinstance(obj, dict):
            raise ConfigError("record must be a JSON object")
        names = {("class" if f.name == "channel_class" else f.name): f.name for f in fields(cls)}
        unknown = set(obj) - set(names)
        missing = set(names) - set(obj)
        if unknown or missing:
            raise ConfigError(f"record fields: unknown {sorted(unknown)}, missing {sorted(missing)}")
        kwargs = {}
        for key, name in names.items():
            value, typ = obj[key], _RECORD_TYPES[name]
            if typ is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if typ is int and isinstance(value, bool) or not isinstance(value, typ):
                raise ConfigError(f"field {key!r} must be {typ.__name__}")
            kwargs[name] = value
        rec = cls(**kwargs)
        if rec.scheme not in SCHEMES or rec.channel_class not in CLASSES:
            raise ConfigError("unknown scheme or channel class")
        if abs(rec.abs_error - abs(rec.f_min_est - rec.f_min_true)) > 1e-12:
            raise ConfigError("abs_error is inconsistent with the estimates")
        if rec.success != (rec.abs_error <= rec.epsilon):
            raise ConfigError("success flag is inconsistent with epsilon")
        return rec

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not a JSON record: {exc}") from None
        return cls.from_dict(obj)


_RECORD_TYPES = {
    "scheme": str, "channel_class": str, "n_qubits": int, "index": int, "epsilon": float,
    "channel_seed": int, "run_seed": int, "f_min_true": float, "f_min_est": float,
    "abs_error": float, "success": bool, "channel_uses": int, "iterations_or_rounds": int,
    "converged": bool, "oracle_uncertain": bool, "wall_ms": int,
}


def read_records(path) -> list[ExperimentRecord]:
    with open(path, encoding="utf-8") as fh:
        return [ExperimentRecord.from_json(line) for line in fh if line.strip()]


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class RunConfig:
    epsilon: float = 0.01
    delta: float = 0.05
    eta_init: float = 0.1
    sigma_init: float = 0.3
    lam: int | None = None
    restarts: int = 3
    g_init: float | None = None
    max_iterations: int = 2000
    base_shots: int = 32
    g_thres: float | None = None
    bootstrap_B: int = 50
    cg_restarts: int = 10
    bootstrap_cg_restarts: int = 2
    max_rounds: int = 18
    oracle_restarts: int = 20
    master_seed: int | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ConfigError("epsilon must lie in (0, 0.5)")
        for name in ("restarts", "max_iterations", "base_shots", "bootstrap_B",
                     "cg_restarts", "max_rounds", "oracle_restarts"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.bootstrap_B < 2:
            raise ConfigError("bootstrap_B must be at least 2")
        for name in ("delta", "eta_init", "sigma_init", "g_init", "g_thres"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"{name} must be positive")

    def seed(self) -> int:
        if self.master_seed is not None:
            return self.master_seed
        env = os.environ.get("FIDMIN_SEED")
        if env is not None:
            try:
                return int(env)
            except ValueError:
                raise ConfigError("FIDMIN_SEED must be an integer") from None
        return 0

    def gfm_config(self, cls: str, n: int) -> GfmConfig:
        g = self.g_init if self.g_init is not None else CALIBRATED_G_INIT.get((cls, n), 0.1)
        return GfmConfig(g_init=g, delta=self.delta, eta_init=self.eta_init, sigma_init=self.sigma_init,
                         lam=self.lam, restarts=self.restarts, max_iterations=self.max_iterations)

    def qpt_config(self, cls: str, n: int) -> QptConfig:
        g = self.g_thres if self.g_thres is not None else CALIBRATED_G_THRES.get((cls, n), self.epsilon)
        return QptConfig(base_shots=self.base_shots, g_thres=g, bootstrap_B=self.bootstrap_B,
                         cg_restarts=self.cg_restarts, bootstrap_cg_restarts=self.bootstrap_cg_restarts,
                         max_rounds=self.max_rounds)


_ALIASES = {"lambda": "lam"}


def parse_config(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    """Parse flat ``key = value`` lines (``#`` starts a comment)."""
    types = {f.name: f.type for f in fields(RunConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if value.lower() in ("auto", "none", ""):
            if "None" not in types[key]:
                raise ConfigError(f"line {lineno}: {key} needs a value")
            updates[key] = None
            continue
        try:
            updates[key] = int(value) if types[key].startswith("int") else float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    try:
        return dataclasses.replace(base, **updates)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# single runs

def channel_seed(master: int, cls: str, n: int, index: int) -> int:
    return split_seed(master, "channel", cls, n, index)


def run_seed(master: int, scheme: str, cls: str, n: int, index: int) -> int:
    return split_seed(master, "run", scheme, cls, n, index)


def make_channel(cls: str, n: int, seed: int):
    if cls == "hs":
        return random_hs_channel(n, np.random.default_rng(seed))
    if cls == "pa":
        return class_pa_channel(n, np.random.default_rng(seed))
    raise ConfigError(f"unknown channel class {cls!r}")


def oracle_fmin(channel, seed: int, restarts: int):
    """Oracle ``F_min``; a flagged result is retried with more restarts."""
    res = exact_fmin(channel, restarts=restarts, rng=child_rng(seed, "oracle"))
    if res.uncertain:
        res = exact_fmin(channel, restarts=UNCERTAIN_RETRY_FACTOR * restarts, rng=child_rng(seed, "oracle", "retry"))
    return res


def run_scheme(scheme, channel, cls, n, epsilon, config: RunConfig, seed: int, trace=None):
    """Run one estimator on a fresh box; returns ``(estimate, uses, iterations, converged, result)``."""
    box = NoisyGateBlackBox(channel, child_rng(seed, "box"))
    rng = child_rng(seed, "estimator")
    if scheme == "gfm":
        res = run_gfm(box, epsilon, config.gfm_config(cls, n), rng, trace=trace)
        return res.f_min_estimate, res.uses, res.iterations, res.converged, res
    if scheme == "qpt":
        res = run_qpt_estimation(box, epsilon, config.qpt_config(cls, n), rng)
        return res.f_min_estimate, res.uses, res.rounds, res.converged, res
    raise ConfigError(f"unknown scheme {scheme!r}")


def run_one(scheme: str, cls: str, n: int, index: int, config: RunConfig, timing: bool = False):
    """One record plus per-descent summaries (GFM only)."""
    master = config.seed()
    cseed = channel_seed(master, cls, n, index)
    rseed = run_seed(master, scheme, cls, n, index)
    channel = make_channel(cls, n, cseed)
    t0 = time.perf_counter()
    est, uses, iters, converged, res = run_scheme(scheme, channel, cls, n, config.epsilon, config, rseed)
    wall = int(round(1000 * (time.perf_counter() - t0))) if timing else 0
    oracle = oracle_fmin(channel, cseed, config.oracle_restarts)
    err = abs(est - oracle.f_min)
    rec = ExperimentRecord(
        scheme=scheme, channel_class=cls, n_qubits=n, index=index, epsilon=config.epsilon,
        channel_seed=cseed, run_seed=rseed, f_min_true=oracle.f_min, f_min_est=est,
        abs_error=err, success=bool(err <= config.epsilon), channel_uses=int(uses),
        iterations_or_rounds=int(iters), converged=bool(converged),
        oracle_uncertain=bool(oracle.uncertain), wall_ms=wall,
    )
    descents = []
    if scheme == "gfm":
        descents = [
            {"index": index, "descent": k, "final_eta": d.final_eta, "final_g": d.final_g,
             "iterations": d.iterations, "f_min_estimate": d.f_min_estimate}
            for k, d in enumerate(res.descents)
        ]
    return rec, descents


def _run_one_star(args):
    return run_one(*args)


def run_batch(scheme, cls, n, count, config: RunConfig, out=None, jobs=1, resume=False,
              timing=False, trace=None):
    """Run ``count`` channels and write one JSON record per line to ``out``.

    Records are written in index order whatever the completion order. With
    ``resume`` the valid records already in ``out`` are kept and only the
    missing indices are run. ``trace`` receives per-descent summaries.
    Returns the list of records.
    """
    if count < 1:
        raise ConfigError("count must be at least 1")
    done = []
    if resume and out is not None and os.path.exists(out):
        with open(out, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        # the last element is "" after a complete final line, else an interrupted write
        for line in lines[:-1]:
            if not line.strip():
                continue
            rec = ExperimentRecord.from_json(line)
            i = len(done)
            ok = ((rec.scheme, rec.channel_class, rec.n_qubits, rec.index) == (scheme, cls, n, i)
                  and rec.epsilon == config.epsilon
                  and rec.run_seed == run_seed(config.seed(), scheme, cls, n, i))
            if not ok:
                raise ConfigError(f"{out} holds records of a different batch")
            done.append(rec)
        done = done[:count]
    todo = [(scheme, cls, n, i, config, timing) for i in range(len(done), count)]
    fh = None
    if out is not None:
        # rewriting the kept prefix also drops a partial trailing line
        with open(out, "w", encoding="utf-8") as w:
            w.writelines(r.to_json() + "\n" for r in done)
        fh = open(out, "a", encoding="utf-8")
    try:
        if jobs > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=jobs)
            results = pool.map(_run_one_star, todo)
        else:
            pool = None
            results = map(_run_one_star, todo)
        for rec, descents in results:
            done.append(rec)
            if fh is not None:
                fh.write(rec.to_json() + "\n")
                fh.flush()
            if trace is not None:
                for d in descents:
                    trace(d)
        if pool is not None:
            pool.shutdown()
    finally:
        if fh is not None:
            fh.close()
    return done


# --------------------------------------------------------------------------
# calibration

GRID_TOP = {"gfm": 0.8, "qpt": 0.05}
GRID_POINTS = {"gfm": 12, "qpt": 18}


def default_grid(scheme: str) -> list[float]:
    """Descending geometric grid with ratio ``1/sqrt(2)``."""
    return [GRID_TOP[scheme] * 2 ** (-k / 2) for k in range(GRID_POINTS[scheme])]


@dataclass(frozen=True)
class CalibrationResult:
    parameter: str
    value: float
    success_rate: float
    reached: bool
    table: tuple  # (threshold, successes, trials) per grid value tried


def calibration_trials(cls, n, trials, seed, config: RunConfig, channel_factory=None):
    """Trial channels with their oracle ``F_min``, from a stream disjoint from batch runs."""
    out = []
    for i in range(trials):
        cseed = split_seed(seed, "calibrate", cls, n, i)
        ch = channel_factory(i) if channel_factory is not None else make_channel(cls, n, cseed)
        out.append((ch, cseed, oracle_fmin(ch, cseed, config.oracle_restarts)))
    return out


def calibrate(scheme, cls, n, epsilon, trials, seed, config: RunConfig = RunConfig(),
              grid=None, target=0.95, channel_factory=None) -> CalibrationResult:
    """Largest threshold on ``grid`` whose success rate over ``trials`` channels reaches ``target``.

    GFM (``g_init``): grid values are tried largest first, each on the same
    trial channels and run seeds; a value is abandoned once it has too many
    failures to reach the target. QPT (``g_thres``): one trajectory per
    channel is recorded and the stopping rule is replayed for every value.
    """
    if trials < 1:
        raise ConfigError("need at least one trial")
    grid = sorted(default_grid(scheme) if grid is None else grid, reverse=True)
    cfg = dataclasses.replace(config, epsilon=epsilon)
    chans = calibration_trials(cls, n, trials, seed, cfg, channel_factory)
    allowed = math.floor((1 - target) * trials + 1e-9)
    table = []

    def run_seed_for(i):
        return split_seed(seed, "calibrate-run", scheme, cls, n, i)

    if scheme == "gfm":
        for g in grid:
            c = dataclasses.replace(cfg, g_init=g)
            fails = 0
            done = 0
            for i, (ch, _, orc) in enumerate(chans):
                est = run_scheme("gfm", ch, cls, n, epsilon, c, run_seed_for(i))[0]
                done += 1
                fails += abs(est - orc.f_min) > epsilon
                if fails > allowed:
                    break
            table.append((g, done - fails, done))
            if fails <= allowed:
                break
    elif scheme == "qpt":
        qc = cfg.qpt_config(cls, n)
        histories = []
        for i, (ch, _, orc) in enumerate(chans):
            box = NoisyGateBlackBox(ch, child_rng(run_seed_for(i), "box"))
            histories.append(qpt_trajectory(box, epsilon, qc, child_rng(run_seed_for(i), "estimator"), grid))
        for g in grid:
            ok = sum(abs(stop_round(h, epsilon, g).f_min - orc.f_min) <= epsilon
                     for h, (_, _, orc) in zip(histories, chans))
            table.append((g, ok, trials))
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")

    def rate(row):
        return row[1] / row[2]

    passing = [row for row in table if row[2] == trials and row[1] >= target * trials - 1e-9]
    if passing:
        best = max(passing, key=lambda r: r[0])
        reached = True
    else:
        # most successes per trial; ties go to the larger threshold
        best = max(table, key=lambda r: (rate(r), r[0]))
        reached = False
    name = "g_init" if scheme == "gfm" else "g_thres"
    return CalibrationResult(name, best[0], rate(best), reached, tuple(table))


# --------------------------------------------------------------------------
# scaling

@dataclass(frozen=True)
class ScalingRow:
    scheme: str
    channel_class: str
    n_qubits: int
    count: int
    scored: int
    success_rate: float
    median_uses: float


def summarize(records) -> list[ScalingRow]:
    groups = {}
    for r in records:
        groups.setdefault((r.scheme, r.channel_class, r.n_qubits), []).append(r)
    rows = []
    for key in sorted(groups):
        rs = groups[key]
        scored = [r for r in rs if not r.oracle_uncertain]
        rate = sum(r.success for r in scored) / len(scored) if scored else math.nan
        rows.append(ScalingRow(*key, len(rs), len(scored), rate,
                               float(np.median([r.channel_uses for r in rs]))))
    return rows


def fit_exponents(rows) -> dict:
    """Least-squares slope of ``log2(median uses)`` against ``n = log2(d)``."""
    by = {}
    for row in rows:
        by.setdefault((row.scheme, row.channel_class), []).append(row)
    out = {}
    for key, rs in sorted(by.items()):
        ns = sorted({r.n_qubits for r in rs})
        if len(ns) < 2:
            raise ConfigError(f"{key[0]}/{key[1]}: need records for at least two qubit numbers")
        x = np.array([r.n_qubits for r in rs], dtype=float)
        y = np.log2([r.median_uses for r in rs])
        out[key] = float(np.polyfit(x, y, 1)[0])
    return out
