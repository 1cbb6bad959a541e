"""Monte Carlo snapshots, parameter sweeps and CSV/JSON export."""

from __future__ import annotations

import csv
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, allocation, baselines, bia, optics
from .config import ScenarioConfig
from .scenario import classify_users

SCHEMES = ("BIA-centralized", "BIA-decentralized", "ZF", "TDMA")
WAIST_BAND = (5e-6, 30e-6)


@dataclass(frozen=True)
class ExperimentSpec:
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    num_users: tuple = (20,)
    beam_waists: tuple = (5e-6,)
    schemes: tuple = ("BIA-decentralized",)
    snapshots: int = 1
    base_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "num_users", tuple(int(k) for k in self.num_users))
        object.__setattr__(self, "beam_waists", tuple(float(w) for w in self.beam_waists))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.snapshots < 1:
            raise ValueError("snapshots must be >= 1")
        if not self.num_users or not self.beam_waists:
            raise ValueError("sweep axes must be non-empty")
        if not self.schemes:
            raise ValueError("scheme list is empty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown scheme(s) {bad}; choose from {list(SCHEMES)}")
        for w in self.beam_waists:
            if not WAIST_BAND[0] * (1 - 1e-9) <= w <= WAIST_BAND[1] * (1 + 1e-9):
                warnings.warn(f"beam waist {w * 1e6:g} um outside the 5-30 um band", stacklevel=2)


@dataclass
class Entry:
    """Result of one scheme on one snapshot. Rates in bits/s."""

    K: int
    W_0: float
    seed: int
    scheme: str
    sum_rate: float = float("nan")
    utility: float = float("nan")
    trace: list = field(default_factory=list)
    user_rates: list = field(default_factory=list)
    error: str | None = None


@dataclass
class RunReport:
    entries: list = field(default_factory=list)

    def cells(self):
        """(K, W_0, scheme) -> successful sum-rate samples, in first-seen order."""
        out = {}
        for e in self.entries:
            bucket = out.setdefault((e.K, e.W_0, e.scheme), [])
            if e.error is None:
                bucket.append(e.sum_rate)
        return out

    def aggregates(self):
        rows = []
        for (K, w, s), v in self.cells().items():
            v = np.asarray(v)
            mean = float(v.mean()) if len(v) else float("nan")
            median = float(np.median(v)) if len(v) else float("nan")
            rows.append(dict(K=K, W_0=w, scheme=s, mean_sum_rate=mean, median_sum_rate=median, n=len(v)))
        return rows

    def cdf(self):
        """Sorted sum-rate samples per scheme with percentiles i/n."""
        rows = []
        by_scheme = {}
        for e in self.entries:
            if e.error is None:
                by_scheme.setdefault(e.scheme, []).append(e.sum_rate)
        for s, v in by_scheme.items():
            v = np.sort(v)
            n = len(v)
            rows += [dict(scheme=s, sample=float(x), percentile=(i + 1) / n) for i, x in enumerate(v)]
        return rows

    def convergence(self):
        """Mean utility per iteration and scheme; short traces carry their last value."""
        rows = []
        by_scheme = {}
        for e in self.entries:
            if e.error is None and e.trace:
                by_scheme.setdefault(e.scheme, []).append(e.trace)
        for s, traces in by_scheme.items():
            n = max(map(len, traces))
            padded = np.array([t + [t[-1]] * (n - len(t)) for t in traces])
            rows += [dict(iteration=i + 1, scheme=s, utility=float(u)) for i, u in enumerate(padded.mean(axis=0))]
        return rows

    def errors(self):
        return [e for e in self.entries if e.error is not None]


def prepare(config: ScenarioConfig, seed: int):
    """Draw a snapshot, its channels and the per-link rates."""
    sc = config.scenario(seed=seed)
    H = optics.channel_matrices(sc)
    noise = config.noise()
    with np.errstate(divide="ignore"):
        snr_db = 10 * np.log10(optics.link_snr(H, noise, sc.powers))
    full, partial = classify_users(snr_db, config.snr_threshold_db)
    link = bia.link_rates(H, noise, sc.powers, full, partial, config.beta, config.min_rate)
    return sc, H, link


def _solve(scheme, config, H, sc, link):
    noise = config.noise()
    if scheme == "BIA-decentralized":
        res = allocation.decentralized_solve(link, config.solver)
        return res.rates, res.total_utility, list(res.trace)
    if scheme == "BIA-centralized":
        res = allocation.centralized_solve(link, config.solver)
        return res.rates, res.total_utility, list(res.trace)
    if scheme == "ZF":
        r = baselines.zf_rate(H, noise, sc.powers, min_rate=config.min_rate)
    else:
        r = baselines.tdma_rate(H, noise, sc.powers)
    served = r > 0
    return r, float(np.log(r[served]).sum()), []


def run_snapshot(spec: ExperimentSpec, seed: int, K=None, waist=None):
    """All requested schemes on one user drop; a failing scheme is recorded, not raised."""
    K = spec.num_users[0] if K is None else K
    waist = spec.beam_waists[0] if waist is None else waist
    cfg = spec.config.replace(num_users=K, beam_waist=waist)
    sc, H, link = prepare(cfg, seed)
    out = []
    for scheme in spec.schemes:
        e = Entry(K=K, W_0=waist, seed=seed, scheme=scheme)
        try:
            r, u, tr = _solve(scheme, cfg, H, sc, link)
        except Exception as exc:  # noqa: BLE001 - any solver failure is data
            e.error = f"{type(exc).__name__}: {exc}"
        else:
            rates = np.asarray(r) * cfg.bandwidth
            e.sum_rate = float(rates.sum())
            e.utility = float(u)
            e.trace = [float(x) for x in tr]
            e.user_rates = rates.tolist()
        out.append(e)
    return out


def _job(args):
    spec, seed, K, w = args
    return run_snapshot(spec, seed, K, w)


def sweep(spec: ExperimentSpec) -> RunReport:
    """Full factorial over (K, W_0) x snapshots; seed of snapshot i is ``base_seed + i``."""
    jobs = [
        (spec, spec.base_seed + i, K, w)
        for K in spec.num_users
        for w in spec.beam_waists
        for i in range(spec.snapshots)
    ]
    workers = spec.workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        results = map(_job, jobs)
        return RunReport([e for r in results for e in r])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return RunReport([e for r in results for e in r])


# -- export -------------------------------------------------------------------

TABLES = {
    "convergence": ("iteration", "scheme", "utility"),
    "sweep": ("K", "W_0", "scheme", "mean_sum_rate", "median_sum_rate"),
    "cdf": ("scheme", "sample", "percentile"),
}


def _rows(report: RunReport, table: str):
    if table == "convergence":
        return report.convergence()
    if table == "sweep":
        return report.aggregates()
    return report.cdf()


def metadata(spec: ExperimentSpec) -> dict:
    return {
        "seed": spec.base_seed,
        "config_hash": spec.config.config_hash(),
        "tool_version": __version__,
        "snapshots": spec.snapshots,
        "schemes": list(spec.schemes),
    }


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def export(report: RunReport, spec: ExperimentSpec, out_dir, fmt: str = "csv", tables=TABLES):
    """Write the named tables into ``out_dir``; returns the written paths."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table in tables:
        cols = TABLES[table]
        rows = [{c: r[c] for c in cols} for r in _rows(report, table)]
        path = out_dir / f"{table}.{fmt}"
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(cols)
                for r in rows:
                    w.writerow([_fmt(r[c]) for c in cols])
        else:
            doc = {
                "metadata": metadata(spec),
                "columns": list(cols),
                "rows": rows,
                "errors": [asdict(e) for e in report.errors()],
            }
            path.write_text(json.dumps(doc, indent=2, allow_nan=True))
        written.append(path)
    return written
