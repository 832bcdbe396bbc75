"""Monte Carlo sweeps of detector symbol-error rates.

Frames are keyed by the link parameters only (noise, K, C, M, SNR), never by
the ICA algorithm. Every algorithm therefore sees the same received frames,
and the algorithm-independent SUD detector runs once per frame.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import hashlib
import logging
import math
import time

import numpy as np

from . import detectors as det
from .channel import LinkScenario, synthesize
from .codes import gold_family

log = logging.getLogger(__name__)

DETECTORS = ("sud", "ica", "sudica")


def derive_seed(base_seed, key, run):
    """64-bit seed from ``blake2b(base_seed | key | run)``."""
    msg = f"{int(base_seed)}|{key}|{int(run)}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "little")


def frame_key(sc):
    return f"{sc.noise}|K{sc.users}|C{sc.chips}|M{sc.symbols}|snr{sc.snr_db!r}|code{sc.first_code}"


@dataclass(frozen=True)
class ExperimentPlan:
    scenarios: tuple
    runs_per_point: int = 100
    detectors: tuple = DETECTORS
    base_seed: int = 0
    pilot_length: int = det.PILOT_LENGTH

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.scenarios:
            raise ValueError("plan has no scenarios")
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be >= 1")
        if not self.detectors:
            raise ValueError("plan needs at least one detector")
        bad = set(self.detectors) - set(DETECTORS)
        if bad:
            raise ValueError(f"unknown detectors {sorted(bad)}; choose from {DETECTORS}")
        if self.pilot_length < 20:
            raise ValueError("pilot_length must be >= 20")
        blind = any(d in self.detectors for d in ("ica", "sudica"))
        for sc in self.scenarios:
            if sc.symbols <= self.pilot_length:
                raise ValueError(f"M={sc.symbols} leaves no symbols after the pilot block")
            if blind and sc.symbols < 10 * sc.chips:
                raise ValueError(f"ICA detectors need M >= {10 * sc.chips} for C={sc.chips}, got M={sc.symbols}")


@dataclass
class PointRecord:
    noise: str
    symbols: int
    snr_db: float
    users: int
    detector: str
    algorithm: str
    mean_ser: float
    ser_stderr: float
    runs: int
    scored_runs: int
    failed_runs: int
    mean_iterations: float
    wallclock_s: float
    # SUD-ICA only: runs decided entirely by the SUD branch because ICA failed
    fallback_runs: int = 0
    run_sers: np.ndarray = field(default=None, repr=False)

    @property
    def sort_key(self):
        return (self.noise, self.symbols, self.snr_db, self.algorithm, self.detector)


@dataclass
class SerReport:
    records: list

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def find(self, *, detector, algorithm=None, noise=None, symbols=None, snr_db=None):
        alg = "none" if detector == "sud" else algorithm
        for r in self.records:
            if (
                r.detector == detector
                and (alg is None or r.algorithm == alg)
                and (noise is None or r.noise == noise)
                and (symbols is None or r.symbols == symbols)
                and (snr_db is None or r.snr_db == snr_db)
            ):
                return r
        raise KeyError((detector, algorithm, noise, symbols, snr_db))


def _summarize(sers):
    sers = np.asarray(sers, dtype=float)
    if sers.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(sers))
    if sers.size == 1:
        return mean, 0.0
    return mean, float(np.std(sers, ddof=1) / math.sqrt(sers.size))


def _run_group(template, algorithms, runs, detectors, base_seed, pilot_length):
    """Run ``runs`` frames of one link setting through every requested detector."""
    codes = gold_family()
    key = frame_key(template)
    p = pilot_length
    sud_sers, sud_time = [], 0.0
    per_alg = {
        a.algorithm: {"ica": [], "sudica": [], "failed": 0, "fallback": 0, "iters": [], "time": 0.0}
        for a in algorithms
    }
    need_ica = any(d in detectors for d in ("ica", "sudica"))
    for run in range(runs):
        seed = derive_seed(base_seed, key, run)
        frame = synthesize(replace(template, seed=seed), codes)
        truth = frame.symbols
        scored = truth.shape[0] * (truth.shape[1] - p)
        t0 = time.perf_counter()
        sud = det.sud_detect(frame.received, frame.mixing)
        sud_time += time.perf_counter() - t0
        if "sud" in detectors:
            sud_sers.append(det.symbol_errors(sud.hard_symbols, truth, p)[0] / scored)
        if not need_ica:
            continue
        for cfg in algorithms:
            acc = per_alg[cfg.algorithm]
            t0 = time.perf_counter()
            ica = det.ica_detect(frame.received, cfg.with_seed(seed), truth[:, :p])
            comb = det.combine(sud, ica)
            acc["time"] += time.perf_counter() - t0
            if ica.ica_iterations is not None:
                acc["iters"].append(ica.ica_iterations)
            if ica.failed:
                acc["failed"] += 1
            else:
                acc["ica"].append(det.symbol_errors(ica.hard_symbols, truth, p)[0] / scored)
            if np.all(comb.fallback):
                acc["fallback"] += 1
            acc["sudica"].append(det.symbol_errors(comb.hard_symbols, truth, p)[0] / scored)

    base = dict(noise=template.noise, symbols=template.symbols, snr_db=float(template.snr_db),
                users=template.users, runs=runs)
    out = []
    if "sud" in detectors:
        mean, se = _summarize(sud_sers)
        out.append(PointRecord(detector="sud", algorithm="none", mean_ser=mean, ser_stderr=se,
                               scored_runs=len(sud_sers), failed_runs=0, mean_iterations=math.nan,
                               wallclock_s=sud_time, run_sers=np.array(sud_sers), **base))
    for cfg in algorithms:
        acc = per_alg[cfg.algorithm]
        iters = float(np.mean(acc["iters"])) if acc["iters"] else math.nan
        if "ica" in detectors:
            mean, se = _summarize(acc["ica"])
            out.append(PointRecord(detector="ica", algorithm=cfg.algorithm, mean_ser=mean,
                                   ser_stderr=se, scored_runs=len(acc["ica"]),
                                   failed_runs=acc["failed"], mean_iterations=iters,
                                   wallclock_s=acc["time"], run_sers=np.array(acc["ica"]), **base))
        if "sudica" in detectors:
            mean, se = _summarize(acc["sudica"])
            out.append(PointRecord(detector="sudica", algorithm=cfg.algorithm, mean_ser=mean,
                                   ser_stderr=se, scored_runs=len(acc["sudica"]), failed_runs=0,
                                   mean_iterations=iters, wallclock_s=acc["time"] + sud_time,
                                   fallback_runs=acc["fallback"],
                                   run_sers=np.array(acc["sudica"]), **base))
    return out


def run_point(sc, runs, detectors=DETECTORS, base_seed=0, pilot_length=det.PILOT_LENGTH):
    """Records for one scenario: SUD (algorithm ``"none"``) plus ICA and SUD-ICA
    for ``sc.algorithm``, restricted to ``detectors``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    ExperimentPlan([sc], runs, tuple(detectors), base_seed, pilot_length)
    return _run_group(sc, [sc.algorithm], runs, tuple(detectors), base_seed, pilot_length)


def _group_scenarios(scenarios):
    groups = {}
    for sc in scenarios:
        key = frame_key(sc)
        template, algs = groups.setdefault(key, (sc, {}))
        algs.setdefault(sc.algorithm.algorithm, sc.algorithm)
    return [(t, list(a.values())) for t, a in groups.values()]


def _job(args):
    return _run_group(*args)


def run_plan(plan, threads=1):
    """Execute every point of ``plan``; records come back in canonical order."""
    jobs = [
        (template, algs, plan.runs_per_point, plan.detectors, plan.base_seed, plan.pilot_length)
        for template, algs in _group_scenarios(plan.scenarios)
    ]
    records = []
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for recs in pool.map(_job, jobs):
                records.extend(recs)
    else:
        for job in jobs:
            t0 = time.perf_counter()
            recs = _job(job)
            log.info("%s: %d records in %.1fs", frame_key(job[0]), len(recs), time.perf_counter() - t0)
            records.extend(recs)
    records.sort(key=lambda r: r.sort_key)
    return SerReport(records)


def paper_grid(symbols=(2000, 5000, 10000), snr_db=(-10.0, -5.0, 0.0), noise=("awgn", "pink"),
               algorithms=("comon", "jade", "fastica"), users=30, chips=31, ica_defaults=None,
               first_code=0):
    """Scenario list for the noise x SNR x M x algorithm sweep."""
    from .ica import IcaConfig

    ica_defaults = ica_defaults or {}
    return [
        LinkScenario(users=users, chips=chips, symbols=m, snr_db=float(s), noise=nz,
                     algorithm=IcaConfig(algorithm=a, **ica_defaults), first_code=first_code)
        for nz in noise
        for m in symbols
        for s in snr_db
        for a in algorithms
    ]
