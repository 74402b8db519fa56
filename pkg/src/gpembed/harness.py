"""Multi-trial distortion experiments.

Each trial samples one cloud, builds the kernels the requested methods need,
and scores every (method, k, p) embedding by ``log L`` against a reference
distance.  All methods within a trial share the cloud and kernel; Gaussian
sketches are shared by GPS/GPB and Bernoulli sketches by GPSBS/GPSBB.

Randomness is derived from ``master_seed`` through named sub-streams
``(trial, stream, k)``, so adding or removing a method never changes the
draws seen by another method.
"""
from __future__ import annotations

import io
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .embed import METHOD_TABLE, METHODS, diffusion_maps, gp_power_series, make_sketch
from .errors import GPEmbedError, SpecError, TrialError
from .io import fmt
from .kernel import DEFAULT_DELTA, affinity, normalize_bistochastic, normalize_symmetric
from .manifolds import ManifoldSpec, sample
from .metric import (
    bilipschitz_distortion,
    diffusion_distance,
    log_distortion,
    pairwise_euclidean,
)
from .spectral import top_eigenpairs

REFERENCES = ("diffusion", "euclidean")

REPORT_HEADER = ("method", "k", "p", "mean_logL", "std_logL", "collapse_count", "trials")
RAW_HEADER = ("trial", "method", "k", "p", "logL", "collapsed")

STREAM_CLOUD = 0
STREAM_GAUSSIAN = 1
STREAM_BERNOULLI = 2


def derive_seed(master_seed: int, trial: int, stream: int, k: int = 0) -> int:
    """64-bit seed for one named sub-stream of one trial."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial), int(stream), int(k)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def powers_of_two(P: int) -> Tuple[int, ...]:
    """``(2, 4, ..., 2**P)``."""
    if int(P) < 1:
        raise SpecError(f"P must be a positive integer, got {P}")
    return tuple(2 ** i for i in range(1, int(P) + 1))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment.

    ``manifold.n`` is the number of points per trial; ``manifold.seed`` is
    ignored (each trial derives its own).  ``powers`` is only read by
    :func:`run_power_sweep`.
    """

    manifold: ManifoldSpec
    trials: int
    eps: float
    methods: Tuple[str, ...]
    p: int = 1
    k_min: int = 2
    k_max: int = 2
    reference: str = "diffusion"
    sinkhorn_delta: float = DEFAULT_DELTA
    master_seed: int = 0
    powers: Optional[Tuple[int, ...]] = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.powers is not None:
            object.__setattr__(self, "powers", tuple(int(q) for q in self.powers))
        self.validate()

    @property
    def n(self) -> int:
        return int(self.manifold.n)

    @property
    def ks(self) -> Tuple[int, ...]:
        return tuple(range(self.k_min, self.k_max + 1))

    def validate(self):
        bad = []
        if int(self.trials) != self.trials or self.trials < 1:
            bad.append(f"trials must be a positive integer (got {self.trials})")
        if not self.eps > 0:
            bad.append(f"eps must be positive (got {self.eps})")
        if not self.methods:
            bad.append("methods must not be empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            bad.append(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            bad.append("methods contain duplicates")
        if int(self.p) != self.p or self.p < 1:
            bad.append(f"p must be a positive integer (got {self.p})")
        if self.k_min < 1 or self.k_min > self.k_max:
            bad.append(f"need 1 <= k_min <= k_max (got {self.k_min}, {self.k_max})")
        if self.k_max > self.n - 1:
            bad.append(f"k_max must be at most n - 1 = {self.n - 1} (got {self.k_max})")
        if self.reference not in REFERENCES:
            bad.append(f"reference must be one of {REFERENCES} (got {self.reference!r})")
        if not self.sinkhorn_delta > 0:
            bad.append(f"sinkhorn_delta must be positive (got {self.sinkhorn_delta})")
        if self.powers is not None and (not self.powers or min(self.powers) < 1):
            bad.append("powers must be a non-empty list of positive integers")
        if int(self.threads) < 0:
            bad.append("threads must be >= 0")
        if bad:
            raise SpecError("; ".join(bad))


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: str
    k: int
    p: int
    logL: float
    collapsed: bool
    cloud_digest: str = field(default="", compare=False)
    kernel_digest: str = field(default="", compare=False)


@dataclass(frozen=True)
class ReportRow:
    method: str
    k: int
    p: int
    mean_logL: float
    std_logL: float
    collapse_count: int
    trials: int


@dataclass
class ExperimentReport:
    rows: List[ReportRow]
    records: List[TrialRecord]

    def row(self, method: str, k: Optional[int] = None, p: Optional[int] = None) -> ReportRow:
        for r in self.rows:
            if r.method == method and (k is None or r.k == k) and (p is None or r.p == p):
                return r
        raise KeyError((method, k, p))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow([r.method, r.k, r.p, fmt(r.mean_logL), fmt(r.std_logL),
                        r.collapse_count, r.trials])
        return buf.getvalue()

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for r in self.records:
            w.writerow([r.trial, r.method, r.k, r.p, fmt(r.logL), int(r.collapsed)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    def write_raw_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.raw_csv())


def _needed(methods: Sequence[str]):
    norms = {METHOD_TABLE[m][1] for m in methods}
    dists = {METHOD_TABLE[m][2] for m in methods if METHOD_TABLE[m][0] == "gp"}
    return norms, dists


def _run_trial(cfg: ExperimentConfig, trial: int, ks: Sequence[int],
               powers: Sequence[int]) -> List[TrialRecord]:
    cloud = sample(cfg.manifold.with_seed(derive_seed(cfg.master_seed, trial, STREAM_CLOUD)))
    raw = affinity(cloud, cfg.eps)
    norms, dists = _needed(cfg.methods)
    kernels = {}
    if "symmetric" in norms:
        kernels["symmetric"] = normalize_symmetric(raw)
    if "bistochastic" in norms:
        kernels["bistochastic"] = normalize_bistochastic(raw, cfg.sinkhorn_delta)
    digests = {norm: A.digest() for norm, A in kernels.items()}
    cloud_digest = cloud.digest()

    ref_cache: Dict[Tuple[str, int], object] = {}

    def reference(norm, p):
        key = ("euclidean", 0) if cfg.reference == "euclidean" else (norm, p)
        if key not in ref_cache:
            if cfg.reference == "euclidean":
                ref_cache[key] = pairwise_euclidean(cloud.points)
            else:
                ref_cache[key] = diffusion_distance(kernels[norm], p)
        return ref_cache[key]

    decomps = {}
    for m in cfg.methods:
        family, norm, _ = METHOD_TABLE[m]
        if family == "diffusion" and norm not in decomps:
            decomps[norm] = top_eigenpairs(kernels[norm], max(ks) + 1)

    sketches = {}
    stream_of = {"gaussian": STREAM_GAUSSIAN, "symmetric_bernoulli": STREAM_BERNOULLI}
    for dist in sorted(d for d in dists if d is not None):
        for k in ks:
            seed = derive_seed(cfg.master_seed, trial, stream_of[dist], k)
            sketches[dist, k] = make_sketch(cloud.n, k, dist, seed)

    out = []
    for m in cfg.methods:
        family, norm, dist = METHOD_TABLE[m]
        A = kernels[norm]
        for k in ks:
            if family == "diffusion":
                embs = [(p, diffusion_maps(A, k, p, decomposition=decomps[norm])) for p in powers]
            else:
                embs = list(gp_power_series(A, k, powers, sketches[dist, k]))
            by_p = dict(embs)
            for p in powers:
                L = bilipschitz_distortion(pairwise_euclidean(by_p[p].coords), reference(norm, p))
                out.append(TrialRecord(trial, m, k, p, log_distortion(L), bool(np.isinf(L)),
                                       cloud_digest, digests[norm]))
    return out


def _guarded_trial(args):
    cfg, trial, ks, powers = args
    try:
        return _run_trial(cfg, trial, ks, powers)
    except GPEmbedError as exc:
        raise TrialError(trial, exc) from exc
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise TrialError(trial, exc) from exc


def _aggregate(cfg, ks, powers, records) -> List[ReportRow]:
    grouped: Dict[Tuple[str, int, int], List[TrialRecord]] = {}
    for r in records:
        grouped.setdefault((r.method, r.k, r.p), []).append(r)
    rows = []
    for m in cfg.methods:
        for k in ks:
            for p in powers:
                recs = sorted(grouped[m, k, p], key=lambda r: r.trial)
                vals = np.array([r.logL for r in recs])
                rows.append(ReportRow(m, k, p, float(np.mean(vals)), float(np.std(vals)),
                                      sum(r.collapsed for r in recs), len(recs)))
    return rows


def _execute(cfg: ExperimentConfig, ks, powers) -> ExperimentReport:
    powers = tuple(sorted(set(int(q) for q in powers)))
    jobs = [(cfg, t, ks, powers) for t in range(cfg.trials)]
    threads = cfg.threads or (os.cpu_count() or 1)
    if threads == 1 or cfg.trials == 1:
        per_trial = [_guarded_trial(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, cfg.trials)) as pool:
            per_trial = list(pool.map(_guarded_trial, jobs))
    records = [r for recs in per_trial for r in recs]
    return ExperimentReport(_aggregate(cfg, ks, powers, records), records)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Sweep target dimension ``k`` in ``[k_min, k_max]`` at power ``cfg.p``.

    Diffusion maps use time ``t = p`` so both families target the same
    diffusion distance; with ``reference="diffusion"`` each embedding is
    scored against the diffusion distance of its own normalized kernel at
    time ``p``.
    """
    cfg.validate()
    return _execute(cfg, cfg.ks, (cfg.p,))


def run_power_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Sweep the kernel power over ``cfg.powers`` at a fixed ``k``.

    Scores against ambient Euclidean distance. A Gaussian (or Bernoulli)
    sketch is drawn once per trial and pushed through successive powers.
    """
    cfg.validate()
    if cfg.powers is None:
        raise SpecError("power sweep needs a list of powers")
    if cfg.k_min != cfg.k_max:
        raise SpecError(f"power sweep needs a fixed k (got k_min={cfg.k_min}, k_max={cfg.k_max})")
    if cfg.reference != "euclidean":
        raise SpecError("power sweep scores against the euclidean reference")
    return _execute(cfg, cfg.ks, cfg.powers)

