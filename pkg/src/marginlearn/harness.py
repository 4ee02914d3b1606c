"""Experiment orchestration, verification suite, and CSV emission.

Experiments are described by a flat plain-text config (key = value) or
constructed directly as ``ExperimentConfig``; each seed runs fully
deterministically and emits one ``ExperimentRecord``.  The verification
suite bundles the distributional and disagreement-geometry checks into
one PASS/FAIL report with explicit estimates, bounds, and confidence
widths.

CSV schema is pinned: the header is exactly
``learner,dist,dim,eps,delta,noise,seed,labels,unlabeled,error,wall_ms``
followed by per-round columns ``r<k>_err,r<k>_labels``.  Identical
config and seeds reproduce the file byte-for-byte on one build, except
for the wall_ms timing column.
"""

from __future__ import annotations

import functools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analysis import EstimateWithCI, check_angle_bound, check_margin_decay, estimate_capacity
from .distributions import (
    DistributionSpec,
    RandomStream,
    apply_affine,
    isotropy_audit,
    make_beta_mixture,
    make_gaussian,
    make_uniform_ball,
    sample_chunks,
)
from .errors import BudgetExhaustedError
from .geometry import rotate_towards, unit_vector
from .learners import (
    C1_DEFAULT,
    C2_DEFAULT,
    C2_NOISE_DEFAULT,
    CEPS_DEFAULT,
    CR_DEFAULT,
    UNLABELED_CAP_FACTOR_DEFAULT,
    Schedule,
    margin_active_learn,
    margin_active_learn_noise,
    passive_learn,
)
from .oracles import LabelOracle, NoiseModel, excess_error

logger = logging.getLogger(__name__)

#: Environment variable bounding worker parallelism (default: cpu count).
WORKERS_ENV = "MARGINLEARN_WORKERS"
#: Fresh evaluation samples for the post-hoc measured error.
MEASURE_N = 1_000_000
#: Passive label budget is ceil(c3 (d + ln(1/delta)) / eps).
C3_DEFAULT = 40.0

LEARNERS = ("active", "passive", "active_noise")
_SID_TARGET = 1
_SID_LEARN = 2
_SID_EVAL = 3

CSV_BASE_HEADER = "learner,dist,dim,eps,delta,noise,seed,labels,unlabeled,error,wall_ms"


def worker_count() -> int:
    """Worker parallelism degree, from the environment or the cpu count."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is not None:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def _map_jobs(fn, jobs: Sequence):
    """Run fn over jobs, in order, with up to worker_count() processes."""
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def parse_dist_descriptor(text: str, dim: int) -> DistributionSpec:
    """Build a distribution from "gaussian", "ball", or "mixture:<sep>"."""
    t = text.strip()
    if t == "gaussian":
        return make_gaussian(dim)
    if t == "ball":
        return make_uniform_ball(dim)
    if t.startswith("mixture:"):
        return make_beta_mixture(dim, float(t.split(":", 1)[1]))
    raise ValueError(f"unrecognized distribution descriptor {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment batch: a learner, a problem, and a list of seeds.

    Schedule overrides default to None, meaning the learner's own
    calibrated constants; ``c3`` sets the passive label budget via
    m = ceil(c3 (d + ln(1/delta)) / eps).
    """

    learner: str = "active"
    dist: str = "gaussian"
    dim: int = 5
    eps: float = 0.05
    delta: float = 0.1
    noise: str = "none"
    seeds: Tuple[int, ...] = (0,)
    c1: Optional[float] = None
    c2: Optional[float] = None
    c_r: Optional[float] = None
    c_eps: Optional[float] = None
    rounds: Optional[int] = None
    cap_factor: Optional[float] = None
    c3: float = C3_DEFAULT
    whiten: bool = False
    affine: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ValueError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if not 0.0 < self.eps < 0.25:
            raise ValueError(f"eps must be in (0, 1/4), got {self.eps!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta!r}")
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ValueError("seeds must be nonempty")
        if any(s < 0 for s in seeds):
            raise ValueError("seeds must be nonnegative")
        object.__setattr__(self, "seeds", seeds)
        noise = NoiseModel.from_descriptor(self.noise)
        if self.learner == "active_noise":
            if noise.kind not in ("massart", "tsybakov"):
                raise ValueError("learner active_noise needs massart or tsybakov noise")
        elif noise.kind != "none":
            raise ValueError(f"learner {self.learner!r} expects noise none, got {self.noise!r}")
        if self.whiten and self.learner != "passive":
            raise ValueError("whiten is only supported for the passive learner")
        if self.c3 <= 0:
            raise ValueError(f"c3 must be positive, got {self.c3!r}")
        parse_dist_descriptor(self.dist, self.dim)

    @classmethod
    def from_mapping(cls, mapping: Dict[str, str]) -> "ExperimentConfig":
        """Build a config from flat string values (config file or flags)."""
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: Dict[str, object] = {}
        for key, raw in mapping.items():
            if key in ("learner", "dist", "noise", "affine", "out"):
                kwargs[key] = raw
            elif key in ("dim", "rounds"):
                kwargs[key] = int(raw)
            elif key in ("eps", "delta", "c1", "c2", "c_r", "c_eps", "cap_factor", "c3"):
                kwargs[key] = float(raw)
            elif key == "seeds":
                kwargs[key] = tuple(int(s) for s in str(raw).split(",") if s.strip() != "")
            elif key == "whiten":
                kwargs[key] = _parse_bool(raw)
        return cls(**kwargs)


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_config(text: str) -> Dict[str, str]:
    """Parse flat key = value lines; # starts a comment."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(path, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Read a config file and apply overriding values (flags win)."""
    mapping = parse_config(Path(path).read_text(encoding="utf-8"))
    if overrides:
        mapping.update(overrides)
    return ExperimentConfig.from_mapping(mapping)


def build_distribution(config: ExperimentConfig) -> DistributionSpec:
    """The distribution a config describes, affine map included."""
    spec = parse_dist_descriptor(config.dist, config.dim)
    if config.affine is not None:
        matrix = np.atleast_2d(np.loadtxt(config.affine))
        spec = apply_affine(spec, matrix)
    return spec


@dataclass(frozen=True)
class ExperimentRecord:
    """One seed's outcome, in CSV column order."""

    learner: str
    dist: str
    dim: int
    eps: float
    delta: float
    noise: str
    seed: int
    labels: int
    unlabeled: int
    error: float
    wall_ms: float
    round_errors: Tuple[Optional[float], ...] = ()
    round_labels: Tuple[int, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.error <= 1.0:
            raise ValueError(f"error must be in [0, 1], got {self.error!r}")
        if self.labels > self.unlabeled:
            raise ValueError("labels cannot exceed unlabeled draws")
        if len(self.round_errors) != len(self.round_labels):
            raise ValueError("per-round errors and labels must align")


def _schedule_for(config: ExperimentConfig, noise: NoiseModel) -> Optional[Schedule]:
    overrides = (config.c1, config.c2, config.c_r, config.c_eps, config.rounds, config.cap_factor)
    if all(v is None for v in overrides):
        return None
    common = dict(
        c1=config.c1 if config.c1 is not None else C1_DEFAULT,
        rounds=config.rounds,
        unlabeled_cap_factor=(
            config.cap_factor if config.cap_factor is not None else UNLABELED_CAP_FACTOR_DEFAULT
        ),
    )
    if config.learner == "active_noise":
        alpha = noise.alpha if noise.kind == "tsybakov" else 0.0
        return Schedule.for_noise(
            config.dim,
            config.eps,
            config.delta,
            alpha,
            c2=config.c2 if config.c2 is not None else C2_NOISE_DEFAULT,
            c_r=config.c_r if config.c_r is not None else CR_DEFAULT,
            c_eps=config.c_eps if config.c_eps is not None else CEPS_DEFAULT,
            **common,
        )
    return Schedule.default(
        config.dim,
        config.eps,
        config.delta,
        c2=config.c2 if config.c2 is not None else C2_DEFAULT,
        **common,
    )


def _run_seed(config: ExperimentConfig, seed: int) -> Optional[ExperimentRecord]:
    dist = build_distribution(config)
    noise = NoiseModel.from_descriptor(config.noise)
    base = RandomStream(seed)
    target = unit_vector(base.child(_SID_TARGET).generator().standard_normal(config.dim))
    oracle = LabelOracle(target=target, noise=noise)
    learn_rng = base.child(_SID_LEARN)
    schedule = _schedule_for(config, noise)
    start = time.perf_counter()
    try:
        if config.learner == "active":
            result = margin_active_learn(
                dist, oracle, config.dim, config.eps, config.delta, schedule=schedule, rng=learn_rng
            )
        elif config.learner == "active_noise":
            result = margin_active_learn_noise(
                dist, oracle, config.dim, config.eps, config.delta, schedule=schedule, rng=learn_rng
            )
        else:
            m = math.ceil(config.c3 * (config.dim + math.log(1.0 / config.delta)) / config.eps)
            result = passive_learn(dist, oracle, m, learn_rng, whiten=config.whiten)
    except BudgetExhaustedError as exc:
        logger.warning("seed %d: %s; recording the partial result", seed, exc)
        result = exc.partial
        if result is None:
            return None
    except Exception:
        logger.exception("seed %d failed; skipping it", seed)
        return None
    wall_ms = (time.perf_counter() - start) * 1000.0
    error = excess_error(
        result.w_hat, oracle, dist, n=MEASURE_N, rng=base.child(_SID_EVAL), method="mc"
    )
    if result.labels_used != oracle.queries_used:
        logger.warning(
            "seed %d: result reports %d labels but the oracle counted %d; using the oracle",
            seed,
            result.labels_used,
            oracle.queries_used,
        )
    return ExperimentRecord(
        learner=config.learner,
        dist=config.dist,
        dim=config.dim,
        eps=config.eps,
        delta=config.delta,
        noise=config.noise,
        seed=seed,
        labels=oracle.queries_used,
        unlabeled=result.unlabeled_used,
        error=error,
        wall_ms=wall_ms,
        round_errors=tuple(r.error for r in result.rounds),
        round_labels=tuple(r.labels for r in result.rounds),
    )


def run_experiment(config: ExperimentConfig) -> List[ExperimentRecord]:
    """Run every seed in the config; one record per seed, in seed order.

    Seeds are independent: a failing seed is logged and skipped without
    contaminating the rest of the batch (unlabeled-budget exhaustion
    still yields a record, built from the partial result).  Writes the
    CSV to ``config.out`` when set.
    """
    build_distribution(config)  # reject malformed configs, including a missing affine file
    records = _map_jobs(functools.partial(_run_seed, config), list(config.seeds))
    kept = [r for r in records if r is not None]
    if config.out is not None:
        write_records(kept, config.out)
    return kept


def _fmt(value) -> str:
    return repr(float(value))


def write_records(records: Sequence[ExperimentRecord], path) -> None:
    """Write records as CSV with the pinned header, byte-stable floats."""
    Path(path).write_text(records_to_csv(records), encoding="utf-8")


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    max_rounds = max((len(r.round_errors) for r in records), default=0)
    header = CSV_BASE_HEADER
    for k in range(1, max_rounds + 1):
        header += f",r{k}_err,r{k}_labels"
    lines = [header]
    for r in records:
        parts = [
            r.learner,
            r.dist,
            str(r.dim),
            _fmt(r.eps),
            _fmt(r.delta),
            r.noise,
            str(r.seed),
            str(r.labels),
            str(r.unlabeled),
            _fmt(r.error),
            _fmt(r.wall_ms),
        ]
        for k in range(max_rounds):
            if k < len(r.round_errors):
                err = r.round_errors[k]
                parts.append("" if err is None else _fmt(err))
                parts.append(str(r.round_labels[k]))
            else:
                parts.extend(["", ""])
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def read_records(path) -> List[ExperimentRecord]:
    """Parse a CSV written by ``write_records``; round-trips exactly."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line]
    if not lines:
        raise ValueError("empty records file")
    header = lines[0].split(",")
    base = CSV_BASE_HEADER.split(",")
    if header[: len(base)] != base:
        raise ValueError(f"unexpected CSV header: {lines[0]!r}")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        round_errors: List[Optional[float]] = []
        round_labels: List[int] = []
        for i in range(len(base), len(parts), 2):
            err_raw, labels_raw = parts[i], parts[i + 1]
            if labels_raw == "":
                continue
            round_errors.append(None if err_raw == "" else float(err_raw))
            round_labels.append(int(labels_raw))
        records.append(
            ExperimentRecord(
                learner=parts[0],
                dist=parts[1],
                dim=int(parts[2]),
                eps=float(parts[3]),
                delta=float(parts[4]),
                noise=parts[5],
                seed=int(parts[6]),
                labels=int(parts[7]),
                unlabeled=int(parts[8]),
                error=float(parts[9]),
                wall_ms=float(parts[10]),
                round_errors=tuple(round_errors),
                round_labels=tuple(round_labels),
            )
        )
    return records


@dataclass(frozen=True)
class CheckResult:
    """One verification check: an estimate against a bound."""

    name: str
    passed: bool
    estimate: float
    bound: float
    ci: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"CHECK {self.name} {status} est={self.estimate:.6g} bound={self.bound:.6g} ci={self.ci:.6g}"


@dataclass(frozen=True)
class VerificationReport:
    checks: Tuple[CheckResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        return "\n".join(c.line() for c in self.checks) + "\n"


def _suite_pair(dist: DistributionSpec, eta: float, rng: RandomStream):
    g = rng.generator()
    u = unit_vector(g.standard_normal(dist.d))
    t = unit_vector(g.standard_normal(dist.d))
    if float(np.dot(u.w, t.w)) > math.cos(eta):
        t = unit_vector(-t.w)
    return u, rotate_towards(u, t, eta)


def _checks_for_dist(dist: DistributionSpec, n: int, trials: int, rng: RandomStream) -> List[CheckResult]:
    checks: List[CheckResult] = []
    tag = f"[{dist.name},d={dist.d}]"
    audit = isotropy_audit(dist, n, rng.child(1))
    checks.append(
        CheckResult(
            f"isotropy_mean{tag}",
            audit.mean_norm <= audit.mean_bound,
            audit.mean_norm,
            audit.mean_bound,
            0.0,
        )
    )
    checks.append(
        CheckResult(
            f"isotropy_dir{tag}",
            audit.worst_direction_dev <= audit.direction_bound,
            audit.worst_direction_dev,
            audit.direction_bound,
            0.0,
        )
    )
    if not dist.isotropic:
        # the structural lemmas below presuppose isotropy; whiten first
        return checks
    d = dist.d
    alphas = (1.0, 2.0, 3.0)
    light_rs = (2.0, 3.0)
    light_c = math.exp(dist.beta * math.ceil(math.log2(d + 1)))
    bands = (0.05, 0.1, 0.25)
    u_band = unit_vector(rng.child(2).generator().standard_normal(d)).w
    norm_thresholds = np.array(
        [a * math.sqrt(d) for a in alphas] + [r * math.sqrt(light_c * d) for r in light_rs]
    )
    norm_hits = np.zeros(norm_thresholds.size, dtype=np.int64)
    band_hits = np.zeros(len(bands), dtype=np.int64)
    for block in sample_chunks(dist, n, rng.child(3)):
        norms = np.linalg.norm(block, axis=1)
        norm_hits += np.sum(norms[:, None] >= norm_thresholds[None, :], axis=0)
        margins = np.abs(block @ u_band)
        band_hits += np.sum(margins[:, None] <= np.array(bands)[None, :], axis=0)
    for i, a in enumerate(alphas):
        est = EstimateWithCI.from_counts(int(norm_hits[i]), n)
        bound = math.exp(1.0 - a)
        checks.append(
            CheckResult(f"tail_a{a:g}{tag}", est.lower <= bound, est.value, bound, est.half_width)
        )
    for j, r_mult in enumerate(light_rs):
        est = EstimateWithCI.from_counts(int(norm_hits[len(alphas) + j]), n)
        bound = light_c * math.exp(1.0 - r_mult)
        checks.append(
            CheckResult(
                f"lighttail_r{r_mult:g}{tag}", est.lower <= bound, est.value, bound, est.half_width
            )
        )
    for b, hits in zip(bands, band_hits):
        est = EstimateWithCI.from_counts(int(hits), n)
        checks.append(
            CheckResult(f"band_{b:g}{tag}", est.lower <= 2 * b, est.value, 2 * b, est.half_width)
        )
    angle_report = check_angle_bound(dist, trials, n, rng.child(4), floor=0.1)
    checks.append(
        CheckResult(f"angle_floor{tag}", angle_report.passed, angle_report.min_ratio, 0.1, 0.0)
    )
    eta = 0.2
    u0, v0 = _suite_pair(dist, eta, rng.child(5))
    if dist.kind == "uniform_ball":
        # margins inside the disagreement wedge cannot exceed radius * sin(eta),
        # so the fit grid stays inside that support; 4 eta lands beyond it
        grid = tuple(m * eta for m in (0.25, 0.75, 1.5, 2.5, 4.0))
    else:
        grid = tuple(m * eta for m in (1.0, 2.0, 3.0, 4.0))
    decay = check_margin_decay(u0, v0, dist, grid, n, rng.child(6))
    values = [est.value for est in decay.estimates]
    max_rise = max(b - a for a, b in zip(values, values[1:]))
    checks.append(CheckResult(f"band_monotone{tag}", max_rise <= 0.0, max_rise, 0.0, 0.0))
    last = decay.estimates[-1]
    checks.append(
        CheckResult(
            f"band_threshold{tag}",
            last.lower <= 0.1 * eta,
            last.value,
            0.1 * eta,
            last.half_width,
        )
    )
    checks.append(CheckResult(f"margin_decay{tag}", decay.passed, decay.slope, -0.3, 0.0))
    if dist.kind == "gaussian" and dist.d == 2:
        w0 = unit_vector(rng.child(7).generator().standard_normal(2))
        cap = estimate_capacity(w0, 0.01, dist, n, rng.child(8))
        checks.append(
            CheckResult(
                f"capacity_gauss2{tag}",
                abs(cap.value - 2.0) <= cap.half_width,
                cap.value,
                2.0,
                cap.half_width,
            )
        )
    return checks


def run_verification_suite(
    dist_list: Sequence[DistributionSpec],
    level: str = "quick",
    rng: Optional[RandomStream] = None,
    out_path=None,
) -> VerificationReport:
    """Run every structural check on every distribution in the list.

    quick uses 2e5 samples per check, full 1e6.  Non-isotropic
    distributions get only the isotropy audit (which then fails, by
    design); the lemma checks presuppose isotropy.  Writes the report
    text to ``out_path`` when given.
    """
    if level not in ("quick", "full"):
        raise ValueError(f"level must be quick or full, got {level!r}")
    if rng is None:
        rng = RandomStream(0)
    n = 200_000 if level == "quick" else 1_000_000
    trials = 20 if level == "quick" else 100
    jobs = [(dist, n, trials, rng.child(i)) for i, dist in enumerate(dist_list)]
    groups = _map_jobs(_check_job, jobs)
    checks = [c for group in groups for c in group]
    report = VerificationReport(checks=tuple(checks))
    if out_path is not None:
        Path(out_path).write_text(report.to_text(), encoding="utf-8")
    return report


def _check_job(args) -> List[CheckResult]:
    return _checks_for_dist(*args)
