"""Seeded Monte Carlo experiments certifying the risk bounds.

Three harnesses, all driven by one JSON-serialisable :class:`ExperimentConfig`:

* :func:`run_oracle_experiment` — mean Kullback-Leibler risk of the
  progressive mixture vs. the best single candidate plus ``log(M)/(n+1)``.
* :func:`run_yatracos_experiment` — mean L1 risk of the minimum-distance
  selector vs. ``3 * min_j + sqrt(log(M)/n)``.
* :func:`run_rate_study` — log-log regression of worst-case excess risk
  against ``log(M)/n`` across several family sizes and sample sizes; the
  fitted slope certifies the rate.

Determinism: replication ``r`` at sample size ``n`` (and family size ``M``,
truth index ``t`` where applicable) draws from a generator seeded with the
tuple ``(seed, n, r)`` / ``(seed, M, n, t, r)``, so reports — and the CSV
files written from them — are identical across runs and machines with the
same numpy series.  Every row's ``pass`` flag applies the uniform rule
``excess <= bound + 3 * se``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregation import CandidateSet, aggregate, yatracos_select
from .densities import (
    PiecewiseDensity,
    ValidationError,
    _density_from_obj,
    hellinger_distance,
    kl_divergence,
    l1_distance,
    load_density,
    sample,
)
from .lowerbound import (
    AuditReport,
    audit_hypotheses,
    build_separated_set,
    choose_parameters,
    perturbed_density,
)

__all__ = [
    "LOSSES",
    "SLOPE_RANGE",
    "CSV_HEADER",
    "ExperimentConfig",
    "load_config",
    "RiskRow",
    "RiskReport",
    "RateStudyResult",
    "build_candidates",
    "build_truth",
    "run_oracle_experiment",
    "run_yatracos_experiment",
    "run_rate_study",
    "run_lowerbound_audit",
]

LOSSES = {
    "KL": kl_divergence,
    "H": hellinger_distance,
    "L1": l1_distance,
}

#: Acceptable fitted slope for the rate study's log-log regression.  The
#: theoretical excess scales linearly in log(M)/n, i.e. slope 1; the range
#: leaves room for Monte Carlo noise and finite-size curvature.
SLOPE_RANGE = (0.5, 1.5)

CSV_HEADER = [
    "experiment", "M", "n", "replications",
    "mean_risk", "se", "oracle_risk", "excess", "bound", "pass",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a harness needs, mirrored 1:1 by the JSON config format.

    Fields
    ------
    seed:          nonnegative root seed; all replication seeds derive from it.
    M:             number of candidates.
    n_values:      sample sizes to run (each >= 1).
    replications:  Monte Carlo replications per sample size (>= 1).
    A:             sup bound defining the candidate class (> 1).
    truth_spec:    descriptor of the sampling density, one of
                   ``{"kind": "candidate", "index": i}``,
                   ``{"kind": "uniform"}``,
                   ``{"kind": "file", "path": ...}``,
                   ``{"kind": "inline", "breakpoints": [...], "values": [...]}``.
    candidate_spec: descriptor of the candidate family, one of
                   ``{"kind": "perturbation"}`` (worst-case bump family,
                   tuned at ``n_ref`` if given, else at max(n_values)),
                   ``{"kind": "files", "paths": [...]}``,
                   ``{"kind": "inline", "densities": [{...}, ...]}``.
    loss:          "KL", "H" or "L1" — used by the rate study; the oracle
                   experiment always measures KL and the selector always L1.
    q:             power applied to the rate study's per-replication loss.
    M_values:      family sizes for the rate study (>= 2 distinct values);
                   other harnesses ignore it.
    """

    seed: int
    M: int
    n_values: tuple[int, ...]
    replications: int
    A: float
    truth_spec: dict
    candidate_spec: dict
    loss: str = "KL"
    q: float = 1.0
    M_values: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.M_values is not None:
            object.__setattr__(self, "M_values", tuple(int(m) for m in self.M_values))
        object.__setattr__(self, "truth_spec", dict(self.truth_spec))
        object.__setattr__(self, "candidate_spec", dict(self.candidate_spec))
        if self.seed < 0:
            raise ValidationError(f"seed must be nonnegative, got {self.seed}")
        if self.M < 1:
            raise ValidationError(f"M must be at least 1, got {self.M}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValidationError("n_values must be a nonempty list of sizes >= 1")
        if self.replications < 1:
            raise ValidationError(
                f"replications must be at least 1, got {self.replications}"
            )
        if not self.A > 1.0:
            raise ValidationError(f"A must exceed 1, got {self.A!r}")
        if self.loss not in LOSSES:
            raise ValidationError(
                f"loss must be one of {sorted(LOSSES)}, got {self.loss!r}"
            )
        if not self.q > 0:
            raise ValidationError(f"q must be positive, got {self.q!r}")
        if self.M_values is not None and any(m < 2 for m in self.M_values):
            raise ValidationError("every entry of M_values must be at least 2")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {
            "seed", "M", "n_values", "replications", "A",
            "truth_spec", "candidate_spec", "loss", "q", "M_values",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        missing = {"seed", "M", "n_values", "replications", "A",
                   "truth_spec", "candidate_spec"} - set(obj)
        if missing:
            raise ValidationError(f"missing config fields: {sorted(missing)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "M": self.M,
            "n_values": list(self.n_values),
            "replications": self.replications,
            "A": self.A,
            "truth_spec": self.truth_spec,
            "candidate_spec": self.candidate_spec,
            "loss": self.loss,
            "q": self.q,
        }
        if self.M_values is not None:
            out["M_values"] = list(self.M_values)
        return out

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def load_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(obj)


def _perturbation_candidates(M: int, n_ref: int, bound: float) -> list[PiecewiseDensity]:
    family = choose_parameters(M, n_ref, bound)
    words = build_separated_set(family.n_bumps, M)
    return [perturbed_density(family, w) for w in words.words]


def build_candidates(config: ExperimentConfig) -> list[PiecewiseDensity]:
    """Materialise the candidate family a config describes."""
    spec = config.candidate_spec
    kind = spec.get("kind")
    if kind == "perturbation":
        n_ref = int(spec.get("n_ref", max(config.n_values)))
        return _perturbation_candidates(config.M, n_ref, config.A)
    if kind == "files":
        densities = [load_density(p) for p in spec.get("paths", [])]
    elif kind == "inline":
        densities = [
            _density_from_obj(o, f"candidate_spec.densities[{i}]")
            for i, o in enumerate(spec.get("densities", []))
        ]
    else:
        raise ValidationError(
            f"candidate_spec.kind must be 'perturbation', 'files' or 'inline', "
            f"got {kind!r}"
        )
    if len(densities) != config.M:
        raise ValidationError(
            f"candidate_spec supplies {len(densities)} densities but M = {config.M}"
        )
    return densities


def build_truth(config: ExperimentConfig, candidates) -> PiecewiseDensity:
    """Materialise the sampling density a config describes."""
    spec = config.truth_spec
    kind = spec.get("kind")
    if kind == "candidate":
        index = spec.get("index")
        if not isinstance(index, int) or not 0 <= index < len(candidates):
            raise ValidationError(
                f"truth_spec.index must be in 0..{len(candidates) - 1}, got {index!r}"
            )
        return candidates[index]
    if kind == "uniform":
        return PiecewiseDensity.uniform()
    if kind == "file":
        return load_density(spec["path"])
    if kind == "inline":
        body = {k: v for k, v in spec.items() if k != "kind"}
        return _density_from_obj(body, "truth_spec")
    raise ValidationError(
        f"truth_spec.kind must be 'candidate', 'uniform', 'file' or 'inline', "
        f"got {kind!r}"
    )


@dataclass(frozen=True)
class RiskRow:
    """One experiment cell: a (family, sample size) pair's Monte Carlo summary."""

    experiment: str
    M: int
    n: int
    replications: int
    mean_risk: float
    se: float
    oracle_risk: float
    excess: float
    bound: float
    passed: bool

    def __post_init__(self):
        if self.se < 0:
            raise ValidationError("standard error cannot be negative")
        if math.isfinite(self.mean_risk) and math.isfinite(self.oracle_risk):
            if abs(self.excess - (self.mean_risk - self.oracle_risk)) > 1e-9:
                raise ValidationError("excess must equal mean_risk - oracle_risk")


@dataclass(frozen=True)
class RiskReport:
    """Rows plus the report-wide pass flag; serialises to the fixed CSV schema."""

    rows: tuple[RiskRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in self.rows:
                writer.writerow([
                    r.experiment, r.M, r.n, r.replications,
                    repr(r.mean_risk), repr(r.se), repr(r.oracle_risk),
                    repr(r.excess), repr(r.bound),
                    "true" if r.passed else "false",
                ])


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2 or not np.all(np.isfinite(values)):
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def run_oracle_experiment(config: ExperimentConfig) -> RiskReport:
    """Monte Carlo check that the progressive mixture meets its KL bound.

    For each sample size ``n``: draw ``replications`` samples from the
    truth, aggregate, and measure ``KL(truth | aggregate)``.  The row
    passes when ``mean - min_j KL(truth | f_j) <= log(M)/(n+1) + 3 * se``.
    Fails loudly when every candidate sits at infinite KL from the truth,
    since then no bound is meaningful.  Loss is KL by definition here
    (``config.loss``/``q`` only steer the rate study).
    """
    candidates = build_candidates(config)
    cset = CandidateSet.from_densities(candidates, bound=config.A)
    truth = build_truth(config, candidates)
    oracle = min(kl_divergence(truth, cset.candidate(j)) for j in range(cset.size))
    if not math.isfinite(oracle):
        raise ValidationError(
            "every candidate is at infinite KL divergence from the truth; "
            "the oracle bound is vacuous"
        )
    rows = []
    for n in config.n_values:
        risks = np.array([
            kl_divergence(
                truth,
                aggregate(cset, sample(truth, n, seed=(config.seed, n, r))),
            )
            for r in range(config.replications)
        ])
        mean, se = _mean_se(risks)
        bound = math.log(cset.size) / (n + 1)
        rows.append(RiskRow(
            experiment="oracle",
            M=cset.size,
            n=n,
            replications=config.replications,
            mean_risk=mean,
            se=se,
            oracle_risk=oracle,
            excess=mean - oracle,
            bound=bound,
            passed=mean - oracle <= bound + 3 * se,
        ))
    return RiskReport(tuple(rows))


def run_yatracos_experiment(config: ExperimentConfig) -> RiskReport:
    """Monte Carlo check that minimum-distance selection meets its L1 bound.

    Row rule: ``mean L1(truth, selected) <= 3 * min_j L1(truth, f_j)
    + sqrt(log(M)/n) + 3 * se``; the bound column stores
    ``2 * min_j + sqrt(log(M)/n)`` so the uniform ``excess <= bound + 3*se``
    comparison applies.
    """
    candidates = build_candidates(config)
    cset = CandidateSet.from_densities(candidates, bound=config.A)
    truth = build_truth(config, candidates)
    oracle = min(l1_distance(truth, cset.candidate(j)) for j in range(cset.size))
    rows = []
    for n in config.n_values:
        risks = np.array([
            l1_distance(
                truth,
                cset.candidate(
                    yatracos_select(cset, sample(truth, n, seed=(config.seed, n, r)))
                ),
            )
            for r in range(config.replications)
        ])
        mean, se = _mean_se(risks)
        bound = 2.0 * oracle + math.sqrt(math.log(cset.size) / n)
        rows.append(RiskRow(
            experiment="yatracos",
            M=cset.size,
            n=n,
            replications=config.replications,
            mean_risk=mean,
            se=se,
            oracle_risk=oracle,
            excess=mean - oracle,
            bound=bound,
            passed=mean - oracle <= bound + 3 * se,
        ))
    return RiskReport(tuple(rows))


@dataclass(frozen=True)
class RateStudyResult:
    """Worst-case excess risks and the fitted log-log rate."""

    report: RiskReport
    slope: float
    intercept: float
    n_fit: int
    dropped: int

    @property
    def slope_in_range(self) -> bool:
        return SLOPE_RANGE[0] <= self.slope <= SLOPE_RANGE[1]

    def fit_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "n_fit": self.n_fit,
            "dropped": self.dropped,
            "slope_range": list(SLOPE_RANGE),
            "slope_in_range": self.slope_in_range,
        }


def run_rate_study(config: ExperimentConfig) -> RateStudyResult:
    """Measure how worst-case aggregation excess scales with ``log(M)/n``.

    For every family size in ``M_values`` and every sample size, the
    worst-case bump family tuned to that ``(M, n)`` is aggregated under
    each of its members as truth; the member with the largest mean loss
    (``config.loss`` to the power ``q``) defines the excess for that cell.
    A line is fitted to ``log(excess)`` against ``log(log(M)/n)``; rows
    whose excess is nonpositive carry ``pass=false``, are dropped from the
    fit, and are counted in ``dropped``.

    Requires the perturbation candidate kind (the study is about the
    worst-case family, which must be re-tuned per cell), at least two
    distinct family sizes, and at least three distinct sample sizes.
    """
    if config.candidate_spec.get("kind") != "perturbation":
        raise ValidationError(
            "the rate study requires candidate_spec.kind = 'perturbation'"
        )
    m_values = config.M_values if config.M_values is not None else (config.M,)
    if len(set(m_values)) < 2:
        raise ValidationError(
            "the rate study needs at least two distinct family sizes in M_values"
        )
    if len(set(config.n_values)) < 3:
        raise ValidationError(
            "the rate study needs at least three distinct sample sizes in n_values"
        )
    loss = LOSSES[config.loss]
    rows = []
    xs, ys = [], []
    dropped = 0
    for m in m_values:
        for n in config.n_values:
            candidates = _perturbation_candidates(m, n, config.A)
            cset = CandidateSet.from_densities(candidates, bound=config.A)
            worst_mean, worst_se = -math.inf, 0.0
            for t in range(cset.size):
                truth = cset.candidate(t)
                risks = np.array([
                    loss(
                        truth,
                        aggregate(
                            cset, sample(truth, n, seed=(config.seed, m, n, t, r))
                        ),
                    ) ** config.q
                    for r in range(config.replications)
                ])
                mean, se = _mean_se(risks)
                if mean > worst_mean:
                    worst_mean, worst_se = mean, se
            psi = math.log(m) / n
            valid = worst_mean > 0 and math.isfinite(worst_mean)
            rows.append(RiskRow(
                experiment="rate",
                M=m,
                n=n,
                replications=config.replications,
                mean_risk=worst_mean,
                se=worst_se,
                oracle_risk=0.0,  # truth is a family member
                excess=worst_mean,
                bound=psi,
                passed=valid,
            ))
            if valid:
                xs.append(math.log(psi))
                ys.append(math.log(worst_mean))
            else:
                dropped += 1
    if len(xs) < 2:
        raise ValidationError(
            "rate study has fewer than two usable cells; cannot fit a slope"
        )
    slope, intercept = np.polyfit(np.array(xs), np.array(ys), 1)
    return RateStudyResult(
        report=RiskReport(tuple(rows)),
        slope=float(slope),
        intercept=float(intercept),
        n_fit=len(xs),
        dropped=dropped,
    )


def run_lowerbound_audit(family_size: int, sample_size: int, bound: float) -> AuditReport:
    """Tune the worst-case family for ``(M, n, A)`` and audit its hypotheses."""
    family = choose_parameters(family_size, sample_size, bound)
    words = build_separated_set(family.n_bumps, family_size)
    return audit_hypotheses(family, words, sample_size)
