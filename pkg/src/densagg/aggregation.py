"""Progressive-mixture aggregation and minimum-distance selection.

Given a finite family of candidate densities and an i.i.d. sample, two
procedures are provided:

* :func:`aggregate` — the progressive mixture.  After each prefix of the
  sample the candidates are reweighted by their likelihood so far (equal
  weights before any data); the estimator is the candidate mixture under
  the time-average of those weight vectors.  Its expected Kullback-Leibler
  risk is within ``log(M)/(n+1)`` of the best candidate's risk.
* :func:`yatracos_select` — picks the candidate whose cell-set integrals
  best match empirical frequencies over all comparison sets
  ``{f_i > f_j}``, which controls total-variation-type risk.

Weight arithmetic is carried out in the log domain throughout, so long
samples and vanishing likelihoods are handled without under/overflow: a
candidate that assigns zero likelihood to any observed prefix point has
weight exactly 0 from that row onward.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from .densities import (
    FunctionClass,
    PiecewiseDensity,
    ValidationError,
    _values_on,
    validate_class,
)

__all__ = [
    "CandidateSet",
    "WeightTrajectory",
    "empirical_kl",
    "progressive_weights",
    "mixture",
    "aggregate",
    "yatracos_class",
    "yatracos_select",
]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class CandidateSet:
    """A finite family of densities re-expressed on one shared grid.

    ``values[j]`` are candidate ``j``'s cell values on ``grid``.  Building
    the shared refinement once up front makes every downstream operation
    (likelihood evaluation, mixing, comparison sets) a plain array op.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).copy()
        vals = np.asarray(self.values, dtype=float).copy()
        if grid.ndim != 1 or vals.ndim != 2 or vals.shape[1] != grid.size - 1:
            raise ValidationError("candidate values must be (M, len(grid) - 1)")
        if vals.shape[0] < 1:
            raise ValidationError("need at least one candidate")
        grid.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)
        # Constructing each row as a density enforces nonnegativity and mass.
        for j in range(vals.shape[0]):
            try:
                PiecewiseDensity(grid, vals[j])
            except ValidationError as exc:
                raise ValidationError(f"candidate {j}: {exc}") from None

    @classmethod
    def from_densities(cls, densities, bound: float | None = None) -> "CandidateSet":
        """Refine a sequence of densities onto their common grid.

        When ``bound`` is given, every candidate must additionally lie in
        the KL candidate class for that bound (densities with sup at most
        ``bound``); membership is not checked otherwise.
        """
        densities = list(densities)
        if not densities:
            raise ValidationError("need at least one candidate")
        if bound is not None:
            for j, f in enumerate(densities):
                if not validate_class(f, FunctionClass.KL_CANDIDATE, bound):
                    raise ValidationError(
                        f"candidate {j} is outside the bounded density class "
                        f"(bound {bound!r})"
                    )
        grid = reduce(np.union1d, (f.breakpoints for f in densities))
        vals = np.stack([_values_on(f, grid) for f in densities])
        return cls(grid, vals)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def cell_lengths(self) -> np.ndarray:
        return np.diff(self.grid)

    def candidate(self, j: int) -> PiecewiseDensity:
        return PiecewiseDensity(self.grid, self.values[j])

    def log_likelihood_terms(self, x) -> np.ndarray:
        """``log f_j(X_i)`` as an (n, M) matrix, ``-inf`` where a candidate vanishes."""
        pts = np.asarray(x, dtype=float)
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValidationError("sample points must lie in [0, 1]")
        idx = np.clip(np.searchsorted(self.grid, pts, side="right") - 1, 0,
                      self.values.shape[1] - 1)
        with np.errstate(divide="ignore"):
            return np.log(self.values[:, idx].T)


@dataclass(frozen=True)
class WeightTrajectory:
    """Simplex weight vectors after each sample prefix.

    ``weights[k]`` is the weight vector computed from the first ``k``
    points (row 0 is the all-equal prior); ``averaged`` is the column mean
    over all ``n + 1`` rows, i.e. the mixing vector the aggregate uses.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValidationError("weights must be a nonempty 2-D array")
        if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
            raise ValidationError(
                f"every weight row must be a probability vector (tolerance {_ROW_SUM_TOL:g})"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_steps(self) -> int:
        return self.weights.shape[0] - 1

    @property
    def n_candidates(self) -> int:
        return self.weights.shape[1]

    @property
    def averaged(self) -> np.ndarray:
        return self.weights.mean(axis=0)

    def to_csv(self, path) -> None:
        """Write rows ``k, w_1, ..., w_M`` with full-precision floats."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k"] + [f"w_{j + 1}" for j in range(self.n_candidates)])
            for k, row in enumerate(self.weights):
                writer.writerow([k] + [repr(float(v)) for v in row])


def empirical_kl(f: PiecewiseDensity, x) -> float:
    """Empirical Kullback loss ``-(1/n) Σ log f(X_i)``.

    ``+inf`` when ``f`` vanishes at any sample point; rejects an empty
    sample, for which the loss is undefined.
    """
    pts = np.asarray(x, dtype=float)
    if pts.size == 0:
        raise ValidationError("empirical_kl needs at least one sample point")
    vals = np.asarray(f(pts), dtype=float)
    if np.any(vals == 0.0):
        return math.inf
    return float(-np.mean(np.log(vals)))


def _normalize_log_rows(log_w: np.ndarray) -> np.ndarray:
    """Row-wise softmax that is exact about zeros.

    Rows are shifted by their max before exponentiation; ``-inf`` entries
    come out as exactly 0.  A row whose max is ``-inf`` (every candidate at
    zero likelihood) has no normalizer and is an error.
    """
    row_max = log_w.max(axis=1)
    dead = ~np.isfinite(row_max)
    if np.any(dead):
        k = int(np.argmax(dead))
        raise ValidationError(
            f"every candidate has zero likelihood on the first {k} sample points; "
            "weights are undefined"
        )
    with np.errstate(invalid="ignore"):
        w = np.exp(log_w - row_max[:, None])
    w /= w.sum(axis=1, keepdims=True)
    return w


def progressive_weights(candidates: CandidateSet, x) -> WeightTrajectory:
    """Likelihood-proportional weight vectors after every sample prefix.

    Row ``k`` is proportional to ``Π_{i<=k} f_j(X_i)`` (row 0 equals
    ``1/M``), computed as a cumulative sum of log likelihoods followed by a
    max-shifted softmax.  Equivalently, row ``k`` is proportional to
    ``exp(-k * empirical_kl(f_j, x[:k]))``.
    """
    terms = candidates.log_likelihood_terms(x)
    n = terms.shape[0]
    log_w = np.zeros((n + 1, candidates.size))
    if n:
        log_w[1:] = np.cumsum(terms, axis=0)
    return WeightTrajectory(_normalize_log_rows(log_w))


def mixture(candidates: CandidateSet, weights) -> PiecewiseDensity:
    """Mix the candidates under one probability vector."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (candidates.size,):
        raise ValidationError(
            f"expected {candidates.size} weights, got shape {w.shape}"
        )
    if np.any(w < 0) or abs(w.sum() - 1.0) > _ROW_SUM_TOL:
        raise ValidationError("mixing weights must be a probability vector")
    return PiecewiseDensity(candidates.grid, w @ candidates.values)


def aggregate(candidates: CandidateSet, x) -> PiecewiseDensity:
    """The progressive-mixture density for a sample.

    The mixing vector is the average of the :func:`progressive_weights`
    rows; with an empty sample this is the plain equal-weight mixture.
    Requires at least two candidates — aggregation of one thing is a no-op
    that almost surely hides a configuration mistake.
    """
    if candidates.size < 2:
        raise ValidationError("aggregation needs at least two candidates")
    return mixture(candidates, progressive_weights(candidates, x).averaged)


# ---------------------------------------------------------------------------
# Minimum-distance selection
# ---------------------------------------------------------------------------


def yatracos_class(candidates: CandidateSet) -> list[frozenset[int]]:
    """The comparison sets ``{x : f_i(x) > f_j(x)}`` over all ordered pairs.

    Each set is exactly a union of shared-grid cells and is returned as a
    frozenset of cell indices; duplicates are removed and the list is
    sorted (by size, then lexicographically) so the output is deterministic.
    With a single candidate the only set is the empty one.
    """
    vals = candidates.values
    sets = {frozenset()}
    for i in range(vals.shape[0]):
        gt = vals[i] > vals
        for j in range(vals.shape[0]):
            if i != j:
                sets.add(frozenset(np.flatnonzero(gt[j]).tolist()))
    return sorted(sets, key=lambda s: (len(s), sorted(s)))


def yatracos_select(candidates: CandidateSet, x) -> int:
    """Index of the candidate closest to the data in the comparison-set metric.

    Score of candidate ``i`` is ``sup_A |∫_A f_i - P_n(A)|`` over the
    comparison sets ``A`` of :func:`yatracos_class`, with ``P_n`` the
    empirical measure; the smallest index attaining the minimal score wins.
    """
    pts = np.asarray(x, dtype=float)
    if pts.size == 0:
        raise ValidationError("yatracos_select needs at least one sample point")
    sets = yatracos_class(candidates)
    masks = np.zeros((len(sets), candidates.values.shape[1]), dtype=bool)
    for s, cells in enumerate(sets):
        masks[s, list(cells)] = True

    cell_masses = candidates.values * candidates.cell_lengths  # (M, cells)
    set_integrals = cell_masses @ masks.T  # (M, sets)

    if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
        raise ValidationError("sample points must lie in [0, 1]")
    idx = np.clip(np.searchsorted(candidates.grid, pts, side="right") - 1, 0,
                  candidates.values.shape[1] - 1)
    counts = np.bincount(idx, minlength=candidates.values.shape[1])
    empirical = (counts @ masks.T) / pts.size  # (sets,)

    scores = np.max(np.abs(set_integrals - empirical), axis=1)
    return int(np.argmin(scores))  # argmin takes the first minimum: smallest index
