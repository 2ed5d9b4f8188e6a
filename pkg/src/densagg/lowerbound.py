"""Worst-case perturbation families with certified information bounds.

The hardest instances for density aggregation are built here: a uniform
density carrying many small paired up/down bumps, indexed by binary words.
Switching bumps on or off moves the density by a computable amount in
Hellinger or total-variation distance while keeping the product-measure
Kullback-Leibler divergence small, which is exactly the trade-off that
forces the ``log(M)/n`` aggregation price.

The pieces:

* :func:`choose_parameters` — bump count and amplitude tuned to a target
  family size ``M``, sample size ``n``, and sup bound ``A``.
* :func:`build_separated_set` — a greedy (first-fit, lexicographic) packing
  of binary words with pairwise Hamming distance at least ``D/8``, always
  containing the all-zeros word.  Deterministic: bit-for-bit reproducible.
* :func:`perturbed_density` — the density for one word.
* ``analytic_*`` — closed forms for the pairwise distances and the
  sample-size-``n`` product KL, each of which the exact cell-wise
  integrators of :mod:`densagg.densities` must reproduce.
* :func:`audit_hypotheses` — checks every hypothesis the lower-bound
  argument needs (KL budget per word, Hellinger separation per pair) and
  reports each check with its margin.

Closed forms (``a = amplitude / D`` is the bump height, ``ρ`` the Hamming
distance, ``s`` the number of active bumps):

* squared Hellinger: ``(ρ / D) * (2 - sqrt(1 + a) - sqrt(1 - a))``
* L1: ``amplitude * ρ / D²``
* KL of the n-fold product vs. uniform:
  ``n * s * ((1+a) log(1+a) + (1-a) log(1-a)) / (2 D)``
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .densities import PiecewiseDensity, PiecewiseFunction, ValidationError

__all__ = [
    "HELLINGER_CURVATURE",
    "PerturbationFamily",
    "SeparatedSet",
    "min_bump_count",
    "choose_parameters",
    "bump",
    "perturbed_density",
    "hamming_distance",
    "build_separated_set",
    "save_separated_set",
    "load_separated_set",
    "analytic_hellinger_sq",
    "analytic_l1",
    "analytic_kl_product",
    "AuditCheck",
    "AuditReport",
    "audit_hypotheses",
]

#: The constant c in ``2 - sqrt(1+a) - sqrt(1-a) >= 2 c a²`` for a in [0, 1],
#: i.e. the quadratic minorant of the per-bump Hellinger cost.  Equals 8^(-3/2).
HELLINGER_CURVATURE = 8.0 ** -1.5


def min_bump_count(family_size: int) -> int:
    """Smallest ``D`` with ``2^(D/8) >= family_size``.

    Computed in exact integer arithmetic as the smallest ``D`` with
    ``2^D >= family_size^8`` — no float logarithms, so the "smallest"
    claim is airtight.
    """
    if family_size < 2:
        raise ValidationError(f"family size must be at least 2, got {family_size}")
    return (int(family_size) ** 8 - 1).bit_length()


@dataclass(frozen=True)
class PerturbationFamily:
    """Tuned parameters of one bump-perturbation family.

    ``n_bumps`` paired up/down bumps of height ``amplitude / n_bumps`` sit
    on the uniform density; a binary word of length ``n_bumps`` selects
    which bumps are active.

    Invariants enforced here: ``n_bumps`` is exactly the minimal bump count
    for ``family_size``; the amplitude is positive and small enough that
    every member stays nonnegative and below ``bound``.
    """

    n_bumps: int
    amplitude: float
    bound: float
    sample_size: int
    family_size: int

    def __post_init__(self):
        if self.family_size < 2:
            raise ValidationError(f"family size must be at least 2, got {self.family_size}")
        if not self.bound > 1.0:
            raise ValidationError(f"sup bound must exceed 1, got {self.bound!r}")
        if self.sample_size < 1:
            raise ValidationError(f"sample size must be positive, got {self.sample_size}")
        required = min_bump_count(self.family_size)
        if self.n_bumps != required:
            raise ValidationError(
                f"n_bumps must be the minimal count {required} for family size "
                f"{self.family_size}, got {self.n_bumps}"
            )
        cap = self.n_bumps * min(1.0, self.bound - 1.0)
        if not 0.0 < self.amplitude <= cap:
            raise ValidationError(
                f"amplitude must lie in (0, {cap!r}] so members stay nonnegative "
                f"and below the bound; got {self.amplitude!r}"
            )

    @property
    def bump_height(self) -> float:
        """Height ``a`` of each active bump; lies in (0, 1]."""
        return self.amplitude / self.n_bumps


def choose_parameters(family_size: int, sample_size: int, bound: float) -> PerturbationFamily:
    """Tune a perturbation family to ``(M, n, A)``.

    Feasibility gate: ``log(M) <= 16 * min(1, A-1)² * n``; fails loudly
    otherwise, because beyond that point the bumps needed to separate ``M``
    members would push members negative or above the bound.

    The tuned values are ``D = min_bump_count(M)`` and amplitude
    ``(D/4) * sqrt(log(M)/n)``, which saturates the KL budget the
    lower-bound argument allows.
    """
    if family_size < 2:
        raise ValidationError(f"family size must be at least 2, got {family_size}")
    if sample_size < 1:
        raise ValidationError(f"sample size must be positive, got {sample_size}")
    if not bound > 1.0:
        raise ValidationError(f"sup bound must exceed 1, got {bound!r}")
    margin = min(1.0, bound - 1.0)
    if math.log(family_size) > 16.0 * margin * margin * sample_size:
        raise ValidationError(
            "infeasible parameters: require log(M) <= 16 * min(1, A-1)^2 * n, "
            f"but log({family_size}) = {math.log(family_size):.6g} > "
            f"{16.0 * margin * margin * sample_size:.6g}"
        )
    n_bumps = min_bump_count(family_size)
    amplitude = (n_bumps / 4.0) * math.sqrt(math.log(family_size) / sample_size)
    return PerturbationFamily(
        n_bumps=n_bumps,
        amplitude=amplitude,
        bound=bound,
        sample_size=sample_size,
        family_size=family_size,
    )


def bump(family: PerturbationFamily, index: int) -> PiecewiseFunction:
    """The ``index``-th (1-based) paired bump as a step function on [0, 1].

    Up by the bump height on the left half of cell ``index``, down by the
    same amount on the right half, zero elsewhere; integrates to zero.
    """
    D = family.n_bumps
    if not 1 <= index <= D:
        raise ValidationError(f"bump index must be in 1..{D}, got {index}")
    h = family.bump_height
    denom = 2.0 * D
    edges = np.array(
        [0.0, (2 * index - 2) / denom, (2 * index - 1) / denom, (2 * index) / denom, 1.0]
    )
    vals = np.array([0.0, h, -h, 0.0])
    keep = np.diff(edges) > 0
    return PiecewiseFunction(np.concatenate(([0.0], edges[1:][keep])), vals[keep])


def _check_word(word, n_bumps: int) -> np.ndarray:
    w = np.asarray(word)
    if w.ndim != 1 or w.size != n_bumps:
        raise ValidationError(
            f"word must be a vector of length {n_bumps}, got shape {w.shape}"
        )
    if not np.all((w == 0) | (w == 1)):
        raise ValidationError("word entries must be 0 or 1")
    return w.astype(np.uint8)


def perturbed_density(family: PerturbationFamily, word) -> PiecewiseDensity:
    """The family member selected by a binary word.

    Cell ``j`` (1-based) of the uniform grid carries the paired bump iff
    ``word[j-1] == 1``; active cells take values ``(1 + a, 1 - a)`` on
    their two halves, inactive cells stay at 1.  The result is an exact
    density bounded by the family's sup bound.
    """
    w = _check_word(word, family.n_bumps)
    D = family.n_bumps
    a = family.bump_height
    grid = np.arange(2 * D + 1) / (2.0 * D)
    vals = np.ones(2 * D)
    active = w == 1
    vals[0::2][active] = 1.0 + a
    vals[1::2][active] = 1.0 - a
    return PiecewiseDensity(grid, vals)


def hamming_distance(word1, word2) -> int:
    """Number of coordinates where two equal-length binary words differ."""
    w1 = np.asarray(word1)
    w2 = np.asarray(word2)
    if w1.ndim != 1 or w2.ndim != 1 or w1.size != w2.size:
        raise ValidationError(
            f"words must be vectors of equal length, got shapes {w1.shape} and {w2.shape}"
        )
    for w in (w1, w2):
        if not np.all((w == 0) | (w == 1)):
            raise ValidationError("word entries must be 0 or 1")
    return int(np.count_nonzero(w1 != w2))


@dataclass(frozen=True)
class SeparatedSet:
    """Binary words with pairwise Hamming distance at least ``D/8``.

    ``words`` is an ``(m, D)`` 0/1 matrix whose first row is the all-zeros
    word.  The separation property is re-verified on construction, so any
    instance in hand is certified.
    """

    words: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.words)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValidationError("words must be a nonempty 2-D 0/1 matrix")
        if not np.all((w == 0) | (w == 1)):
            raise ValidationError("word entries must be 0 or 1")
        w = w.astype(np.uint8)
        if np.any(w[0] != 0):
            raise ValidationError("the first word must be all zeros")
        dist = (w[:, None, :] != w[None, :, :]).sum(axis=2)
        off = ~np.eye(w.shape[0], dtype=bool)
        # real-valued threshold D/8, checked exactly in integers as 8*dist >= D
        if np.any(8 * dist[off] < w.shape[1]):
            raise ValidationError(
                f"words are not pairwise {w.shape[1]}/8-separated"
            )
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def size(self) -> int:
        return self.words.shape[0]

    @property
    def word_length(self) -> int:
        return self.words.shape[1]

    @property
    def threshold(self) -> float:
        """The certified pairwise Hamming separation, ``word_length / 8``."""
        return self.words.shape[1] / 8.0


def _greedy_scan_u64(n_bits: int, n_words: int) -> list[int]:
    """First-fit scan in lexicographic (= integer) order, vectorised.

    Chunks of candidate integers are filtered against all previously
    accepted words with hardware popcounts; survivors are then checked
    against each other in order.
    """
    thr = (n_bits + 7) // 8  # 8*d >= n_bits  <=>  d >= ceil(n_bits/8) for integer d
    accepted: list[int] = [0]
    total = 1 << n_bits
    start = 1
    chunk = 1 << 14
    while len(accepted) < n_words and start < total:
        stop = min(start + chunk, total)
        cand = np.arange(start, stop, dtype=np.uint64)
        for a in np.array(accepted, dtype=np.uint64):
            if cand.size == 0:
                break
            cand = cand[np.bitwise_count(cand ^ a) >= thr]
        new: list[int] = []
        for w in cand.tolist():
            if all((w ^ v).bit_count() >= thr for v in new):
                new.append(w)
                if len(accepted) + len(new) == n_words:
                    break
        accepted.extend(new)
        start = stop
    return accepted


def _greedy_scan_int(n_bits: int, n_words: int) -> list[int]:
    """Plain-integer fallback for word lengths beyond 64 bits."""
    thr = (n_bits + 7) // 8
    accepted = [0]
    w = 1
    total = 1 << n_bits
    while len(accepted) < n_words and w < total:
        if all((w ^ v).bit_count() >= thr for v in accepted):
            accepted.append(w)
        w += 1
    return accepted


def _int_to_bits(value: int, n_bits: int) -> np.ndarray:
    return np.array([(value >> (n_bits - 1 - c)) & 1 for c in range(n_bits)], dtype=np.uint8)


def build_separated_set(n_bits: int, n_words: int) -> SeparatedSet:
    """Greedily pack ``n_words`` binary words of length ``n_bits`` at pairwise
    Hamming distance ``n_bits/8`` or more.

    The scan starts from the all-zeros word and visits candidates in
    lexicographic order, accepting any word compatible with everything
    accepted so far (first-fit).  A counting argument guarantees the scan
    finds at least ``2^(n_bits/8)`` words, so the feasibility gate
    ``2^(n_bits/8) >= n_words`` (checked exactly in integers) makes
    exhaustion unreachable.  The output is deterministic, bit for bit.
    """
    if n_bits < 1:
        raise ValidationError(f"word length must be positive, got {n_bits}")
    if n_words < 1:
        raise ValidationError(f"requested set size must be positive, got {n_words}")
    if n_words > 1 and int(n_words) ** 8 > (1 << n_bits):
        raise ValidationError(
            f"infeasible request: need 2^({n_bits}/8) >= {n_words} "
            f"(exactly: 2^{n_bits} >= {n_words}^8) to pack the set"
        )
    scan = _greedy_scan_u64 if n_bits <= 64 else _greedy_scan_int
    accepted = scan(n_bits, n_words)
    if len(accepted) < n_words:
        raise RuntimeError(
            f"greedy scan exhausted all 2^{n_bits} words after finding only "
            f"{len(accepted)} of {n_words}"
        )
    return SeparatedSet(np.stack([_int_to_bits(v, n_bits) for v in accepted]))


def save_separated_set(words: SeparatedSet, path) -> None:
    """Write one word per line as a 0/1 string."""
    Path(path).write_text(
        "".join("".join(str(int(b)) for b in row) + "\n" for row in words.words)
    )


def load_separated_set(path) -> SeparatedSet:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or any(set(ln) - {"0", "1"} for ln in lines):
        raise ValidationError(f"{path}: expected lines of 0/1 strings")
    return SeparatedSet(np.array([[int(c) for c in ln] for ln in lines], dtype=np.uint8))


# ---------------------------------------------------------------------------
# Closed forms and the hypothesis audit
# ---------------------------------------------------------------------------


def analytic_hellinger_sq(family: PerturbationFamily, word1, word2) -> float:
    """Exact squared Hellinger distance between two family members."""
    rho = hamming_distance(
        _check_word(word1, family.n_bumps), _check_word(word2, family.n_bumps)
    )
    a = family.bump_height
    return (rho / family.n_bumps) * (2.0 - math.sqrt(1.0 + a) - math.sqrt(1.0 - a))


def analytic_l1(family: PerturbationFamily, word1, word2) -> float:
    """Exact L1 distance between two family members."""
    rho = hamming_distance(
        _check_word(word1, family.n_bumps), _check_word(word2, family.n_bumps)
    )
    return family.amplitude * rho / (family.n_bumps ** 2)


def analytic_kl_product(family: PerturbationFamily, word, n: int) -> float:
    """KL divergence of the ``n``-fold product of a member vs. uniform.

    KL is additive over independent coordinates, so this is ``n`` times the
    single-draw divergence; each active bump contributes
    ``((1+a)log(1+a) + (1-a)log(1-a)) / (2D)``.  At the extreme ``a = 1``
    the vanishing half-cell contributes ``0 log 0 = 0``.
    """
    if n < 0:
        raise ValidationError(f"sample size must be nonnegative, got {n}")
    w = _check_word(word, family.n_bumps)
    active = int(np.count_nonzero(w))
    a = family.bump_height
    per_bump = (1.0 + a) * math.log1p(a)
    if a < 1.0:
        per_bump += (1.0 - a) * math.log1p(-a)
    return n * active * per_bump / (2.0 * family.n_bumps)


@dataclass(frozen=True)
class AuditCheck:
    """One audited inequality: ``achieved`` vs. ``bound``."""

    name: str
    bound: float
    achieved: float
    passed: bool


@dataclass(frozen=True)
class AuditReport:
    """Every hypothesis the lower-bound argument rests on, with margins."""

    family_size: int
    sample_size: int
    sup_bound: float
    n_bumps: int
    amplitude: float
    checks: tuple[AuditCheck, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "M": self.family_size,
            "n": self.sample_size,
            "A": self.sup_bound,
            "D": self.n_bumps,
            "L": self.amplitude,
            "curvature_const": HELLINGER_CURVATURE,
            "checks": [
                {
                    "name": c.name,
                    "bound": c.bound,
                    "achieved": c.achieved,
                    "pass": c.passed,
                }
                for c in self.checks
            ],
            "all_pass": self.all_pass,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def audit_hypotheses(
    family: PerturbationFamily, words: SeparatedSet, n: int
) -> AuditReport:
    """Check the two quantitative hypotheses behind the lower bound.

    For every word in the set, the ``n``-sample product KL against the
    uniform center must stay within the budget ``log(M)/16``; for every
    pair, the squared Hellinger separation must reach
    ``(c/64) * log(M)/n`` with ``c = HELLINGER_CURVATURE``.  Each check is
    reported individually, so a violation points at the exact word or pair.
    """
    if n < 1:
        raise ValidationError(f"sample size must be positive, got {n}")
    if words.word_length != family.n_bumps:
        raise ValidationError(
            f"word length {words.word_length} does not match the family's "
            f"{family.n_bumps} bumps"
        )
    log_m = math.log(family.family_size)
    kl_budget = log_m / 16.0
    sep_floor = (HELLINGER_CURVATURE / 64.0) * log_m / n

    checks = []
    for i in range(words.size):
        achieved = analytic_kl_product(family, words.words[i], n)
        checks.append(
            AuditCheck(
                name=f"kl_budget[word={i}]",
                bound=kl_budget,
                achieved=achieved,
                passed=achieved <= kl_budget,
            )
        )
    for i in range(words.size):
        for j in range(i + 1, words.size):
            achieved = analytic_hellinger_sq(family, words.words[i], words.words[j])
            checks.append(
                AuditCheck(
                    name=f"hellinger_separation[pair=({i},{j})]",
                    bound=sep_floor,
                    achieved=achieved,
                    passed=achieved >= sep_floor,
                )
            )
    return AuditReport(
        family_size=family.family_size,
        sample_size=n,
        sup_bound=family.bound,
        n_bumps=family.n_bumps,
        amplitude=family.amplitude,
        checks=tuple(checks),
    )
