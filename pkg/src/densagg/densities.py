"""Piecewise-constant functions and densities on the unit interval.

Everything downstream (mixture weights, selector statistics, worst-case
family constructions) works with step functions, where integrals reduce to
finite sums over cells.  The losses here are therefore exact up to float
rounding: no quadrature, no discretisation error.

Conventions
-----------
* Cells are right-open: ``values[i]`` holds on ``[breakpoints[i],
  breakpoints[i+1])``; the final cell is closed at 1 so the whole of
  ``[0, 1]`` is covered.
* The reference measure is Lebesgue measure on ``[0, 1]``.
* ``0 * log 0 = 0`` in every entropy-like sum.
* A density must integrate to one within ``MASS_TOL``; nothing is ever
  renormalised silently — use :func:`renormalize` when you mean it.

All public objects are immutable after construction and every function is
pure, so instances can be shared freely across threads or processes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "MASS_TOL",
    "ValidationError",
    "PiecewiseFunction",
    "PiecewiseDensity",
    "FunctionClass",
    "common_refinement",
    "renormalize",
    "kl_divergence",
    "hellinger_distance",
    "l1_distance",
    "sample",
    "validate_class",
    "load_density",
    "save_density",
    "load_densities",
    "save_densities",
    "load_sample",
    "save_sample",
]

#: Absolute tolerance on ``|integral - 1|`` for anything claiming to be a density.
MASS_TOL = 1e-12


class ValidationError(ValueError):
    """An input violates a documented precondition or type invariant."""


def _as_readonly_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PiecewiseFunction:
    """A real step function on ``[0, 1]``.

    Parameters
    ----------
    breakpoints:
        Strictly increasing grid starting at 0.0 and ending at 1.0,
        length ``m + 1`` for ``m`` cells.
    values:
        Cell values, length ``m``.  ``values[i]`` holds on the right-open
        cell ``[breakpoints[i], breakpoints[i+1])`` (last cell closed at 1).
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = _as_readonly_float_array(self.breakpoints, "breakpoints")
        vals = _as_readonly_float_array(self.values, "values")
        if bp.size < 2:
            raise ValidationError("need at least two breakpoints")
        if bp.size != vals.size + 1:
            raise ValidationError(
                f"breakpoints/values length mismatch: {bp.size} breakpoints "
                f"requires {bp.size - 1} values, got {vals.size}"
            )
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValidationError("breakpoints must start at 0.0 and end at 1.0")
        if not np.all(np.diff(bp) > 0):
            raise ValidationError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("cell values must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def n_cells(self) -> int:
        return self.values.size

    @property
    def cell_lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at points of ``[0, 1]`` (scalar or array)."""
        pts = np.asarray(x, dtype=float)
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValidationError("evaluation points must lie in [0, 1]")
        out = self.values[self.cell_index(pts)]
        return float(out) if np.isscalar(x) or pts.ndim == 0 else out

    def cell_index(self, x) -> np.ndarray:
        """Index of the cell containing each point (``x = 1`` maps to the last cell)."""
        pts = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, pts, side="right") - 1
        return np.clip(idx, 0, self.n_cells - 1)

    def integral(self) -> float:
        """Exact integral over ``[0, 1]``."""
        return float(np.dot(self.values, self.cell_lengths))


@dataclass(frozen=True)
class PiecewiseDensity(PiecewiseFunction):
    """A nonnegative step function integrating to one within ``MASS_TOL``."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise ValidationError("density values must be nonnegative")
        mass = self.integral()
        if abs(mass - 1.0) > MASS_TOL:
            raise ValidationError(
                f"density must integrate to 1 within {MASS_TOL:g}; got {mass!r}"
            )

    @classmethod
    def uniform(cls) -> "PiecewiseDensity":
        return cls(np.array([0.0, 1.0]), np.array([1.0]))


def _values_on(f: PiecewiseFunction, grid: np.ndarray) -> np.ndarray:
    # Re-express f on a grid that refines f.breakpoints: the value on each
    # refined cell is f at the cell's left edge.
    idx = np.searchsorted(f.breakpoints, grid[:-1], side="right") - 1
    return f.values[idx]


def _common_cells(f: PiecewiseFunction, g: PiecewiseFunction):
    """Shared refined grid plus both value vectors (internal fast path)."""
    grid = np.union1d(f.breakpoints, g.breakpoints)
    return np.diff(grid), _values_on(f, grid), _values_on(g, grid)


def common_refinement(
    f: PiecewiseFunction, g: PiecewiseFunction
) -> tuple[PiecewiseFunction, PiecewiseFunction]:
    """Re-express two step functions on their common (union) grid.

    Both outputs are pointwise equal to their inputs; they merely share
    breakpoints, which is what makes the cell-wise loss formulas exact.
    Input types are preserved (a density refines to a density).
    """
    grid = np.union1d(f.breakpoints, g.breakpoints)
    return type(f)(grid, _values_on(f, grid)), type(g)(grid, _values_on(g, grid))


def renormalize(f: PiecewiseFunction) -> PiecewiseDensity:
    """Scale a nonnegative step function of positive mass into a density.

    This is the only sanctioned way to turn a near-density into a density;
    constructors never adjust mass on their own.
    """
    if np.any(f.values < 0):
        raise ValidationError("cannot renormalize a function with negative values")
    mass = f.integral()
    if not mass > 0:
        raise ValidationError(f"cannot renormalize: total mass {mass!r} is not positive")
    return PiecewiseDensity(f.breakpoints, f.values / mass)


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def _check_nonnegative(f: PiecewiseFunction, g: PiecewiseFunction, op: str) -> None:
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValidationError(f"{op} requires nonnegative cell values")


def kl_divergence(f: PiecewiseFunction, g: PiecewiseFunction) -> float:
    """Kullback-Leibler divergence ``∫ f log(f/g)`` between step densities.

    Returns ``+inf`` when ``f`` puts mass on a cell where ``g`` vanishes
    (failure of absolute continuity).  Cells where ``f = 0`` contribute 0,
    including against ``g = 0``.
    """
    _check_nonnegative(f, g, "kl_divergence")
    lens, fv, gv = _common_cells(f, g)
    pos = fv > 0
    if np.any(pos & (gv == 0.0)):
        return math.inf
    terms = np.zeros_like(fv)
    terms[pos] = fv[pos] * np.log(fv[pos] / gv[pos])
    return float(np.dot(lens, terms))


def hellinger_distance(f: PiecewiseFunction, g: PiecewiseFunction) -> float:
    """Hellinger distance ``(∫ (√f − √g)²)^{1/2}`` between step densities."""
    _check_nonnegative(f, g, "hellinger_distance")
    lens, fv, gv = _common_cells(f, g)
    diff = np.sqrt(fv) - np.sqrt(gv)
    return float(math.sqrt(np.dot(lens, diff * diff)))


def l1_distance(f: PiecewiseFunction, g: PiecewiseFunction) -> float:
    """Total ``∫ |f − g|`` distance between step functions."""
    lens, fv, gv = _common_cells(f, g)
    return float(np.dot(lens, np.abs(fv - gv)))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample(density: PiecewiseDensity, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. points from a step density by CDF inversion.

    One uniform variate is consumed per draw: the cell is located by a
    binary search on the cumulative cell masses and the remainder of the
    variate places the point uniformly inside the cell.  Identical seeds
    give identical output arrays.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts (ints and
    tuples of ints included).
    """
    if n < 0:
        raise ValidationError(f"sample size must be nonnegative, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    masses = density.values * density.cell_lengths
    cdf = np.concatenate(([0.0], np.cumsum(masses)))
    idx = np.searchsorted(cdf, u, side="right") - 1
    idx = np.minimum(idx, masses.size - 1)
    # side="right" can only land on a zero-mass cell in the measure-zero
    # float corner u == cdf[-1]; guard the division anyway.
    m = masses[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(m > 0, (u - cdf[idx]) / np.where(m > 0, m, 1.0), 0.0)
    x = density.breakpoints[idx] + frac * density.cell_lengths[idx]
    return np.clip(x, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Bounded function classes
# ---------------------------------------------------------------------------


class FunctionClass(Enum):
    """Membership predicates for the sup-norm-bounded classes the risk
    bounds are stated over.

    * ``DENSITY`` / ``KL_CANDIDATE``: densities bounded by ``A``.
    * ``HELLINGER_CANDIDATE``: nonnegative functions bounded by ``A``.
    * ``L1_CANDIDATE``: functions with ``sup |f| <= A`` (sign-free).
    """

    DENSITY = "density"
    KL_CANDIDATE = "kl_candidate"
    HELLINGER_CANDIDATE = "hellinger_candidate"
    L1_CANDIDATE = "l1_candidate"


def validate_class(f: PiecewiseFunction, cls: FunctionClass, bound: float) -> bool:
    """True iff ``f`` belongs to the class: the bound check plus the class's
    shape constraint (density / nonnegative / none).

    ``bound`` must exceed 1 — otherwise no density can satisfy the sup bound
    and the classes are empty.
    """
    if not bound > 1.0:
        raise ValidationError(f"class bound must exceed 1, got {bound!r}")
    if float(np.max(np.abs(f.values), initial=0.0)) > bound:
        return False
    if cls in (FunctionClass.DENSITY, FunctionClass.KL_CANDIDATE):
        return bool(
            np.all(f.values >= 0) and abs(f.integral() - 1.0) <= MASS_TOL
        )
    if cls is FunctionClass.HELLINGER_CANDIDATE:
        return bool(np.all(f.values >= 0))
    return True


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------
#
# A density is stored as a JSON object {"breakpoints": [...], "values": [...]};
# a candidate list as a JSON array of such objects; a sample as a text file
# with one float per line.


def _density_to_obj(f: PiecewiseFunction) -> dict:
    return {"breakpoints": f.breakpoints.tolist(), "values": f.values.tolist()}


def _density_from_obj(obj, where: str) -> PiecewiseDensity:
    if not isinstance(obj, dict) or set(obj) != {"breakpoints", "values"}:
        raise ValidationError(
            f"{where}: expected an object with keys 'breakpoints' and 'values'"
        )
    return PiecewiseDensity(np.asarray(obj["breakpoints"]), np.asarray(obj["values"]))


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def load_density(path) -> PiecewiseDensity:
    """Read one density from a JSON file."""
    return _density_from_obj(_load_json(path), str(path))


def save_density(f: PiecewiseFunction, path) -> None:
    Path(path).write_text(json.dumps(_density_to_obj(f)) + "\n")


def load_densities(path) -> list[PiecewiseDensity]:
    """Read a JSON array of densities (a candidate file)."""
    arr = _load_json(path)
    if not isinstance(arr, list) or not arr:
        raise ValidationError(f"{path}: expected a nonempty JSON array of densities")
    return [_density_from_obj(o, f"{path}[{i}]") for i, o in enumerate(arr)]


def save_densities(densities, path) -> None:
    Path(path).write_text(
        json.dumps([_density_to_obj(f) for f in densities]) + "\n"
    )


def load_sample(path) -> np.ndarray:
    """Read a sample file: one float per line (blank lines ignored)."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    try:
        return np.array([float(ln) for ln in lines if ln], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed sample file ({exc})") from None


def save_sample(x, path) -> None:
    arr = np.asarray(x, dtype=float)
    Path(path).write_text("".join(repr(float(v)) + "\n" for v in arr))
