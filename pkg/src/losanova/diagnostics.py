"""Residual analysis and variance-stabilizing transform selection.

The transform chooser regresses log10(cell sd) on log10(cell mean). A power
law sd = c * mean^alpha shows up there as a straight line with slope alpha,
and the slope, snapped to the nearest of {0, 0.5, 1, 1.5, 2}, picks the
classical variance-stabilizing transform (none, square root, log, reciprocal
square root, reciprocal). The fit includes an intercept -- the
proportionality constant c -- but the through-origin slope is also reported
for comparison with conventions that omit it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import normal_cdf
from .errors import ValidationError
from .linmod import FitResult
from .model import CellStats, Dataset, Observation

TRANSFORMS = ("none", "square_root", "logarithmic", "reciprocal_square_root", "reciprocal")

_EXPONENT_TO_TRANSFORM = {
    0.0: "none",
    0.5: "square_root",
    1.0: "logarithmic",
    1.5: "reciprocal_square_root",
    2.0: "reciprocal",
}

# a slope farther than this from every grid point still snaps, but is flagged
_SNAP_CONFIDENCE_RADIUS = 0.25


@dataclass(frozen=True)
class HistogramData:
    """Equal-width histogram: len(edges) == len(counts) + 1."""

    edges: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def n(self) -> int:
        return int(sum(self.counts))


@dataclass(frozen=True)
class PPPlotData:
    """Empirical vs theoretical normal probabilities of sorted residuals."""

    empirical: tuple[float, ...]
    theoretical: tuple[float, ...]
    max_abs_deviation: float


@dataclass(frozen=True)
class ResidualSpread:
    """Residuals paired with fitted values, plus a variance-funnel summary.

    ``funnel_ratio`` is the residual sd in the top fitted-value quartile over
    the bottom quartile; None when either group is degenerate.
    """

    fitted: tuple[float, ...]
    residuals: tuple[float, ...]
    funnel_ratio: float | None


@dataclass(frozen=True)
class TransformRecommendation:
    slope: float
    intercept: float
    r_squared: float
    slope_through_origin: float
    snapped_exponent: float
    transform: str
    low_confidence: bool
    cells_used: int
    cells_excluded: int


def residuals(d: Dataset, fit: FitResult) -> np.ndarray:
    """Observed minus fitted responses, in observation order."""
    if len(fit.fitted) != d.n:
        raise ValidationError(
            f"fit has {len(fit.fitted)} fitted values, dataset has {d.n} observations"
        )
    return d.responses - fit.fitted


def residual_histogram(e: np.ndarray, bins: int | None = None) -> HistogramData:
    """Equal-width histogram spanning [min, max].

    The automatic bin count is ceil(1 + log2 N) (Sturges' rule).
    """
    e = np.asarray(e, dtype=float)
    if e.size == 0:
        raise ValidationError("no residuals to bin")
    if bins is None:
        bins = math.ceil(1.0 + math.log2(e.size))
    if bins < 1:
        raise ValidationError("bin count must be >= 1")
    lo, hi = float(e.min()), float(e.max())
    if lo == hi:
        # constant residuals: one unit-width bin centered on the value
        edges = np.array([lo - 0.5, lo + 0.5])
        counts = np.array([e.size])
    else:
        counts, edges = np.histogram(e, bins=bins, range=(lo, hi))
    return HistogramData(tuple(float(b) for b in edges), tuple(int(c) for c in counts))


def residual_vs_fitted(e: np.ndarray, fitted: np.ndarray) -> ResidualSpread:
    """Residuals against fitted values, ordered by fitted value.

    The funnel statistic compares residual spread between the top and bottom
    fitted-value quartiles; a ratio well above 1 is the increasing-variance
    signature that motivates a variance-stabilizing transform.
    """
    e = np.asarray(e, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if e.shape != fitted.shape or e.ndim != 1:
        raise ValidationError("residuals and fitted values must be equal-length vectors")
    if e.size == 0:
        raise ValidationError("no residuals")
    order = np.argsort(fitted, kind="stable")

    funnel = None
    if np.unique(fitted).size > 1:
        q1, q3 = np.percentile(fitted, [25.0, 75.0])
        low = e[fitted <= q1]
        high = e[fitted >= q3]
        if low.size >= 2 and high.size >= 2:
            sd_low = float(low.std(ddof=1))
            sd_high = float(high.std(ddof=1))
            if sd_low > 0:
                funnel = sd_high / sd_low
    return ResidualSpread(
        fitted=tuple(float(v) for v in fitted[order]),
        residuals=tuple(float(v) for v in e[order]),
        funnel_ratio=funnel,
    )


def pp_plot(e: np.ndarray) -> PPPlotData:
    """Normal P-P coordinates of the residuals.

    Residuals are standardized by their own mean and (population) sd; the
    empirical cumulative proportion (i - 0.5)/N is paired with the normal CDF
    at the i-th sorted standardized residual. ``max_abs_deviation`` is the
    largest gap between the two coordinates, a Kolmogorov-style summary.
    """
    e = np.asarray(e, dtype=float)
    if e.size == 0:
        raise ValidationError("no residuals")
    sd = float(e.std(ddof=0))
    if sd == 0:
        raise ValidationError("residuals have zero variance; P-P plot undefined")
    z = np.sort((e - e.mean()) / sd)
    n = e.size
    empirical = (np.arange(1, n + 1) - 0.5) / n
    theoretical = np.array([normal_cdf(v) for v in z])
    max_dev = float(np.max(np.abs(empirical - theoretical)))
    return PPPlotData(
        tuple(float(v) for v in empirical),
        tuple(float(v) for v in theoretical),
        max_dev,
    )


def sd_mean_regression(cells: list[CellStats]) -> TransformRecommendation:
    """Fit log10(sd) on log10(mean) across cells and pick a transform.

    Cells with n < 2, sd = 0, or nonpositive mean cannot contribute (their
    log is undefined) and are counted as excluded. Needs at least 3 usable
    cells and nonconstant log-means.
    """
    usable = [c for c in cells if c.n >= 2 and c.sd is not None and c.sd > 0 and c.mean > 0]
    excluded = len(cells) - len(usable)
    if len(usable) < 3:
        raise ValidationError(
            f"need at least 3 cells with n >= 2, positive mean and sd > 0; got {len(usable)}"
        )
    x = np.log10([c.mean for c in usable])
    y = np.log10([c.sd for c in usable])
    sxx = float(((x - x.mean()) ** 2).sum())
    if sxx == 0:
        raise ValidationError("log cell means are constant; slope undefined")
    sxy = float(((x - x.mean()) * (y - y.mean())).sum())
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(((y - y.mean()) ** 2).sum())
    r_squared = (sxy * sxy) / (sxx * syy) if syy > 0 else 1.0
    slope_origin = float((x * y).sum() / (x * x).sum()) if float((x * x).sum()) > 0 else slope

    grid = sorted(_EXPONENT_TO_TRANSFORM)
    snapped = min(grid, key=lambda g: abs(slope - g))
    return TransformRecommendation(
        slope=float(slope),
        intercept=intercept,
        r_squared=float(r_squared),
        slope_through_origin=slope_origin,
        snapped_exponent=snapped,
        transform=_EXPONENT_TO_TRANSFORM[snapped],
        low_confidence=abs(slope - snapped) > _SNAP_CONFIDENCE_RADIUS,
        cells_used=len(usable),
        cells_excluded=excluded,
    )


def _transformed_name(name: str, transform: str) -> str:
    return {
        "none": name,
        "square_root": f"sqrt({name})",
        "logarithmic": f"log10({name})",
        "reciprocal_square_root": f"1/sqrt({name})",
        "reciprocal": f"1/({name})",
    }[transform]


def apply_transform(d: Dataset, transform: str) -> Dataset:
    """A new dataset with transformed responses; the transform is recorded on
    the dataset so results can be mapped back to the original scale."""
    if transform not in TRANSFORMS:
        raise ValidationError(f"unknown transform {transform!r}; one of {TRANSFORMS}")
    if transform == "none":
        return d
    y = d.responses
    if (y <= 0).any():
        raise ValidationError(f"transform {transform!r} requires strictly positive responses")
    if transform == "square_root":
        new = np.sqrt(y)
    elif transform == "logarithmic":
        new = np.log10(y)
    elif transform == "reciprocal_square_root":
        new = 1.0 / np.sqrt(y)
    else:
        new = 1.0 / y
    observations = tuple(
        Observation(obs.level_indices, float(v)) for obs, v in zip(d.observations, new)
    )
    return Dataset(
        layout=d.layout,
        observations=observations,
        response_name=_transformed_name(d.response_name, transform),
        transform=transform,
    )


def back_transform(values, transform: str):
    """Map transformed-scale values back to the raw response scale."""
    v = np.asarray(values, dtype=float)
    if transform == "none":
        out = v
    elif transform == "square_root":
        out = v**2
    elif transform == "logarithmic":
        out = 10.0**v
    elif transform == "reciprocal_square_root":
        out = 1.0 / v**2
    elif transform == "reciprocal":
        out = 1.0 / v
    else:
        raise ValidationError(f"unknown transform {transform!r}")
    return float(out) if np.isscalar(values) else out
