"""Criteria for assigning definite values to macroscopic variables of a state with tails.

* :func:`smd_possessed` -- variance-to-mean-squared test for the smeared mass
  density, extended so that negligible or exactly zero densities count as
  possessed.
* :func:`qpv` -- qualified possessed value: slide an error-bar window over a
  "stuff" distribution, and accept the window mean if the stuff left outside
  is below the falsification probability.
* :func:`flip_probability` -- chance that a tail of weight epsilon ends up
  dominant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import TOLERANCES, ValidationError

TIE_TOL = 1e-12


def smd_possessed(mean: float, variance: float, ratio_small: float = 1e-2,
                  ratio_large: float = 1e2, density_scale: float = 1.0,
                  density_small: float = 1e-3) -> Optional[float]:
    """Possessed smeared-mass-density value, or ``None``.

    With ``R = variance / mean**2`` the value ``mean`` is possessed when
    ``R <= ratio_small``, or ``R >= ratio_large`` and
    ``|mean| <= density_small * density_scale``, or ``mean == 0``.
    ``density_scale`` is the reference density ``m0 / a**3`` in the caller's units.
    """
    if variance < 0:
        raise ValidationError("variance must be >= 0")
    if not 0 < ratio_small < 1 or not ratio_large > 1:
        raise ValidationError("need 0 < ratio_small < 1 < ratio_large")
    if mean == 0:
        return 0.0
    m2 = mean * mean
    ratio = variance / m2 if m2 > 0 else (math.inf if variance > 0 else 0.0)
    if ratio <= ratio_small:
        return mean
    if ratio >= ratio_large and abs(mean) <= density_small * density_scale:
        return mean
    return None


@dataclass(frozen=True, eq=False)
class StuffDistribution:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if v.shape != w.shape or v.size == 0:
            raise ValidationError("values and weights must be non-empty and equally long")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(v)):
            raise ValidationError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > TOLERANCES.weights_sum:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unnormalized(cls, values, weights) -> "StuffDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(values, w / math.fsum(w))


@dataclass(frozen=True)
class ObservationSpec:
    error_bar: float
    p_falsify: float

    def __post_init__(self):
        if not self.error_bar > 0:
            raise ValidationError("error bar must be positive")
        if not 0 < self.p_falsify < 1:
            raise ValidationError("falsification probability must lie in (0, 1)")


@dataclass(frozen=True)
class QPVResult:
    value: Optional[float]
    window_center: float
    inside: float
    outside: float

    @property
    def possessed(self) -> bool:
        return self.value is not None


def best_window(dist: StuffDistribution, width: float) -> tuple[float, float, float]:
    """Centre maximizing the stuff inside ``[c - width/2, c + width/2]``.

    Candidates are every value and every midpoint between neighbours; ties go
    to the smaller centre. Returns ``(center, inside, outside)`` with
    ``outside`` summed directly so tiny tails are not lost to rounding.
    """
    v, inv = np.unique(dist.values, return_inverse=True)
    # exact group sums keep the result independent of the input order
    w = np.array([math.fsum(dist.weights[inv == i]) for i in range(v.size)])
    mids = 0.5 * (v[1:] + v[:-1])
    centers = np.unique(np.concatenate([v, mids]))
    half = 0.5 * width
    lo = np.searchsorted(v, centers - half, side="left")
    hi = np.searchsorted(v, centers + half, side="right")
    csum = np.concatenate([[0.0], np.cumsum(w)])
    inside = csum[hi] - csum[lo]
    # Prefix-sum differences carry rounding, so rank the near-maximal windows
    # again by their exactly summed outside stuff; exact ties keep the smallest centre.
    near = np.flatnonzero(inside >= inside.max() - TIE_TOL * csum[-1])
    outside = [math.fsum(np.concatenate([w[:lo[i]], w[hi[i]:]])) for i in near]
    best = int(near[int(np.argmin(outside))])
    return (float(centers[best]), math.fsum(w[lo[best]:hi[best]]),
            float(min(outside)))


def qpv(dist: StuffDistribution, obs: ObservationSpec, renormalize: bool = True) -> QPVResult:
    """Qualified possessed value of a distribution under an observation spec.

    With ``renormalize=False`` the unrenormalized global mean is used instead
    and accepted only if it falls inside the window. That variant lets a far
    away tail drag the mean outside the error bar even when the tail weight
    is negligible, so it can refuse a value an observer would report.
    """
    if dist.values.size > 1:
        spacing = np.min(np.diff(dist.values))
        if 0 < spacing and obs.error_bar < spacing:
            warnings.warn("error bar is narrower than the value spacing", stacklevel=2)
    center, inside, outside = best_window(dist, obs.error_bar)
    if not outside < obs.p_falsify:
        return QPVResult(None, center, inside, outside)
    half = 0.5 * obs.error_bar
    v, w = dist.values, dist.weights
    if renormalize:
        mask = np.abs(v - center) <= half
        value = float(np.sum(v[mask] * w[mask]) / np.sum(w[mask]))
    else:
        value = float(np.sum(v * w))
        if abs(value - center) > half:
            return QPVResult(None, center, inside, outside)
    assert abs(value - center) <= half * (1 + 1e-12), "possessed value outside its window"
    return QPVResult(value, center, inside, outside)


def flip_probability(tail_weight: float) -> float:
    """Probability that a component of squared amplitude ``epsilon`` eventually wins.

    The squared amplitudes are a martingale absorbed at 0 or 1, so this is
    ``epsilon`` itself.
    """
    if not 0.0 <= tail_weight <= 1.0:
        raise ValidationError("tail weight must lie in [0, 1]")
    return float(tail_weight)


def two_packet_distribution(centers, weights, width: float, points: int = 201,
                            span: float = 6.0) -> StuffDistribution:
    """Sum of sampled Gaussian packets, each normalized to its own weight.

    ``width`` is the packet standard deviation; each packet is sampled on
    ``points`` values within ``span`` widths of its centre.
    """
    vals, wts = [], []
    for c, wt in zip(centers, weights):
        x = c + np.linspace(-span, span, points) * width
        g = np.exp(-0.5 * ((x - c) / width) ** 2)
        vals.append(x)
        wts.append(wt * g / g.sum())
    return StuffDistribution(np.concatenate(vals), np.concatenate(wts))
