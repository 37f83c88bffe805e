"""Kernels, bandwidth rules and the side-normalised localization weights."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateBandwidth, EmptySide, ZeroDenominator

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(str, enum.Enum):
    TRIANGULAR = "triangular"
    EPANECHNIKOV = "epanechnikov"
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"

    @property
    def compact(self) -> bool:
        return self is not KernelFamily.GAUSSIAN

    @property
    def peak(self) -> float:
        return float(kernel_eval(self, 0.0))

    def __call__(self, u):
        return kernel_eval(self, u)


def kernel_eval(family: KernelFamily, u):
    """Evaluate ``K(u)`` elementwise; returns a float for scalar input."""
    family = KernelFamily(family)
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    if family is KernelFamily.TRIANGULAR:
        out = np.maximum(0.0, 1.0 - a)
    elif family is KernelFamily.EPANECHNIKOV:
        out = 0.75 * np.maximum(0.0, 1.0 - u * u)
    elif family is KernelFamily.UNIFORM:
        out = np.where(a <= 1.0, 0.5, 0.0)
    else:
        out = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return float(out) if out.ndim == 0 else out


# -- bandwidth rules ---------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    h: float

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise DegenerateBandwidth(f"fixed bandwidth must be positive, got {self.h}")


@dataclass(frozen=True)
class RuleOfThumb:
    """``1.06 * sd(w) * n**(-1/5)``."""


@dataclass(frozen=True)
class Shrinking:
    """``scale * n**(-rate)``: a deterministic vanishing bandwidth."""

    scale: float = 1.0
    rate: float = 0.2

    def __post_init__(self):
        if not (self.scale > 0 and self.rate > 0):
            raise DegenerateBandwidth("shrinking bandwidth needs scale > 0 and rate > 0")


BandwidthRule = Union[Fixed, RuleOfThumb, Shrinking]


def _support_floor(w: np.ndarray, cutoff: float) -> float:
    """Smallest h giving every side two units strictly inside a unit-radius kernel."""
    dist = np.abs(w - cutoff)
    treated = w >= cutoff
    floor = 0.0
    for side in (treated, ~treated):
        ds = np.sort(dist[side])
        if ds.size < 2:
            raise EmptySide("bandwidth floor needs two units per side")
        floor = max(floor, ds[1])
    # strict inequality for triangular/epanechnikov, K(+-1) = 0
    return float(floor) * (1.0 + 1e-9)


def select_bandwidth(
    rule: BandwidthRule,
    w,
    cutoff: float,
    family: KernelFamily = KernelFamily.TRIANGULAR,
) -> float:
    """Resolve a bandwidth rule to a number for this running-variable sample.

    ``RuleOfThumb`` is floored so compact kernels keep at least two units
    with positive weight on each side; ``Fixed`` and ``Shrinking`` are
    returned as-is.
    """
    w = np.asarray(w, dtype=float)
    if isinstance(rule, Fixed):
        return float(rule.h)
    if isinstance(rule, Shrinking):
        return float(rule.scale * w.shape[0] ** (-rule.rate))
    if isinstance(rule, RuleOfThumb):
        n = w.shape[0]
        sd = float(np.std(w, ddof=1)) if n > 1 else 0.0
        if not sd > 0:
            raise DegenerateBandwidth("running variable has zero spread; rule-of-thumb undefined")
        h = 1.06 * sd * n ** (-0.2)
        if KernelFamily(family).compact:
            h = max(h, _support_floor(w, cutoff))
        return h
    raise TypeError(f"unknown bandwidth rule {rule!r}")


# -- localization weights ----------------------------------------------------


def side_kernel_mean(w, d, side: int, cutoff: float, h: float, family: KernelFamily) -> float:
    """Mean of ``K((w_i - c)/h)`` over the units on ``side``."""
    w = np.asarray(w, dtype=float)
    mask = np.asarray(d) == side
    if not mask.any():
        raise EmptySide(f"no units on side {side}")
    return float(np.mean(kernel_eval(family, (w[mask] - cutoff) / h)))


def localization_weight(w_i, side_mean: float, cutoff: float, h: float, family: KernelFamily):
    """``K((w_i - c)/h) / side_mean``; vectorised over ``w_i``."""
    if not side_mean > 0:
        raise ZeroDenominator(
            "side kernel mean is zero: no unit on this side falls inside the bandwidth; widen h"
        )
    return kernel_eval(family, (np.asarray(w_i, dtype=float) - cutoff) / h) / side_mean


@dataclass(frozen=True)
class SideKernelStats:
    zeta_hat_treated: float
    zeta_hat_control: float
    bandwidth_used: float


def side_weights(w, d, cutoff: float, h: float, family: KernelFamily):
    """Weights of every unit under each arm's normalisation.

    Returns ``(r1, r0, stats)`` where ``r1[i]`` is the treated-side weight
    evaluated at ``w[i]`` (all units, not only treated).
    """
    w = np.asarray(w, dtype=float)
    d = np.asarray(d)
    k = kernel_eval(family, (w - cutoff) / h)
    zetas = []
    for side in (1, 0):
        mask = d == side
        if not mask.any():
            raise EmptySide(f"no units on side {side}")
        zetas.append(float(np.mean(k[mask])))
    for z in zetas:
        if not z > 0:
            raise ZeroDenominator(
                "side kernel mean is zero: no unit on this side falls inside the bandwidth; widen h"
            )
    stats = SideKernelStats(zetas[0], zetas[1], float(h))
    return k / zetas[0], k / zetas[1], stats
