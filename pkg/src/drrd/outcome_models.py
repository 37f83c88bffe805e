"""First-stage models for the conditional mean of each potential outcome.

Each model is fitted separately on the treated (``d = 1``) and control
(``d = 0``) units, so nothing is borrowed across the cutoff. All fitted
models answer ``predict(d, w, z)``; ``predict_at_cutoff`` is the same
query with ``w`` pinned to the cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .core import Dataset
from .errors import (
    CovariateWidthMismatch,
    InsufficientData,
    RankDeficientDesign,
    SingularFit,
    ZeroDenominator,
)
from .kernels import KernelFamily, kernel_eval

RANK_RTOL = 1e-10
_CHUNK = 512


# -- specs -------------------------------------------------------------------


class OutcomeModelSpec:
    """Base class for first-stage specifications."""

    name = "base"

    def fit(self, dataset: Dataset, d, cutoff: float) -> "FittedOutcomeModel":
        return fit(self, dataset, d, cutoff)

    def _fit_side(self, w, z, y, cutoff):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:
        from dataclasses import asdict

        out = {"kind": self.name}
        for k, v in asdict(self).items():
            out[k] = v.value if isinstance(v, KernelFamily) else v
        return out


@dataclass(frozen=True)
class PolynomialSieve(OutcomeModelSpec):
    """OLS on powers of ``(w - c)``, optionally crossed with powers of each z.

    The basis is ``{(w-c)^p * t}`` for ``p = 0..degree_w`` and
    ``t in {1, z_j^q : j, q = 1..z_degree}`` (no z-z interactions).
    """

    degree_w: int = 1
    include_z: bool = True
    z_degree: int = 1

    name = "polynomial_sieve"

    def __post_init__(self):
        if self.degree_w < 0 or self.z_degree < 0:
            raise ValueError("sieve degrees must be >= 0")

    def _fit_side(self, w, z, y, cutoff):
        return _SieveSide.fit(self, w, z, y, cutoff)


@dataclass(frozen=True)
class NadarayaWatson(OutcomeModelSpec):
    h: float = 1.0
    family: KernelFamily = KernelFamily.TRIANGULAR

    name = "nadaraya_watson"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "family", KernelFamily(self.family))

    def _fit_side(self, w, z, y, cutoff):
        return _KernelSide(w.copy(), y.copy(), self.h, self.family, local_linear=False)


@dataclass(frozen=True)
class LocalLinear(OutcomeModelSpec):
    h: float = 1.0
    family: KernelFamily = KernelFamily.TRIANGULAR

    name = "local_linear"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "family", KernelFamily(self.family))

    def _fit_side(self, w, z, y, cutoff):
        if np.unique(w).size < 2:
            raise InsufficientData("local linear needs >= 2 distinct running-variable values per side")
        return _KernelSide(w.copy(), y.copy(), self.h, self.family, local_linear=True)


@dataclass(frozen=True)
class ConstantZero(OutcomeModelSpec):
    """Predicts 0 everywhere; a deliberately wrong first stage."""

    name = "constant_zero"

    def _fit_side(self, w, z, y, cutoff):
        return _ConstSide(0.0)


@dataclass(frozen=True)
class ConstantMean(OutcomeModelSpec):
    """Predicts each side's sample mean of y."""

    name = "constant_mean"

    def _fit_side(self, w, z, y, cutoff):
        return _ConstSide(float(np.mean(y)))


SPECS = {cls.name: cls for cls in (PolynomialSieve, NadarayaWatson, LocalLinear, ConstantZero, ConstantMean)}


def spec_from_dict(data: dict) -> OutcomeModelSpec:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in SPECS:
        raise ValueError(f"unknown first-stage model {kind!r}; choose from {sorted(SPECS)}")
    return SPECS[kind](**data)


# -- weighted linear fits ----------------------------------------------------


def weighted_linear_fit(x, y, weights) -> Tuple[float, float]:
    """Kernel-weighted least squares ``y ~ a + b x``; returns ``(a, b)``.

    Uses the centred two-pass form, which is stable when ``x`` is far from 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = np.asarray(weights, dtype=float)
    s0 = k.sum()
    if not s0 > 0:
        raise ZeroDenominator("all kernel weights are zero")
    xbar = (k @ x) / s0
    ybar = (k @ y) / s0
    dx = x - xbar
    sxx = k @ (dx * dx)
    span = np.max(np.abs(dx[k > 0])) if (k > 0).any() else 0.0
    if not sxx > 1e-12 * s0 * span * span or span == 0.0:
        raise SingularFit("fewer than two distinct running-variable values carry weight")
    slope = (k @ (dx * (y - ybar))) / sxx
    return float(ybar - slope * xbar), float(slope)


# -- fitted sides ------------------------------------------------------------


def _z_terms(z: np.ndarray, degree: int) -> np.ndarray:
    cols = [np.ones(z.shape[0])]
    for j in range(z.shape[1]):
        for q in range(1, degree + 1):
            cols.append(z[:, j] ** q)
    return np.column_stack(cols)


def sieve_design(dw, z, degree_w: int, z_degree: int = 0, scale: float = 1.0) -> np.ndarray:
    """Columns ``((w-c)/scale)^p * t``, z-term major, w-power minor."""
    dw = np.asarray(dw, dtype=float) / scale
    z = np.asarray(z, dtype=float).reshape(dw.shape[0], -1)
    t = _z_terms(z, z_degree) if z.shape[1] else np.ones((dw.shape[0], 1))
    powers = np.column_stack([dw**p for p in range(degree_w + 1)])
    return np.concatenate([powers * t[:, [j]] for j in range(t.shape[1])], axis=1)


class _SieveSide:
    def __init__(self, coef_scaled, scale, degree_w, z_degree, use_z):
        self.coef_scaled = coef_scaled
        self.scale = scale
        self.degree_w = degree_w
        self.z_degree = z_degree
        self.use_z = use_z

    @classmethod
    def fit(cls, spec: PolynomialSieve, w, z, y, cutoff):
        dw = w - cutoff
        scale = float(np.max(np.abs(dw))) or 1.0
        use_z = spec.include_z and z.shape[1] > 0 and spec.z_degree > 0
        zz = z if use_z else np.empty((w.shape[0], 0))
        X = sieve_design(dw, zz, spec.degree_w, spec.z_degree if use_z else 0, scale)
        if X.shape[0] < X.shape[1]:
            raise InsufficientData(f"sieve has {X.shape[1]} basis terms but only {X.shape[0]} units on a side")
        coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=RANK_RTOL)
        if rank < X.shape[1]:
            raise RankDeficientDesign(
                f"sieve design has rank {rank} < {X.shape[1]} (relative tolerance {RANK_RTOL})"
            )
        return cls(coef, scale, spec.degree_w, spec.z_degree if use_z else 0, use_z)

    @property
    def coefficients(self) -> np.ndarray:
        p = np.arange(self.degree_w + 1)
        n_t = self.coef_scaled.shape[0] // (self.degree_w + 1)
        return self.coef_scaled / np.tile(self.scale**p, n_t)

    def predict(self, dw, z):
        zz = z if self.use_z else np.empty((dw.shape[0], 0))
        return sieve_design(dw, zz, self.degree_w, self.z_degree, self.scale) @ self.coef_scaled


class _KernelSide:
    def __init__(self, w, y, h, family, local_linear):
        self.w = w
        self.y = y
        self.h = h
        self.family = family
        self.local_linear = local_linear

    def predict(self, dw, z, cutoff):
        q = dw + cutoff
        out = np.empty(q.shape[0])
        for start in range(0, q.shape[0], _CHUNK):
            qs = q[start : start + _CHUNK]
            k = kernel_eval(self.family, (self.w[None, :] - qs[:, None]) / self.h)
            s0 = k.sum(axis=1)
            if not (s0 > 0).all():
                bad = float(qs[np.argmin(s0 > 0)])
                raise ZeroDenominator(f"no training unit has positive kernel weight at w={bad}")
            ybar = (k @ self.y) / s0
            if not self.local_linear:
                out[start : start + _CHUNK] = ybar
                continue
            xbar = (k @ self.w) / s0
            dx = self.w[None, :] - xbar[:, None]
            sxx = np.einsum("ij,ij->i", k, dx * dx)
            if not (sxx > 1e-12 * s0 * self.h * self.h).all():
                raise SingularFit("local linear fit has fewer than two distinct weighted points")
            sxy = np.einsum("ij,ij->i", k, dx * (self.y[None, :] - ybar[:, None]))
            out[start : start + _CHUNK] = ybar + (sxy / sxx) * (qs - xbar)
        return out


class _ConstSide:
    def __init__(self, value):
        self.value = value

    def predict(self, dw, z):
        return np.full(dw.shape[0], self.value)


# -- fitted model ------------------------------------------------------------


class FittedOutcomeModel:
    """Per-side fitted first stage; immutable after construction."""

    def __init__(self, spec, cutoff: float, z_dim: int, sides: Dict[int, object], n_train: Dict[int, int]):
        self.spec = spec
        self.cutoff = float(cutoff)
        self.z_dim = z_dim
        self._sides = sides
        self.n_train = dict(n_train)

    def coefficients(self, d: int) -> np.ndarray:
        side = self._sides[int(d)]
        if not isinstance(side, _SieveSide):
            raise TypeError("coefficients are only defined for the polynomial sieve")
        return side.coefficients

    def predict(self, d: int, w, z=None):
        """``mu_hat(d | w, z)``; vectorised over rows of ``(w, z)``."""
        scalar = np.ndim(w) == 0
        w = np.atleast_1d(np.asarray(w, dtype=float))
        m = w.shape[0]
        if z is None:
            z = np.empty((m, 0))
        z = np.asarray(z, dtype=float)
        if z.ndim <= 1:
            z = np.broadcast_to(z.reshape(1, -1) if z.size else np.empty((1, 0)), (m, z.size))
        if z.shape[1] != self.z_dim:
            raise CovariateWidthMismatch(f"model trained with {self.z_dim} covariates, got {z.shape[1]}")
        if z.shape[0] != m:
            raise CovariateWidthMismatch(f"{m} running-variable values but {z.shape[0]} covariate rows")
        side = self._sides[int(d)]
        dw = w - self.cutoff
        if isinstance(side, _KernelSide):
            out = side.predict(dw, z, self.cutoff)
        else:
            out = side.predict(dw, z)
        return float(out[0]) if scalar else out

    def predict_at_cutoff(self, d: int, z=None):
        if z is None:
            return self.predict(d, self.cutoff)
        z = np.asarray(z, dtype=float)
        if z.ndim <= 1:
            return self.predict(d, self.cutoff, z)
        return self.predict(d, np.full(z.shape[0], self.cutoff), z)


def fit(spec: OutcomeModelSpec, dataset: Dataset, d, cutoff: float) -> FittedOutcomeModel:
    """Fit ``spec`` separately on each side of the cutoff."""
    d = np.asarray(d)
    sides, counts = {}, {}
    for side in (1, 0):
        mask = d == side
        counts[side] = int(mask.sum())
        if counts[side] == 0:
            raise InsufficientData(f"no training units on side {side}")
        sides[side] = spec._fit_side(dataset.w[mask], dataset.z[mask], dataset.y[mask], cutoff)
    return FittedOutcomeModel(spec, cutoff, dataset.z_dim, sides, counts)
