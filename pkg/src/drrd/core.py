"""Sharp RD data containers, treatment assignment and run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import CutoffOutOfRange, EmptySide, NonFiniteValue, ShapeMismatch
from .kernels import BandwidthRule, KernelFamily, RuleOfThumb

MIN_UNITS_PER_SIDE = 2


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed sample ``(y, w, z)`` of a sharp RD design.

    ``z`` is always two-dimensional; a design without extra covariates has
    shape ``(n, 0)``. Arrays are copied and frozen on construction.
    """

    y: np.ndarray
    w: np.ndarray
    z: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if y.ndim != 1 or w.ndim != 1:
            raise ShapeMismatch("y and w must be one-dimensional")
        n = y.shape[0]
        if n < 1:
            raise ShapeMismatch("dataset must contain at least one row")
        if w.shape[0] != n:
            raise ShapeMismatch(f"y has {n} rows but w has {w.shape[0]}")
        if self.z is None:
            z = np.empty((n, 0))
        else:
            z = np.asarray(self.z, dtype=float)
            if z.ndim == 1:
                z = z.reshape(n, -1) if z.size else np.empty((n, 0))
            if z.ndim != 2 or z.shape[0] != n:
                raise ShapeMismatch(f"z must have shape (n={n}, k), got {z.shape}")
        for name, arr in (("y", y), ("w", w), ("z", z)):
            bad = ~np.isfinite(arr)
            if bad.any():
                row = int(np.argwhere(bad)[0][0])
                raise NonFiniteValue(f"non-finite value in {name}", location=f"{name}[{row}]")
        object.__setattr__(self, "y", _as_readonly(y))
        object.__setattr__(self, "w", _as_readonly(w))
        object.__setattr__(self, "z", _as_readonly(z))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def z_dim(self) -> int:
        return self.z.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset (with repetition allowed), used by the bootstrap."""
        return Dataset(self.y[idx], self.w[idx], self.z[idx])

    def __len__(self):
        return self.n


def _default_first_stage():
    from .outcome_models import PolynomialSieve

    return PolynomialSieve(degree_w=1)


@dataclass(frozen=True)
class RdConfig:
    """Estimation settings: cutoff, kernel, bandwidth rule, first-stage model."""

    cutoff: float = 0.0
    kernel: KernelFamily = KernelFamily.TRIANGULAR
    bandwidth: BandwidthRule = field(default_factory=RuleOfThumb)
    first_stage: Any = field(default_factory=_default_first_stage)

    def replace(self, **changes) -> "RdConfig":
        from dataclasses import replace

        return replace(self, **changes)


def assign_treatment(dataset: Dataset, cutoff: float) -> np.ndarray:
    """Sharp assignment ``d = 1[w >= cutoff]``; ties at the cutoff are treated."""
    d = (np.asarray(dataset.w) >= cutoff).astype(np.int8)
    d.setflags(write=False)
    return d


class Validated(NamedTuple):
    dataset: Dataset
    d: np.ndarray
    n_treated: int
    n_control: int


def validate_for_estimation(dataset: Dataset, cfg: RdConfig) -> Validated:
    """Check a dataset is estimable under ``cfg`` and attach the treatment vector.

    Raises
    ------
    NonFiniteValue
        If the cutoff is not finite (data finiteness is enforced by ``Dataset``).
    CutoffOutOfRange
        If the cutoff is outside ``[min(w), max(w)]``.
    EmptySide
        If either side of the cutoff has fewer than two units.
    """
    c = float(cfg.cutoff)
    if not np.isfinite(c):
        raise NonFiniteValue("cutoff is not finite", location="cutoff")
    w = dataset.w
    d = assign_treatment(dataset, c)
    n1 = int(d.sum())
    n0 = dataset.n - n1
    if n1 < MIN_UNITS_PER_SIDE or n0 < MIN_UNITS_PER_SIDE:
        raise EmptySide(
            f"need >= {MIN_UNITS_PER_SIDE} units per side, got {n1} treated and {n0} control"
        )
    lo, hi = float(w.min()), float(w.max())
    if not (lo < c <= hi):
        raise CutoffOutOfRange(f"cutoff {c} outside observed running-variable range [{lo}, {hi}]")
    return Validated(dataset, d, n1, n0)
