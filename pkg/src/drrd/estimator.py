"""Doubly robust RD estimator, local-linear baseline and pairs bootstrap.

For each arm ``d`` the estimate combines

* a residual correction: the kernel-weighted mean, over side-``d`` units,
  of ``y_i - mu_hat(d | w_i, z_i)``, and
* a plug-in level: the mean over *all* units of ``mu_hat(d | c, z_i)``.

``tau_hat`` is the treated total minus the control total.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .core import Dataset, RdConfig, validate_for_estimation
from .errors import BootstrapDegenerate, EmptySide, InsufficientData, SingularFit, ZeroDenominator
from .kernels import KernelFamily, SideKernelStats, kernel_eval, select_bandwidth, side_weights
from .outcome_models import FittedOutcomeModel, fit, weighted_linear_fit


@dataclass(frozen=True, eq=False)
class PsiComponents:
    """Per-unit pieces of the score, arrays indexed ``[arm][unit]`` with arm 0/1.

    ``residual_term[d, i] = 1[D_i = d] * (y_i - mu_hat(d|w_i, z_i)) * r_hat(d, w_i)``
    and ``plugin_term[d, i] = mu_hat(d | c, z_i)``.
    """

    residual_term: np.ndarray
    plugin_term: np.ndarray
    n_side: Tuple[int, int]
    kernel_stats: SideKernelStats
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.plugin_term.shape[1]

    @property
    def eta_hat(self) -> Tuple[float, float]:
        """Residual correction per arm, averaged within that arm's side."""
        return tuple(float(self.residual_term[d].sum() / self.n_side[d]) for d in (0, 1))

    @property
    def plugin_mean(self) -> Tuple[float, float]:
        return tuple(float(self.plugin_term[d].mean()) for d in (0, 1))

    @property
    def psi(self) -> np.ndarray:
        """Per-unit scores whose column means recompose ``eta_hat + plugin_mean``."""
        scale = np.array([self.n / self.n_side[0], self.n / self.n_side[1]])[:, None]
        return self.residual_term * scale + self.plugin_term


@dataclass(frozen=True)
class DrEstimate:
    tau_hat: float
    eta_hat: Tuple[float, float]
    plugin_mean: Tuple[float, float]
    n: int
    n_treated: int
    n_control: int
    bandwidth_used: float
    zeta_hat: Tuple[float, float]
    effective_n: Tuple[float, float]
    se: Optional[float] = None
    ci: Optional[Tuple[float, float]] = None
    ci_level: Optional[float] = None
    method: str = "dr_rd"
    extra: dict = field(default_factory=dict)

    def recomposed(self) -> float:
        return (self.eta_hat[1] + self.plugin_mean[1]) - (self.eta_hat[0] + self.plugin_mean[0])


def compute_psi(dataset: Dataset, d, model: FittedOutcomeModel, cutoff: float, h: float,
                family: KernelFamily) -> PsiComponents:
    d = np.asarray(d)
    r1, r0, stats = side_weights(dataset.w, d, cutoff, h, family)
    n = dataset.n
    resid = np.zeros((2, n))
    plug = np.empty((2, n))
    n_side = (int((d == 0).sum()), int((d == 1).sum()))
    for arm, r in ((0, r0), (1, r1)):
        mask = d == arm
        fitted = model.predict(arm, dataset.w[mask], dataset.z[mask])
        resid[arm, mask] = (dataset.y[mask] - fitted) * r[mask]
        plug[arm] = model.predict_at_cutoff(arm, dataset.z) if dataset.z_dim else np.full(
            n, model.predict_at_cutoff(arm)
        )
    weights = np.where(d == 1, r1, r0)
    return PsiComponents(resid, plug, n_side, stats, weights)


def _effective_n(weights, d):
    out = []
    for arm in (0, 1):
        r = weights[d == arm]
        ss = float(r @ r)
        out.append(float(r.sum() ** 2 / ss) if ss > 0 else 0.0)
    return tuple(out)


def estimate_dr(dataset: Dataset, cfg: RdConfig) -> DrEstimate:
    """Fit the configured first stage and return the DR-RD estimate."""
    v = validate_for_estimation(dataset, cfg)
    h = select_bandwidth(cfg.bandwidth, dataset.w, cfg.cutoff, cfg.kernel)
    model = fit(cfg.first_stage, dataset, v.d, cfg.cutoff)
    comp = compute_psi(dataset, v.d, model, cfg.cutoff, h, cfg.kernel)
    eta, plug = comp.eta_hat, comp.plugin_mean
    tau = (eta[1] + plug[1]) - (eta[0] + plug[0])
    return DrEstimate(
        tau_hat=tau,
        eta_hat=eta,
        plugin_mean=plug,
        n=dataset.n,
        n_treated=v.n_treated,
        n_control=v.n_control,
        bandwidth_used=h,
        zeta_hat=(comp.kernel_stats.zeta_hat_control, comp.kernel_stats.zeta_hat_treated),
        effective_n=_effective_n(comp.weights, v.d),
    )


def estimate_local_linear_baseline(dataset: Dataset, cutoff: float, h: float,
                                   family: KernelFamily = KernelFamily.TRIANGULAR) -> DrEstimate:
    """Conventional sharp-RD estimate: difference of kernel-weighted linear intercepts."""
    cfg = RdConfig(cutoff=cutoff, kernel=family)
    v = validate_for_estimation(dataset, cfg)
    dw = dataset.w - cutoff
    k = kernel_eval(family, dw / h)
    intercepts, zetas = {}, {}
    for arm in (0, 1):
        mask = v.d == arm
        inside = mask & (k > 0)
        if np.unique(dw[inside]).size < 2:
            raise InsufficientData(f"side {arm} has fewer than 2 distinct w values inside the kernel support")
        try:
            intercepts[arm], _ = weighted_linear_fit(dw[mask], dataset.y[mask], k[mask])
        except ZeroDenominator as exc:
            raise SingularFit(str(exc)) from exc
        zetas[arm] = float(k[mask].mean())
    return DrEstimate(
        tau_hat=intercepts[1] - intercepts[0],
        eta_hat=(0.0, 0.0),
        plugin_mean=(intercepts[0], intercepts[1]),
        n=dataset.n,
        n_treated=v.n_treated,
        n_control=v.n_control,
        bandwidth_used=float(h),
        zeta_hat=(zetas[0], zetas[1]),
        effective_n=_effective_n(np.where(v.d == 1, k / zetas[1], k / zetas[0]), v.d),
        method="local_linear",
    )


_REDRAWABLE = (EmptySide, ZeroDenominator)


def _replication_rng(seed, index: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index, attempt)))


def bootstrap_draws(dataset: Dataset, cfg: RdConfig, reps: int, seed: int = 0):
    """Pairs-bootstrap replicates of ``tau_hat``, ordered by replication index.

    Each replication ``b`` draws from its own stream keyed by ``(seed, b,
    attempt)``; a resample whose fit is degenerate (a side emptied out, or
    no unit inside the bandwidth) is redrawn with the next attempt.
    Returns ``(draws, redraws)``.
    """
    n = dataset.n
    draws = np.empty(reps)
    redraws = 0
    cap = 10 * reps
    for b in range(reps):
        attempt = 0
        while True:
            idx = _replication_rng(seed, b, attempt).integers(0, n, size=n)
            try:
                draws[b] = estimate_dr(dataset.take(idx), cfg).tau_hat
                break
            except _REDRAWABLE:
                redraws += 1
                attempt += 1
                if redraws > cap:
                    raise BootstrapDegenerate(f"more than {cap} degenerate resamples in {reps} replications")
    return draws, redraws


def bootstrap_ci(dataset: Dataset, cfg: RdConfig, reps: int = 200, level: float = 0.95,
                 seed: int = 0, tau_hat: Optional[float] = None):
    """Bootstrap standard error and percentile interval for ``tau_hat``.

    The interval is widened, if needed, to contain the point estimate.
    Returns ``(se, (lo, hi))``.
    """
    if reps < 100:
        raise ValueError("bootstrap needs reps >= 100")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if tau_hat is None:
        tau_hat = estimate_dr(dataset, cfg).tau_hat
    draws, _ = bootstrap_draws(dataset, cfg, reps, seed)
    alpha = 1.0 - level
    lo, hi = np.quantile(draws, [alpha / 2, 1 - alpha / 2])
    se = float(np.std(draws, ddof=1))
    return se, (float(min(lo, tau_hat)), float(max(hi, tau_hat)))


def estimate_with_bootstrap(dataset: Dataset, cfg: RdConfig, reps: int, level: float = 0.95,
                            seed: int = 0) -> DrEstimate:
    est = estimate_dr(dataset, cfg)
    se, ci = bootstrap_ci(dataset, cfg, reps, level, seed, tau_hat=est.tau_hat)
    return replace(est, se=se, ci=ci, ci_level=level)
