"""Known-truth data-generating processes and the Monte Carlo harness.

A ``DgpSpec`` writes each arm's conditional mean as a polynomial in
``(w - c)`` and the covariates, so the effect at the cutoff has a closed
form from the covariate moments. ``run_scenario`` repeats
generate-and-estimate over a grid of sample sizes and summarises bias,
RMSE and Monte Carlo standard error per sample size.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Dataset, RdConfig
from .errors import EmptySide, UnsupportedMoment, ZeroDenominator
from .estimator import bootstrap_ci, estimate_dr, estimate_local_linear_baseline

MAX_MOMENT = 8
SLACK = 3.0


# -- distributions -----------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    a: float = 0.0
    b: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("uniform needs b > a")

    def draw(self, rng: np.random.Generator, size):
        return rng.uniform(self.a, self.b, size=size)

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def sd(self) -> float:
        return (self.b - self.a) / math.sqrt(12.0)

    def moment(self, q: int) -> float:
        return (self.b ** (q + 1) - self.a ** (q + 1)) / ((q + 1) * (self.b - self.a))

    def contains(self, x: float) -> bool:
        return self.a < x < self.b


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    sd: float = 1.0
    kind = "normal"

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("normal needs sd > 0")

    def draw(self, rng: np.random.Generator, size):
        return rng.normal(self.mean, self.sd, size=size)

    def moment(self, q: int) -> float:
        # E[(m + s X)^q] with X standard normal; odd central moments vanish
        total = 0.0
        for k in range(0, q + 1, 2):
            total += math.comb(q, k) * self.mean ** (q - k) * self.sd**k * _double_factorial(k - 1)
        return total

    def contains(self, x: float) -> bool:
        return True


def _double_factorial(k: int) -> int:
    return 1 if k <= 0 else k * _double_factorial(k - 2)


Distribution = Union[Uniform, Normal]


def dist_from_dict(data: dict) -> Distribution:
    data = dict(data)
    kind = data.pop("kind")
    return {"uniform": Uniform, "normal": Normal}[kind](**data)


def dist_to_dict(dist: Distribution) -> dict:
    return {"kind": dist.kind, **asdict(dist)}


# -- polynomial truth --------------------------------------------------------


@dataclass(frozen=True)
class Term:
    """``coef * (w - c)**w_power * prod_j z_j**z_powers[j]``."""

    coef: float
    w_power: int = 0
    z_powers: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "z_powers", tuple(int(q) for q in self.z_powers))

    def evaluate(self, dw: np.ndarray, z: np.ndarray) -> np.ndarray:
        out = self.coef * dw**self.w_power
        for j, q in enumerate(self.z_powers):
            if q:
                out = out * z[:, j] ** q
        return out


@dataclass(frozen=True)
class DgpSpec:
    name: str
    mu0: Dict[int, Tuple[Term, ...]]
    w_dist: Distribution = Uniform(-1.0, 1.0)
    z_dim: int = 0
    z_dist: Distribution = Uniform(0.0, 1.0)
    noise_sd: float = 0.0
    cutoff: float = 0.0

    def __post_init__(self):
        mu0 = {int(k): tuple(v) for k, v in self.mu0.items()}
        if set(mu0) != {0, 1}:
            raise ValueError("mu0 needs terms for both arms 0 and 1")
        for terms in mu0.values():
            for t in terms:
                if len(t.z_powers) > self.z_dim:
                    raise ValueError(f"term {t} references more than z_dim={self.z_dim} covariates")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if not self.w_dist.contains(self.cutoff):
            raise ValueError("cutoff must lie inside the running-variable support")
        object.__setattr__(self, "mu0", mu0)

    def mean_outcome(self, d: int, w, z=None) -> np.ndarray:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        z = np.empty((w.shape[0], 0)) if z is None else np.asarray(z, dtype=float).reshape(w.shape[0], -1)
        dw = w - self.cutoff
        out = np.zeros(w.shape[0])
        for t in self.mu0[d]:
            out = out + t.evaluate(dw, z)
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mu0": {str(d): [{"coef": t.coef, "w": t.w_power, "z": list(t.z_powers)} for t in self.mu0[d]]
                    for d in (1, 0)},
            "w_dist": dist_to_dict(self.w_dist),
            "z_dim": self.z_dim,
            "z_dist": dist_to_dict(self.z_dist),
            "noise_sd": self.noise_sd,
            "cutoff": self.cutoff,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DgpSpec":
        mu0 = {
            int(d): tuple(Term(float(t["coef"]), int(t.get("w", 0)), tuple(t.get("z", ()))) for t in terms)
            for d, terms in data["mu0"].items()
        }
        return cls(
            name=str(data["name"]),
            mu0=mu0,
            w_dist=dist_from_dict(data.get("w_dist", {"kind": "uniform", "a": -1.0, "b": 1.0})),
            z_dim=int(data.get("z_dim", 0)),
            z_dist=dist_from_dict(data.get("z_dist", {"kind": "uniform", "a": 0.0, "b": 1.0})),
            noise_sd=float(data.get("noise_sd", 0.0)),
            cutoff=float(data.get("cutoff", 0.0)),
        )


def true_tau(spec: DgpSpec) -> float:
    """Effect at the cutoff, ``E_z[mu0(1|c,Z) - mu0(0|c,Z)]``, in closed form."""
    total = 0.0
    for d, sign in ((1, 1.0), (0, -1.0)):
        for t in spec.mu0[d]:
            if t.w_power != 0:
                continue
            val = t.coef
            for q in t.z_powers:
                if q > MAX_MOMENT:
                    raise UnsupportedMoment(f"z moment of order {q} exceeds supported order {MAX_MOMENT}")
                if q:
                    val *= spec.z_dist.moment(q)
            total += sign * val
    return total


class Sample(NamedTuple):
    dataset: Dataset
    tau0: float
    d: np.ndarray
    y1: np.ndarray
    y0: np.ndarray


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate(spec: DgpSpec, n: int, seed=None) -> Sample:
    """Draw ``n`` units with both potential outcomes and reveal the assigned one."""
    if n < 4:
        raise ValueError("generate needs n >= 4")
    rng = _as_rng(seed)
    w = spec.w_dist.draw(rng, n)
    z = spec.z_dist.draw(rng, (n, spec.z_dim)) if spec.z_dim else np.empty((n, 0))
    noise = rng.standard_normal((2, n)) * spec.noise_sd
    y1 = spec.mean_outcome(1, w, z) + noise[1]
    y0 = spec.mean_outcome(0, w, z) + noise[0]
    d = (w >= spec.cutoff).astype(np.int8)
    y = np.where(d == 1, y1, y0)
    return Sample(Dataset(y, w, z), true_tau(spec), d, y1, y0)


# -- catalog -----------------------------------------------------------------


def linear_jump(noise_sd: float = 0.5) -> DgpSpec:
    """Linear arms ``2 + 3w`` and ``1 + w``; effect 1."""
    return DgpSpec(
        "LinearJump",
        {1: (Term(2.0), Term(3.0, 1)), 0: (Term(1.0), Term(1.0, 1))},
        noise_sd=noise_sd,
    )


def curved_jump(noise_sd: float = 0.3) -> DgpSpec:
    """Cubic arms with opposite curvature; effect 0.5."""
    return DgpSpec(
        "CurvedJump",
        {
            1: (Term(0.5), Term(0.4, 1), Term(0.6, 2), Term(-0.4, 3)),
            0: (Term(-0.1, 1), Term(-0.9, 2), Term(0.3, 3)),
        },
        noise_sd=noise_sd,
    )


def covariate_shift(noise_sd: float = 0.5) -> DgpSpec:
    """Two uniform covariates entering the arms differently; effect 0.8 + 0.25 - 0.8/2 + 0.5/3."""
    return DgpSpec(
        "CovariateShift",
        {
            1: (Term(1.0), Term(0.5, 1), Term(1.0, 0, (1, 0)), Term(-0.5, 0, (0, 1)), Term(0.5, 0, (2, 0))),
            0: (Term(0.2), Term(0.5, 1), Term(0.5, 0, (1, 0)), Term(0.3, 0, (0, 1))),
        },
        z_dim=2,
        z_dist=Uniform(0.0, 1.0),
        noise_sd=noise_sd,
    )


CATALOG = {"LinearJump": linear_jump, "CurvedJump": curved_jump, "CovariateShift": covariate_shift}


# -- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class McRow:
    scenario: str
    n: int
    reps: int
    tau0: float
    mean_tau_hat: float
    bias: float
    rmse: float
    mc_se: float
    sd: float
    coverage: Optional[float]
    mean_bandwidth: float
    redraws: int
    bias_significant: bool
    baseline_mean: Optional[float] = None
    baseline_mc_se: Optional[float] = None
    seed: int = 0


@dataclass(frozen=True)
class McReport:
    scenario: str
    seed: int
    reps: int
    rows: List[McRow]
    converged: bool
    config: dict = field(default_factory=dict)

    @property
    def non_convergence_flag(self) -> bool:
        return not self.converged

    def row(self, n: int) -> McRow:
        return next(r for r in self.rows if r.n == n)


def scenario_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def replication_seed(seed: int, name: str, n: int, rep: int, attempt: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(scenario_key(name), n, rep, attempt))


def _shrinks(rows: Sequence[McRow], slack: float = SLACK) -> bool:
    for prev, cur in zip(rows, rows[1:]):
        if abs(cur.bias) > abs(prev.bias) + slack * cur.mc_se:
            return False
    return True


def assess_convergence(rows: Sequence[McRow], slack: float = SLACK) -> bool:
    """Whether |bias| looks like it is vanishing over the n grid.

    Requires no increase beyond ``slack`` MC-SEs between consecutive sizes,
    and at the largest size either an insignificant bias or a significant
    drop relative to the smallest size.
    """
    rows = sorted(rows, key=lambda r: r.n)
    if not _shrinks(rows, slack):
        return False
    first, last = rows[0], rows[-1]
    if abs(last.bias) <= slack * last.mc_se:
        return True
    if len(rows) < 2:
        return False
    return abs(last.bias) < abs(first.bias) - slack * (first.mc_se + last.mc_se)


def _one_replication(spec, cfg, n, rep, seed, bootstrap_reps, level, baseline):
    attempt = 0
    while True:
        rng = np.random.default_rng(replication_seed(seed, spec.name, n, rep, attempt))
        sample = generate(spec, n, rng)
        try:
            est = estimate_dr(sample.dataset, cfg)
            base = None
            if baseline:
                base = estimate_local_linear_baseline(
                    sample.dataset, cfg.cutoff, est.bandwidth_used, cfg.kernel
                ).tau_hat
            covered = None
            if bootstrap_reps:
                boot_seed = int(rng.integers(0, 2**63 - 1))
                _, (lo, hi) = bootstrap_ci(sample.dataset, cfg, bootstrap_reps, level, boot_seed, est.tau_hat)
                covered = lo <= sample.tau0 <= hi
            return est.tau_hat, est.bandwidth_used, base, covered, attempt
        except (EmptySide, ZeroDenominator):
            attempt += 1


def run_scenario(
    spec: DgpSpec,
    cfg: RdConfig,
    n_grid: Sequence[int],
    reps: int,
    seed: int = 0,
    bootstrap_reps: int = 0,
    level: float = 0.95,
    baseline: bool = False,
) -> McReport:
    """Monte Carlo bias/RMSE/MC-SE of ``estimate_dr`` over a grid of sample sizes.

    Replication ``r`` at size ``n`` draws from a stream keyed by
    ``(seed, scenario, n, r, attempt)``; a draw that leaves a side empty or
    without units inside the bandwidth is redrawn with the next attempt.
    The DGP's cutoff overrides ``cfg.cutoff``.
    """
    if reps < 50:
        raise ValueError("run_scenario needs reps >= 50")
    if cfg.cutoff != spec.cutoff:
        cfg = cfg.replace(cutoff=spec.cutoff)
    tau0 = true_tau(spec)
    rows = []
    for n in sorted(int(x) for x in n_grid):
        taus = np.empty(reps)
        bws = np.empty(reps)
        bases = np.empty(reps) if baseline else None
        covers = []
        redraws = 0
        for r in range(reps):
            tau, bw, base, covered, attempts = _one_replication(
                spec, cfg, n, r, seed, bootstrap_reps, level, baseline
            )
            taus[r], bws[r] = tau, bw
            redraws += attempts
            if baseline:
                bases[r] = base
            if covered is not None:
                covers.append(covered)
        err = taus - tau0
        bias = float(err.mean())
        sd = float(taus.std(ddof=1))
        mc_se = sd / math.sqrt(reps)
        rows.append(
            McRow(
                scenario=spec.name,
                n=n,
                reps=reps,
                tau0=tau0,
                mean_tau_hat=float(taus.mean()),
                bias=bias,
                rmse=float(math.sqrt(np.mean(err * err))),
                mc_se=mc_se,
                sd=sd,
                coverage=float(np.mean(covers)) if covers else None,
                mean_bandwidth=float(bws.mean()),
                redraws=redraws,
                bias_significant=bool(abs(bias) > SLACK * mc_se),
                baseline_mean=float(bases.mean()) if baseline else None,
                baseline_mc_se=float(bases.std(ddof=1) / math.sqrt(reps)) if baseline else None,
                seed=seed,
            )
        )
    return McReport(spec.name, seed, reps, rows, assess_convergence(rows))
