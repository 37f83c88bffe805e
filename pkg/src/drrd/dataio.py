"""CSV ingestion, YAML run configuration and report writers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import yaml

from .core import Dataset, RdConfig
from .errors import ConfigError, EmptyFile, IoFailure, MissingColumn, UnparseableValue
from .estimator import DrEstimate
from .kernels import Fixed, KernelFamily, RuleOfThumb, Shrinking
from .outcome_models import OutcomeModelSpec, spec_from_dict
from .simulation import CATALOG, DgpSpec, McReport

MODES = ("estimate", "simulate")
FORMATS = ("json", "csv")

SIMULATE_CSV_COLUMNS = (
    "scenario", "n", "reps", "tau0", "mean_tau_hat", "bias", "rmse", "mc_se", "sd",
    "coverage", "mean_bandwidth", "redraws", "bias_significant", "baseline_mean",
    "baseline_mc_se", "seed", "converged", "config_json",
)
ESTIMATE_CSV_COLUMNS = (
    "method", "tau_hat", "eta_hat_treated", "eta_hat_control", "plugin_mean_treated",
    "plugin_mean_control", "zeta_hat_treated", "zeta_hat_control", "effective_n_treated",
    "effective_n_control", "bandwidth", "n", "n_treated", "n_control", "se", "ci_lo",
    "ci_hi", "ci_level", "seed", "config_json",
)


# -- CSV data ----------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    outcome_col: str = "y"
    running_col: str = "w"
    covariate_cols: Sequence[str] = ()
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "covariate_cols", tuple(self.covariate_cols))
        names = self.columns
        if len(set(names)) != len(names):
            raise ConfigError(f"CSV column names must be distinct, got {list(names)}")
        if len(self.delimiter) != 1:
            raise ConfigError("CSV delimiter must be a single character")

    @property
    def columns(self):
        return (self.outcome_col, self.running_col, *self.covariate_cols)


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Read the schema's columns from a headed CSV file into a ``Dataset``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=schema.delimiter)
            header = next(reader, None)
            if header is None:
                raise EmptyFile(f"{path} is empty", location=str(path))
            header = [h.strip() for h in header]
            index = {}
            for col in schema.columns:
                if col not in header:
                    raise MissingColumn(f"column {col!r} not found in header {header}", location=col)
                index[col] = header.index(col)
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec or all(not cell.strip() for cell in rec):
                    continue
                values = []
                for col in schema.columns:
                    j = index[col]
                    cell = rec[j] if j < len(rec) else ""
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise UnparseableValue(
                            f"cannot parse {cell!r} as a number", location=f"line {lineno}, column {col}"
                        ) from None
                rows.append(values)
    except OSError as exc:
        raise IoFailure(str(exc), location=str(path)) from exc
    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows", location=str(path))
    data = np.array(rows, dtype=float)
    return Dataset(y=data[:, 0], w=data[:, 1], z=data[:, 2:])


def write_csv_dataset(dataset: Dataset, path, schema: Optional[CsvSchema] = None) -> None:
    if schema is None:
        schema = CsvSchema(covariate_cols=[f"z{j + 1}" for j in range(dataset.z_dim)])
    if len(schema.covariate_cols) != dataset.z_dim:
        raise ConfigError("schema covariate count does not match dataset")
    cols = np.column_stack([dataset.y, dataset.w, dataset.z])
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
            writer.writerow(schema.columns)
            for row in cols:
                writer.writerow([repr(float(v)) for v in row])
    except OSError as exc:
        raise IoFailure(str(exc), location=str(path)) from exc


# -- configuration -----------------------------------------------------------


def bandwidth_from_dict(data) -> object:
    if data is None:
        return RuleOfThumb()
    if isinstance(data, (int, float)):
        return Fixed(float(data))
    data = dict(data)
    rule = data.pop("rule", "rule_of_thumb")
    if rule == "fixed":
        return Fixed(float(data["h"]))
    if rule == "rule_of_thumb":
        return RuleOfThumb()
    if rule == "shrinking":
        return Shrinking(float(data.get("scale", 1.0)), float(data.get("rate", 0.2)))
    raise ConfigError(f"unknown bandwidth rule {rule!r}")


def bandwidth_to_dict(rule) -> dict:
    if isinstance(rule, Fixed):
        return {"rule": "fixed", "h": rule.h}
    if isinstance(rule, Shrinking):
        return {"rule": "shrinking", "scale": rule.scale, "rate": rule.rate}
    return {"rule": "rule_of_thumb"}


def rd_from_dict(data: Optional[dict]) -> RdConfig:
    data = dict(data or {})
    try:
        kw = {}
        if "cutoff" in data:
            kw["cutoff"] = float(data["cutoff"])
        if "kernel" in data:
            kw["kernel"] = KernelFamily(data["kernel"])
        if "bandwidth" in data:
            kw["bandwidth"] = bandwidth_from_dict(data["bandwidth"])
        if "first_stage" in data:
            fs = data["first_stage"]
            kw["first_stage"] = spec_from_dict({"kind": fs} if isinstance(fs, str) else fs)
        return RdConfig(**kw)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid rd configuration: {exc}") from exc


def rd_to_dict(cfg: RdConfig) -> dict:
    fs = cfg.first_stage
    return {
        "cutoff": cfg.cutoff,
        "kernel": KernelFamily(cfg.kernel).value,
        "bandwidth": bandwidth_to_dict(cfg.bandwidth),
        "first_stage": fs.to_dict() if isinstance(fs, OutcomeModelSpec) else str(fs),
    }


@dataclass
class ScenarioConfig:
    dgp: DgpSpec
    n_grid: List[int]
    reps: int = 200
    baseline: bool = False
    bootstrap_reps: int = 0
    level: float = 0.95


@dataclass
class RunConfig:
    mode: str = "estimate"
    rd: RdConfig = field(default_factory=RdConfig)
    csv_path: Optional[str] = None
    csv: CsvSchema = field(default_factory=CsvSchema)
    scenario: Optional[ScenarioConfig] = None
    bootstrap_reps: int = 0
    level: float = 0.95
    seed: int = 0
    output_path: Optional[str] = None
    output_format: str = "json"

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.output_format!r}")
        if self.mode == "estimate" and not self.csv_path:
            raise ConfigError("estimate mode needs csv.path (or --data)")
        if self.mode == "simulate" and self.scenario is None:
            raise ConfigError("simulate mode needs a scenario section")
        if self.bootstrap_reps and self.bootstrap_reps < 100:
            raise ConfigError("bootstrap reps must be 0 or >= 100")
        return self

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "rd": rd_to_dict(self.rd), "seed": self.seed}
        if self.mode == "estimate":
            out["csv"] = {"path": self.csv_path, **asdict(self.csv)}
            out["csv"]["covariate_cols"] = list(self.csv.covariate_cols)
            out["bootstrap"] = {"reps": self.bootstrap_reps, "level": self.level}
        else:
            sc = self.scenario
            out["scenario"] = {
                "dgp": sc.dgp.to_dict(),
                "n_grid": list(sc.n_grid),
                "reps": sc.reps,
                "baseline": sc.baseline,
                "bootstrap_reps": sc.bootstrap_reps,
                "level": sc.level,
            }
        # the destination path is left out so the same run is byte-identical wherever it is written
        out["output"] = {"format": self.output_format}
        return out


def _dgp_from_config(raw) -> DgpSpec:
    if isinstance(raw, str):
        raw = {"catalog": raw}
    raw = dict(raw)
    if "catalog" in raw:
        name = raw.pop("catalog")
        if name not in CATALOG:
            raise ConfigError(f"unknown catalogue scenario {name!r}; choose from {sorted(CATALOG)}")
        return CATALOG[name](**raw)
    return DgpSpec.from_dict(raw)


def run_config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration document must be a mapping")
    try:
        csv_raw = dict(data.get("csv") or {})
        path = csv_raw.pop("path", None)
        schema = CsvSchema(**csv_raw)
        boot = data.get("bootstrap") or {}
        out = data.get("output") or {}
        scenario = None
        if data.get("scenario"):
            sc = dict(data["scenario"])
            scenario = ScenarioConfig(
                dgp=_dgp_from_config(sc.pop("dgp")),
                n_grid=[int(x) for x in sc.pop("n_grid")],
                **sc,
            )
        return RunConfig(
            mode=data.get("mode", "estimate"),
            rd=rd_from_dict(data.get("rd")),
            csv_path=path,
            csv=schema,
            scenario=scenario,
            bootstrap_reps=int(boot.get("reps", 0)),
            level=float(boot.get("level", 0.95)),
            seed=int(data.get("seed", 0)),
            output_path=out.get("path"),
            output_format=out.get("format", "json"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_run_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", location=str(path)) from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}", location=str(path)) from exc
    return run_config_from_dict(data)


# -- reports -----------------------------------------------------------------


def estimate_report(est: DrEstimate, config: dict, seed: int) -> dict:
    return {
        "kind": "estimate",
        "method": est.method,
        "tau_hat": est.tau_hat,
        "eta_hat": {"treated": est.eta_hat[1], "control": est.eta_hat[0]},
        "plugin_mean": {"treated": est.plugin_mean[1], "control": est.plugin_mean[0]},
        "zeta_hat": {"treated": est.zeta_hat[1], "control": est.zeta_hat[0]},
        "effective_n": {"treated": est.effective_n[1], "control": est.effective_n[0]},
        "bandwidth": est.bandwidth_used,
        "n": est.n,
        "n_treated": est.n_treated,
        "n_control": est.n_control,
        "se": est.se,
        "ci": list(est.ci) if est.ci is not None else None,
        "ci_level": est.ci_level,
        "seed": seed,
        "config": config,
    }


def simulate_report(report: McReport, config: dict) -> dict:
    return {
        "kind": "simulate",
        "scenario": report.scenario,
        "seed": report.seed,
        "reps": report.reps,
        "converged": report.converged,
        "non_convergence_flag": report.non_convergence_flag,
        "rows": [asdict(r) for r in report.rows],
        "config": config,
    }


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in header])
    return buf.getvalue()


def render_report(report: dict, fmt: str) -> str:
    """Serialise a report dict (from ``estimate_report``/``simulate_report``)."""
    if fmt == "json":
        return json.dumps(report, indent=2, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ConfigError(f"unknown report format {fmt!r}")
    config_json = json.dumps(report["config"], sort_keys=True, separators=(",", ":"))
    if report["kind"] == "simulate":
        rows = [{**r, "converged": report["converged"], "config_json": config_json} for r in report["rows"]]
        return _csv_text(SIMULATE_CSV_COLUMNS, rows)
    ci = report["ci"] or (None, None)
    flat = {
        "method": report["method"],
        "tau_hat": report["tau_hat"],
        **{f"{k}_{arm}": report[k][arm] for k in ("eta_hat", "plugin_mean", "zeta_hat", "effective_n")
           for arm in ("treated", "control")},
        "bandwidth": report["bandwidth"],
        "n": report["n"],
        "n_treated": report["n_treated"],
        "n_control": report["n_control"],
        "se": report["se"],
        "ci_lo": ci[0],
        "ci_hi": ci[1],
        "ci_level": report["ci_level"],
        "seed": report["seed"],
        "config_json": config_json,
    }
    return _csv_text(ESTIMATE_CSV_COLUMNS, [flat])


def write_report(report: dict, path, fmt: str = "json") -> None:
    text = render_report(report, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(str(exc), location=str(path)) from exc
