"""Monte Carlo experiment configs, named presets and a seeded replicate runner."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import math
import re
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .graph import skeleton_of
from .metrics import dag_metrics, skeleton_metrics, with_conf
from .search import SearchConfig, greedy_orient
from .simulate import SimConfig, simulate
from .skeleton import ScreenConfig, screen
from .tail import build_tail_sample

logger = logging.getLogger(__name__)

PROXY_MODES = ("observed_proxy", "latent_oracle", "none")
ABLATION_VARIANT = "no_proxy"

METRIC_FIELDS = ("precision", "recall", "f1", "shd", "tp", "fp", "fn", "conf_fp", "conf_fp_frac")
ROW_FIELDS = ("config", "config_hash", "replicate", "seed", "beta", "variant", "stage", "k",
              *METRIC_FIELDS, "edges", "score", "move_log", "status", "error")
AGG_METRICS = ("k", "precision", "recall", "f1", "shd", "conf_fp", "conf_fp_frac")

_FRACTION = re.compile(r"^\s*([0-9]*\.?[0-9]+)?\s*p\s*$")


def resolve_conf_s(value, p: int) -> int:
    """Accept an integer or a string such as ``"0.2p"`` / ``"p"``, resolved against ``p``."""
    if isinstance(value, str):
        match = _FRACTION.match(value)
        if match is None:
            try:
                return int(value)
            except ValueError:
                raise ConfigError(f"cannot parse conf_s={value!r}") from None
        frac = float(match.group(1)) if match.group(1) else 1.0
        return int(round(frac * p))
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError(f"conf_s={value} is fractional; write it as '{value}p'")
    return int(value)


@dataclass
class ExperimentConfig:
    name: str = "custom"
    sim: SimConfig = field(default_factory=SimConfig)
    beta: float = 0.7
    screen: ScreenConfig = field(default_factory=ScreenConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    replicates: int = 10
    proxy_mode: str = "observed_proxy"
    no_proxy_ablation: bool = False
    transform_proxy: bool = True
    master_seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise ConfigError(f"replicates must be a positive integer, got {self.replicates!r}")
        if self.proxy_mode not in PROXY_MODES:
            raise ConfigError(f"proxy_mode must be one of {PROXY_MODES}, got {self.proxy_mode!r}")
        if not 0 < self.beta <= 1:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sim"]["coef_edge_range"] = list(self.sim.coef_edge_range)
        out["sim"]["coef_conf_range"] = list(self.sim.coef_conf_range)
        out["sim"]["proxy_coef_range"] = list(self.sim.proxy_coef_range)
        return out

    def config_hash(self) -> str:
        """Stable digest of everything that affects results (the output path excluded)."""
        data = self.to_dict()
        data.pop("output_dir")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = copy.deepcopy(data)
        known = {"name", "sim", "beta", "screen", "search", "replicates", "proxy_mode",
                 "no_proxy_ablation", "transform_proxy", "master_seed", "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            sim = dict(data.pop("sim", {}))
            p = int(sim.get("p", SimConfig.p))
            if "conf_s" in sim:
                sim["conf_s"] = resolve_conf_s(sim["conf_s"], p)
            for key in ("coef_edge_range", "coef_conf_range", "proxy_coef_range"):
                if key in sim:
                    sim[key] = tuple(sim[key])
            return cls(sim=SimConfig(**sim), screen=ScreenConfig(**data.pop("screen", {})),
                       search=SearchConfig(**data.pop("search", {})), **data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


# Exp 1 tunables per dimension.
_EXP1 = {20: (0.5, 10.0), 50: (1.0, 10.0), 100: (1.5, 10.0), 200: (2.0, 20.0)}


def _exp1(p: int) -> dict:
    c, gamma = _EXP1[p]
    return {"sim": {"n": 1000, "p": p, "m": 1, "q_conf_count": p // 10, "conf_s": "0.2p"},
            "screen": {"lambda_multiplier": c}, "search": {"gamma_ebic": gamma},
            "proxy_mode": "observed_proxy", "replicates": 50}


def _exp2(frac: str) -> dict:
    return {"sim": {"n": 1000, "p": 100, "m": 1, "q_conf_count": 1, "conf_s": f"{frac}p"},
            "screen": {"lambda_multiplier": 1.5}, "search": {"gamma_ebic": 10.0},
            "proxy_mode": "latent_oracle", "no_proxy_ablation": True, "replicates": 50}


def _p50(kind: str, m: int) -> dict:
    return {"sim": {"n": 1000, "p": 50, "m": m, "graph_kind": kind, "q_conf_count": 5,
                    "conf_s": 10},
            "screen": {"lambda_multiplier": 1.0}, "search": {"gamma_ebic": 10.0},
            "proxy_mode": "observed_proxy", "replicates": 50}


def _build_presets() -> dict[str, list[dict]]:
    presets: dict[str, list[dict]] = {}
    for p in _EXP1:
        presets[f"exp1-p{p}"] = [_exp1(p)]
    for frac in ("0", "0.2", "0.5", "1.0"):
        presets[f"exp2-confs-{frac}"] = [_exp2(frac)]
    presets["appendixF"] = [_merge(_p50("barabasi-albert", 1), {"beta": b, "name": f"appendixF-beta{b}"})
                            for b in (0.5, 0.6, 0.7, 0.8, 0.9)]
    presets["appendixG"] = [_p50("erdos-renyi", 1)]
    presets["appendixG-er-m2"] = [_p50("erdos-renyi", 2)]
    presets["appendixG-ba-m2"] = [_p50("barabasi-albert", 2)]
    for name, suite in presets.items():
        for entry in suite:
            entry.setdefault("name", name)
    return presets


PRESETS = _build_presets()


def preset(name: str, **overrides) -> list[ExperimentConfig]:
    """Configs for a named preset; ``overrides`` is merged into every member."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return [ExperimentConfig.from_dict(_merge(entry, overrides)) for entry in PRESETS[name]]


def load_experiment(source: str | Path, overrides: dict | None = None) -> list[ExperimentConfig]:
    """Parse a preset name or a JSON file.

    A file may name a ``preset`` to start from; its remaining keys override it.
    A top-level ``suite`` list runs several configs in one go.
    """
    overrides = overrides or {}
    path = Path(source)
    if not path.exists():
        if str(source) in PRESETS:
            return preset(str(source), **overrides)
        raise ConfigError(f"{source}: neither a config file nor a preset name")
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object")
    entries = data.pop("suite", None) or [data]
    configs: list[ExperimentConfig] = []
    for entry in entries:
        entry = _merge(data, entry) if entry is not data else entry
        base = entry.pop("preset", None)
        merged = _merge(entry, overrides)
        if base is not None:
            configs.extend(preset(base, **merged))
        else:
            configs.append(ExperimentConfig.from_dict(merged))
    return configs


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Per-replicate simulation seed derived from ``(master_seed, replicate)`` alone."""
    return int(np.random.SeedSequence([master_seed, replicate]).generate_state(1)[0])


def _proxy_for(panel, mode: str):
    if mode == "observed_proxy":
        return panel.proxy
    if mode == "latent_oracle":
        return panel.latent if panel.latent is not None and panel.latent.shape[1] else None
    return None


def _metric_row(report) -> dict:
    data = report.to_dict()
    return {key: data.get(key) for key in METRIC_FIELDS}


def run_replicate(config: ExperimentConfig, replicate: int) -> tuple[list[dict], float]:
    """Simulate one panel and run every requested variant on it.

    Returns result rows and the wall time in seconds. Failures become a single
    row with ``status="error"``.
    """
    start = time.perf_counter()
    seed = replicate_seed(config.master_seed, replicate)
    base = {"config": config.name, "config_hash": config.config_hash(), "replicate": replicate,
            "seed": seed, "beta": config.beta}
    variants = [config.proxy_mode] + ([ABLATION_VARIANT] if config.no_proxy_ablation else [])
    rows: list[dict] = []
    try:
        sim = replace(config.sim, seed=seed)
        panel, truth = simulate(sim)
        true_skel = skeleton_of(truth.dag)
        for variant in variants:
            proxy = None if variant == ABLATION_VARIANT else _proxy_for(panel, variant)
            # every variant reads the same x matrix; only the proxy block differs
            view = panel.with_proxy(proxy)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sample = build_tail_sample(view, config.beta, transform_proxy=config.transform_proxy)
            skel, _ = screen(sample, config.screen)
            result = greedy_orient(skel, sample, config.search)
            move_log = ""
            if config.output_dir:
                rel = Path("movelogs") / f"{config.name}_r{replicate:03d}_{variant}.json"
                out = Path(config.output_dir) / rel
                out.parent.mkdir(parents=True, exist_ok=True)
                result.write_move_log(out)
                move_log = rel.as_posix()
            common = {**base, "variant": variant, "k": sample.k, "status": "ok", "error": ""}
            skel_report = with_conf(skeleton_metrics(skel, true_skel), skel, truth)
            dag_report = with_conf(dag_metrics(result.dag, truth.dag), result.dag, truth)
            rows.append({**common, "stage": "skeleton", **_metric_row(skel_report),
                         "edges": len(skel), "score": "", "move_log": ""})
            rows.append({**common, "stage": "dag", **_metric_row(dag_report),
                         "edges": result.dag.edge_count, "score": result.score,
                         "move_log": move_log})
    except Exception as exc:  # recorded per row; the run continues
        logger.warning("replicate %d of %s failed: %s", replicate, config.name, exc)
        rows = [{**base, "variant": "", "stage": "", "status": "error",
                 "error": f"{type(exc).__name__}: {exc}"}]
    return rows, time.perf_counter() - start


def _job(args):
    config, replicate = args
    return run_replicate(config, replicate)


@dataclass
class ExperimentResult:
    rows: list[dict]
    aggregate: list[dict]
    timings: list[dict]

    @property
    def failures(self) -> int:
        return sum(1 for row in self.rows if row.get("status") == "error")

    def select(self, config: str | None = None, variant: str | None = None,
               stage: str = "dag") -> list[dict]:
        return [r for r in self.rows if r.get("status") == "ok" and r["stage"] == stage
                and (config is None or r["config"] == config)
                and (variant is None or r["variant"] == variant)]


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation per (config, beta, variant, stage) over successes."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("status") != "ok":
            continue
        groups.setdefault((row["config"], row["beta"], row["variant"], row["stage"]), []).append(row)
    out = []
    for (name, beta, variant, stage), members in groups.items():
        entry = {"config": name, "beta": beta, "variant": variant, "stage": stage,
                 "replicates": len(members)}
        for key in AGG_METRICS:
            values = [float(m[key]) for m in members if m.get(key) not in (None, "")]
            if values:
                arr = np.asarray(values)
                entry[f"{key}_mean"] = float(arr.mean())
                entry[f"{key}_sd"] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            else:
                entry[f"{key}_mean"] = entry[f"{key}_sd"] = ""
        out.append(entry)
    return out


def _write_csv(path: Path, rows: list[dict], fields) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else _fmt(row.get(k, ""))) for k in fields})


def _fmt(value):
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return value


def run_experiment(configs: list[ExperimentConfig], workers: int = 1,
                   output_dir: str | Path | None = None) -> ExperimentResult:
    """Run every replicate of every config; rows come back in a fixed order.

    With ``workers > 1`` replicates run in a process pool. Results do not
    depend on the worker count because seeds depend only on the replicate
    index and rows are sorted before writing.
    """
    if output_dir is not None:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        configs = [copy.copy(c) for c in configs]
        for c in configs:
            c.output_dir = str(output_dir)
    jobs = [(c, r) for c in configs for r in range(c.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_job, jobs))
    else:
        outcomes = [_job(job) for job in jobs]
    rows: list[dict] = []
    timings: list[dict] = []
    for (config, rep), (rep_rows, seconds) in zip(jobs, outcomes):
        rows.extend(rep_rows)
        timings.append({"config": config.name, "replicate": rep, "wall_time": seconds})
    aggregate = aggregate_rows(rows)
    result = ExperimentResult(rows, aggregate, timings)
    if output_dir is not None:
        out = Path(output_dir)
        _write_csv(out / "replicates.csv", rows, ROW_FIELDS)
        agg_fields = ["config", "beta", "variant", "stage", "replicates"]
        agg_fields += [f"{k}_{s}" for k in AGG_METRICS for s in ("mean", "sd")]
        _write_csv(out / "aggregate.csv", aggregate, agg_fields)
        _write_csv(out / "timings.csv", timings, ("config", "replicate", "wall_time"))
        resolved = [{**c.to_dict(), "config_hash": c.config_hash()} for c in configs]
        for entry in resolved:
            entry.pop("output_dir")
        (out / "config.json").write_text(json.dumps(resolved, indent=1, sort_keys=True))
    return result
