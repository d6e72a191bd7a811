"""Command-line entry point: simulate, discover, evaluate, experiment, asymmetry."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .asymmetry import simulate_pair, theorem1_experiment
from .exceptions import ConfigError, EmptyTailError, GraphInvariantError
from .experiment import ExperimentConfig, load_experiment, run_experiment
from .graph import Dag, skeleton_of
from .metrics import dag_metrics, skeleton_metrics, with_conf
from .search import SearchConfig, greedy_orient
from .simulate import SimTruth, simulate
from .skeleton import ScreenConfig, screen
from .tail import RawPanel, build_tail_sample, read_panel_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PARTIAL = 4

logger = logging.getLogger("tailcausal")


def _read_json(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _tuning_overrides(args) -> dict:
    """Config overrides from the shared tuning flags, omitting unset ones."""
    out: dict = {}
    if getattr(args, "beta", None) is not None:
        out["beta"] = args.beta
    screen = {k: v for k, v in (("lambda_multiplier", args.lambda_c),
                                ("tau_ratio", args.tau_ratio)) if v is not None}
    search = {k: v for k, v in (("q", args.offset_q), ("gamma_ebic", args.gamma_ebic),
                                ("d_max", args.dmax)) if v is not None}
    if screen:
        out["screen"] = screen
    if search:
        out["search"] = search
    return out


# --- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    data = _read_json(args.config) if args.config else {}
    sim = dict(data.get("sim", data))
    if args.seed is not None:
        sim["seed"] = args.seed
    config = ExperimentConfig.from_dict({"sim": sim}).sim
    panel, truth = simulate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    panel.to_csv(out / "panel.csv")
    truth.save(out / "truth.json")
    (out / "sim_config.json").write_text(json.dumps(ExperimentConfig(sim=config).to_dict()["sim"],
                                                    indent=1, sort_keys=True))
    print(f"wrote {panel.n} rows x {panel.p} variables"
          f"{f' + {panel.proxy.shape[1]} proxies' if panel.proxy is not None else ''} to {out}")
    return EXIT_OK


# --- discover ---------------------------------------------------------------

def _discover_settings(args) -> tuple[float, float | None, ScreenConfig, SearchConfig]:
    data = _read_json(args.config) if args.config else {}
    q_conf = data.get("q_conf")
    if q_conf is not None and not (isinstance(q_conf, (int, float)) and 0 < q_conf < 1):
        raise ConfigError(f"q_conf must lie in (0, 1), got {q_conf!r}")
    base = {"beta": data.get("beta", 0.7), "screen": data.get("screen", {}),
            "search": data.get("search", {})}
    over = _tuning_overrides(args)
    base["beta"] = over.get("beta", base["beta"])
    base["screen"] = {**base["screen"], **over.get("screen", {})}
    base["search"] = {**base["search"], **over.get("search", {})}
    config = ExperimentConfig.from_dict(base)
    return config.beta, q_conf, config.screen, config.search


def cmd_discover(args) -> int:
    beta, q_conf, screen_config, search_config = _discover_settings(args)
    proxy_cols = [c for c in (args.proxy_cols or "").split(",") if c.strip()]
    proxy_cols = [c.strip() for c in proxy_cols]
    try:
        panel = read_panel_csv(args.panel, proxy_columns=proxy_cols)
    except OSError as exc:
        raise ValueError(str(exc)) from exc
    if args.no_proxy:
        panel = panel.without_proxy()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sample = build_tail_sample(panel, beta, q_conf=q_conf)
        skeleton, nodewise = screen(sample, screen_config)
    for w in caught:
        logger.warning("%s", w.message)
    result = greedy_orient(skeleton, sample, search_config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "dag.json").write_text(result.dag.to_json())
    (out / "dag.dot").write_text(result.dag.to_dot(labels=panel.columns))
    result.write_move_log(out / "moves.json")
    (out / "skeleton.json").write_text(skeleton.to_json())
    nodewise.write_csv(out / "coefficients.csv", labels=panel.columns)
    summary = {
        "n": panel.n, "p": panel.p, "k": sample.k, "threshold": sample.u,
        "beta": beta, "q_conf": q_conf,
        "proxy_columns": list(panel.proxy_columns or []),
        "skeleton_edges": len(skeleton), "dag_edges": result.dag.edge_count,
        "final_score": result.score, "initial_score": result.initial_score,
        "moves": len(result.moves), "truncated": result.truncated,
        "columns": list(panel.columns),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    print(f"k={sample.k} skeleton={len(skeleton)} dag={result.dag.edge_count} "
          f"score={result.score:.4f} -> {out}")
    return EXIT_OK


# --- evaluate ---------------------------------------------------------------

def _load_dag(path: str) -> Dag:
    data = _read_json(path)
    try:
        return Dag.from_dict(data)
    except (KeyError, TypeError, ValueError, GraphInvariantError) as exc:
        raise ValueError(f"{path}: not a valid DAG file ({exc})") from exc


def cmd_evaluate(args) -> int:
    estimate = _load_dag(args.estimate)
    truth_data = _read_json(args.truth)
    try:
        truth = SimTruth.from_dict(truth_data)
    except (KeyError, TypeError, ValueError, GraphInvariantError) as exc:
        raise ValueError(f"{args.truth}: not a valid truth file ({exc})") from exc
    if estimate.p != truth.dag.p:
        raise ValueError(f"dimension mismatch: estimate p={estimate.p}, truth p={truth.dag.p}")
    skel_report = skeleton_metrics(skeleton_of(estimate), skeleton_of(truth.dag))
    dag_report = dag_metrics(estimate, truth.dag)
    if truth.conf_exposure:
        with_conf(skel_report, skeleton_of(estimate), truth)
        with_conf(dag_report, estimate, truth)
    report = {"skeleton": skel_report.to_dict(), "dag": dag_report.to_dict()}
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


# --- experiment -------------------------------------------------------------

def cmd_experiment(args) -> int:
    overrides = _tuning_overrides(args)
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.no_proxy:
        overrides["no_proxy_ablation"] = True
    configs = load_experiment(args.config, overrides)
    result = run_experiment(configs, workers=args.workers, output_dir=args.out)
    for row in result.aggregate:
        if row["stage"] != "dag":
            continue
        conf = row.get("conf_fp_mean")
        conf_txt = f" ConfFP={conf:.2f}" if isinstance(conf, float) else ""
        print(f"{row['config']:<22} beta={row['beta']:<4} {row['variant']:<15} "
              f"P={row['precision_mean']:.3f} R={row['recall_mean']:.3f} "
              f"F1={row['f1_mean']:.3f} SHD={row['shd_mean']:.2f}{conf_txt} "
              f"(n={row['replicates']})")
    if result.failures:
        print(f"{result.failures} replicate(s) failed; see replicates.csv", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- asymmetry --------------------------------------------------------------

def cmd_asymmetry(args) -> int:
    seed0 = args.seed if args.seed is not None else 0
    beta = args.beta if args.beta is not None else 0.7
    records = []
    for c in args.c:
        for offset in range(args.seeds):
            fwd, bwd = theorem1_experiment(c, args.n, beta, seed0 + offset, args.standardization)
            records.append({"c": c, "beta": beta, "seed": seed0 + offset,
                            "forward_risk": fwd, "backward_risk": bwd})
    summary = []
    for c in args.c:
        forward = np.array([r["forward_risk"] for r in records if r["c"] == c])
        backward = np.array([r["backward_risk"] for r in records if r["c"] == c])
        summary.append({"c": c, "beta": beta, "n": args.n, "seeds": args.seeds,
                        "mean_forward": float(forward.mean()),
                        "mean_backward": float(backward.mean()),
                        "backward_bound": float(np.log(2.0) / (c + 1.0)),
                        "forward_below_backward": float(np.mean(forward < backward))})
    for row in summary:
        print(f"c={row['c']:<6g} forward={row['mean_forward']:.4f} "
              f"backward={row['mean_backward']:.4f} bound={row['backward_bound']:.4f} "
              f"fwd<bwd={row['forward_below_backward']:.2f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "asymmetry.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(records[0]))
            writer.writeheader()
            writer.writerows(records)
        (out / "summary.json").write_text(json.dumps(summary, indent=1))
        if args.export_pair:
            pair = simulate_pair(args.c[0], args.n, np.random.default_rng(seed0))
            RawPanel(pair).to_csv(out / "pair.csv")
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _add_tuning(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beta", type=float, help="exceedance exponent (threshold n^(1-beta))")
    parser.add_argument("--lambda-c", type=float, dest="lambda_c", help="lambda multiplier C")
    parser.add_argument("--tau-ratio", type=float, dest="tau_ratio", help="tau as a fraction of lambda")
    parser.add_argument("--offset-q", type=float, dest="offset_q", help="envelope offset quantile")
    parser.add_argument("--gamma-ebic", type=float, dest="gamma_ebic")
    parser.add_argument("--dmax", type=int, help="maximum in-degree")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailcausal", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a max-linear panel and its ground truth")
    p.add_argument("--config", help="JSON file with simulation settings (top level or under 'sim')")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("discover", help="learn a DAG from a CSV panel")
    p.add_argument("panel", help="CSV with a header row")
    p.add_argument("--config", help="JSON with beta, optional q_conf, and screen / search sections")
    p.add_argument("--proxy-cols", dest="proxy_cols", help="comma-separated proxy column names")
    p.add_argument("--no-proxy", action="store_true", help="drop proxy columns from the analysis")
    p.add_argument("--out", required=True, help="output directory")
    _add_tuning(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("evaluate", help="score an estimated DAG against a truth file")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run Monte Carlo replicates of a config or preset")
    p.add_argument("--config", required=True, help="JSON file or preset name (e.g. exp2-confs-1.0)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--replicates", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-proxy", action="store_true", help="also run the no-proxy ablation")
    p.add_argument("--out", help="output directory for CSV tables")
    _add_tuning(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("asymmetry", help="forward/backward tail risk on a bivariate pair")
    p.add_argument("--c", type=float, nargs="+", default=[1.0], help="one or more coefficients")
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--beta", type=float)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--standardization", choices=("rank", "exact"), default="rank")
    p.add_argument("--export-pair", action="store_true", help="also write the raw pair for the first c as pair.csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_asymmetry)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyTailError as exc:
        print(f"data error: {exc}. Lower the threshold by raising --beta, or supply more rows.",
              file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
