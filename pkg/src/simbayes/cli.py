"""Command-line driver: config parsing, orchestration, artifact output.

Subcommands: simulate (write a pseudo-empirical series), estimate (run
the posterior sampler and write traces/summary), lag-scan (conditional
density curves per lag), benchmark (paired method comparison tables).
Exit codes: 0 all artifacts written, 1 runtime failure, 2 bad config.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import jsonschema
import numpy as np

from .bench import aggregate_metrics, lag_scan, summarize, PosteriorSummary
from .errors import ConfigError, SimBayesError
from .likelihood import EstimationProblem, LogPosterior
from .mdn import TrainConfig
from .models import MODELS, bind_parameters, get_model, preprocess_series
from . import output
from .params import ParameterVector, validate_bounds
from .sampler import McmcConfig, run_chain

_TRAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "eta_x": {"type": "number", "minimum": 0},
        "eta_y": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "data", "ensemble", "method", "mcmc"],
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["id", "free"],
            "properties": {
                "id": {"enum": sorted(MODELS)},
                "fixed": {"type": "object"},
                "free": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name", "bounds"],
                        "properties": {
                            "name": {"type": "string"},
                            "bounds": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "true": {"type": "number"},
                        },
                    },
                },
            },
        },
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_emp": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "path": {"type": "string"},
            },
        },
        "ensemble": {
            "type": "object",
            "additionalProperties": False,
            "required": ["replications", "length", "base_seed"],
            "properties": {
                "replications": {"type": "integer", "minimum": 1},
                "length": {"type": "integer", "minimum": 2},
                "base_seed": {"type": "integer", "minimum": 0},
            },
        },
        "method": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["mdn", "kde"]},
                "lag": {"type": "integer", "minimum": 1},
                "hidden": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 1},
                    "minItems": 1,
                },
                "components": {"type": "integer", "minimum": 1},
                "train": _TRAIN_SCHEMA,
                "discard": {"type": "integer", "minimum": 0},
            },
        },
        "mcmc": {
            "type": "object",
            "additionalProperties": False,
            "required": ["iterations", "set_size", "burn_in", "restarts", "seed"],
            "properties": {
                "iterations": {"type": "integer", "minimum": 1},
                "set_size": {"type": "integer", "minimum": 1},
                "burn_in": {"type": "integer", "minimum": 0},
                "restarts": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}

SUITE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["pairs"],
    "properties": {
        "pairs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label"],
                "properties": {
                    "label": {"type": "string"},
                    "config": {"type": "string"},
                    "results": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["mdn", "kde"],
                        "properties": {
                            "mdn": {"type": "string"},
                            "kde": {"type": "string"},
                        },
                    },
                },
            },
        }
    },
}

_MDN_KEYS = {"name", "lag", "hidden", "components", "train"}
_KDE_KEYS = {"name", "discard"}


def _validate(instance, schema, label):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{label}: at {where}: {err.message}")


def load_config(path):
    """Parse and validate a run configuration; schema first, then the
    semantic rules the schema cannot express."""
    try:
        with open(path) as handle:
            cfg = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno}: {err.msg}") from err
    _validate(cfg, SCHEMA, path)

    method = cfg["method"]
    allowed = _KDE_KEYS if method["name"] == "kde" else _MDN_KEYS
    for key in method:
        if key not in allowed:
            raise ConfigError(
                f"{path}: at method/{key}: not a valid key for the "
                f"{method['name']} method"
            )
    names = [f["name"] for f in cfg["model"]["free"]]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: at model/free: duplicate parameter names")
    for entry in cfg["model"]["free"]:
        a, b = entry["bounds"]
        if not a < b:
            raise ConfigError(
                f"{path}: at model/free/{entry['name']}/bounds: need a < b"
            )
        if "true" in entry and not a <= entry["true"] <= b:
            raise ConfigError(
                f"{path}: at model/free/{entry['name']}/true: outside bounds"
            )
    mcmc = cfg["mcmc"]
    if mcmc["burn_in"] >= mcmc["iterations"]:
        raise ConfigError(f"{path}: at mcmc/burn_in: must be < iterations")
    data = cfg["data"]
    if "path" not in data and not ("t_emp" in data and "seed" in data):
        raise ConfigError(
            f"{path}: at data: needs either 'path' or both 't_emp' and 'seed'"
        )
    _build_fixed_config(cfg, path)  # fail fast on bad fixed-parameter keys
    return cfg


def _build_fixed_config(cfg, label="config"):
    model_id = cfg["model"]["id"]
    fixed = cfg["model"].get("fixed", {})
    try:
        return get_model(model_id).config_cls(**fixed)
    except TypeError as err:
        raise ConfigError(f"{label}: at model/fixed: {err}") from err
    except SimBayesError as err:
        raise ConfigError(f"{label}: at model/fixed: {err}") from err


def apply_scale(cfg, scale):
    """Uniformly shrink the compute budget (S, burn-in, R, T) by an
    integer factor for desk-scale runs."""
    if scale == 1:
        return cfg
    if scale < 1:
        raise ConfigError("--scale must be a positive integer")
    cfg = json.loads(json.dumps(cfg))
    mcmc = cfg["mcmc"]
    mcmc["iterations"] = max(1, mcmc["iterations"] // scale)
    mcmc["burn_in"] = min(mcmc["burn_in"] // scale, mcmc["iterations"] - 1)
    ens = cfg["ensemble"]
    ens["replications"] = max(1, ens["replications"] // scale)
    ens["length"] = max(2, ens["length"] // scale)
    if "t_emp" in cfg["data"]:
        cfg["data"]["t_emp"] = max(2, cfg["data"]["t_emp"] // scale)
    return cfg


def _free_spec(cfg):
    free = cfg["model"]["free"]
    names = tuple(f["name"] for f in free)
    bounds = validate_bounds([f["bounds"] for f in free]) if free else \
        np.empty((0, 2))
    trues = [f.get("true") for f in free]
    theta_true = None
    if free and all(v is not None for v in trues):
        theta_true = np.asarray(trues, dtype=float)
    return names, bounds, theta_true


def _theta_true_vector(cfg):
    names, bounds, theta_true = _free_spec(cfg)
    if not names:
        return ParameterVector((), [], np.empty((0, 2)))
    if theta_true is None:
        raise ConfigError(
            "all free parameters need 'true' values for this command"
        )
    return ParameterVector(names, theta_true, bounds)


def simulate_empirical(cfg):
    """The proxy-for-real-data series at the true parameter values."""
    model_id = cfg["model"]["id"]
    fixed = _build_fixed_config(cfg)
    theta = _theta_true_vector(cfg)
    bound_cfg = bind_parameters(model_id, fixed, theta)
    data = cfg["data"]
    if "t_emp" not in data or "seed" not in data:
        raise ConfigError("data block needs 't_emp' and 'seed' to simulate")
    return get_model(model_id).simulate(bound_cfg, data["t_emp"], data["seed"])


def load_empirical(cfg, config_dir="."):
    data = cfg["data"]
    if "path" in data:
        path = data["path"]
        if not os.path.isabs(path):
            path = os.path.join(config_dir, path)
        return output.read_series_csv(path)
    return simulate_empirical(cfg)


def build_problem(cfg, x_emp):
    method = cfg["method"]
    ens = cfg["ensemble"]
    names, bounds, _ = _free_spec(cfg)
    train_cfg = TrainConfig(**method.get("train", {}))
    return EstimationProblem(
        model_id=cfg["model"]["id"],
        fixed=_build_fixed_config(cfg),
        free_names=names,
        free_bounds=bounds,
        x_emp=x_emp,
        method=method["name"],
        replications=ens["replications"],
        sim_length=ens["length"],
        lag=method.get("lag", 3),
        base_seed=ens["base_seed"],
        train=train_cfg,
        hidden=tuple(method.get("hidden", (32, 32, 32))),
        components=method.get("components", 16),
        discard=method.get("discard", 0),
    )


def build_mcmc(cfg):
    m = cfg["mcmc"]
    return McmcConfig(m["iterations"], m["set_size"], m["burn_in"],
                      m["restarts"], m["seed"])


def _seeds_payload(cfg):
    seeds = {"ensemble_base_seed": cfg["ensemble"]["base_seed"],
             "mcmc_seed": cfg["mcmc"]["seed"]}
    if "seed" in cfg["data"]:
        seeds["data_seed"] = cfg["data"]["seed"]
    if cfg["method"]["name"] == "mdn":
        seeds["train_seed"] = cfg["method"].get("train", {}).get("seed", 0)
    return seeds


def _out_dir(args, cfg):
    if args.out:
        return args.out
    return cfg.get("output", {}).get("dir", "out")


# --------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------

def cmd_simulate(args):
    cfg = apply_scale(load_config(args.config), args.scale)
    if args.seed is not None:
        cfg["data"]["seed"] = args.seed
    series = simulate_empirical(cfg)
    out_dir = _out_dir(args, cfg)
    path = os.path.join(out_dir, "series.csv")
    output.write_series_csv(path, series)
    output.write_metadata(path, cfg, _seeds_payload(cfg),
                          extra={"scale": args.scale, "length": series.length})
    print(path)
    return 0


def cmd_estimate(args):
    cfg = apply_scale(load_config(args.config), args.scale)
    if args.seed is not None:
        cfg["mcmc"]["seed"] = args.seed
    if args.method is not None and args.method != cfg["method"]["name"]:
        cfg["method"] = ({"name": "kde"} if args.method == "kde"
                         else {"name": "mdn"})
    x_emp = load_empirical(cfg, os.path.dirname(os.path.abspath(args.config)))
    problem = build_problem(cfg, x_emp)
    log_post = LogPosterior(problem)
    sample = run_chain(log_post, problem.free_bounds, build_mcmc(cfg),
                       names=problem.free_names, jobs=args.jobs)
    _, _, theta_true = _free_spec(cfg)
    summary = summarize(sample, problem.free_bounds, theta_true)

    out_dir = _out_dir(args, cfg)
    seeds = _seeds_payload(cfg)
    extra = {"scale": args.scale, "method": cfg["method"]["name"]}
    trace_path = os.path.join(out_dir, "chain_trace.csv")
    output.write_chain_trace_csv(trace_path, sample)
    output.write_metadata(trace_path, cfg, seeds, extra)
    sample_path = os.path.join(out_dir, "posterior_sample.csv")
    output.write_posterior_sample_csv(sample_path, sample)
    output.write_metadata(sample_path, cfg, seeds, extra)
    summary_path = os.path.join(out_dir, "summary.json")
    output.write_json(summary_path,
                      output.summary_payload(summary, sample.acceptance_rate()))
    output.write_metadata(summary_path, cfg, seeds, extra)
    if args.eval_log:
        output.write_eval_log_csv(args.eval_log, problem.dim, log_post.eval_rows)
    print(summary_path)
    return 0


def cmd_lag_scan(args):
    cfg = apply_scale(load_config(args.config), args.scale)
    if args.seed is not None:
        cfg["ensemble"]["base_seed"] = args.seed
    if args.lags:
        lags = [int(v) for v in args.lags.split(",")]
    elif cfg["method"]["name"] == "mdn":
        lags = [cfg["method"].get("lag", 3)]
    else:
        raise ConfigError("lag-scan needs --lags or an mdn method block")
    x_emp = load_empirical(cfg, os.path.dirname(os.path.abspath(args.config)))
    # the window conditions the trained densities, so it must live in
    # the same (preprocessed) space as the training windows
    processed = preprocess_series(cfg["model"]["id"], x_emp)
    window = processed.data[-max(lags):, 0] if args.window is None else \
        np.asarray([float(v) for v in args.window.split(",")])
    method = cfg["method"]
    train_cfg = TrainConfig(**method.get("train", {}))
    theta = _theta_true_vector(cfg)
    ens = cfg["ensemble"]
    result = lag_scan(
        cfg["model"]["id"], _build_fixed_config(cfg), theta, lags, window,
        train_cfg, ens["replications"], ens["length"], ens["base_seed"],
        hidden=tuple(method.get("hidden", (32, 32, 32))),
        components=method.get("components", 16),
    )
    out_dir = _out_dir(args, cfg)
    curves_path = os.path.join(out_dir, "lag_curves.csv")
    output.write_lag_curves_csv(curves_path, result)
    output.write_metadata(curves_path, cfg, _seeds_payload(cfg),
                          extra={"scale": args.scale, "lags": lags})
    tv_path = os.path.join(out_dir, "lag_tv.csv")
    output.write_lag_tv_csv(tv_path, result)
    output.write_metadata(tv_path, cfg, _seeds_payload(cfg),
                          extra={"scale": args.scale, "lags": lags})
    if result.failures:
        for lag, msg in sorted(result.failures.items()):
            print(f"lag {lag} failed: {msg}", file=sys.stderr)
        return 1
    print(curves_path)
    return 0


def _summary_from_json(path):
    with open(path) as handle:
        data = json.load(handle)
    return PosteriorSummary(
        names=tuple(data["names"]),
        mu_posterior=np.asarray(data["mu_posterior"], dtype=float),
        sigma_posterior=np.asarray(data["sigma_posterior"], dtype=float),
        sigma_sampling=(None if data["sigma_sampling"] is None
                        else np.asarray(data["sigma_sampling"], dtype=float)),
        ls=data["LS"],
        theta_true=(None if data["theta_true"] is None
                    else np.asarray(data["theta_true"], dtype=float)),
        bounds=np.asarray(data["bounds"], dtype=float),
    )


def _run_pair(entry, suite_dir, args):
    if "results" in entry:
        base = suite_dir
        return (_summary_from_json(os.path.join(base, entry["results"]["mdn"])),
                _summary_from_json(os.path.join(base, entry["results"]["kde"])))
    if "config" not in entry:
        raise ConfigError(f"pair {entry['label']}: needs 'config' or 'results'")
    cfg_path = os.path.join(suite_dir, entry["config"])
    cfg = apply_scale(load_config(cfg_path), args.scale)
    x_emp = load_empirical(cfg, os.path.dirname(os.path.abspath(cfg_path)))
    _, _, theta_true = _free_spec(cfg)
    summaries = {}
    for method in ("mdn", "kde"):
        mcfg = json.loads(json.dumps(cfg))
        if mcfg["method"]["name"] != method:
            mcfg["method"] = {"name": method} if method == "kde" else {
                "name": "mdn"}
        problem = build_problem(mcfg, x_emp)
        sample = run_chain(LogPosterior(problem), problem.free_bounds,
                           build_mcmc(mcfg), names=problem.free_names,
                           jobs=args.jobs)
        summaries[method] = summarize(sample, problem.free_bounds, theta_true)
    return summaries["mdn"], summaries["kde"]


def cmd_benchmark(args):
    try:
        with open(args.suite) as handle:
            suite = json.load(handle)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read suite {args.suite}: {err}") from err
    _validate(suite, SUITE_SCHEMA, args.suite)
    suite_dir = os.path.dirname(os.path.abspath(args.suite))
    out_dir = args.out or "out"

    rows = []
    pairs = []
    failures = []
    for entry in suite["pairs"]:
        label = entry["label"]
        try:
            mdn_s, kde_s = _run_pair(entry, suite_dir, args)
        except (SimBayesError, OSError) as err:
            failures.append((label, str(err)))
            print(f"pair {label} failed: {err}", file=sys.stderr)
            continue
        pairs.append((mdn_s, kde_s))
        for method, s in (("mdn", mdn_s), ("kde", kde_s)):
            for j, name in enumerate(s.names):
                rows.append([
                    label, method, name,
                    s.theta_true[j] if s.theta_true is not None else "",
                    s.mu_posterior[j], s.sigma_posterior[j],
                    s.sigma_sampling[j] if s.sigma_sampling is not None else "",
                    s.ls if s.ls is not None else "",
                ])
    results_path = os.path.join(out_dir, "results.csv")
    header = ["label", "method", "parameter", "true", "mu_posterior",
              "sigma_posterior", "sigma_sampling", "LS"]
    output.write_csv(results_path, header, rows)
    output.write_metadata(results_path, suite, {}, extra={"scale": args.scale})

    if pairs:
        agg = aggregate_metrics(pairs)
        agg_path = os.path.join(out_dir, "aggregate.csv")
        output.write_csv(agg_path, ["metric", "percentage"], [
            ["ls_mdn_lt_ls_kde", agg.pct_loss_better],
            ["abs_param_error_mdn_lt_kde", agg.pct_param_error_better],
            ["sigma_posterior_mdn_lt_kde", agg.pct_param_std_better],
        ])
        output.write_metadata(agg_path, suite, {}, extra={"scale": args.scale})
    print(results_path)
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="simbayes",
        description="Likelihood-free Bayesian estimation of simulation models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the command's primary seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for restarts/experiments")
        p.add_argument("--scale", type=int, default=1,
                       help="divide S, R and T by this factor")

    p_sim = sub.add_parser("simulate", help="write the pseudo-empirical series")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="sample the posterior")
    common(p_est)
    p_est.add_argument("--method", choices=["mdn", "kde"], default=None,
                       help="override the config's likelihood method")
    p_est.add_argument("--eval-log", default=None,
                       help="write the evaluation log CSV here (contains "
                            "wall-clock timings; excluded from determinism)")
    p_est.set_defaults(func=cmd_estimate)

    p_lag = sub.add_parser("lag-scan", help="conditional density curves per lag")
    common(p_lag)
    p_lag.add_argument("--lags", default=None, help="comma-separated lag list")
    p_lag.add_argument("--window", default=None,
                       help="comma-separated conditioning values "
                            "(default: tail of the empirical series)")
    p_lag.set_defaults(func=cmd_lag_scan)

    p_bench = sub.add_parser("benchmark", help="paired MDN/KDE comparison")
    p_bench.add_argument("--suite", required=True, help="suite JSON")
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--scale", type=int, default=1)
    p_bench.set_defaults(func=cmd_benchmark)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (SimBayesError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
