"""``multisrm`` command line: fit, summarize, predict, simulate."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import analysis
from .data import Schema, load_dataset, validate, write_dataset
from .engine import PosteriorSamples, run_chains
from .errors import ConfigurationError, SRMError
from .model import (ChainSettings, PriorSpec, build_model, config_from_kv,
                    config_to_kv, parse_kv, parse_prior_guess)
from .predict import prediction_curve, read_scenario
from .simulate import read_params, simulate_dataset, write_truth

log = logging.getLogger("multisrm")

CONFIG_FILE = "config.txt"
SAMPLES_FILE = "samples.csv"
SUMMARY_FILE = "summary.csv"
METADATA_FILE = "metadata.json"
LOG_FILE = "fit.log"
DIAGNOSTICS_DIR = "diagnostics"

# flag name -> key in the flat config file
_FIT_KEYS = {
    "family": "family", "covariates": "covariates", "chains": "chains", "seed": "seed",
    "burnin": "burnin", "iterations": "iterations", "thin": "thin",
    "prior_guess": "prior_guess", "prior_df": "prior_df",
}
_SCHEMA_KEYS = {
    "actor_col": ("actor_col", "i_ID"), "partner_col": ("partner_col", "j_ID"),
    "dyad_col": ("dyad_col", "ij_ID"), "response_col": ("response_col", "y"),
    "group_col": ("group_col", ""), "offset_col": ("offset", ""),
}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _fit_settings(args):
    """Merge an optional config file with explicit flags (flags win)."""
    kv = parse_kv(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    for flag, key in _FIT_KEYS.items():
        val = getattr(args, flag)
        if val is not None:
            kv[key] = str(val)
    for flag, (key, default) in _SCHEMA_KEYS.items():
        val = getattr(args, flag)
        if val is not None:
            kv[key] = val
        kv.setdefault(key, default)
    if args.data is not None:
        kv["data"] = args.data
    if not kv.get("data"):
        raise ConfigurationError("no data file given (--data)")
    kv["grouped"] = "true" if kv.get("group_col") else "false"
    if kv.get("prior_guess"):
        parse_prior_guess(kv["prior_guess"])
    return kv


def cmd_fit(args):
    kv = _fit_settings(args)
    config = config_from_kv(kv)
    covariates = config.covariates
    schema = Schema(actor=kv["actor_col"], partner=kv["partner_col"], dyad=kv["dyad_col"],
                    response=kv["response_col"], covariates=covariates,
                    group=kv["group_col"] or None, offset=kv["offset"] or None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / LOG_FILE, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        data_path = Path(kv["data"])
        dataset = load_dataset(data_path, schema)
        report = validate(dataset, config.family)
        for w in report.warnings:
            log.warning("data: %s", w)
        plan = build_model(config, dataset)
        extra = {"data": str(data_path), "data_sha256": _sha256(data_path)}
        extra.update({key: kv[key] for key, _ in _SCHEMA_KEYS.values() if key != "offset"})
        (out / CONFIG_FILE).write_text(config_to_kv(config, extra), encoding="utf-8")
        log.info("fitting %s model: %d rows, %d nodes, %d dyads, %d groups",
                 config.family, dataset.n_rows, dataset.n_nodes, dataset.n_dyads,
                 dataset.n_groups)
        settings = config.chains
        every = max(1, (settings.burnin + settings.iterations) // 10)
        samples = run_chains(plan, log_every=every)
        log.info("sampling finished in %.1f s", samples.metadata["wall_clock_seconds"])
        samples.to_csv(out / SAMPLES_FILE)
        meta = dict(samples.metadata, data=str(data_path))
        (out / METADATA_FILE).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        summaries = _write_summaries(samples, out)
    finally:
        log.removeHandler(handler)
        handler.close()
    sys.stdout.write(analysis.summary_table(summaries))
    return 0


def _write_summaries(samples, out):
    summaries = analysis.summarize(samples)
    analysis.write_summary(summaries, out / SUMMARY_FILE)
    analysis.convergence_report(samples).write(out / DIAGNOSTICS_DIR)
    return summaries


def _load_run(run):
    run = Path(run)
    cfg_path, samples_path = run / CONFIG_FILE, run / SAMPLES_FILE
    if not samples_path.is_file():
        raise ConfigurationError(f"{run}: no samples file ({SAMPLES_FILE})")
    if not cfg_path.is_file():
        raise ConfigurationError(f"{run}: no config snapshot ({CONFIG_FILE})")
    kv = parse_kv(cfg_path.read_text(encoding="utf-8"))
    config = config_from_kv(kv)
    samples = PosteriorSamples.from_csv(samples_path, config.family, config.grouped)
    return config, samples


def cmd_summarize(args):
    _, samples = _load_run(args.run)
    summaries = _write_summaries(samples, Path(args.run))
    sys.stdout.write(analysis.summary_table(summaries))
    return 0


def cmd_predict(args):
    config, samples = _load_run(args.run)
    scenario, interval = read_scenario(args.scenario)
    if args.interval is not None:
        interval = args.interval
    scenario = scenario.align(config.covariates)
    curve = prediction_curve(samples, scenario, config.family, interval)
    out = Path(args.out) if args.out else Path(args.run) / "prediction.csv"
    curve.write(out)
    sys.stdout.write(curve.to_csv())
    return 0


def cmd_simulate(args):
    params = read_params(args.params)
    dataset = simulate_dataset(params, args.seed)
    out = Path(args.out)
    write_dataset(dataset, out)
    truth = Path(args.truth) if args.truth else out.with_name(out.stem + "_truth.json")
    write_truth(params, args.seed, truth)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="multisrm",
                                description="Multilevel Social Relations Models by MCMC.")
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model and write a run directory")
    fit.add_argument("--config", help="flat key = value config file; flags override it")
    fit.add_argument("--data", help="long-format CSV file")
    fit.add_argument("--family", choices=("binary", "count", "continuous"))
    fit.add_argument("--actor-col")
    fit.add_argument("--partner-col")
    fit.add_argument("--dyad-col")
    fit.add_argument("--group-col", help="group column; its presence makes the model multi-group")
    fit.add_argument("--response-col")
    fit.add_argument("--covariates", help="comma list, must include the constant column")
    fit.add_argument("--offset-col", help="log-exposure column (count family only)")
    d = ChainSettings()
    fit.add_argument("--chains", type=int, help=f"default {d.n_chains}")
    fit.add_argument("--seed", type=int, help=f"default {d.seed}")
    fit.add_argument("--burnin", type=int, help=f"default {d.burnin}")
    fit.add_argument("--iterations", type=int, help=f"default {d.iterations}")
    fit.add_argument("--thin", type=int, help=f"default {d.thin}")
    g = PriorSpec()
    fit.add_argument("--prior-guess", help="var_a,cov_ab,var_b (default "
                     + ",".join(f"{v:g}" for v in g.ab_prior_guess) + ")")
    fit.add_argument("--prior-df", type=float, help=f"default {g.ab_prior_df:g}")
    fit.add_argument("--out", required=True, help="run directory")
    fit.set_defaults(func=cmd_fit)

    sm = sub.add_parser("summarize", help="rewrite summary and diagnostics from samples")
    sm.add_argument("run")
    sm.set_defaults(func=cmd_summarize)

    pr = sub.add_parser("predict", help="prediction curve from a run directory")
    pr.add_argument("run")
    pr.add_argument("--scenario", required=True)
    pr.add_argument("--interval", type=float)
    pr.add_argument("--out", help="output CSV (default RUN/prediction.csv)")
    pr.set_defaults(func=cmd_predict)

    si = sub.add_parser("simulate", help="simulate a dataset from a params JSON file")
    si.add_argument("--params", required=True)
    si.add_argument("--seed", type=int, default=1)
    si.add_argument("--out", required=True, help="output CSV")
    si.add_argument("--truth", help="truth sidecar (default <out>_truth.json)")
    si.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not log.handlers:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(logging.WARNING)
        console.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        log.addHandler(console)
        log.propagate = False
    try:
        return args.func(args)
    except SRMError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"ERROR io: {exc}", file=sys.stderr)
    return 2
