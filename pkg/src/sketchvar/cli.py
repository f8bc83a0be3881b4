"""Command-line driver for the gap sweeps, active learning, diagnostics and timing.

Usage::

    sketchvar gap-n --preset fig1b --seed 0,1,2 --out runs/fig1b
    sketchvar v2-point --config toy.json

Every run directory receives ``report.csv``, ``chart.svg`` and
``config.echo.json``; re-running with ``--config config.echo.json``
reproduces the report. Exit codes: 0 success, 1 configuration error,
2 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import experiments as ex
from . import sketch as sk
from .active_learning import HISTORY_COLUMNS, ActiveLearningConfig, run_active_learning
from .exact_krr import fit, variance_v1
from .kernels import EigenDecompositionError, KernelSpec, build_kernel_matrix, decompose, kernel_sections
from .sketched_krr import sketched_fit, variance_v2, variance_v3
from .svg import line_chart

SUBCOMMANDS = ("gap-n", "gap-m", "gap-sigma", "active-learn", "assumption-check", "bench", "v2-point")

STRATEGIES = {
    "rsKRR+V2": ("v2", "sketched"),
    "rsKRR+rand": ("uniform", "sketched"),
    "KRR+V1": ("v1", "exact"),
    "KRR+rand": ("uniform", "exact"),
}


MIXTURE_NOTE = ("gaussian_mixture is read as an equal mixture of N(0.5, 0.5^2) and N(5, 5^2), "
                "i.e. the second parameter is a standard deviation")


class ConfigError(Exception):
    """Invalid flags or configuration file."""


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer"}
_POSINT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "preset": {"type": ["string", "null"]},
        "notes": {"type": "array", "items": {"type": "string"}},
        "kernel": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["gaussian", "sobolev_first_order", "sobolev_cubic", "explicit_spectrum"]},
                "bandwidth": _POS,
                "decay": {"enum": ["polynomial", "exponential"]},
                "alpha": _POS,
                "rate": _POS,
                "power": _POS,
                "n_terms": _POSINT,
            },
        },
        "generator": {"enum": list(ex.GENERATORS)},
        "n_list": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "n": {"type": "integer", "minimum": 2},
        "c_list": {"type": "array", "items": _POS, "minItems": 1},
        "sigma_list": {"type": "array", "items": _POS, "minItems": 1},
        "sigma": _POS,
        "m": {"type": ["integer", "null"], "minimum": 1},
        "m_rule": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["poly", "exp", "log", "full"]},
                "scale": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "c": _POS,
                "alpha": _POS,
                "p": _POS,
            },
        },
        "lam_rule": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["poly", "exp", "fixed"]},
                "alpha": _POS,
                "p": _POS,
                "value": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "grid_size": {"type": "integer", "minimum": 2},
        "threads": _POSINT,
        "record_timing": {"type": "boolean"},
        "out": {"type": "string"},
        "pool_size": _POSINT,
        "test_size": _POSINT,
        "initial_size": _POSINT,
        "batch_size": _POSINT,
        "iterations": {"type": "integer", "minimum": 0},
        "strategies": {"type": "array", "items": {"enum": list(STRATEGIES)}, "minItems": 1},
        "early_stop": {"type": "boolean"},
        "m_factor": _POS,
        "c_prime": _POS,
        "queries": _POSINT,
        "K": {"type": "array", "items": {"type": "array", "items": _NUM}},
        "k_x": {"type": "array", "items": _NUM},
        "lambda": _POS,
        "sketch": {
            "oneOf": [
                {"const": "identity"},
                {
                    "type": "object",
                    "required": ["m"],
                    "additionalProperties": False,
                    "properties": {
                        "distribution": {"enum": list(sk.DISTRIBUTIONS)},
                        "seed": {"type": "integer", "minimum": 0},
                        "m": _POSINT,
                    },
                },
            ]
        },
    },
}

DEFAULTS = {
    "kernel": {"family": "gaussian", "bandwidth": 0.5},
    "generator": "uniform_quadratic",
    "n_list": [50, 100, 200, 400, 800],
    "n": 1000,
    "c_list": [1.0],
    "sigma_list": [1.0],
    "sigma": 1.0,
    "m": None,
    "m_rule": {"name": "exp", "scale": 2.0, "c": 1.0, "alpha": 2.0, "p": 2.0},
    "lam_rule": {"name": "exp", "alpha": 2.0, "p": 2.0, "value": None},
    "seeds": [0],
    "grid_size": 100,
    "threads": 1,
    "record_timing": True,
    "pool_size": 2000,
    "test_size": 1000,
    "initial_size": 100,
    "batch_size": 30,
    "iterations": 20,
    "strategies": ["rsKRR+V2", "rsKRR+rand"],
    "early_stop": False,
    "m_factor": 4.0,
    "c_prime": 2.0,
    "queries": 100,
}

_SOBOLEV = {"family": "sobolev_cubic"}
_GAUSS_FIG1 = {"family": "gaussian", "bandwidth": 0.5}
_POLY_M15 = {"name": "poly", "scale": 1.5, "c": 1.0, "alpha": 2.0, "p": 2.0}
_EXP_M2 = {"name": "exp", "scale": 2.0, "c": 1.0, "alpha": 2.0, "p": 2.0}
_POLY_LAM = {"name": "poly", "alpha": 2.0, "p": 2.0, "value": None}
_EXP_LAM = {"name": "exp", "alpha": 2.0, "p": 2.0, "value": None}
_N_SWEEP = [50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000]

PRESETS = {
    "fig1a": {"subcommand": "gap-n", "kernel": _SOBOLEV, "n_list": _N_SWEEP, "m_rule": _POLY_M15,
              "lam_rule": _POLY_LAM, "sigma": 1.0, "seeds": list(range(20))},
    "fig1b": {"subcommand": "gap-n", "kernel": _GAUSS_FIG1, "n_list": _N_SWEEP, "m_rule": _EXP_M2,
              "lam_rule": _EXP_LAM, "sigma": 1.0, "seeds": list(range(20))},
    "fig1c": {"subcommand": "gap-m", "kernel": _SOBOLEV, "n": 1000,
              "c_list": [round(0.4 + 0.1 * i, 1) for i in range(16)],
              "m_rule": {"name": "poly", "scale": 1.2, "c": 1.0, "alpha": 2.0, "p": 2.0},
              "lam_rule": _POLY_LAM, "sigma": 1.0, "seeds": list(range(20))},
    "fig1d": {"subcommand": "gap-m", "kernel": _GAUSS_FIG1, "n": 1000,
              "c_list": [round(0.3 + 0.1 * i, 1) for i in range(16)],
              "m_rule": {"name": "exp", "scale": 1.2, "c": 1.0, "alpha": 2.0, "p": 2.0},
              "lam_rule": _EXP_LAM, "sigma": 1.0, "seeds": list(range(20))},
    "fig1e": {"subcommand": "gap-sigma", "kernel": _SOBOLEV, "n": 1000, "m_rule": _POLY_M15,
              "lam_rule": _POLY_LAM, "sigma_list": [0.5 * i for i in range(1, 11)], "seeds": list(range(20))},
    "fig1f": {"subcommand": "gap-sigma", "kernel": _GAUSS_FIG1, "n": 1000, "m_rule": _EXP_M2,
              "lam_rule": _EXP_LAM, "sigma_list": [0.5 * i for i in range(1, 11)], "seeds": list(range(20))},
    "sim1": {"subcommand": "active-learn", "generator": "uniform_quadratic",
             "kernel": {"family": "gaussian", "bandwidth": 0.25}, "pool_size": 5000, "test_size": 1000,
             "initial_size": 100, "batch_size": 30, "iterations": 30,
             "m_rule": {"name": "log", "scale": None, "c": 1.0, "alpha": 2.0, "p": 2.0}, "lam_rule": _EXP_LAM,
             "strategies": ["rsKRR+V2", "KRR+V1", "KRR+rand", "rsKRR+rand"], "seeds": list(range(30))},
    "sim2": {"subcommand": "active-learn", "generator": "clustered",
             "kernel": {"family": "gaussian", "bandwidth": 0.25}, "pool_size": 5000, "test_size": 1000,
             "initial_size": 100, "batch_size": 30, "iterations": 50,
             "m_rule": {"name": "log", "scale": None, "c": 1.0, "alpha": 2.0, "p": 2.0}, "lam_rule": _EXP_LAM,
             "strategies": ["rsKRR+V2", "KRR+V1", "KRR+rand", "rsKRR+rand"], "seeds": list(range(30))},
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict
    overrides: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def kernel(self) -> KernelSpec:
        return KernelSpec.from_dict(self.values["kernel"])

    def echo(self) -> dict:
        out = {"subcommand": self.subcommand}
        out.update(self.values)
        if self.values.get("generator") == "gaussian_mixture":
            out["notes"] = [MIXTURE_NOTE]
        return out


# argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list of {kind.__name__}, got {text!r}")
    return parse


# flag name -> (config key, type)
_FLAGS = {
    "--n": ("n", int),
    "--n-list": ("n_list", _csv_list(int)),
    "--c-list": ("c_list", _csv_list(float)),
    "--sigma": ("sigma", float),
    "--sigma-list": ("sigma_list", _csv_list(float)),
    "--m": ("m", int),
    "--lam": ("lambda", float),
    "--grid-size": ("grid_size", int),
    "--generator": ("generator", str),
    "--pool-size": ("pool_size", int),
    "--test-size": ("test_size", int),
    "--initial-size": ("initial_size", int),
    "--batch-size": ("batch_size", int),
    "--iterations": ("iterations", int),
    "--strategies": ("strategies", _csv_list(str)),
    "--m-factor": ("m_factor", float),
    "--c-prime": ("c_prime", float),
    "--queries": ("queries", int),
}


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--seed", type=_csv_list(int), help="comma-separated seeds")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int)
    common.add_argument("--kernel", choices=["gaussian", "sobolev_first_order", "sobolev_cubic"])
    common.add_argument("--bandwidth", type=float)
    common.add_argument("--no-timing", action="store_true", help="write zero wall times (bit-reproducible reports)")
    for flag, (_, kind) in _FLAGS.items():
        common.add_argument(flag, type=kind, dest="opt_" + _FLAGS[flag][0])
    parser = _Parser(prog="sketchvar", description="Sketched predictive variance experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _validate(cfg: dict, where: str):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: invalid value at '{path}': {exc.message}") from None


def parse_config(argv) -> RunConfig:
    """Resolve defaults, preset, config file and flags (in increasing precedence)."""
    args = _build_parser().parse_args(argv)
    file_cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config {args.config} must hold a JSON object")
        _validate(file_cfg, args.config)
        if file_cfg.get("subcommand", args.subcommand) != args.subcommand:
            raise ConfigError(f"config is for '{file_cfg['subcommand']}', not '{args.subcommand}'")

    preset_name = args.preset or file_cfg.get("preset")
    values = copy.deepcopy(DEFAULTS)
    if preset_name:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}")
        preset = copy.deepcopy(PRESETS[preset_name])
        if preset.pop("subcommand") != args.subcommand:
            raise ConfigError(f"preset {preset_name} belongs to '{PRESETS[preset_name]['subcommand']}'")
        values.update(preset)
    values.update({k: v for k, v in file_cfg.items() if k != "subcommand"})
    values["preset"] = preset_name

    flags = {}
    for key, val in vars(args).items():
        if key.startswith("opt_") and val is not None:
            flags[key[4:]] = val
    if args.seed is not None:
        flags["seeds"] = args.seed
    if args.out is not None:
        flags["out"] = args.out
    if args.threads is not None:
        flags["threads"] = args.threads
    elif "threads" not in file_cfg and os.environ.get("SKETCHVAR_THREADS"):
        try:
            flags["threads"] = int(os.environ["SKETCHVAR_THREADS"])
        except ValueError:
            raise ConfigError("SKETCHVAR_THREADS must be an integer") from None
    if args.no_timing:
        flags["record_timing"] = False
    if args.kernel is not None:
        flags["kernel"] = {"family": args.kernel}
        if args.kernel == "gaussian":
            flags["kernel"]["bandwidth"] = args.bandwidth or values["kernel"].get("bandwidth", 0.5)
    elif args.bandwidth is not None:
        flags["kernel"] = dict(values["kernel"], bandwidth=args.bandwidth)
    values.update(flags)
    values.setdefault("out", os.path.join("runs", args.subcommand))
    _validate(values, "resolved configuration")
    try:
        KernelSpec.from_dict(values["kernel"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value at 'kernel': {exc}") from None
    if args.subcommand == "v2-point" and ("K" not in values or "k_x" not in values):
        raise ConfigError("v2-point needs 'K' and 'k_x' (and optionally 'lambda', 'sigma', 'sketch')")
    return RunConfig(args.subcommand, values, flags)


# output helpers -------------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _m_of(cfg: RunConfig):
    rule = cfg["m_rule"]
    if cfg["m"] is not None:
        return lambda n, c=None: cfg["m"]
    return lambda n, c=None: ex.m_rule(rule["name"], n, c=rule.get("c", 1.0) if c is None else c,
                                       alpha=rule.get("alpha", 2.0), p=rule.get("p", 2.0), scale=rule.get("scale"))


def _lam_of(cfg: RunConfig):
    rule = cfg["lam_rule"]
    if "lambda" in cfg.values:
        return lambda n: cfg["lambda"]
    return lambda n: ex.lam_rule(rule["name"], n, alpha=rule.get("alpha", 2.0), p=rule.get("p", 2.0),
                                 value=rule.get("value"))


def _gap_rows(reports, timing: bool):
    names = ex.GapReport.__dataclass_fields__.keys()
    rows = []
    for r in reports:
        row = [getattr(r, k) for k in names]
        if not timing:
            row[-2:] = [0.0, 0.0]
        rows.append(row)
    return list(names), rows


# subcommands ------------------------------------------------------------------

def _run_gap_n(cfg):
    reports = ex.gap_sweep_n(cfg.kernel(), cfg["n_list"], _m_of(cfg), _lam_of(cfg), cfg["sigma"],
                             ex.default_grid(cfg["grid_size"]), cfg["seeds"], generator=cfg["generator"],
                             threads=cfg["threads"])
    header, rows = _gap_rows(reports, cfg["record_timing"])
    summary = ex.summarize(reports, "n")
    chart = line_chart([("sup gap", [s[0] for s in summary], [s[1] for s in summary], [s[2] for s in summary])],
                       title=f"sup |V1 - V2| vs n ({cfg.kernel().tag})", xlabel="n", ylabel="mean sup gap",
                       log_y=True)
    return _csv_text(header, rows), chart


def _run_gap_m(cfg):
    n = cfg["n"]
    m_of = _m_of(cfg)
    reports = ex.gap_sweep_m(cfg.kernel(), n, cfg["c_list"], lambda c: m_of(n, c), _lam_of(cfg)(n), cfg["sigma"],
                             ex.default_grid(cfg["grid_size"]), cfg["seeds"], generator=cfg["generator"],
                             threads=cfg["threads"])
    header, rows = _gap_rows(reports, cfg["record_timing"])
    k = len(cfg["seeds"])
    header.append("c")
    for i, row in enumerate(rows):
        row.append(cfg["c_list"][i // k])
    summary = ex.summarize(reports, "m")
    chart = line_chart([("sup gap", [s[0] for s in summary], [s[1] for s in summary], [s[2] for s in summary])],
                       title=f"sup |V1 - V2| vs m at n={n} ({cfg.kernel().tag})", xlabel="m",
                       ylabel="mean sup gap", log_y=True)
    return _csv_text(header, rows), chart


def _run_gap_sigma(cfg):
    n = cfg["n"]
    pairs = ex.gap_sweep_sigma(cfg.kernel(), n, _m_of(cfg)(n), _lam_of(cfg)(n), cfg["sigma_list"],
                               ex.default_grid(cfg["grid_size"]), cfg["seeds"], generator=cfg["generator"],
                               threads=cfg["threads"])
    reports = [p[0] for p in pairs]
    header, rows = _gap_rows(reports, cfg["record_timing"])
    header.append("ratio")
    for row, (_, ratio) in zip(rows, pairs):
        row.append(ratio)
    summary = ex.summarize(reports, "sigma")
    chart = line_chart([("sup gap", [s[0] for s in summary], [s[1] for s in summary], [s[2] for s in summary])],
                       title=f"sup |V1 - V2| vs sigma ({cfg.kernel().tag})", xlabel="sigma", ylabel="mean sup gap")
    return _csv_text(header, rows), chart


def _run_active_learn(cfg):
    rows = []
    curves = {}
    for seed in cfg["seeds"]:
        master = ex.generate(ex.SyntheticSpec(cfg["generator"], cfg["pool_size"], cfg["sigma"], seed))
        test = ex.generate(ex.SyntheticSpec(cfg["generator"], cfg["test_size"], cfg["sigma"], seed + 1_000_003))
        for name in cfg["strategies"]:
            acquisition, model = STRATEGIES[name]
            rule = cfg["m_rule"]
            lam_rule = cfg["lam_rule"]
            al = ActiveLearningConfig(
                initial_size=cfg["initial_size"], batch_size=cfg["batch_size"], iterations=cfg["iterations"],
                kernel=cfg.kernel(), m_rule=rule["name"], m_c=rule.get("c", 1.0), m_scale=rule.get("scale"),
                alpha=rule.get("alpha", 2.0), p=rule.get("p", 2.0), lam_rule=lam_rule["name"],
                lam_value=lam_rule.get("value"), acquisition=acquisition, model=model, seed=seed,
                early_stop=cfg["early_stop"],
            )
            for rec in run_active_learning(master, test, al):
                row = rec.row()
                row[5] = name
                if not cfg["record_timing"]:
                    row[7] = 0.0
                rows.append(row)
                curves.setdefault(name, {}).setdefault(rec.iteration, []).append(rec.test_mse)
    series = []
    for name, by_it in curves.items():
        its = sorted(by_it)
        means = [float(np.mean(by_it[i])) for i in its]
        errs = [1.96 * float(np.std(by_it[i], ddof=1)) / math.sqrt(len(by_it[i])) if len(by_it[i]) > 1 else 0.0
                for i in its]
        series.append((name, its, means, errs))
    chart = line_chart(series, title=f"test MSE per iteration ({cfg['generator']})", xlabel="iteration",
                       ylabel="test MSE")
    return _csv_text(HISTORY_COLUMNS, rows), chart


def _run_assumption(cfg):
    kernel = cfg.kernel()
    header = ["seed", "n", "m", "lambda", "s_lambda", "smin", "smax", "tail_opnorm", "c_prime", "passed"]
    rows = []
    n = cfg["n"]
    lam = _lam_of(cfg)(n)
    for seed in cfg["seeds"]:
        data = ex.generate(ex.SyntheticSpec(cfg["generator"], n, cfg["sigma"], seed))
        spec = decompose(build_kernel_matrix(kernel, data), lam)
        m = cfg["m"] or max(1, math.ceil(cfg["m_factor"] * spec.split))
        S = sk.generate("gaussian", ex.sketch_seed(seed, n), m, n)
        rep = sk.check_assumption(S, spec, lam, cfg["c_prime"])
        rows.append([seed, n, m, lam, rep.s_lambda, rep.smin, rep.smax, rep.tail_opnorm, rep.c_prime, rep.passed])
    seeds = [r[0] for r in rows]
    chart = line_chart([("smin", seeds, [r[5] for r in rows], None), ("smax", seeds, [r[6] for r in rows], None)],
                       title=f"singular values of S U1 (n={n}, {kernel.tag})", xlabel="seed", ylabel="singular value")
    print(f"passed {sum(r[-1] for r in rows)}/{len(rows)}")
    return _csv_text(header, rows), chart


def _run_bench(cfg):
    n = cfg["n"]
    m = cfg["m"] or 2 * math.ceil(math.log(n))
    header = ["n", "m", "queries", "exact_time", "sketched_time", "speedup"]
    rows = []
    for seed in cfg["seeds"]:
        r = ex.timing_benchmark(n, m, cfg.kernel(), cfg["queries"], lam=_lam_of(cfg)(n), seed=seed)
        rows.append([n, m, cfg["queries"], r["exact_time"], r["sketched_time"], r["exact_time"] / r["sketched_time"]])
    chart = line_chart([("exact", cfg["seeds"], [r[3] for r in rows], None),
                        ("sketched", cfg["seeds"], [r[4] for r in rows], None)],
                       title=f"wall time, n={n}, m={m}", xlabel="seed", ylabel="seconds")
    return _csv_text(header, rows), chart


def _run_v2_point(cfg):
    K = np.asarray(cfg["K"], dtype=float)
    k_x = np.asarray(cfg["k_x"], dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or k_x.shape != (K.shape[0],):
        raise ConfigError("'K' must be square and 'k_x' must match its size")
    lam = cfg.values.get("lambda", 1.0)
    sigma = cfg["sigma"]
    spec = cfg.values.get("sketch", "identity")
    if spec == "identity":
        S = sk.identity_sketch(K.shape[0])
    else:
        S = sk.generate(spec.get("distribution", "gaussian"), spec.get("seed", 0), spec["m"], K.shape[0])
    ef = fit(K, np.zeros(K.shape[0]), lam)
    sf = sketched_fit(K, S, lam)
    v1 = variance_v1(ef, k_x, sigma)
    v2 = variance_v2(sf, k_x, sigma)
    v3 = variance_v3(sf, S, k_x, sigma)
    print(f"V1={v1:.12g}")
    print(f"V2={v2:.12g}")
    print(f"V3={v3:.12g}")
    chart = line_chart([("variance", [1, 2, 3], [v1, v2, v3], None)], title="V1, V2, V3 at one point",
                       xlabel="estimator", ylabel="variance")
    return _csv_text(["V1", "V2", "V3", "lambda", "sigma", "m"], [[v1, v2, v3, lam, sigma, S.m]]), chart


_RUNNERS = {
    "gap-n": _run_gap_n,
    "gap-m": _run_gap_m,
    "gap-sigma": _run_gap_sigma,
    "active-learn": _run_active_learn,
    "assumption-check": _run_assumption,
    "bench": _run_bench,
    "v2-point": _run_v2_point,
}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        out = cfg["out"]
        os.makedirs(out, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
        report, chart = _RUNNERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"sketchvar: configuration error: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, EigenDecompositionError, FloatingPointError) as exc:
        print(f"sketchvar: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"sketchvar: configuration error: {exc}", file=sys.stderr)
        return 1
    atomic_write(os.path.join(out, "report.csv"), report)
    atomic_write(os.path.join(out, "chart.svg"), chart)
    atomic_write(os.path.join(out, "config.echo.json"), json.dumps(cfg.echo(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {os.path.join(out, 'report.csv')}")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
