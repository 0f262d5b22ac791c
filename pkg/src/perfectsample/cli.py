"""Command-line front end.

Subcommands:
  sample   draw perfect samples and write a CSV + JSON summary
  trace    emit per-step path files for plotting coupling behavior
  gof      goodness-of-fit of a sample file against an exact oracle
  oracle   expose the exact-law oracles directly
  umcmc    lagged-pair unbiased estimation runs
  moller   auxiliary-variable posterior sampling for the Ising model

Configs come from flags or a key=value text file (flags win). Every run
record embeds the resolved config, all floats print with 17 significant
digits, CSVs use LF line endings, and JSON keys are sorted, so a re-run
with the same config is byte-identical.

Exit codes: 0 success, 2 config error, 3 cap breach, 4 oracle unavailable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .cftp import (BackoffSchedule, NoCoalescenceError, backward_trace,
                   bernoulli_atoms, bounding_trace, cftp_bounding,
                   cftp_bruteforce, cftp_monotone)
from .chain import exact_stationary
from .couplers import (RejectionCapError, WSequenceCapError, coupled_rw_mh,
                       gamma_minorizer, multigamma_exact_draw, slice_cftp)
from .fill import fill_draw
from .gof import GofReport, chisq_gof, ks_gof, ks_two_sample
from .ising import (ising_cftp, ising_exact_moments, ising_log_z,
                    ising_state_tables, ising_suff_stat)
from .models import (default_mixture_setup, exp_decreasing, ladder_walk,
                     mixture_alpha_cftp, mixture_posterior_cdf,
                     normal_density, three_state_walk)
from .moller import IsingPosterior, posterior_bin_probabilities, run_moller_chain
from .noise import past_atoms
from .readonce import choose_block_size, ro_cftp_stream
from .umcmc import h_estimate, run_lagged_pair

ENV_SEED = "PERFECTSAMPLE_SEED"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_NO_ORACLE = 4


class ConfigError(ValueError):
    """Bad flags, bad config file, or an invalid model/sampler pairing."""


class OracleUnavailableError(RuntimeError):
    """The requested model has no exact oracle."""


CAP_ERRORS = (NoCoalescenceError, RejectionCapError, WSequenceCapError)

# model name -> {param: (type, default)}
MODEL_PARAMS = {
    "ladder": {"p": (float, 0.5)},
    "walk3": {"p": (float, 0.5)},
    "ising": {"L": (int, 4), "beta": (float, 0.3)},
    "mixture": {},
    "exp": {"cutoff": (float, 3.0)},
    "gamma": {"a": (float, 2.0), "b0": (float, 1.0), "b1": (float, 2.0)},
    "normal": {},
}

SAMPLER_MODELS = {
    "cftp-brute": {"ladder", "walk3"},
    "cftp-monotone": {"ladder", "ising"},
    "cftp-bounding": {"walk3"},
    "ro-cftp": {"ladder", "walk3"},
    "fill": {"ladder", "walk3"},
    "mixture-alpha": {"mixture"},
    "slice": {"exp"},
    "multigamma": {"gamma"},
}

TRACE_SAMPLERS = {"cftp-brute", "cftp-monotone", "cftp-bounding", "common-proposal"}


def fmt(x) -> str:
    """17-significant-digit text for floats; plain text otherwise."""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, val = line.partition("=")
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def resolve(args: argparse.Namespace, spec: dict[str, tuple]) -> dict:
    """Merge flag values over config-file values over defaults.

    spec maps option name -> (type, default). Flags hold None when absent,
    so a file value shows through only where no flag was given. Unknown
    file keys are rejected rather than ignored.
    """
    file_vals = load_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_vals) - set(spec)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for name, (typ, default) in spec.items():
        flag = getattr(args, name, None)
        if flag is not None:
            out[name] = flag
        elif name in file_vals:
            try:
                out[name] = typ(file_vals[name]) if typ is not None else file_vals[name]
            except ValueError as exc:
                raise ConfigError(f"config key {name}: {exc}") from exc
        else:
            out[name] = default
    return out


def default_seed() -> int:
    env = os.environ.get(ENV_SEED)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}") from exc


def model_params(name: str, cfg: dict) -> dict:
    """Pull this model's parameters out of the resolved config, rejecting
    explicit parameters that belong to other models."""
    if name not in MODEL_PARAMS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_PARAMS)}")
    wanted = MODEL_PARAMS[name]
    params = {}
    for pname in ("p", "L", "beta", "cutoff", "a", "b0", "b1"):
        val = cfg.get(pname)
        if pname in wanted:
            params[pname] = val if val is not None else wanted[pname][1]
        elif val is not None:
            raise ConfigError(f"model {name!r} does not take parameter {pname!r}")
    return params


def build_finite_model(name: str, params: dict):
    if name == "ladder":
        return ladder_walk(params["p"])
    if name == "walk3":
        return three_state_walk(params["p"])
    raise ConfigError(f"model {name!r} is not a finite recursion model here")


PARAM_FLAGS = (("p", float), ("L", int), ("beta", float), ("cutoff", float),
               ("a", float), ("b0", float), ("b1", float))


def add_common(parser: argparse.ArgumentParser, with_sampler: bool = True) -> None:
    parser.add_argument("--config", help="key=value config file; flags win on conflict")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--model")
    if with_sampler:
        parser.add_argument("--sampler")
    parser.add_argument("--out", help="output path prefix (writes PREFIX.csv / PREFIX.json)")
    parser.add_argument("--cap", type=int)
    for pname, ptyp in PARAM_FLAGS:
        parser.add_argument(f"--{pname}", type=ptyp)


COMMON_SPEC = {
    "seed": (int, None),  # None means: fall back to env var, then 0
    "n": (int, 100),
    "out": (None, None),
    "cap": (int, None),
    "p": (float, None),
    "L": (int, None),
    "beta": (float, None),
    "cutoff": (float, None),
    "a": (float, None),
    "b0": (float, None),
    "b1": (float, None),
}


def finish_common(cfg: dict) -> None:
    if cfg["seed"] is None:
        cfg["seed"] = default_seed()
    if cfg["n"] is not None and cfg["n"] < 1:
        raise ConfigError("n must be >= 1")


def config_record(command: str, cfg: dict, extra: dict) -> dict:
    rec = {"command": command}
    rec.update({k: v for k, v in cfg.items() if v is not None})
    rec.update({k: v for k, v in extra.items() if v is not None})
    return rec


# ---------------------------------------------------------------------------
# sample


def run_sampler(sampler: str, model_name: str, params: dict, seed: int, n: int,
                cap: int | None):
    """Returns (extra column names, rows, applicable summary stats)."""
    try:
        schedule = BackoffSchedule(cap) if cap else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if sampler in ("cftp-brute", "cftp-monotone", "cftp-bounding") and model_name != "ising":
        model = build_finite_model(model_name, params)
        fn = {"cftp-brute": cftp_bruteforce, "cftp-monotone": cftp_monotone,
              "cftp-bounding": cftp_bounding}[sampler]
        rows, depths = [], []
        for r in range(n):
            value, cert = fn(model, seed, replicate=r, schedule=schedule)
            rows.append((r, value, cert.depth))
            depths.append(cert.depth)
        return ["depth"], rows, {"mean_depth": float(np.mean(depths))}

    if sampler == "cftp-monotone" and model_name == "ising":
        rows, depths = [], []
        for r in range(n):
            config, cert = ising_cftp(params["L"], params["beta"], seed,
                                      replicate=r, schedule=schedule)
            rows.append((r, float(config.mean()), cert.depth))
            depths.append(cert.depth)
        return ["depth"], rows, {"mean_depth": float(np.mean(depths)),
                                 "value_is": "magnetization"}

    if sampler == "ro-cftp":
        model = build_finite_model(model_name, params)
        spec = choose_block_size(model, seed)
        values, blocks = ro_cftp_stream(model, spec, seed, n)
        rows = [(r, v, b) for r, (v, b) in enumerate(zip(values, blocks))]
        return ["blocks"], rows, {"K": spec.block_size,
                                  "p_hat": spec.coalescence_rate,
                                  "mean_blocks": float(np.mean(blocks))}

    if sampler == "fill":
        model = build_finite_model(model_name, params)
        rows, attempts, depths = [], [], []
        for r in range(n):
            value, att, depth = fill_draw(model, seed, replicate=r)
            rows.append((r, value, att, depth))
            attempts.append(att)
            depths.append(depth)
        return ["attempts", "depth"], rows, {"mean_attempts": float(np.mean(attempts)),
                                             "mean_depth": float(np.mean(depths))}

    if sampler == "mixture-alpha":
        setup = default_mixture_setup()
        rows, depths = [], []
        for r in range(n):
            alpha, count, cert = mixture_alpha_cftp(setup, seed, replicate=r,
                                                    tmax=cap or 2 ** 20)
            rows.append((r, alpha, count, cert.depth))
            depths.append(cert.depth)
        return ["count", "depth"], rows, {"mean_depth": float(np.mean(depths))}

    if sampler == "slice":
        density = exp_decreasing(params["cutoff"])
        rows, depths = [], []
        for r in range(n):
            value, cert = slice_cftp(density, seed, replicate=r, schedule=schedule)
            rows.append((r, value, cert.depth))
            depths.append(cert.depth)
        return ["depth"], rows, {"mean_depth": float(np.mean(depths))}

    if sampler == "multigamma":
        spec = gamma_minorizer(params["a"], params["b0"], params["b1"],
                               rejection_cap=cap or 1_000_000)
        rows, steps = [], []
        for r in range(n):
            draw = multigamma_exact_draw(spec, seed, replicate=r)
            rows.append((r, draw.value, draw.steps))
            steps.append(draw.steps)
        return ["steps"], rows, {"mean_steps": float(np.mean(steps))}

    raise ConfigError(f"sampler {sampler!r} does not support model {model_name!r}")


def cmd_sample(args: argparse.Namespace) -> int:
    cfg = resolve(args, {**COMMON_SPEC, "sampler": (str, None), "model": (str, None)})
    finish_common(cfg)
    sampler, model_name = cfg["sampler"], cfg["model"]
    if sampler not in SAMPLER_MODELS:
        raise ConfigError(f"unknown sampler {sampler!r}; choose from {sorted(SAMPLER_MODELS)}")
    if model_name is None:
        raise ConfigError("--model is required")
    params = model_params(model_name, cfg)
    if model_name not in SAMPLER_MODELS[sampler]:
        raise ConfigError(f"sampler {sampler!r} supports models "
                          f"{sorted(SAMPLER_MODELS[sampler])}, not {model_name!r}")
    if cfg["out"] is None:
        raise ConfigError("--out is required for sample")

    extra_cols, rows, stats = run_sampler(sampler, model_name, params,
                                          cfg["seed"], cfg["n"], cfg["cap"])
    write_csv(cfg["out"] + ".csv", ["replicate", "value"] + extra_cols, rows)

    values = [row[1] for row in rows]
    summary = {
        "command": "sample",
        "sampler": sampler,
        "model": model_name,
        "params": params,
        "seed": cfg["seed"],
        "n": cfg["n"],
        "mean": float(np.mean(values)),
        "sd": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
        "config": config_record("sample", {k: cfg[k] for k in
                                           ("seed", "n", "out", "cap")},
                                {"sampler": sampler, "model": model_name, **params}),
    }
    if len(set(values)) <= 64:
        summary["counts"] = {fmt(v): values.count(v) for v in sorted(set(values))}
    summary.update(stats)
    write_json(cfg["out"] + ".json", summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# trace


def cmd_trace(args: argparse.Namespace) -> int:
    spec = {**COMMON_SPEC, "sampler": (str, "cftp-monotone"), "model": (str, "ladder"),
            "depth": (int, 8), "atoms": (str, None),
            "x0": (float, -2.0), "x1": (float, 2.0)}
    cfg = resolve(args, spec)
    finish_common(cfg)
    sampler, model_name = cfg["sampler"], cfg["model"]
    if sampler not in TRACE_SAMPLERS:
        raise ConfigError(f"unknown trace sampler {sampler!r}; choose from {sorted(TRACE_SAMPLERS)}")
    if cfg["out"] is None:
        raise ConfigError("--out is required for trace")
    summary_extra: dict = {}

    if sampler == "common-proposal":
        target = normal_density(0.0, 1.0)

        def logpdf(x):
            return float(np.log(target(x)))

        paths, met = coupled_rw_mh(logpdf, [cfg["x0"], cfg["x1"]], cfg["n"], cfg["seed"])
        rows = [(t, pid, paths[t, pid])
                for t in range(paths.shape[0]) for pid in range(paths.shape[1])]
        header = ["time", "path_id", "state"]
        summary_extra = {"met_at": met}
    else:
        params = model_params(model_name, cfg)
        model = build_finite_model(model_name, params)
        if cfg["atoms"] is not None:
            try:
                bits = [int(b) for b in cfg["atoms"].split(",")]
            except ValueError as exc:
                raise ConfigError(f"--atoms must be comma-separated bits: {exc}") from exc
            if any(b not in (0, 1) for b in bits):
                raise ConfigError("--atoms entries must be 0 or 1 (oldest first)")
            atoms = bernoulli_atoms(bits)
        else:
            atoms = past_atoms(cfg["seed"], 0, cfg["depth"], model.noise_shape)
        times, paths = backward_trace(model, atoms, model.states)
        finals = {paths[s][-1] for s in model.states}
        summary_extra = {"coalesced": len(finals) == 1,
                         "value_at_zero": finals.pop() if len(finals) == 1 else None}
        if sampler == "cftp-bounding":
            if model.bounding_update is None:
                raise ConfigError(f"model {model_name!r} has no bounding update")
            _, sets = bounding_trace(model, atoms)
            header = ["time", "path_id", "state", "set_min", "set_max"]
            rows = [(t, fmt(s), paths[s][i], min(sets[i]), max(sets[i]))
                    for i, t in enumerate(times) for s in model.states]
        else:
            header = ["time", "path_id", "state"]
            rows = [(t, fmt(s), paths[s][i])
                    for i, t in enumerate(times) for s in model.states]

    write_csv(cfg["out"] + ".csv", header, rows)
    summary = {"command": "trace", "sampler": sampler, "seed": cfg["seed"],
               "rows": len(rows), **summary_extra,
               "config": config_record("trace", {k: cfg[k] for k in
                                                 ("seed", "n", "out", "depth", "atoms")},
                                       {"sampler": sampler, "model": model_name})}
    write_json(cfg["out"] + ".json", summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gof


def read_sample_column(path: str, column: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if column not in header:
                raise ConfigError(f"{path}: no column {column!r} in header {header}")
            idx = header.index(column)
            vals = [float(line.rstrip("\n").split(",")[idx]) for line in fh if line.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read sample file {path}: {exc}") from exc
    if not vals:
        raise ConfigError(f"{path}: sample file has no data rows")
    return np.asarray(vals)


def ising_magnetization_law(L: int, beta: float):
    """Exact law of the mean spin on the enumerable lattice."""
    if L > 4:
        raise OracleUnavailableError(f"ising enumeration needs L <= 4, got {L}")
    bond_sum, _, spins = ising_state_tables(L)
    total = spins.sum(axis=1, dtype=np.int64)
    weights = np.exp(beta * bond_sum - ising_log_z(L, beta))
    support = np.arange(-L * L, L * L + 1, 2, dtype=np.int64)
    probs = np.array([weights[total == s].sum() for s in support])
    return [s / (L * L) for s in support], probs


def gof_report(model_name: str, params: dict, draws: np.ndarray) -> GofReport:
    if model_name in ("ladder", "walk3"):
        model = build_finite_model(model_name, params)
        labels = list(model.chain_spec.labels)
        unknown = set(draws.tolist()) - set(labels)
        if unknown:
            raise ConfigError(f"sample contains values outside the state space: {sorted(unknown)}")
        pi = exact_stationary(model.chain_spec).pi
        return chisq_gof(draws.tolist(), labels, pi)
    if model_name == "ising":
        labels, probs = ising_magnetization_law(params["L"], params["beta"])
        unknown = set(draws.tolist()) - set(labels)
        if unknown:
            raise ConfigError(f"sample contains values outside the state space: {sorted(unknown)}")
        return chisq_gof(draws.tolist(), labels, probs)
    if model_name == "mixture":
        cdf = mixture_posterior_cdf(default_mixture_setup())
        return ks_gof(draws, cdf)
    if model_name == "exp":
        cutoff = params["cutoff"]
        norm = 1.0 - np.exp(-cutoff)

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return np.clip((1.0 - np.exp(-np.clip(x, 0.0, cutoff))) / norm, 0.0, 1.0)

        return ks_gof(draws, cdf)
    raise OracleUnavailableError(f"no exact oracle for model {model_name!r}")


def cmd_gof(args: argparse.Namespace) -> int:
    spec = {**COMMON_SPEC, "model": (str, None), "sample": (str, None),
            "against": (str, None), "column": (str, "value")}
    cfg = resolve(args, spec)
    finish_common(cfg)
    if cfg["sample"] is None:
        raise ConfigError("--sample is required for gof")
    draws = read_sample_column(cfg["sample"], cfg["column"])

    if cfg["against"] is not None:
        other = read_sample_column(cfg["against"], cfg["column"])
        report = ks_two_sample(draws, other)
        model_name, params = None, {}
    else:
        model_name = cfg["model"]
        if model_name is None:
            raise ConfigError("gof needs --model (exact oracle) or --against (two-sample)")
        if model_name not in MODEL_PARAMS:
            raise ConfigError(f"unknown model {model_name!r}; choose from {sorted(MODEL_PARAMS)}")
        params = model_params(model_name, cfg)
        report = gof_report(model_name, params, draws)

    payload = {"command": "gof", "test": report.test,
               "statistic": report.statistic, "p_value": report.p_value,
               "n": report.n, "n_other": report.n_other,
               "config": config_record("gof", {"sample": cfg["sample"],
                                               "against": cfg["against"],
                                               "column": cfg["column"]},
                                       {"model": model_name, **params})}
    write_json(cfg["out"] and cfg["out"] + ".json", payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args: argparse.Namespace) -> int:
    spec = {**COMMON_SPEC, "model": (str, None), "grid": (int, 1001)}
    cfg = resolve(args, spec)
    finish_common(cfg)
    model_name = cfg["model"]
    if model_name is None:
        raise ConfigError("--model is required for oracle")
    if model_name not in MODEL_PARAMS:
        raise ConfigError(f"unknown model {model_name!r}; choose from {sorted(MODEL_PARAMS)}")
    params = model_params(model_name, cfg)

    if model_name in ("ladder", "walk3"):
        model = build_finite_model(model_name, params)
        oracle = exact_stationary(model.chain_spec)
        payload = {"command": "oracle", "model": model_name, "params": params,
                   "labels": list(model.chain_spec.labels),
                   "pi": [float(v) for v in oracle.pi]}
        write_json(cfg["out"] and cfg["out"] + ".json", payload)
        return EXIT_OK
    if model_name == "ising":
        if params["L"] > 4:
            raise OracleUnavailableError(f"ising enumeration needs L <= 4, got {params['L']}")
        moments = ising_exact_moments(params["L"], params["beta"])
        m_support, m_probs = ising_magnetization_law(params["L"], params["beta"])
        payload = {"command": "oracle", "model": "ising", "params": params,
                   "log_z": moments.log_z,
                   "mean_abs_magnetization": moments.mean_abs_magnetization,
                   "m_support": m_support, "m_probs": [float(v) for v in m_probs]}
        write_json(cfg["out"] and cfg["out"] + ".json", payload)
        return EXIT_OK
    if model_name == "mixture":
        setup = default_mixture_setup()
        grid = np.linspace(0.0, 1.0, cfg["grid"])
        cdf = mixture_posterior_cdf(setup)(grid)
        rows = list(zip(grid.tolist(), cdf.tolist()))
        if cfg["out"] is None:
            sys.stdout.write("alpha,cdf\n")
            for a, c in rows:
                sys.stdout.write(f"{fmt(a)},{fmt(c)}\n")
        else:
            write_csv(cfg["out"] + ".csv", ["alpha", "cdf"], rows)
        return EXIT_OK
    if model_name == "exp":
        cutoff = params["cutoff"]
        payload = {"command": "oracle", "model": "exp", "params": params,
                   "normalizer": float(1.0 - np.exp(-cutoff)),
                   "cdf": "(1 - exp(-x)) / normalizer on (0, cutoff)"}
        write_json(cfg["out"] and cfg["out"] + ".json", payload)
        return EXIT_OK
    raise OracleUnavailableError(f"no exact oracle for model {model_name!r}")


# ---------------------------------------------------------------------------
# umcmc


def cmd_umcmc(args: argparse.Namespace) -> int:
    spec = {**COMMON_SPEC, "model": (str, "ladder"), "lag": (int, 1), "k": (int, 0),
            "h": (str, "identity"), "init": (float, None)}
    cfg = resolve(args, spec)
    finish_common(cfg)
    if cfg["h"] != "identity":
        raise ConfigError(f"unknown h {cfg['h']!r}; only 'identity' is built in")
    if cfg["model"] not in ("ladder", "walk3"):
        raise ConfigError("umcmc needs a finite-matrix model: ladder or walk3")
    params = model_params(cfg["model"], cfg)
    model = build_finite_model(cfg["model"], params)
    if cfg["init"] is not None and cfg["init"] not in model.chain_spec.labels:
        raise ConfigError(f"init {cfg['init']} is not a state of {cfg['model']}")
    if cfg["out"] is None:
        raise ConfigError("--out is required for umcmc")

    def h(s):
        return float(s)

    cap = cfg["cap"] or 1_000_000
    rows = []
    for r in range(cfg["n"]):
        pair = run_lagged_pair(model, cfg["lag"], cfg["seed"], replicate=r,
                               init=cfg["init"], cap=cap)
        est = h_estimate(pair, h, cfg["k"])
        rows.append((r, est.value, est.tau, est.corrections))
    write_csv(cfg["out"] + ".csv", ["replicate", "estimate", "tau", "corrections"], rows)

    estimates = np.array([row[1] for row in rows])
    taus = np.array([row[2] for row in rows])
    js = np.array([row[3] for row in rows])
    summary = {
        "command": "umcmc", "model": cfg["model"], "params": params,
        "seed": cfg["seed"], "n": cfg["n"], "lag": cfg["lag"], "k": cfg["k"],
        "h": cfg["h"],
        "mean_h": float(estimates.mean()),
        "se_h": float(estimates.std(ddof=1) / np.sqrt(len(estimates))),
        "mean_tau": float(taus.mean()),
        "mean_corrections": float(js.mean()),
        "config": config_record("umcmc", {k: cfg[k] for k in
                                          ("seed", "n", "out", "cap", "lag", "k", "h", "init")},
                                {"model": cfg["model"], **params}),
    }
    write_json(cfg["out"] + ".json", summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# moller


def cmd_moller(args: argparse.Namespace) -> int:
    spec = {**COMMON_SPEC, "s_y": (int, None), "data_seed": (int, None),
            "data_beta": (float, 0.3), "scale": (float, 0.2), "bins": (int, 10)}
    cfg = resolve(args, spec)
    finish_common(cfg)
    L = cfg["L"] if cfg["L"] is not None else 4
    if (cfg["s_y"] is None) == (cfg["data_seed"] is None):
        raise ConfigError("moller needs exactly one of --s-y or --data-seed")
    if cfg["out"] is None:
        raise ConfigError("--out is required for moller")
    if cfg["s_y"] is not None:
        s_y = cfg["s_y"]
    else:
        data, _ = ising_cftp(L, cfg["data_beta"], cfg["data_seed"])
        s_y = ising_suff_stat(data)
    post = IsingPosterior(L=L, s_y=s_y, scale=cfg["scale"])
    run = run_moller_chain(post, cfg["n"], cfg["seed"])
    rows = [(m, b) for m, b in enumerate(run.betas.tolist())]
    write_csv(cfg["out"] + ".csv", ["step", "beta"], rows)

    summary = {
        "command": "moller", "L": L, "s_y": s_y, "scale": cfg["scale"],
        "seed": cfg["seed"], "n": cfg["n"],
        "acceptance_rate": run.acceptance_rate,
        "mean_beta": float(run.betas.mean()),
        "binned_tv": None,
        "bins": cfg["bins"],
        "config": config_record("moller", {k: cfg[k] for k in
                                           ("seed", "n", "out", "scale", "bins",
                                            "s_y", "data_seed", "data_beta")},
                                {"L": L}),
    }
    if L <= 4:
        edges = np.linspace(0.0, 1.0, cfg["bins"] + 1)
        exact = posterior_bin_probabilities(post, edges)
        emp = np.histogram(run.betas, bins=edges)[0] / len(run.betas)
        summary["binned_tv"] = float(0.5 * np.abs(exact - emp).sum())
    write_json(cfg["out"] + ".json", summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perfectsample",
                                     description="Perfect sampling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="draw perfect samples")
    add_common(p_sample)

    p_trace = sub.add_parser("trace", help="emit per-step coupling traces")
    add_common(p_trace)
    p_trace.add_argument("--depth", type=int)
    p_trace.add_argument("--atoms", help="comma-separated coin bits, oldest first")
    p_trace.add_argument("--x0", type=float)
    p_trace.add_argument("--x1", type=float)

    p_gof = sub.add_parser("gof", help="goodness of fit against an exact oracle")
    add_common(p_gof, with_sampler=False)
    p_gof.add_argument("--sample", help="CSV file of draws")
    p_gof.add_argument("--against", help="second CSV for a two-sample test")
    p_gof.add_argument("--column")

    p_oracle = sub.add_parser("oracle", help="print exact-law oracles")
    add_common(p_oracle, with_sampler=False)
    p_oracle.add_argument("--grid", type=int)

    p_umcmc = sub.add_parser("umcmc", help="lagged-pair unbiased estimation")
    add_common(p_umcmc, with_sampler=False)
    p_umcmc.add_argument("--lag", type=int)
    p_umcmc.add_argument("--k", type=int)
    p_umcmc.add_argument("--h")
    p_umcmc.add_argument("--init", type=float)

    p_moller = sub.add_parser("moller", help="auxiliary-variable Ising posterior chain")
    add_common(p_moller, with_sampler=False)
    p_moller.add_argument("--s-y", dest="s_y", type=int)
    p_moller.add_argument("--data-seed", dest="data_seed", type=int)
    p_moller.add_argument("--data-beta", dest="data_beta", type=float)
    p_moller.add_argument("--scale", type=float)
    p_moller.add_argument("--bins", type=int)
    return parser


DISPATCH = {
    "sample": cmd_sample,
    "trace": cmd_trace,
    "gof": cmd_gof,
    "oracle": cmd_oracle,
    "umcmc": cmd_umcmc,
    "moller": cmd_moller,
}


def error_json(message: str, code: int) -> None:
    sys.stderr.write(json.dumps({"error": message, "exit_code": code},
                                sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return DISPATCH[args.command](args)
    except ConfigError as exc:
        error_json(str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    except CAP_ERRORS as exc:
        error_json(str(exc), EXIT_CAP)
        return EXIT_CAP
    except OracleUnavailableError as exc:
        error_json(str(exc), EXIT_NO_ORACLE)
        return EXIT_NO_ORACLE


if __name__ == "__main__":
    sys.exit(main())
