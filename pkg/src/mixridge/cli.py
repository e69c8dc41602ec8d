"""Single executable exposing the library as subcommands.

All runs are driven by one JSON config (flags override individual keys) and
all randomness flows from one integer seed, defaulting to 0, never the clock.
Each data-producing subcommand writes one CSV plus a JSON run manifest that
echoes the fully resolved config; re-running from the manifest reproduces the
CSV byte for byte.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 numeric-domain
error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bnd
from . import events as ev
from . import experiments as xp
from . import model, verify
from .errors import (
    ConfigError,
    DegenerateS,
    InvalidParams,
    InvalidSpectrum,
    MixridgeError,
    NoKStar,
    SingularRegularization,
    TooFewTrials,
)
from .spectrum import Spectrum, make_bilevel, make_corollary_example, make_explicit, read_spectrum

_NUMERIC_ERRORS = (SingularRegularization, NoKStar, DegenerateS)

DEFAULT_CONFIG = {
    "problem": {
        "spectrum": {"kind": "isotropic", "p": 200, "value": 1.0},
        "mu": {"direction": "e1", "scale": 1.0},
        "n": 20,
        "eta": 0.0,
        "lambda": 0.0,
        "law": "gaussian",
    },
    "experiment": {
        "seed": 0,
        "trials": 200,
        "eps": [0.05, 0.1, 0.25],
        "t": 1.0,
        "k": 0,
        "ks": [0],
        "ts": [0.0, 1.0, 2.0],
        "scales": [0.25, 0.5, 1.0, 2.0, 4.0],
        "lambdas": [0.0],
        "q_grid": [0.5, 0.75, 0.95],
        "n_grid": [100, 1000, 10000],
        "r": 0.5,
        "s": 1.5,
        "mu_scale": "auto",
        "snr_factor": 8.0,
        "test_draws": 2000,
        "empirical_n_cap": 400,
        "identity_instances": 200,
        "inequality_instances": 300,
        "corrupt_s": 0.0,
        "threads": 0,
    },
    "output": {"dir": ".", "csv": True, "dump_datasets": False},
}

_SPECTRUM_KEYS = {
    "explicit": {"kind", "values"},
    "file": {"kind", "path"},
    "isotropic": {"kind", "p", "value"},
    "spiked": {"kind", "spikes", "p", "tail_value"},
    "bilevel": {"kind", "s", "q", "r"},
    "corollary": {"kind", "corollary", "k", "c1", "b", "dim_factor", "a_snr"},
}
_MU_KEYS = {"direction", "scale", "coords", "path"}


def _require_keys(block: dict, allowed, where: str) -> None:
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


def merge_config(user: dict) -> dict:
    """Defaults overlaid with the user config; unknown keys rejected."""
    _require_keys(user, DEFAULT_CONFIG, "config")
    out = {}
    for section, defaults in DEFAULT_CONFIG.items():
        blk = dict(defaults)
        user_blk = user.get(section, {})
        if not isinstance(user_blk, dict):
            raise ConfigError(f"section {section!r} must be an object")
        if section == "problem":
            _require_keys(user_blk, defaults, section)
            blk.update(user_blk)
            if "spectrum" in user_blk:
                blk["spectrum"] = dict(user_blk["spectrum"])
            if "mu" in user_blk:
                _require_keys(user_blk["mu"], _MU_KEYS, "problem.mu")
                blk["mu"] = dict(user_blk["mu"])
        else:
            _require_keys(user_blk, defaults, section)
            blk.update(user_blk)
        out[section] = blk
    return out


def build_spectrum(spec_cfg: dict, n: int):
    """Returns (Spectrum, corollary_instance_or_None)."""
    kind = spec_cfg.get("kind")
    if kind not in _SPECTRUM_KEYS:
        raise ConfigError(f"unknown spectrum kind {kind!r}")
    _require_keys(spec_cfg, _SPECTRUM_KEYS[kind], f"spectrum[{kind}]")
    if kind == "explicit":
        return make_explicit(spec_cfg["values"]), None
    if kind == "file":
        return read_spectrum(spec_cfg["path"]), None
    if kind == "isotropic":
        return make_explicit([float(spec_cfg.get("value", 1.0))] * int(spec_cfg["p"])), None
    if kind == "spiked":
        spikes = [float(v) for v in spec_cfg["spikes"]]
        p = int(spec_cfg["p"])
        tail = float(spec_cfg.get("tail_value", 1.0))
        return make_explicit(spikes + [tail] * (p - len(spikes))), None
    if kind == "bilevel":
        return make_bilevel(n, float(spec_cfg["s"]), float(spec_cfg["q"]), float(spec_cfg["r"])), None
    inst = make_corollary_example(
        spec_cfg["corollary"],
        n,
        int(spec_cfg["k"]),
        c1=float(spec_cfg.get("c1", 4.0)),
        b=float(spec_cfg.get("b", 50.0)),
        dim_factor=float(spec_cfg.get("dim_factor", 128.0)),
        a_snr=float(spec_cfg.get("a_snr", 1.0)),
    )
    return inst.spectrum, inst


def build_mu(mu_cfg: dict, spectrum: Spectrum) -> np.ndarray:
    p = spectrum.p
    direction = mu_cfg.get("direction", "e1")
    scale = float(mu_cfg.get("scale", 1.0))
    if direction == "coords":
        vec = np.asarray(mu_cfg["coords"], dtype=np.float64)
        if vec.shape != (p,):
            raise ConfigError(f"mu coords have length {len(vec)}, spectrum has p={p}")
        return scale * vec
    if direction == "file":
        vec = np.loadtxt(mu_cfg["path"], dtype=np.float64).reshape(-1)
        if vec.shape != (p,):
            raise ConfigError(f"mu file has length {len(vec)}, spectrum has p={p}")
        return scale * vec
    vec = np.zeros(p)
    if direction == "e1":
        vec[0] = 1.0
    elif direction == "last":
        vec[-1] = 1.0
    elif direction == "uniform":
        vec[:] = 1.0 / np.sqrt(p)
    else:
        raise ConfigError(f"unknown mu direction {direction!r}")
    return scale * vec


def build_problem(cfg: dict):
    """Returns (ProblemSpec, corollary_instance_or_None)."""
    pc = cfg["problem"]
    n = int(pc["n"])
    spectrum, inst = build_spectrum(pc["spectrum"], n)
    if inst is not None:
        # Corollary constructions fix mu and the (negative) regularization;
        # the config's mu/lambda entries are ignored for them.
        mu = inst.mu
        lam = inst.lambda_reg
    else:
        mu = build_mu(pc["mu"], spectrum)
        lam = float(pc["lambda"])
    return model.ProblemSpec(spectrum, mu, n, float(pc["eta"]), lam, pc["law"]), inst


def _seedhash(seed: int) -> str:
    return hashlib.sha256(str(seed).encode()).hexdigest()[:8]


def _out_paths(cfg: dict, command: str):
    out_dir = Path(cfg["output"]["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    ts = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    stem = f"{command}_{ts}_{_seedhash(cfg['experiment']['seed'])}"
    return out_dir / f"{stem}.csv", out_dir / f"{stem}.manifest.json"


def _write_manifest(path: Path, cfg: dict, command: str, csv_name: str) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg["experiment"]["seed"],
        "csv": csv_name,
        "config": cfg,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _threads(cfg) -> int:
    t = int(cfg["experiment"]["threads"])
    return t if t > 0 else (os.cpu_count() or 1)


def _maybe_dump(cfg, problem, out_dir: Path) -> None:
    if cfg["output"]["dump_datasets"]:
        from . import solver

        ds = model.sample_dataset(problem, cfg["experiment"]["seed"], trial=0)
        target = out_dir / "datasets" / "trial0"
        model.dump_dataset(ds, target, spectrum_ref=cfg["problem"]["spectrum"]["kind"])
        try:
            model.dump_solution(solver.decompose(ds, problem.lambda_reg).w, target)
        except _NUMERIC_ERRORS:
            pass  # dataset dump stays useful even when this lambda is invalid


def cmd_verify(cfg: dict) -> int:
    ex = cfg["experiment"]
    results, ok = verify.run_all(
        seed=int(ex["seed"]),
        identity_instances=int(ex["identity_instances"]),
        inequality_instances=int(ex["inequality_instances"]),
        corrupt_s=float(ex["corrupt_s"]),
    )
    for r in results:
        print(r.line())
    print("verify:", "OK" if ok else "FAILED")
    return 0 if ok else 1


def cmd_bounds(cfg: dict) -> int:
    problem, _ = build_problem(cfg)
    ex = cfg["experiment"]
    csv_path, manifest_path = _out_paths(cfg, "bounds")
    rows = []
    for k in ex["ks"]:
        qs = bnd.quantities(problem.spectrum, problem.mu, problem.n, int(k), problem.lambda_reg, problem.eta)
        for t in ex["ts"]:
            rows.append(bnd.bounds_row(qs, bnd.lower_bound(qs, float(t), problem.n)))
    if cfg["output"]["csv"]:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(bnd.BOUNDS_COLUMNS)
            writer.writerows(rows)
        _write_manifest(manifest_path, cfg, "bounds", csv_path.name)
        print(f"wrote {len(rows)} rows -> {csv_path}")
    _maybe_dump(cfg, problem, csv_path.parent)
    return 0


def _run_sweep(cfg: dict, command: str) -> int:
    problem, _ = build_problem(cfg)
    ex = cfg["experiment"]
    threads = _threads(cfg)
    if command == "sweep-mu":
        records = xp.sweep_mu_scale(
            problem, ex["scales"], ex["eps"], int(ex["trials"]),
            master_seed=int(ex["seed"]), k=int(ex["k"]), t=float(ex["t"]), threads=threads,
        )
        kind = "mu"
    else:
        records = xp.sweep_lambda(
            problem, ex["lambdas"], ex["eps"], int(ex["trials"]),
            master_seed=int(ex["seed"]), k=int(ex["k"]), t=float(ex["t"]), threads=threads,
        )
        kind = "lambda"
    csv_path, manifest_path = _out_paths(cfg, command.replace("-", "_"))
    if cfg["output"]["csv"]:
        xp.write_sweep_csv(records, csv_path, kind)
        _write_manifest(manifest_path, cfg, command, csv_path.name)
        print(f"wrote {len(records)} rows -> {csv_path}")
    _maybe_dump(cfg, problem, csv_path.parent)
    return 0


def cmd_phase(cfg: dict) -> int:
    ex = cfg["experiment"]
    records = xp.phase_scan(
        ex["q_grid"], float(ex["r"]), float(ex["s"]), ex["n_grid"],
        eps=float(ex["eps"][0] if isinstance(ex["eps"], list) else ex["eps"]),
        trials=int(ex["trials"]) if ex["trials"] else 0,
        master_seed=int(ex["seed"]),
        empirical_n_cap=int(ex["empirical_n_cap"]),
        threads=_threads(cfg),
    )
    csv_path, manifest_path = _out_paths(cfg, "phase")
    if cfg["output"]["csv"]:
        xp.write_sweep_csv(records, csv_path, "phase")
        _write_manifest(manifest_path, cfg, "phase", csv_path.name)
        print(f"wrote {len(records)} rows -> {csv_path}")
    return 0


def cmd_demo(cfg: dict) -> int:
    problem, _ = build_problem(cfg)
    ex = cfg["experiment"]
    k = int(ex["k"]) if int(ex["k"]) > 0 else 1
    mu_dir = problem.mu if np.any(problem.mu) else None
    scale_cfg = ex["mu_scale"]
    if scale_cfg == "auto":
        scale = xp.scale_for_snr(problem.spectrum, mu_dir if mu_dir is not None else np.eye(problem.spectrum.p)[0],
                                 problem.n, 0.0, k=k, factor=float(ex["snr_factor"]))
    else:
        scale = float(scale_cfg)
    record = xp.benign_demo(
        problem.spectrum, scale, problem.n, problem.eta, int(ex["trials"]),
        master_seed=int(ex["seed"]), k=k, mu_dir=mu_dir,
        test_draws=int(ex["test_draws"]), threads=_threads(cfg),
    )
    csv_path, manifest_path = _out_paths(cfg, "demo")
    if cfg["output"]["csv"]:
        xp.write_sweep_csv([record], csv_path, "demo")
        _write_manifest(manifest_path, cfg, "demo", csv_path.name)
        print(f"wrote 1 row -> {csv_path}")
    print(
        f"mu_scale={scale:.6g} train_residual_med={record.train_residual_med:.3e} "
        f"test_error_med={record.test_error_med:.4f} eta={problem.eta}"
    )
    return 0


def cmd_events(cfg: dict) -> int:
    problem, _ = build_problem(cfg)
    ex = cfg["experiment"]
    csv_path, manifest_path = _out_paths(cfg, "events")
    rows = []
    for trial in range(int(ex["trials"])):
        ds = model.sample_dataset(problem, int(ex["seed"]), trial)
        for k in ex["ks"]:
            k = int(k)
            try:
                L = ev.check_A_k(ds, k, problem.lambda_reg)
            except SingularRegularization:
                L = None
            report = ev.check_B_k(ds, problem.mu, k)
            rows.append(ev.events_row(trial, k, problem.lambda_reg, L, report))
    if cfg["output"]["csv"]:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ev.EVENTS_COLUMNS)
            writer.writerows(rows)
        _write_manifest(manifest_path, cfg, "events", csv_path.name)
        print(f"wrote {len(rows)} rows -> {csv_path}")
    return 0


_COMMANDS = {
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "sweep-mu": lambda cfg: _run_sweep(cfg, "sweep-mu"),
    "sweep-lambda": lambda cfg: _run_sweep(cfg, "sweep-lambda"),
    "phase": cmd_phase,
    "demo": cmd_demo,
    "events": cmd_events,
}


def load_config(path) -> dict:
    if path is None:
        return merge_config({})
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if "config" in raw and "command" in raw:  # accept a run manifest directly
        raw = raw["config"]
    return merge_config(raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mixridge", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config (or a run manifest)")
    parser.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: cores)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--corrupt-s", type=float, default=None, dest="corrupt_s",
                        help="test hook: perturb the decomposition denominator in verify")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["experiment"]["seed"] = args.seed
        if args.threads is not None:
            cfg["experiment"]["threads"] = args.threads
        if args.out is not None:
            cfg["output"]["dir"] = args.out
        if args.trials is not None:
            cfg["experiment"]["trials"] = args.trials
        if args.corrupt_s is not None:
            cfg["experiment"]["corrupt_s"] = args.corrupt_s
        return _COMMANDS[args.command](cfg)
    except (ConfigError, InvalidSpectrum, InvalidParams, TooFewTrials) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numeric-domain error: {exc}", file=sys.stderr)
        return 3
    except MixridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
