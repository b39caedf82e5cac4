"""Batch experiment runner: config parsing, seeding, CSV emission.

Config files are plain ``key = value`` lines (``#`` comments and blank lines
ignored, lists comma-separated).  Unknown or duplicate keys are hard errors —
a typo must never silently fall back to a default.  Every CSV starts with a
single provenance comment ``# config_sha256=<hex> seed=<n>`` followed by a
header row; reruns of the same config are byte-identical.

Exit codes: 0 success, 1 verification failure, 2 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .checks import SCOPES, run_checks
from .frame_bundle import coordinate_frame
from .invariant_measure import (DilationSpec, basic_harmonic_residual,
                                carriere_moment_check, dilate_metric,
                                invariant_density_oracle, kappa_dilated,
                                solve_invariant_density)
from .manifold_atlas import Atlas, build_e1, build_e2, chart_point
from .metric_geometry import basic_cos, basic_sin, constant_field, kappa_profile
from .semigroup_mc import estimate_semigroup_fn
from .stochastic_flows import IntegratorConfig, flow_stochastic, sample_brownian

__all__ = ["main"]

FLOAT_FMT = "%.17g"


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# § config parsing
# ---------------------------------------------------------------------------

def _parse_scalar(kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip() != "")
        if kind == "ints":
            return tuple(int(x) for x in raw.split(",") if x.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r} as {kind}: {exc}")
    return raw.strip()


@dataclass(frozen=True)
class Key:
    kind: str                     # int | float | floats | ints | str
    default: object = None
    required: bool = False
    choices: tuple[str, ...] = ()


_MANIFOLD_KEYS = {
    "manifold": Key("str", "e1", choices=("e1", "e2")),
    "f_coeffs": Key("floats", ()),
    "u_coeffs": Key("floats", ()),
    "a": Key("ints", (2, 1, 1, 1)),
}

_SCHEMAS: dict[str, dict[str, Key]] = {
    "flow": {**_MANIFOLD_KEYS,
             "k": Key("ints", (8,)),
             "t_final": Key("float", 1.0),
             "dt": Key("float", 1e-3),
             "stride": Key("int", 16),
             "seed": Key("int", required=True)},
    "semigroup": {**_MANIFOLD_KEYS,
                  "fn": Key("str", "cos_t", choices=("cos_t", "sin_t", "const")),
                  "z": Key("floats", ()),
                  "t": Key("floats", (0.1,)),
                  "n_paths": Key("ints", (10000,)),
                  "k": Key("int", 8),
                  "mode": Key("str", "transverse", choices=("transverse", "full")),
                  "workers": Key("int", 1),
                  "seed": Key("int", required=True)},
    "invariant": {**_MANIFOLD_KEYS,
                  "n": Key("int", 512),
                  "seed": Key("int", 0)},
    "dilate": {**_MANIFOLD_KEYS,
               "n": Key("int", 512),
               "seed": Key("int", 0)},
    "carriere": {**_MANIFOLD_KEYS,
                 "n": Key("int", 2048),
                 "m_max": Key("int", 4),
                 "cells": Key("int", 16),
                 "seed": Key("int", 0)},
    "verify": {"scope": Key("str", "all", choices=("all",) + SCOPES),
               "n_paths": Key("int", 2000),
               "seed": Key("int", required=True)},
}


def parse_config_file(path: Path) -> dict[str, str]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {ln}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def resolve_config(experiment: str, raw: dict[str, str],
                   seed_override: int | None) -> dict[str, object]:
    schema = _SCHEMAS[experiment]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {experiment}: {', '.join(unknown)}")
    cfg: dict[str, object] = {}
    for name, key in schema.items():
        if name in raw:
            value = _parse_scalar(key.kind, raw[name])
            if key.choices and value not in key.choices:
                raise ConfigError(
                    f"key {name!r} must be one of {key.choices}, got {value!r}")
            cfg[name] = value
        elif name == "seed" and seed_override is not None:
            pass
        elif key.required:
            raise ConfigError(f"missing required key {name!r} "
                              f"(seeds are explicit; nothing is wall-clock seeded)")
        else:
            cfg[name] = key.default
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    positive = {"k", "n", "n_paths", "t_final", "dt", "stride", "m_max",
                "cells", "workers", "t"}
    for name in positive & set(cfg):
        vals = cfg[name] if isinstance(cfg[name], tuple) else (cfg[name],)
        if any(v <= 0 for v in vals):
            raise ConfigError(f"key {name!r} must be positive, got {cfg[name]}")
    return cfg


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return FLOAT_FMT % v
    return str(v)


def config_digest(experiment: str, cfg: dict[str, object]) -> str:
    lines = [f"experiment={experiment}"]
    lines += [f"{k}={_fmt_value(v)}" for k, v in sorted(cfg.items())]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def _build_atlas(cfg: dict[str, object]) -> Atlas:
    try:
        if cfg["manifold"] == "e1":
            return build_e1(cfg["f_coeffs"])
        a = cfg["a"]
        if len(a) != 4:
            raise ValueError("expected four comma-separated integers")
        return build_e2(np.array(a, dtype=float).reshape(2, 2), cfg["u_coeffs"])
    except ValueError as exc:
        key = "f_coeffs" if cfg["manifold"] == "e1" else "a/u_coeffs"
        raise ConfigError(f"invalid manifold parameters (key {key!r}): {exc}")


# ---------------------------------------------------------------------------
# § CSV emission
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def write_csv(path: Path, digest: str, seed: int,
              header: Sequence[str], rows) -> None:
    lines = [f"# config_sha256={digest} seed={seed}", ",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# § experiments
# ---------------------------------------------------------------------------

def _run_flow(cfg, out: Path, digest: str) -> int:
    atlas = _build_atlas(cfg)
    n = atlas.dims.n
    levels = sorted(set(cfg["k"]))
    finest = levels[-1]
    seed = cfg["seed"]

    endpoints = {}
    traj_rows = []
    for k in levels:
        path = sample_brownian(n, k, cfg["t_final"], seed=seed, index=0)
        icfg = IntegratorConfig(dt=min(cfg["dt"], 2.0 ** -k), k=k,
                                output_stride=cfg["stride"])
        r0 = coordinate_frame(atlas, chart_point(atlas, np.zeros(n)))
        traj = flow_stochastic(atlas, r0, path, icfg)
        endpoints[k] = traj.z[-1]
        if k == finest:
            resid = traj.orthonormality_residuals()
            for i, s in enumerate(traj.times):
                traj_rows.append([s, *traj.z[i], *traj.cover_sheets[i],
                                  float(resid[i])])
    write_csv(out / "flow.csv", digest, seed,
              ["time", *(f"z{i}" for i in range(n)),
               *(f"sheet{i}" for i in range(n)), "ortho_residual"],
              traj_rows)
    conv_rows = [[k, cfg["t_final"],
                  float(np.max(np.abs(endpoints[k] - endpoints[finest])))]
                 for k in levels]
    write_csv(out / "flow_convergence.csv", digest, seed,
              ["k", "t_final", "endpoint_gap_to_finest"], conv_rows)
    return 0


_FN_FIELDS = {"cos_t": basic_cos, "sin_t": basic_sin,
              "const": lambda: constant_field(1.0)}


def _semigroup_oracle(atlas: Atlas, fn_name: str, t0: float, t: float) -> float:
    """Closed-form transition value for the bundled trig observables.

    Both families reduce on t-only observables to a damped (and, for the
    torus bundle, phase-rotated) mode: the rotation rate is pi*L per unit
    time with L = log(lambda)."""
    if fn_name == "const":
        return 1.0
    w = 2.0 * np.pi
    phase = w * t0 + (0.5 * w * atlas.log_lam * t if atlas.kind == "e2" else 0.0)
    decay = np.exp(-0.5 * w ** 2 * t)
    return float(decay * (np.cos(phase) if fn_name == "cos_t" else np.sin(phase)))


def _run_semigroup(cfg, out: Path, digest: str) -> int:
    atlas = _build_atlas(cfg)
    z = np.asarray(cfg["z"], dtype=float)
    if z.size == 0:
        z = np.zeros(atlas.dims.n)
    if z.shape != (atlas.dims.n,):
        raise ConfigError(f"key 'z' needs {atlas.dims.n} components, got {z.size}")
    field = _FN_FIELDS[cfg["fn"]]()
    rows = []
    for t in cfg["t"]:
        for n_paths in cfg["n_paths"]:
            est = estimate_semigroup_fn(atlas, field, z, float(t),
                                        mode=cfg["mode"], n_paths=int(n_paths),
                                        k=cfg["k"], seed=cfg["seed"],
                                        workers=cfg["workers"])
            oracle = _semigroup_oracle(atlas, cfg["fn"], float(z[-1]), float(t))
            rows.append([float(t), int(n_paths), est.mean, est.stderr, oracle])
    write_csv(out / "semigroup.csv", digest, cfg["seed"],
              ["t", "n_paths", "mean", "stderr", "oracle"], rows)
    return 0


def _run_invariant(cfg, out: Path, digest: str) -> int:
    atlas = _build_atlas(cfg)
    try:
        gd = solve_invariant_density(atlas, cfg["n"])
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"invalid value for key 'n': {exc}")
    oracle = invariant_density_oracle(atlas)(gd.t)
    sqrt_g = np.exp(atlas.warp.eval(gd.t))
    rows = [[gd.t[i], gd.values[i], oracle[i],
             abs(gd.values[i] - oracle[i]), sqrt_g[i]]
            for i in range(gd.n)]
    write_csv(out / "invariant.csv", digest, cfg["seed"],
              ["t", "phi", "oracle", "abs_err", "sqrt_g"], rows)
    return 0


def _run_dilate(cfg, out: Path, digest: str) -> int:
    atlas = _build_atlas(cfg)
    try:
        gd = solve_invariant_density(atlas, cfg["n"])
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"invalid value for key 'n': {exc}")
    spec = DilationSpec.from_density(gd)
    dilated = dilate_metric(spec)
    gd2 = solve_invariant_density(dilated, cfg["n"])
    kap = kappa_dilated(atlas, spec)
    kp = kap.derivative()
    wp = dilated.warp.derivative()
    rows = []
    for i, t in enumerate(gd.t):
        k_t = kap.eval(t)
        delta = -(kp.eval(t) + wp.eval(t) * k_t)
        rows.append([t, gd.values[i], float(spec.log_psi.eval(t)),
                     float(k_t), float(delta), gd2.values[i]])
    write_csv(out / "dilate.csv", digest, cfg["seed"],
              ["t", "phi_base", "log_psi", "kappa_dilated",
               "delta_kappa", "phi_dilated"], rows)
    return 0


def _run_carriere(cfg, out: Path, digest: str) -> int:
    atlas = _build_atlas(cfg)
    if atlas.kind != "e2":
        raise ConfigError("key 'manifold': the moment identity needs e2")
    try:
        gd = solve_invariant_density(atlas, cfg["n"])
        dilated = dilate_metric(DilationSpec.from_density(gd))
        fams = [("one", lambda t: np.ones_like(t))]
        for m in range(1, cfg["m_max"] + 1):
            fams.append((f"sin{m}", lambda t, m=m: np.sin(2 * np.pi * m * t)))
            fams.append((f"cos{m}", lambda t, m=m: np.cos(2 * np.pi * m * t)))
        moment_rows = []
        for name, F in fams:
            mc = carriere_moment_check(dilated, F, n=cfg["n"],
                                       n_cells=cfg["cells"])
            moment_rows.append([name, mc.lhs, mc.rhs, mc.deviation, mc.f0, mc.c])
        cell_rows = [[c.alpha, c.beta, c.mu, c.lebesgue_over_mu, c.h_over_c,
                      abs(c.lebesgue_over_mu - c.h_over_c)]
                     for c in mc.cells]
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"invalid value for key 'n'/'cells': {exc}")
    write_csv(out / "carriere_moments.csv", digest, cfg["seed"],
              ["f", "lhs", "rhs", "deviation", "f0", "c"], moment_rows)
    write_csv(out / "carriere_cells.csv", digest, cfg["seed"],
              ["alpha", "beta", "mu", "lebesgue_over_mu", "h_over_c",
               "deviation"], cell_rows)
    return 0


def _run_verify(cfg, out: Path, digest: str) -> int:
    results = run_checks(cfg["scope"], n_paths=cfg["n_paths"], seed=cfg["seed"])
    rows = [[r.name, r.scope, r.residual, r.tolerance, r.passed]
            for r in results]
    write_csv(out / "verify.csv", digest, cfg["seed"],
              ["name", "scope", "residual", "tolerance", "passed"], rows)
    n_fail = sum(not r.passed for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.scope}/{r.name}: "
              f"residual {r.residual:.3e} vs tolerance {r.tolerance:.1e}")
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 1 if n_fail else 0


_RUNNERS: dict[str, Callable] = {
    "flow": _run_flow,
    "semigroup": _run_semigroup,
    "invariant": _run_invariant,
    "dilate": _run_dilate,
    "carriere": _run_carriere,
    "verify": _run_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="foliated-flows",
        description="Run foliated stochastic-flow experiments to CSV.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=Path("."))
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        raw = parse_config_file(args.config)
        cfg = resolve_config(args.experiment, raw, args.seed)
        digest = config_digest(args.experiment, cfg)
        args.out.mkdir(parents=True, exist_ok=True)
        return _RUNNERS[args.experiment](cfg, args.out, digest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
