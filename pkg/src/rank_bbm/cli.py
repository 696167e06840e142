"""Command line driver: one subcommand per experiment.

Configs are TOML with a small strict schema: shared blocks for the
selection density, branching rate, and initial condition, plus one
section named after the subcommand.  Unknown keys are errors rather
than silently ignored, because a typo in a threshold would otherwise
run the default and report the wrong experiment.  Every run writes the
fully resolved config (defaults and derived values expanded) back out
as manifest.cfg, and feeding that manifest back in reproduces the run
byte for byte.

Exit codes: 0 on success, 1 when the request itself is bad, 2 when a
valid request fails at runtime (no gap found, boundary contamination,
and the like).
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # 3.10
    import tomli as _toml

from .engine import (
    EngineConfig,
    InitialCondition,
    simulate,
    write_event_log_csv,
    write_snapshot_csv,
)
from .errors import ParseError, RankBbmError, RuntimeFailure, ValidationError
from .experiments import (
    _auto_domain,
    _support_interval,
    initial_tail_profile,
    run_domination_check,
    run_hydro_convergence,
    run_split_cloud,
    run_velocity_sweep,
    write_domination_csv,
    write_hydro_csv,
    write_split_csv,
    write_velocity_csv,
)
from .pde import PURE_BRANCHING, PdeConfig, estimate_spreading_speed, solve
from .selection import BranchingRate, SelectionPsi, g_from_psi, preset
from .waves import classify, shoot_profile

COMMANDS = ("simulate", "pde", "wave", "hydro", "velocity", "split", "dominate")

# subcommands that run the particle engine or the PDE take a rate and an
# initial condition; the wave/velocity/split theories fix their own
_TAKES_RATE = {"simulate", "pde", "hydro", "dominate"}

_SECTION_KEYS = {
    "simulate": {"n", "T", "snapshot_times", "replicas"},
    "pde": {
        "T",
        "dx",
        "domain",
        "snapshot_times",
        "scheme",
        "boundary_guard",
        "pure_branching",
        "speed_level",
        "speed_window",
        "csv_snapshots",
    },
    "wave": {"c", "z_span", "eps", "grid_step"},
    "hydro": {"n_list", "t_list", "replicas", "dx", "domain"},
    "velocity": {"n_list", "horizon", "fit_window", "replicas", "snapshot_spacing"},
    "split": {"n", "horizon", "replicas", "min_gap"},
    "dominate": {"n", "horizon", "replicas", "sample_times"},
}

_DEFAULTS = {
    "simulate": {
        "psi": "fisher",
        "rate": 1.0,
        "init": {"kind": "point-mass", "x0": 0.0},
        "section": {"n": 200, "T": 2.0, "replicas": 1},
    },
    "pde": {
        "psi": "fisher",
        "rate": 1.0,
        "init": {"kind": "point-mass", "x0": 0.0},
        "section": {
            "T": 10.0,
            "dx": 0.02,
            "scheme": "explicit",
            "boundary_guard": True,
            "pure_branching": False,
            "speed_level": 0.5,
            "csv_snapshots": 9,
        },
    },
    "wave": {
        "psi": "fisher",
        "section": {"z_span": 60.0, "eps": 1e-6, "grid_step": 2e-3},
    },
    "hydro": {
        "psi": "fisher",
        "rate": 1.0,
        "init": {"kind": "uniform", "a": -1.0, "b": 0.0},
        "section": {
            "n_list": [250, 1000, 4000],
            "t_list": [1.0],
            "replicas": 20,
            "dx": 0.01,
        },
    },
    "velocity": {
        "psi": {"pieces": [[0.0, 0.4, 2.5], [0.4, 1.0, 0.0]]},
        "section": {
            "n_list": [64, 256, 1024],
            "horizon": 20.0,
            "replicas": 4,
            "snapshot_spacing": 0.5,
        },
    },
    "split": {
        "psi": "split-cloud",
        "section": {"n": 2000, "horizon": 15.0, "replicas": 10, "min_gap": 5.0},
    },
    "dominate": {
        "psi": "split-cloud",
        "rate": 1.0,
        "init": {"kind": "point-mass", "x0": 0.0},
        "section": {"n": 500, "horizon": 1.5, "replicas": 8},
    },
}


@dataclass
class RunConfig:
    command: str
    master_seed: int
    out_dir: str
    psi: object
    rate: object
    init: object
    params: dict
    doc: dict  # the fully resolved primitive form, what the manifest holds


# ----------------------------------------------------------------- builders


def _build_psi(spec):
    if isinstance(spec, str):
        return preset(spec)
    if isinstance(spec, dict):
        if "pieces" in spec:
            extra = set(spec) - {"pieces"}
            if extra:
                raise ParseError(f"unknown psi keys {sorted(extra)}")
            pieces = [(p[0], p[1], list(p[2:])) for p in spec["pieces"]]
            return SelectionPsi(pieces)
        if "preset" in spec:
            params = {k: v for k, v in spec.items() if k != "preset"}
            try:
                return preset(spec["preset"], **params)
            except TypeError as exc:
                raise ParseError(f"bad preset parameters: {exc}") from None
    raise ParseError(
        "psi must be a preset name, {preset = ..., params}, or {pieces = ...}"
    )


def _build_rate(spec):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return BranchingRate.constant(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "constant":
            _need_keys(spec, {"kind", "value"}, "rate")
            return BranchingRate.constant(spec["value"])
        if kind == "sinusoidal":
            _need_keys(spec, {"kind", "base", "amplitude", "omega", "phase"}, "rate")
            return BranchingRate.sinusoidal(
                spec["base"],
                spec["amplitude"],
                spec.get("omega", 1.0),
                spec.get("phase", 0.0),
            )
        if kind == "piecewise":
            _need_keys(spec, {"kind", "pieces"}, "rate")
            pieces = [(p[0], p[1], list(p[2:])) for p in spec["pieces"]]
            return BranchingRate.piecewise(pieces)
    raise ParseError("rate must be a number or {kind = ..., ...}")


def _build_init(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParseError("init must be a table with a kind")
    kind = spec["kind"]
    iid = spec.get("iid", False)
    if kind == "gaussian":
        _need_keys(spec, {"kind", "iid"}, "init")
        return InitialCondition.gaussian(iid=iid)
    if kind == "uniform":
        _need_keys(spec, {"kind", "a", "b", "iid"}, "init")
        return InitialCondition.uniform(spec["a"], spec["b"], iid=iid)
    if kind == "exponential-tail":
        _need_keys(spec, {"kind", "iid"}, "init")
        return InitialCondition.exponential_tail(iid=iid)
    if kind == "point-mass":
        _need_keys(spec, {"kind", "x0"}, "init")
        return InitialCondition.point_mass(spec["x0"])
    if kind == "explicit":
        _need_keys(spec, {"kind", "positions"}, "init")
        return InitialCondition.explicit(spec["positions"])
    raise ParseError(f"unknown init kind {kind!r}")


def _need_keys(mapping, allowed, where):
    extra = set(mapping) - allowed
    if extra:
        raise ParseError(f"unknown key {where}.{sorted(extra)[0]}")


# ------------------------------------------------------------------ parsing


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError:
        raise ParseError(f"config file {path!r} does not exist") from None
    except _toml.TOMLDecodeError as exc:
        # the decoder message already names line and column
        raise ParseError(f"{path}: {exc}") from None


def _resolve(command, file_doc, overrides):
    """Merge defaults, config file, and flag overrides into one fully
    expanded document, then build the objects it describes."""
    defaults = _DEFAULTS[command]
    allowed_top = {"master_seed", "out_dir", "psi"}
    if command in _TAKES_RATE:
        allowed_top |= {"rate", "init"}
    for key in file_doc:
        if key not in allowed_top and key != command:
            raise ParseError(f"unknown key {key!r} for {command}")
    section = dict(file_doc.get(command, {}))
    for key in section:
        if key not in _SECTION_KEYS[command]:
            raise ParseError(f"unknown key {command}.{key}")

    doc = {
        "master_seed": int(file_doc.get("master_seed", 0)),
        "out_dir": file_doc.get("out_dir", os.path.join("out", command)),
        "psi": file_doc.get("psi", defaults["psi"]),
    }
    if command in _TAKES_RATE:
        doc["rate"] = file_doc.get("rate", defaults["rate"])
        doc["init"] = file_doc.get("init", defaults["init"])
    params = dict(defaults["section"])
    params.update(section)

    for key, value in overrides.items():
        if value is None:
            continue
        if key == "seed":
            doc["master_seed"] = value
        elif key == "out":
            doc["out_dir"] = value
        elif key == "preset":
            doc["psi"] = value
        else:
            params[key] = value

    psi = _build_psi(doc["psi"])
    rate = _build_rate(doc["rate"]) if command in _TAKES_RATE else None
    init = _build_init(doc["init"]) if command in _TAKES_RATE else None
    params = _derive(command, params, psi, rate, init)
    doc[command] = params
    return RunConfig(
        command=command,
        master_seed=doc["master_seed"],
        out_dir=doc["out_dir"],
        psi=psi,
        rate=rate,
        init=init,
        params=params,
        doc=doc,
    )


def _derive(command, params, psi, rate, init):
    """Fill the derived fields so the manifest shows what actually ran."""
    p = dict(params)
    if command == "simulate":
        T = float(p["T"])
        p.setdefault("snapshot_times", [round(i * T / 4.0, 12) for i in range(5)])
    elif command == "pde":
        T = float(p["T"])
        if "domain" not in p:
            g = PURE_BRANCHING if p["pure_branching"] else g_from_psi(psi)
            if p["pure_branching"]:
                lip = 1.0
            else:
                u = np.linspace(0.0, 1.0, 2001)
                lip = float(np.max(np.abs(g.derivative(u))))
            c_bound = math.sqrt(2.0 * rate.r_max * max(lip, 0.0))
            margin = 6.0 + 2.5 * math.sqrt(T) + 1.15 * c_bound * T
            lo, hi = _support_interval(init)
            dx = float(p["dx"])
            p["domain"] = [
                math.floor((lo - margin) / dx) * dx,
                math.ceil((hi + margin) / dx) * dx,
            ]
        if "snapshot_times" not in p:
            p["snapshot_times"] = [float(t) for t in np.linspace(0.0, T, 101)]
        p.setdefault("speed_window", [T / 2.0, T])
    elif command == "hydro":
        if "domain" not in p:
            p["domain"] = list(
                _auto_domain(init, max(p["t_list"]), rate, float(p["dx"]))
            )
    elif command == "velocity":
        h = float(p["horizon"])
        p.setdefault("fit_window", [0.375 * h, h])
    elif command == "dominate":
        if "sample_times" not in p:
            p["sample_times"] = [
                float(t) for t in np.linspace(0.0, float(p["horizon"]), 9)
            ]
    return p


def parse_config(path, command):
    """Load a config file for a subcommand, strictly, with defaults and
    derived fields expanded; returns the built objects alongside the
    manifest-ready document."""
    if command not in COMMANDS:
        raise ParseError(f"unknown subcommand {command!r}")
    return _resolve(command, _load_toml(path), {})


# ----------------------------------------------------------------- manifest


def _toml_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ValidationError(f"cannot serialise {value!r} into a manifest")


def write_manifest(path, doc):
    lines = [f"master_seed = {doc['master_seed']}"]
    lines.append(f"out_dir = {json.dumps(doc['out_dir'])}")
    tables = []
    for key in ("psi", "rate", "init"):
        if key not in doc:
            continue
        value = doc[key]
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_toml_scalar(value)}")
    command = [k for k in doc if k in _SECTION_KEYS][0]
    tables.append((command, doc[command]))
    for name, table in tables:
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_scalar(value)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ------------------------------------------------------------------ runners


def _run_simulate(rc):
    p = rc.params
    replicas = int(p["replicas"])
    for k in range(replicas):
        cfg = EngineConfig(
            n=int(p["n"]),
            psi=rc.psi,
            rate=rc.rate,
            T=float(p["T"]),
            init=rc.init,
            seed=np.random.SeedSequence(rc.master_seed, spawn_key=(k,)),
            snapshot_times=p["snapshot_times"],
        )
        res = simulate(cfg)
        dest = (
            rc.out_dir
            if replicas == 1
            else os.path.join(rc.out_dir, f"replica-{k:03d}")
        )
        os.makedirs(dest, exist_ok=True)
        write_snapshot_csv(os.path.join(dest, "snapshots.csv"), res)
        write_event_log_csv(os.path.join(dest, "events.csv"), res.events)
        final = res.positions[-1]
        print(
            f"replica {k}: n = {res.n}, events = {res.events.count}, "
            f"final span [{final.min():.4f}, {final.max():.4f}]"
        )


def pde_solution(rc):
    """Solve the configured equation and fit the front speed; shared by
    the runner and by tests that check the printed number."""
    p = rc.params
    g = PURE_BRANCHING if p["pure_branching"] else g_from_psi(rc.psi)
    sol = solve(
        PdeConfig(
            g=g,
            rate=rc.rate,
            domain=tuple(p["domain"]),
            dx=float(p["dx"]),
            T=float(p["T"]),
            init=initial_tail_profile(rc.init),
            scheme=p["scheme"],
            snapshot_times=p["snapshot_times"],
            boundary_guard=bool(p["boundary_guard"]),
        )
    )
    fit = estimate_spreading_speed(
        sol, level=float(p["speed_level"]), window=tuple(p["speed_window"])
    )
    return sol, fit


def _write_reaction_csv(path, psi, g, points=201):
    """Samples x, psi(x), g(x) on [0, 1]: the curve data behind the figures."""
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["x", "psi", "g"])
        for x in np.linspace(0.0, 1.0, points):
            writer.writerow([repr(float(x)), repr(float(psi(x))), repr(float(g(x)))])


def _run_pde(rc):
    p = rc.params
    sol, fit = pde_solution(rc)
    picks = np.unique(
        np.linspace(0, sol.times.size - 1, int(p["csv_snapshots"])).round().astype(int)
    )
    with open(os.path.join(rc.out_dir, "pde.csv"), "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["t", "x", "u"])
        for j in picks:
            t = sol.times[j]
            for x, u in zip(sol.grid, sol.u[j]):
                writer.writerow([repr(float(t)), repr(float(x)), repr(float(u))])
    if not p["pure_branching"]:
        _write_reaction_csv(
            os.path.join(rc.out_dir, "reaction.csv"), rc.psi, g_from_psi(rc.psi)
        )
    lo, hi = p["speed_window"]
    print(
        f"front speed c = {fit.speed!r} "
        f"(level {p['speed_level']}, window [{lo:g}, {hi:g}], "
        f"fit residual {fit.max_residual:.3g})"
    )


def _run_wave(rc):
    p = rc.params
    g = g_from_psi(rc.psi)
    cls = classify(g)
    print(
        f"reaction class: {cls.kind}, G'(0) = {cls.g_prime_0!r}, "
        f"G'(1) = {cls.g_prime_1!r}"
    )
    if cls.minimal_speed is not None:
        print(f"minimal wave speed: {cls.minimal_speed!r}")
    if cls.u_star is not None:
        print(f"intermediate stable state: {cls.u_star!r}")
    _write_reaction_csv(os.path.join(rc.out_dir, "reaction.csv"), rc.psi, g)
    if cls.kind not in ("monostable-to-1", "monostable-to-u-star"):
        print("no travelling wave to shoot for this reaction")
        return
    c = float(p.get("c", cls.minimal_speed))
    profile = shoot_profile(
        g,
        c,
        z_span=float(p["z_span"]),
        eps=float(p["eps"]),
        grid_step=float(p["grid_step"]),
    )
    with open(os.path.join(rc.out_dir, "wave.csv"), "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["z", "w"])
        for z, w in zip(profile.z, profile.w):
            writer.writerow([repr(float(z)), repr(float(w))])
    print(
        f"shot profile at c = {c!r}: {profile.z.size} samples, "
        f"residual {profile.residual:.3g}"
    )


def _run_hydro(rc):
    p = rc.params
    table = run_hydro_convergence(
        psi=rc.psi,
        rate=rc.rate,
        rho=rc.init,
        n_list=p["n_list"],
        t_list=p["t_list"],
        replicas=int(p["replicas"]),
        seed=rc.master_seed,
        domain=tuple(p["domain"]),
        dx=float(p["dx"]),
    )
    write_hydro_csv(os.path.join(rc.out_dir, "hydro.csv"), table)
    print(f"{'n':>8} {'t':>8} {'ks_mean':>12} {'ks_stderr':>12} {'replicas':>9}")
    for row in table.rows:
        print(
            f"{row.n:>8} {row.t:>8g} {row.ks:>12.6f} {row.stderr:>12.6f} "
            f"{row.replicas:>9}"
        )


def _run_velocity(rc):
    p = rc.params
    sweep = run_velocity_sweep(
        rc.psi,
        p["n_list"],
        horizon=float(p["horizon"]),
        fit_window=tuple(p["fit_window"]),
        replicas=int(p["replicas"]),
        seed=rc.master_seed,
        snapshot_spacing=float(p["snapshot_spacing"]),
    )
    write_velocity_csv(os.path.join(rc.out_dir, "velocity.csv"), sweep)
    print(f"{'n':>8} {'v_min':>10} {'v_max':>10} {'ci':>10}")
    for row in sweep.rows:
        print(
            f"{row.n:>8} {row.v_min:>10.5f} {row.v_max:>10.5f} "
            f"{row.ci_half_width:>10.5f}"
        )
    if not math.isnan(sweep.slope):
        print(
            f"regression of v on 1/log(n)^2: slope = {sweep.slope!r}, "
            f"intercept = {sweep.intercept!r}"
        )


def _run_split(rc):
    p = rc.params
    report = run_split_cloud(
        n=int(p["n"]),
        horizon=float(p["horizon"]),
        replicas=int(p["replicas"]),
        seed=rc.master_seed,
        psi=rc.psi,
        min_gap=float(p["min_gap"]),
    )
    write_split_csv(os.path.join(rc.out_dir, "split.csv"), report)
    print(
        f"right-cloud fraction: {report.mean_right_fraction:.4f} "
        f"+/- {report.stderr:.4f} over {report.replicas} replicas"
    )


def _run_dominate(rc):
    p = rc.params
    report = run_domination_check(
        psi=rc.psi,
        rate=rc.rate,
        n=int(p["n"]),
        horizon=float(p["horizon"]),
        replicas=int(p["replicas"]),
        seed=rc.master_seed,
        sample_times=p["sample_times"],
    )
    write_domination_csv(os.path.join(rc.out_dir, "domination.csv"), report)
    print(
        f"tail domination violations: {report.violations} over "
        f"{report.replicas} replicas"
    )
    print(
        f"population at t = {report.times[-1]:g}: mean {report.pop_mean[-1]:.1f}, "
        f"expected {report.pop_expected[-1]:.1f}"
    )


_RUNNERS = {
    "simulate": _run_simulate,
    "pde": _run_pde,
    "wave": _run_wave,
    "hydro": _run_hydro,
    "velocity": _run_velocity,
    "split": _run_split,
    "dominate": _run_dominate,
}


# --------------------------------------------------------------------- main


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rank-bbm",
        description="rank-based branching-selection systems and their limits",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    flags = {
        "simulate": [("--n", int), ("--T", float), ("--replicas", int)],
        "pde": [("--T", float), ("--dx", float)],
        "wave": [("--c", float)],
        "hydro": [("--replicas", int)],
        "velocity": [("--horizon", float), ("--replicas", int)],
        "split": [("--n", int), ("--horizon", float), ("--replicas", int)],
        "dominate": [("--n", int), ("--horizon", float), ("--replicas", int)],
    }
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--preset", help="selection density preset name")
        for name, typ in flags[command]:
            p.add_argument(name, type=typ)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1

    overrides = {
        key: getattr(args, key, None)
        for key in ("seed", "out", "preset", "n", "T", "replicas", "horizon", "c", "dx")
        if hasattr(args, key)
    }
    try:
        file_doc = _load_toml(args.config) if args.config else {}
        rc = _resolve(args.command, file_doc, overrides)
        os.makedirs(rc.out_dir, exist_ok=True)
        write_manifest(os.path.join(rc.out_dir, "manifest.cfg"), rc.doc)
        _RUNNERS[rc.command](rc)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except RankBbmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
