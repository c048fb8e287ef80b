"""Command-line surface.

Subcommands: analyze, simulate, optimize, sweep, verify. Inputs come from an
INI-style config file (sections and keys listed in ``CONFIG_SCHEMA``; unknown
ones are rejected) plus repeatable ``--set section.key=value`` overrides.
Powers are accepted in dBm and converted once at ingestion. Every run writes
the fully resolved configuration next to its CSVs. Numbers are formatted with
15 significant digits so reruns diff cleanly; rows are written in input order
regardless of worker completion order.

Exit codes: 0 success, 1 infeasible configuration, 2 invalid input,
3 internal/numerical error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytics, optimizer, simulator, verify
from .errors import InfeasibleBracketError, NumericalInstabilityError, \
    QuadratureError
from .model import SystemConfig, dbm_to_mw, derive_constants, max_data_symbols

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_FLOAT_LIST = "float_list"
SWEEP_KINDS = ("success_vs_qc", "dep_vs_tau", "min_dep_vs_pmax",
               "cr_surface", "cr_vs_pmax")

# section -> key -> (type, default); type is one of int, float, str, bool,
# or _FLOAT_LIST (comma separated)
CONFIG_SCHEMA = {
    "system": {
        "p_max_dbm": (float, 20.0),
        "n0_dbm": (float, 0.0),
        "l_t": (int, 10),
        "l_f": (int, 10),
        "delta": (float, 1e-4),
        "f_ar": (float, 10.0),
        "f_rb": (float, 10.0),
        "r_ab": (float, 1.0),
        "epsilon": (float, 0.1),
    },
    "analysis": {
        "q_c": (float, 5.0),
        "l_d": (int, 100),
        "tau_points": (int, 512),
    },
    "simulation": {
        "n_blocks": (int, 10000),
        "seed": (int, 12345),
        "mode": (str, "asymptotic"),
        "l_w": (int, 0),
        "tau": (float, math.nan),
    },
    "optimizer": {
        "a_q": (float, math.nan),
        "k_max": (int, 20),
        "rho_tol": (float, 1e-6),
        "tau_grid": (int, 512),
    },
    "sweep": {
        "kind": (str, "success_vs_qc"),
        "qc_start": (float, 1.0),
        "qc_stop": (float, 40.0),
        "qc_points": (int, 10),
        "ld_values": (_FLOAT_LIST, "100,200"),
        "pmax_dbm_values": (_FLOAT_LIST, "12,20"),
        "pmax_dbm_start": (float, 2.0),
        "pmax_dbm_stop": (float, 30.0),
        "pmax_points": (int, 15),
        "tau_points": (int, 20),
        "ld_start": (int, 10),
        "ld_stop": (int, 250),
        "ld_step": (int, 10),
        "constrained": (bool, True),
        "simulate": (bool, False),
        "n_blocks": (int, 10000),
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: Path | None
    overrides: tuple[str, ...]
    output_dir: Path
    seed: int | None
    jobs: int


def _parse_value(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is _FLOAT_LIST:
            return tuple(float(p) for p in raw.split(",") if p.strip())
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path: Path | None, overrides: tuple[str, ...]) -> dict:
    """Schema-checked config: file values over defaults, --set over both."""
    resolved = {sec: {k: (tuple(float(p) for p in d.split(","))
                          if t is _FLOAT_LIST else d)
                      for k, (t, d) in keys.items()}
                for sec, keys in CONFIG_SCHEMA.items()}
    if path is not None:
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from None
        for sec in parser.sections():
            if sec not in CONFIG_SCHEMA:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, raw in parser.items(sec):
                if key not in CONFIG_SCHEMA[sec]:
                    raise ConfigError(f"unknown key '{key}' in section [{sec}]")
                typ = CONFIG_SCHEMA[sec][key][0]
                resolved[sec][key] = _parse_value(raw, typ, f"[{sec}] {key}")
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        target, raw = item.split("=", 1)
        sec, key = target.split(".", 1)
        if sec not in CONFIG_SCHEMA or key not in CONFIG_SCHEMA[sec]:
            raise ConfigError(f"unknown config key {sec}.{key}")
        typ = CONFIG_SCHEMA[sec][key][0]
        resolved[sec][key] = _parse_value(raw, typ, f"--set {sec}.{key}")
    if resolved["sweep"]["kind"] not in SWEEP_KINDS:
        raise ConfigError(
            f"sweep.kind must be one of {', '.join(SWEEP_KINDS)}")
    if resolved["simulation"]["mode"] not in ("asymptotic", "finite"):
        raise ConfigError("simulation.mode must be 'asymptotic' or 'finite'")
    return resolved


def system_config(conf: dict) -> SystemConfig:
    s = conf["system"]
    try:
        return SystemConfig(
            p_max=dbm_to_mw(s["p_max_dbm"]), n0=dbm_to_mw(s["n0_dbm"]),
            l_t=s["l_t"], l_f=s["l_f"], delta=s["delta"],
            f_ar=s["f_ar"], f_rb=s["f_rb"], r_ab=s["r_ab"],
            epsilon=s["epsilon"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".15g")
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_resolved_config(conf: dict, out_dir: Path) -> None:
    parser = configparser.ConfigParser()
    for sec, keys in conf.items():
        parser[sec] = {}
        for key, val in keys.items():
            if isinstance(val, tuple):
                parser[sec][key] = ",".join(_fmt(v) for v in val)
            else:
                parser[sec][key] = _fmt(val)
    with open(out_dir / "resolved_config.ini", "w", encoding="utf-8",
              newline="\n") as fh:
        parser.write(fh)


def _trial(conf: dict, seed_override: int | None,
           n_blocks: int | None = None) -> simulator.TrialConfig:
    sim = conf["simulation"]
    seed = seed_override if seed_override is not None else sim["seed"]
    return simulator.TrialConfig(
        n_blocks=n_blocks if n_blocks is not None else sim["n_blocks"],
        seed=seed, mode=sim["mode"],
        l_w=sim["l_w"] if sim["mode"] == "finite" else None)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def cmd_analyze(manifest: RunManifest, conf: dict) -> int:
    cfg = system_config(conf)
    a = conf["analysis"]
    dc = derive_constants(cfg, a["q_c"], a["l_d"])
    curve = analytics.detection_curve(dc, a["tau_points"])
    p_su = analytics.success_probability(dc)
    tau_min, tau_max = analytics.tau_bounds(dc)
    cr = analytics.covert_rate(dc, p_su, cfg.r_ab)
    out = manifest.output_dir
    write_csv(out / "analyze.csv",
              ["tau", "p_fa", "p_md", "xi", "xi_lb"],
              zip(curve.taus, curve.p_fa, curve.p_md, curve.xi, curve.xi_lb))
    write_csv(out / "analyze_summary.csv",
              ["theta", "p_su", "tau_min", "tau_max", "tau_star",
               "xi_lb_star", "cr"],
              [[dc.theta, p_su, tau_min, tau_max, curve.tau_star,
                curve.xi_lb_star, cr]])
    return EXIT_OK


def cmd_simulate(manifest: RunManifest, conf: dict) -> int:
    cfg = system_config(conf)
    a = conf["analysis"]
    dc = derive_constants(cfg, a["q_c"], a["l_d"])
    tau = conf["simulation"]["tau"]
    if math.isnan(tau):
        tau, _ = analytics.optimal_tau(dc, conf["optimizer"]["tau_grid"])
    trial = _trial(conf, manifest.seed)
    report = simulator.run_trials(cfg, a["q_c"], a["l_d"], tau, trial)
    xi_closed = analytics.dep(dc, tau)
    p_su_closed = analytics.success_probability(dc)
    write_csv(manifest.output_dir / "simulate.csv",
              ["q_c", "l_d", "tau", "n_blocks", "seed", "mode",
               "n_h1", "n_ar", "n_rb", "n_fa", "n_md",
               "p_su_hat", "p_su_defined", "xi_hat",
               "ci_halfwidth_psu", "ci_halfwidth_xi",
               "p_su_closed", "xi_closed"],
              [[a["q_c"], a["l_d"], tau, report.n_blocks, report.seed,
                trial.mode, report.n_h1, report.n_ar, report.n_rb,
                report.n_fa, report.n_md, report.p_su_hat,
                report.p_su_defined, report.xi_hat,
                report.ci_halfwidth_psu, report.ci_halfwidth_xi,
                p_su_closed, xi_closed]])
    return EXIT_OK


def cmd_optimize(manifest: RunManifest, conf: dict) -> int:
    cfg = system_config(conf)
    o = conf["optimizer"]
    settings = optimizer.OptimizerSettings(
        a_q=None if math.isnan(o["a_q"]) else o["a_q"],
        k_max=o["k_max"], rho_tol=o["rho_tol"], tau_grid=o["tau_grid"])
    result = optimizer.alternate(cfg, settings)
    out = manifest.output_dir
    write_csv(out / "optimize.csv",
              ["q_c_star", "l_d_star", "tau_star", "cr_star", "xi_lb_star",
               "feasible"],
              [[result.q_c_star, result.l_d_star, result.tau_star,
                result.cr_star, result.xi_lb_star, result.feasible]])
    write_csv(out / "optimize_trace.csv",
              ["iteration", "q_c", "l_d", "cr"],
              result.trace)
    if not result.feasible:
        print("optimization infeasible: no operating point satisfies the "
              "covertness constraint", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_verify(manifest: RunManifest, conf: dict) -> int:
    cfg = system_config(conf)
    a = conf["analysis"]
    dc = derive_constants(cfg, a["q_c"], a["l_d"])
    spec = verify.QuadratureSpec()
    rows = []
    theta_q = verify.h1_probability_quadrature(dc, spec)
    rows.append(["theta", dc.theta, theta_q, abs(dc.theta - theta_q)])
    p_closed = analytics.success_probability(dc)
    p_quad = verify.success_probability_quadrature(dc, spec)
    rows.append(["p_su", p_closed, p_quad, abs(p_closed - p_quad)])
    tau_min, tau_max = analytics.tau_bounds(dc)
    for frac in (0.25, 0.5, 1.0):
        tau = tau_min + frac * (tau_max - tau_min)
        md_closed = analytics.miss_detection(dc, tau)
        md_quad = verify.miss_detection_quadrature(dc, tau, spec)
        rows.append([f"p_md@tau={_fmt(tau)}", md_closed, md_quad,
                     abs(md_closed - md_quad)])
    write_csv(manifest.output_dir / "verify.csv",
              ["quantity", "closed_form", "quadrature", "abs_diff"], rows)
    worst = max(row[3] for row in rows)
    print(f"verify: worst |closed - quadrature| = {worst:.3e}")
    return EXIT_OK if worst < 1e-6 else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# Sweeps. Each kind builds a task list, evaluates it (optionally in a worker
# pool), and writes rows in task order.
# ---------------------------------------------------------------------------

def _sweep_success_point(args):
    cfg, q_c, l_d, do_sim, trial, index = args
    try:
        dc = derive_constants(cfg, q_c, l_d)
        p_closed = analytics.success_probability(dc)
    except ValueError as exc:
        return [l_d, q_c, math.nan, math.nan, math.nan, 0, f"error: {exc}"]
    if not do_sim:
        return [l_d, q_c, p_closed, math.nan, math.nan, 0, ""]
    report = simulator.run_trials(cfg, q_c, l_d, 0.0, trial,
                                  substream_index=index)
    return [l_d, q_c, p_closed, report.p_su_hat, report.ci_halfwidth_psu,
            report.n_h1, "" if report.p_su_defined else "no-enabled-blocks"]


def _sweep_dep_point(args):
    cfg, q_c, l_d, tau, do_sim, trial, index = args
    dc = derive_constants(cfg, q_c, l_d)
    tau_min = dc.phi4 + dc.n0
    p_fa = analytics.false_alarm(dc, tau)
    p_md = analytics.miss_detection(dc, tau)
    xi = analytics.dep(dc, tau)
    xi_lb = analytics.dep_lower_bound(dc, tau) if tau >= tau_min else math.nan
    if not do_sim:
        return [10.0 * math.log10(cfg.p_max), tau, p_fa, p_md, xi, xi_lb,
                math.nan, math.nan]
    report = simulator.run_trials(cfg, q_c, l_d, tau, trial,
                                  substream_index=index)
    return [10.0 * math.log10(cfg.p_max), tau, p_fa, p_md, xi, xi_lb,
            report.xi_hat, report.ci_halfwidth_xi]


def _sweep_min_dep_point(args):
    cfg, q_c, l_d = args
    dc = derive_constants(cfg, q_c, l_d)
    tau_at_min, xi_min = analytics.dep_minimum(dc)
    try:
        tau_star, xi_lb_star = analytics.optimal_tau(dc)
        bracket_ok = True
    except InfeasibleBracketError:
        tau_star, xi_lb_star = math.nan, math.nan
        bracket_ok = False
    return [10.0 * math.log10(cfg.p_max), l_d, q_c, xi_min, tau_at_min,
            xi_lb_star, tau_star, bracket_ok]


def _sweep_cr_point(args):
    cfg, q_c, l_d, constrained, settings = args
    dc = derive_constants(cfg, q_c, l_d)
    p_su = analytics.success_probability(dc)
    cr_raw = analytics.covert_rate(dc, p_su, cfg.r_ab)
    pt = optimizer.evaluate_point(cfg, q_c, l_d, settings)
    cr = pt.cr if constrained else cr_raw
    return [l_d, q_c, dc.theta, p_su, cr_raw, pt.feasible, cr]


def _sweep_cr_vs_pmax_point(args):
    cfg, settings = args
    result = optimizer.alternate(cfg, settings)
    return [10.0 * math.log10(cfg.p_max), result.q_c_star, result.l_d_star,
            result.tau_star, result.xi_lb_star, result.cr_star,
            result.feasible]


def _evaluate_tasks(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def cmd_sweep(manifest: RunManifest, conf: dict) -> int:
    cfg = system_config(conf)
    sw = conf["sweep"]
    kind = sw["kind"]
    o = conf["optimizer"]
    settings = optimizer.OptimizerSettings(
        a_q=None if math.isnan(o["a_q"]) else o["a_q"],
        k_max=o["k_max"], rho_tol=o["rho_tol"], tau_grid=o["tau_grid"])
    out = manifest.output_dir

    if kind == "success_vs_qc":
        if sw["qc_points"] < 1 or not sw["ld_values"]:
            raise ConfigError("success_vs_qc sweep needs qc_points >= 1 and "
                              "a non-empty ld_values list")
        qcs = np.linspace(sw["qc_start"], sw["qc_stop"], sw["qc_points"])
        trial = _trial(conf, manifest.seed, sw["n_blocks"])
        tasks = [(cfg, float(q), int(ld), sw["simulate"], trial, i)
                 for i, (ld, q) in enumerate(
                     (ld, q) for ld in sw["ld_values"] for q in qcs)]
        rows = _evaluate_tasks(_sweep_success_point, tasks, manifest.jobs)
        write_csv(out / "sweep_success_vs_qc.csv",
                  ["l_d", "q_c", "p_su_closed", "p_su_sim",
                   "ci_halfwidth_psu", "n_h1", "flag"], rows)
        return EXIT_OK

    if kind == "dep_vs_tau":
        if sw["tau_points"] < 2 or not sw["pmax_dbm_values"]:
            raise ConfigError("dep_vs_tau sweep needs tau_points >= 2 and a "
                              "non-empty pmax_dbm_values list")
        a = conf["analysis"]
        tasks = []
        index = 0
        for pdbm in sw["pmax_dbm_values"]:
            cfg_p = SystemConfig(
                p_max=dbm_to_mw(pdbm), n0=cfg.n0, l_t=cfg.l_t, l_f=cfg.l_f,
                delta=cfg.delta, f_ar=cfg.f_ar, f_rb=cfg.f_rb, r_ab=cfg.r_ab,
                epsilon=cfg.epsilon)
            dc = derive_constants(cfg_p, a["q_c"], a["l_d"])
            tau_min, tau_max = analytics.tau_bounds(dc)
            taus = np.linspace(0.9 * tau_min, 2.0 * tau_max, sw["tau_points"])
            trial = _trial(conf, manifest.seed, sw["n_blocks"])
            for tau in taus:
                tasks.append((cfg_p, a["q_c"], a["l_d"], float(tau),
                              sw["simulate"], trial, index))
                index += 1
        rows = _evaluate_tasks(_sweep_dep_point, tasks, manifest.jobs)
        write_csv(out / "sweep_dep_vs_tau.csv",
                  ["p_max_dbm", "tau", "p_fa", "p_md", "xi", "xi_lb",
                   "xi_sim", "ci_halfwidth_xi"], rows)
        return EXIT_OK

    if kind == "min_dep_vs_pmax":
        if sw["pmax_points"] < 1:
            raise ConfigError("min_dep_vs_pmax sweep needs pmax_points >= 1")
        a = conf["analysis"]
        pdbms = np.linspace(sw["pmax_dbm_start"], sw["pmax_dbm_stop"],
                            sw["pmax_points"])
        tasks = []
        for pdbm in pdbms:
            cfg_p = SystemConfig(
                p_max=dbm_to_mw(float(pdbm)), n0=cfg.n0, l_t=cfg.l_t,
                l_f=cfg.l_f, delta=cfg.delta, f_ar=cfg.f_ar, f_rb=cfg.f_rb,
                r_ab=cfg.r_ab, epsilon=cfg.epsilon)
            tasks.append((cfg_p, a["q_c"], a["l_d"]))
        rows = _evaluate_tasks(_sweep_min_dep_point, tasks, manifest.jobs)
        write_csv(out / "sweep_min_dep_vs_pmax.csv",
                  ["p_max_dbm", "l_d", "q_c", "xi_star", "tau_at_xi_star",
                   "xi_lb_star", "tau_star", "bracket_feasible"], rows)
        return EXIT_OK

    if kind == "cr_surface":
        if sw["ld_step"] < 1 or sw["ld_stop"] < sw["ld_start"]:
            raise ConfigError("cr_surface sweep needs a non-empty l_d range")
        ld_cap = max_data_symbols(cfg)
        lds = [ld for ld in range(sw["ld_start"], sw["ld_stop"] + 1,
                                  sw["ld_step"]) if 1 <= ld <= ld_cap]
        if not lds:
            raise ConfigError("cr_surface l_d range is empty after clamping "
                              f"to the monotone cap {ld_cap}")
        tasks = []
        for ld in lds:
            q_min, q_max = analytics.qc_bounds(cfg, ld)
            if q_max <= q_min:
                continue
            for q in np.linspace(q_min, q_max, sw["qc_points"]):
                tasks.append((cfg, float(q), ld, sw["constrained"], settings))
        rows = _evaluate_tasks(_sweep_cr_point, tasks, manifest.jobs)
        write_csv(out / "sweep_cr_surface.csv",
                  ["l_d", "q_c", "theta", "p_su", "cr_unconstrained",
                   "feasible", "cr"], rows)
        return EXIT_OK

    # cr_vs_pmax
    if not sw["pmax_dbm_values"]:
        raise ConfigError("cr_vs_pmax sweep needs a non-empty "
                          "pmax_dbm_values list")
    tasks = []
    for pdbm in sw["pmax_dbm_values"]:
        cfg_p = SystemConfig(
            p_max=dbm_to_mw(pdbm), n0=cfg.n0, l_t=cfg.l_t, l_f=cfg.l_f,
            delta=cfg.delta, f_ar=cfg.f_ar, f_rb=cfg.f_rb, r_ab=cfg.r_ab,
            epsilon=cfg.epsilon)
        tasks.append((cfg_p, settings))
    rows = _evaluate_tasks(_sweep_cr_vs_pmax_point, tasks, manifest.jobs)
    write_csv(out / "sweep_cr_vs_pmax.csv",
              ["p_max_dbm", "q_c_star", "l_d_star", "tau_star", "xi_lb_star",
               "cr_star", "feasible"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point.
# ---------------------------------------------------------------------------

_COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covertlink",
        description="Covert two-hop relay link analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="INI config file (defaults used when omitted)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable)")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None,
                       help="override simulation.seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweeps")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = RunManifest(
        command=args.command, config_path=args.config,
        overrides=tuple(args.overrides), output_dir=args.out,
        seed=args.seed, jobs=max(1, args.jobs))
    conf = load_config(manifest.config_path, manifest.overrides)
    manifest.output_dir.mkdir(parents=True, exist_ok=True)
    write_resolved_config(conf, manifest.output_dir)
    return _COMMANDS[manifest.command](manifest, conf)


def main(argv=None) -> int:
    try:
        code = run(argv)
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleBracketError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalInstabilityError, QuadratureError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
