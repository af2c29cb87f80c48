"""Command-line entry point.

Exit status: 0 success, 1 validation error, 2 solver failure, 3 failed verification.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .exceptions import ConfigError, ConvergenceError, DataFormatError, HerdInvestError, ModelRangeError
from .herd import optimal_decision, solve_eta
from .market import TRADING_DAYS, estimate_gbm_params, read_price_csv
from .merton import DecisionCurve, expected_cara_utility, rational_decision, terminal_wealth_moments
from .quadrature import time_grid
from .opinion import equivalence_lambda, integrate_opinion_ode, investment_opinion
from .sensitivity import PARAMETERS, SweepError, SweepSpec, run_sweep
from .simulate import SimulationSpec, simulate_wealth
from .tables import write_json, write_table
from .verify import report, run_verification

log = logging.getLogger("herdinvest")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


def _config(args, allow_no_herd=False) -> RunConfig:
    if not args.config:
        raise ConfigError("--config", "a configuration file is required for this command")
    cfg = load_config(args.config, allow_no_herd=allow_no_herd)
    return cfg.with_overrides(grid_n=args.grid_n, tol=args.tol, out_dir=args.out)


def _emit(doc: dict):
    print(json.dumps(doc, indent=2, default=float))


def cmd_estimate(args) -> int:
    if args.csv is None or args.r is None:
        raise ConfigError("--csv/--r", "estimate needs --csv PATH and --r RATE")
    series = read_price_csv(args.csv, dt=args.dt)
    params = estimate_gbm_params(series, args.r)
    doc = {"r": params.r, "mu": params.mu, "sigma": params.sigma, "v": params.v, "n_observations": len(series)}
    out = Path(args.out or ".")
    write_json(out / "estimate.json", doc)
    _emit(doc)
    return EXIT_OK


def solve_outputs(cfg: RunConfig) -> tuple[dict[str, np.ndarray], dict]:
    s = cfg.scenario
    m, ag, h = s.market, s.agents, s.herd
    t = h.grid()
    sol = solve_eta(m, ag, h)
    p_star = optimal_decision(m, ag, h, sol, t)
    z = investment_opinion(sol, h, m, ag, t)
    columns = {
        "t": t,
        "p1_star": p_star.values,
        "p1_rational": rational_decision(m, ag.alpha1, h.T, t).values,
        "p2_rational": rational_decision(m, ag.alpha2, h.T, t).values,
        "z1": z.values,
    }
    summary = {
        "eta": sol.eta,
        "eta_lower": sol.eta_lower,
        "eta_upper": sol.eta_upper,
        "method": sol.method,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "contraction_value": sol.contraction_value,
        "lambda": equivalence_lambda(m, ag, h),
        "z1_terminal": float(z.values[-1]),
        "theta": h.theta,
        "vartheta": s.vartheta,
        "rho": h.rho,
        "varrho": h.varrho,
    }
    return columns, summary


def cmd_solve(args) -> int:
    cfg = _config(args)
    columns, summary = solve_outputs(cfg)
    write_table(cfg.out_dir / f"decision.{cfg.out_format}", columns, cfg.delimiter)
    write_json(cfg.out_dir / "summary.json", summary)
    _emit(summary)
    return EXIT_OK


def cmd_merton(args) -> int:
    cfg = _config(args, allow_no_herd=True)
    m = cfg.market
    t = time_grid(cfg.T, cfg.grid_n)
    curves = {name: rational_decision(m, a.alpha, cfg.T, t) for name, a in (("p1", cfg.agent1), ("p2", cfg.agent2))}
    write_table(
        cfg.out_dir / f"merton.{cfg.out_format}",
        {"t": t, "p1_rational": curves["p1"].values, "p2_rational": curves["p2"].values},
        cfg.delimiter,
    )
    doc = {}
    for key, agent in (("agent1", cfg.agent1), ("agent2", cfg.agent2)):
        curve = curves["p1" if key == "agent1" else "p2"]
        mean, var = terminal_wealth_moments(m, agent.x0, curve)
        doc[key] = {
            "alpha": agent.alpha,
            "x0": agent.x0,
            "mean_terminal_wealth": mean,
            "var_terminal_wealth": var,
            "expected_utility": expected_cara_utility(m, agent.alpha, agent.x0, curve),
        }
    write_json(cfg.out_dir / "merton.json", doc)
    _emit(doc)
    return EXIT_OK


def cmd_opinion(args) -> int:
    cfg = _config(args)
    s = cfg.scenario
    t = s.grid()
    sol = solve_eta(s.market, s.agents, s.herd)
    closed = investment_opinion(sol, s.herd, s.market, s.agents, t)
    ode = integrate_opinion_ode(float(closed.values[-1]), s.herd, s.market, t)
    err = np.abs(ode.values - closed.values)
    write_table(
        cfg.out_dir / f"opinion.{cfg.out_format}",
        {"t": t, "z1_closed_form": closed.values, "z1_ode": ode.values, "abs_error": err},
        cfg.delimiter,
    )
    rate = s.herd.varrho * s.market.r
    trend = "decreasing" if rate > 0 else "increasing" if rate < 0 else "constant"
    doc = {"eta": sol.eta, "z1_terminal": float(closed.values[-1]), "max_abs_error": float(err.max()), "trend": trend}
    write_json(cfg.out_dir / "opinion.json", doc)
    _emit(doc)
    return EXIT_OK


def _decision_for(cfg: RunConfig, which: str) -> DecisionCurve:
    t = np.linspace(0.0, cfg.T, cfg.grid_n + 1)
    if which == "zero":
        return DecisionCurve(t, np.zeros_like(t))
    if which == "rational1":
        return rational_decision(cfg.market, cfg.agent1.alpha, cfg.T, t)
    if which == "rational2":
        return rational_decision(cfg.market, cfg.agent2.alpha, cfg.T, t)
    s = cfg.scenario
    return optimal_decision(s.market, s.agents, s.herd, solve_eta(s.market, s.agents, s.herd), t)


def cmd_simulate(args) -> int:
    cfg = _config(args, allow_no_herd=args.decision != "optimal")
    decision = _decision_for(cfg, args.decision)
    a1 = cfg.agent1
    spec = SimulationSpec(args.paths, args.steps or cfg.grid_n, args.seed, keep_samples=False)
    res = simulate_wealth(cfg.market, a1.x0, decision, spec, alpha=a1.alpha, workers=args.workers)
    mean, var = terminal_wealth_moments(cfg.market, a1.x0, decision)
    exact = expected_cara_utility(cfg.market, a1.alpha, a1.x0, decision)
    doc = {
        "decision": args.decision,
        "n_paths": spec.n_paths,
        "n_steps": spec.n_steps,
        "seed": spec.seed,
        "mc_mean_terminal_wealth": res.mean_terminal_wealth,
        "mc_var_terminal_wealth": res.var_terminal_wealth,
        "closed_mean_terminal_wealth": mean,
        "closed_var_terminal_wealth": var,
        "mc_expected_utility": res.mean_utility,
        "mc_std_error": res.std_error_utility,
        "closed_expected_utility": exact,
        "z_score": (res.mean_utility - exact) / res.std_error_utility if res.std_error_utility else 0.0,
    }
    write_json(cfg.out_dir / "simulation.json", doc)
    _emit(doc)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    results = run_verification(cfg.scenario, n_paths=args.paths, seed=args.seed)
    for r in results:
        print(r.line())
    doc = report(results)
    write_json(cfg.out_dir / "verify.json", doc)
    return EXIT_OK if doc["passed"] else EXIT_VERIFY


def load_sweep_spec(path, cfg: RunConfig) -> SweepSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("--spec", f"cannot read sweep spec: {exc}") from None
    allowed = {"parameter", "values", "t_probe", "curves"}
    if not isinstance(doc, dict):
        raise ConfigError("--spec", "sweep spec must be an object")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"sweep.{unknown[0]}", "unknown key")
    if doc.get("parameter") not in PARAMETERS:
        raise ConfigError("sweep.parameter", f"expected one of {PARAMETERS}")
    try:
        return SweepSpec(
            parameter=doc["parameter"],
            values=tuple(doc.get("values", ())),
            fixed=cfg.scenario,
            t_probe=tuple(doc.get("t_probe", ())),
            curves=bool(doc.get("curves", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("sweep", str(exc)) from None


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not args.spec:
        raise ConfigError("--spec", "sweep needs --spec PATH")
    spec = load_sweep_spec(args.spec, cfg)
    rows = run_sweep(spec)
    columns = {"parameter_value": [r.value for r in rows], "eta": [r.eta for r in rows]}
    for j, tp in enumerate(spec.t_probe):
        columns[f"z1_t{tp:g}"] = [r.z_at_probes[j] for r in rows]
    out = write_table(cfg.out_dir / f"sweep_{spec.parameter}.{cfg.out_format}", columns, cfg.delimiter)
    if spec.curves:
        for i, r in enumerate(rows):
            write_table(
                cfg.out_dir / f"curves_{spec.parameter}_{i}.{cfg.out_format}",
                {"t": r.decision.t_grid, "p1_star": r.decision.values, "z1": r.opinion.values},
                cfg.delimiter,
            )
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid-n", type=int, dest="grid_n")
    common.add_argument("--tol", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="herdinvest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="GBM parameters from a date,close CSV")
    p.add_argument("--csv", required=False)
    p.add_argument("--r", type=float, help="risk-free rate")
    p.add_argument("--dt", type=float, default=1.0 / TRADING_DAYS)
    p.set_defaults(func=cmd_estimate)

    sub.add_parser("solve", parents=[common], help="optimal decision and opinion").set_defaults(func=cmd_solve)
    sub.add_parser("merton", parents=[common], help="theta=0 rational decisions").set_defaults(func=cmd_merton)
    sub.add_parser("opinion", parents=[common], help="opinion ODE vs closed form").set_defaults(func=cmd_opinion)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo wealth simulation")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--steps", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--decision", choices=("optimal", "rational1", "rational2", "zero"), default="optimal")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="run all numerical checks")
    p.add_argument("--paths", type=int, default=100_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep tables")
    p.add_argument("--spec", help="JSON sweep spec {parameter, values, t_probe, curves}")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SweepError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER if isinstance(exc.cause, (ConvergenceError, ModelRangeError)) else EXIT_INVALID
    except (ConvergenceError, ModelRangeError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except (ConfigError, DataFormatError, HerdInvestError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
