"""Command-line front end.

Commands:
    check <scenario.json>
    synthesize <scenario.json> -o gains.json
    simulate <scenario.json> -g gains.json [--t-end S] [--dt S]
             [-o trace.csv] [--estimator-factor R] [--plot-dir DIR] [--states]
    demo mupal [--seed K] [--estimator-factor R] [--out-dir DIR] [--plot-dir DIR]

Exit codes: 0 success, 1 domain failure (assumption, search, overshoot),
2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import mupal
from .errors import NoregError, ScenarioFormatError
from .files import load_gains, load_scenario, save_gains, save_scenario
from .graph import laplacian, partition, partition_diagnostics
from .model import EstimatorInit, Scenario, check_assumptions, feasibility_heuristic, invariant_zeros
from .numerics import spectrum
from .pipeline import design_controller
from .sim import (
    assemble_closed_loop,
    block_spectrum_union,
    detect_overshoot_all,
    estimator_init,
    multiset_distance,
    simulate,
)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _fmt_eigs(eigs) -> str:
    parts = []
    for z in sorted(np.asarray(eigs, dtype=complex), key=lambda v: (v.real, v.imag)):
        parts.append(_fmt(z.real) if abs(z.imag) < 1e-9 else f"{z.real:.6g}{z.imag:+.6g}j")
    return "{" + ", ".join(parts) + "}"


def _print_check(scenario: Scenario) -> bool:
    report = check_assumptions(scenario)
    for chk in report.checks:
        status = "pass" if chk.passed else "FAIL"
        line = f"  {chk.name}: {status}"
        if chk.detail:
            line += f"  ({chk.detail})"
        print(line)
    lap = laplacian(scenario.graph)
    part = partition(lap, scenario.informed_count)
    diag = partition_diagnostics(part, scenario.graph)
    print(f"  follower block nonsingular: {diag.l33_nonsingular}")
    if diag.min_real_part is not None:
        print(f"  follower block min Re(eig): {_fmt(diag.min_real_part)}")
    print(f"  reachable from exosystem node: {diag.reachable_from_leader}")
    if not diag.consistent:
        print(f"  warning: {diag.note}")
    for i, ag in enumerate(scenario.agents, start=1):
        rep = feasibility_heuristic(ag)
        z_txt = "n/a" if rep.z is None else str(rep.z)
        print(
            f"  agent {i} search heuristic: n={rep.n} p={rep.p} z={z_txt}"
            f" -> {rep.note}"
        )
    return report.all_passed


def cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"scenario: {args.scenario}")
    return 0 if _print_check(scenario) else 1


def cmd_synthesize(args) -> int:
    scenario = load_scenario(args.scenario)
    report = design_controller(scenario)
    gains = report.gains
    for i, ag in enumerate(scenario.agents):
        eigs = spectrum(ag.A + ag.B @ gains.agents[i].F)
        print(f"  agent {i + 1} closed-loop spectrum: {_fmt_eigs(eigs)}"
              f"  (candidate {report.candidate_indices[i]})")
    print(f"  lambda0 = {_fmt(gains.lambda0)}   mu0 = {_fmt(gains.mu0)}")
    print(f"  gamma_min = {_fmt(report.gamma_min)}   gamma = {_fmt(gains.gamma)}")
    if report.verified_nonovershooting is False:
        print("  warning: estimator-error verification still finds a sign change")
    save_gains(gains, args.out)
    print(f"  gains written to {args.out}")
    return 0


def _simulate_and_report(scenario, gains, t_end, dt, out_csv, plot_dir, store_states):
    cls = assemble_closed_loop(scenario, gains)
    trace = simulate(cls, estimator_init(scenario), t_end=t_end, dt=dt,
                     store_states=store_states)
    entries = detect_overshoot_all(trace)
    flags = scenario.synthesis.flags_for(scenario)
    flat_flags = [f for row in flags for f in row]
    print("  component  peak        settle[s]  verdict")
    ok = True
    for entry, flagged in zip(entries, flat_flags):
        verdict = "nonovershooting" if entry.nonovershooting else (
            f"sign change at t={_fmt(entry.first_crossing)}")
        settle = "-" if entry.settling_time is None else _fmt(entry.settling_time)
        mark = "" if flagged else "  (not flagged)"
        print(f"  {entry.label:9s}  {_fmt(entry.peak):10s}  {settle:9s}  {verdict}{mark}")
        if flagged and not entry.nonovershooting:
            ok = False
    if out_csv:
        trace.write_csv(out_csv)
        print(f"  trace written to {out_csv}")
    if plot_dir:
        from .plots import render_trace_figures

        for path in render_trace_figures(trace, plot_dir):
            print(f"  figure written to {path}")
    return ok, trace


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    gains = load_gains(args.gains)
    if args.estimator_factor is not None:
        policy = (EstimatorInit(kind="exact") if args.estimator_factor == 1.0 else
                  EstimatorInit(kind="relative_perturbation", factor=args.estimator_factor))
        scenario = scenario.with_estimator_init(policy)
    ok, _ = _simulate_and_report(
        scenario, gains, args.t_end, args.dt, args.out, args.plot_dir, args.states,
    )
    return 0 if ok else 1


def cmd_demo(args) -> int:
    if args.which != "mupal":
        print(f"unknown demo {args.which!r}", file=sys.stderr)
        return 2
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    scenario = mupal.mupal_scenario(seed=args.seed, estimator_factor=args.estimator_factor)
    scen_path = os.path.join(out_dir, "mupal_scenario.json")
    save_scenario(scenario, scen_path)
    print(f"scenario written to {scen_path}")

    l33 = partition(laplacian(scenario.graph), scenario.informed_count).L33
    print(f"follower-block spectrum: {_fmt_eigs(spectrum(l33))}")
    ag = scenario.agents[0]
    zs = invariant_zeros(ag.A, ag.B, ag.Cy, np.zeros((ag.p, ag.m)))
    print(f"aircraft invariant zeros: {_fmt_eigs(zs)}")

    print("assumption checks:")
    if not _print_check(scenario):
        print("assumption check failed")
        return 1

    print("synthesis:")
    report = design_controller(scenario)
    gains = report.gains
    for i, agent in enumerate(scenario.agents):
        eigs = spectrum(agent.A + agent.B @ gains.agents[i].F)
        print(f"  agent {i + 1} closed-loop spectrum: {_fmt_eigs(eigs)}")
    print(f"  lambda0 = {_fmt(gains.lambda0)}   mu0 = {_fmt(gains.mu0)}")
    print(f"  gamma_min = {_fmt(report.gamma_min)}   gamma = {_fmt(gains.gamma)}")
    gains_path = os.path.join(out_dir, "mupal_gains.json")
    save_gains(gains, gains_path)
    print(f"  gains written to {gains_path}")

    print("simulation (t_end=30, dt=0.001):")
    csv_path = os.path.join(out_dir, "mupal_trace.csv")
    plot_dir = args.plot_dir or os.path.join(out_dir, "figures")
    ok, _ = _simulate_and_report(
        scenario, gains, 30.0, 1e-3, csv_path, plot_dir, False,
    )
    sep = multiset_distance(
        spectrum(assemble_closed_loop(scenario, gains).a_cl),
        block_spectrum_union(scenario, gains),
    )
    print("acceptance summary:")
    print(f"  nonovershooting outputs: {'all' if ok else 'NOT all'}")
    print(f"  separation-spectrum mismatch: {sep:.3e}"
          "  (grows with observer gain magnitude; see README)")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noreg",
        description="nonovershooting cooperative output regulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="validate a scenario's structural assumptions")
    p_check.add_argument("scenario")
    p_check.set_defaults(func=cmd_check)

    p_syn = sub.add_parser("synthesize", help="design controller gains for a scenario")
    p_syn.add_argument("scenario")
    p_syn.add_argument("-o", "--out", default="gains.json")
    p_syn.set_defaults(func=cmd_synthesize)

    p_sim = sub.add_parser("simulate", help="simulate the closed loop and judge overshoot")
    p_sim.add_argument("scenario")
    p_sim.add_argument("-g", "--gains", required=True)
    p_sim.add_argument("--t-end", type=float, default=30.0)
    p_sim.add_argument("--dt", type=float, default=1e-3)
    p_sim.add_argument("-o", "--out", default=None, help="trace CSV path")
    p_sim.add_argument("--estimator-factor", type=float, default=None)
    p_sim.add_argument("--plot-dir", default=None, help="render figures into this directory")
    p_sim.add_argument("--states", action="store_true", help="include states in the CSV")
    p_sim.set_defaults(func=cmd_simulate)

    p_demo = sub.add_parser("demo", help="run a bundled end-to-end example")
    p_demo.add_argument("which", choices=["mupal"])
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--estimator-factor", type=float, default=1.01)
    p_demo.add_argument("--out-dir", default="mupal_out")
    p_demo.add_argument("--plot-dir", default=None)
    p_demo.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except NoregError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
