"""Batch command-line front end.

Analysis results go to stdout as JSON inside a result envelope; tabular
outputs (trajectories, hazard tables, yearly series, simulated records) go
to a CSV file named with --out, never both.  Diagnostics go to stderr.

Exit codes: 0 success, 1 usage error, 2 data or convergence error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import MradlabError, __version__
from . import dataio, hazards, limits, simulate, survival, tails, trends

THREADS_ENV_VAR = "MRADLAB_THREADS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("hazard model")
    group.add_argument("--scenario", "--model", dest="scenario", default="plateau",
                       help="built-in scenario name or a section of --config "
                            "(hard_limit, plateau, decline, sigmoid, life_table)")
    group.add_argument("--config", help="scenario definition file (key/value blocks)")
    group.add_argument("--gompertz-a", type=float, default=hazards.DEFAULT_GOMPERTZ_A)
    group.add_argument("--gompertz-b", type=float, default=hazards.DEFAULT_GOMPERTZ_B)
    group.add_argument("--transition-age", type=float, default=None)
    group.add_argument("--plateau-q", type=float, default=None,
                       help="annual death probability on the plateau")
    group.add_argument("--annual-survival", type=float, default=None,
                       help="annual survival probability on the plateau "
                            "(sets plateau-q to its complement)")
    group.add_argument("--decline-rate", type=float, default=0.1)
    group.add_argument("--asymptote", type=float, default=1.0)
    group.add_argument("--limit-age", type=float, default=115.0)
    group.add_argument("--life-table", help="life table CSV for the life_table scenario")


def _build_model(args: argparse.Namespace) -> hazards.HazardModel:
    if args.config:
        scenarios = hazards.load_scenarios(args.config)
        if args.scenario not in scenarios:
            raise MradlabError(f"scenario {args.scenario!r} not found in {args.config}")
        return scenarios[args.scenario]
    name = args.scenario
    if name == "hard_limit":
        return hazards.hard_limit_scenario(args.limit_age, args.gompertz_a, args.gompertz_b)
    if name == "plateau":
        plateau_q = args.plateau_q
        if args.annual_survival is not None:
            if plateau_q is not None:
                raise _UsageError("give either --plateau-q or --annual-survival, not both")
            plateau_q = 1.0 - args.annual_survival
        if plateau_q is None:
            plateau_q = 0.53
        return hazards.plateau_scenario(plateau_q, args.transition_age,
                                        args.gompertz_a, args.gompertz_b)
    if name == "decline":
        return hazards.decline_scenario(args.transition_age or 110.0, args.decline_rate,
                                        args.gompertz_a, args.gompertz_b)
    if name == "sigmoid":
        return hazards.sigmoid_scenario(args.asymptote, args.transition_age or 110.0,
                                        args.gompertz_a, args.gompertz_b)
    if name == "life_table":
        if not args.life_table:
            raise _UsageError("life_table scenario needs --life-table FILE")
        return dataio.read_life_table(args.life_table).as_hazard_model()
    raise _UsageError(f"unknown scenario {name!r}")


def _add_plan_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("exposure plan")
    group.add_argument("--base-age", type=float, default=survival.SUPERCENTENARIAN_AGE)
    group.add_argument("--start-year", type=int, default=2000)
    group.add_argument("--individuals", type=int, default=1,
                       help="individuals reaching the base age per year")
    group.add_argument("--years", type=int, default=1, help="number of plan years")
    group.add_argument("--counts", default=None,
                       help="explicit per-year counts, comma separated (overrides "
                            "--individuals/--years)")


def _build_plan(args: argparse.Namespace) -> survival.ExposurePlan:
    if args.counts:
        counts = tuple(int(c) for c in args.counts.split(","))
    else:
        counts = (args.individuals,) * args.years
    return survival.ExposurePlan(base_age=args.base_age, start_year=args.start_year,
                                 counts=counts)


def _model_params(args: argparse.Namespace) -> dict:
    keys = ("scenario", "config", "gompertz_a", "gompertz_b", "transition_age",
            "plateau_q", "annual_survival", "decline_rate", "asymptote",
            "limit_age", "life_table")
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


def _emit_json(command: str, result, paths: Sequence[str] = (),
               params: Optional[dict] = None) -> None:
    envelope = dataio.result_envelope(command, dataio.hash_inputs(paths, params), result)
    print(json.dumps(envelope, indent=2))


def _write_out(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- subcommands ----------------------------------------------------------------


def _cmd_trajectories(args) -> int:
    model = _build_model(args)
    rows = model.trajectory_table(args.age_from, args.age_to, args.step)
    if args.out:
        buffer = io.StringIO()
        hazards.write_trajectory_csv(rows, buffer)
        _write_out(args.out, buffer.getvalue())
        return 0
    result = [{"age": age, "annual_death_prob": q} for age, q in rows]
    _emit_json("trajectories", result, params=_model_params(args) | {
        "from": args.age_from, "to": args.age_to, "step": args.step})
    return 0


def _cmd_limit(args) -> int:
    model = _build_model(args)
    plan = _build_plan(args)
    result = limits.solve_effective_limit(model, plan, args.epsilon)
    _emit_json("limit", result.as_dict(), params=_model_params(args) | {
        "epsilon": args.epsilon, "counts": list(plan.counts),
        "base_age": plan.base_age})
    return 0


def _cmd_profile(args) -> int:
    model = _build_model(args)
    plan = _build_plan(args)
    epsilons = [float(e) for e in args.epsilons.split(",")]
    rows = limits.limit_profile(model, plan, epsilons)
    _emit_json("profile", [r.as_dict() for r in rows], params=_model_params(args) | {
        "epsilons": epsilons, "counts": list(plan.counts), "base_age": plan.base_age})
    return 0


def _cmd_fit_tail(args) -> int:
    records = dataio.read_records(args.input)
    sample = tails.excesses(records, args.threshold)
    result: dict = {"threshold": args.threshold, "n_excesses": len(sample)}
    if args.kind in ("exponential", "both"):
        result["exponential"] = tails.fit_exponential(sample, threshold=args.threshold).as_dict()
    if args.kind in ("gpd", "both"):
        result["gpd"] = tails.fit_gpd(sample, threshold=args.threshold).as_dict()
    if args.kind == "both":
        statistic, p_value = tails.lr_test_exp_vs_gpd(sample)
        result["lr_test"] = {"statistic": statistic, "p_value": p_value}
    _emit_json("fit-tail", result, paths=[args.input],
               params={"threshold": args.threshold, "kind": args.kind})
    return 0


def _cmd_test_split(args) -> int:
    records = dataio.read_records(args.input)
    early = [r for r in records if r.death_year <= args.split_year]
    late = [r for r in records if r.death_year > args.split_year]
    sample_a = tails.excesses(early, args.threshold)
    sample_b = tails.excesses(late, args.threshold)
    statistic, p_value = tails.split_period_test(sample_a, sample_b)
    _emit_json("test-split", {
        "split_year": args.split_year, "threshold": args.threshold,
        "n_early": len(sample_a), "n_late": len(sample_b),
        "statistic": statistic, "p_value": p_value,
    }, paths=[args.input], params={"split_year": args.split_year,
                                   "threshold": args.threshold})
    return 0


def _cmd_hazard(args) -> int:
    records = dataio.read_records(args.input)
    ages = list(range(args.from_age, args.to_age + 1))
    estimates = tails.hazard_by_age(records, ages)
    if args.out:
        buffer = io.StringIO()
        tails.write_hazard_csv(estimates, buffer)
        _write_out(args.out, buffer.getvalue())
        return 0
    _emit_json("hazard", [vars(e) for e in estimates], paths=[args.input],
               params={"from_age": args.from_age, "to_age": args.to_age})
    return 0


def _cmd_trend(args) -> int:
    if args.permutations > 0 and args.seed is None:
        raise _UsageError("--permutations is stochastic and requires --seed")
    records = dataio.read_records(args.input)
    series = trends.yearly_extremes(records, k_max=args.k_max, country=args.country,
                                    threshold=args.threshold)
    if args.out:
        buffer = io.StringIO()
        series.to_csv(buffer)
        _write_out(args.out, buffer.getvalue())
        return 0
    result: dict = {"rows": len(series), "field": args.field}
    result["linear"] = trends.fit_linear(series, args.field).as_dict()
    segmented = trends.fit_segmented(series, args.field,
                                     n_permutations=args.permutations, seed=args.seed)
    result["segmented"] = segmented.as_dict()
    params = {"field": args.field, "country": args.country, "k_max": args.k_max,
              "threshold": args.threshold, "permutations": args.permutations,
              "seed": args.seed}
    _emit_json("trend", result, paths=[args.input], params=params)
    return 0


def _cmd_correlate(args) -> int:
    records = dataio.read_records(args.input)
    series = trends.yearly_extremes(records, k_max=args.k_max, country=args.country,
                                    threshold=args.threshold)
    coefficient, p_value = trends.correlate(series, args.x, args.y, method=args.method)
    _emit_json("correlate", {
        "x": args.x, "y": args.y, "method": args.method,
        "coefficient": coefficient, "p_value": p_value, "rows": len(series),
    }, paths=[args.input], params={"x": args.x, "y": args.y, "method": args.method})
    return 0


def _cmd_simulate(args) -> int:
    model = _build_model(args)
    plan = _build_plan(args)
    config = simulate.SimulationConfig(model=model, plan=plan, seed=args.seed)
    records = simulate.simulate_lifetimes(config, replication=args.replication)
    if args.out:
        _write_out(args.out, dataio.records_to_csv(records))
        return 0
    result = [{
        "id": r.record_id,
        "birth_date": r.birth_date.isoformat(),
        "death_date": r.death_date.isoformat(),
        "country": r.country,
        "validated": r.validated,
        "age_at_death": r.age_at_death,
    } for r in records]
    _emit_json("simulate", result, params=_model_params(args) | {
        "seed": args.seed, "replication": args.replication,
        "counts": list(plan.counts), "base_age": plan.base_age,
        "start_year": plan.start_year})
    return 0


def _cmd_mrad_model(args) -> int:
    result: dict = {"mean_excess": args.mean_excess}
    if args.n is not None:
        result["n"] = args.n
        result["mean"] = survival.max_exponential_mean(args.n, args.mean_excess)
        if args.age is not None:
            result["age"] = args.age
            result["cdf_at_age"] = survival.max_exponential_cdf(
                args.n, args.mean_excess, args.age)
    if args.counts:
        counts = [int(c) for c in args.counts.split(",")]
        result["counts"] = counts
        result["means"] = [survival.max_exponential_mean(n, args.mean_excess)
                           for n in counts]
    if args.n is None and not args.counts:
        raise _UsageError("mrad-model needs --n or --counts")
    _emit_json("mrad-model", result, params={
        "n": args.n, "counts": args.counts, "mean_excess": args.mean_excess,
        "age": args.age})
    return 0


# -- repro: the headline-number suite --------------------------------------------


def _cmd_repro(args) -> int:
    checks: list[tuple[str, bool, str]] = []

    def record(name: str, ok: bool, detail: str) -> None:
        checks.append((name, ok, detail))

    plateau_half = hazards.plateau_scenario(plateau_q=0.5, transition_age=110.0)
    survival_40 = plateau_half.cumulative_survival(110.0, 150.0)
    target = 2.0 ** -40
    rel = abs(survival_40 - target) / target
    record("coin-toss-survival-110-150", rel < 1e-12,
           f"value={survival_40:.6e} target={target:.6e} rel_err={rel:.2e}")

    plateau_47 = hazards.plateau_scenario(plateau_q=0.47, transition_age=110.0)
    one_person = survival.ExposurePlan(base_age=110.0, counts=(1,))
    headline = limits.solve_effective_limit(plateau_47, one_person, 1e-4)
    record("effective-limit-headline", 124.5 <= headline.limit_age <= 125.5,
           f"limit_age={headline.limit_age:.4f} target_range=[124.5, 125.5]")

    p_year = limits.epsilon_at_age(plateau_47, one_person, 125.0)
    waiting = survival.expected_waiting_time(plateau_47, 1, 125.0)
    record("waiting-time-10k-years", p_year <= 1e-4 and waiting >= 10_000,
           f"p_year={p_year:.3e} waiting={waiting:.0f}y")

    mean_5 = survival.max_exponential_mean(5, 1.31)
    mean_35 = survival.max_exponential_mean(35, 1.31)
    record("overlay-max-exponential-means",
           112.8 <= mean_5 <= 113.2 and 115.2 <= mean_35 <= 115.7,
           f"mean(5)={mean_5:.3f} mean(35)={mean_35:.3f}")

    gen = np.random.default_rng(args.seed)
    reps = 200_000
    maxima = 110.0 + 1.31 * gen.standard_exponential((reps, 35)).max(axis=1)
    mc_mean = float(maxima.mean())
    mc_se = float(maxima.std(ddof=1) / math.sqrt(reps))
    record("overlay-monte-carlo-35", abs(mc_mean - mean_35) <= 4 * mc_se,
           f"mc={mc_mean:.4f} analytic={mean_35:.4f} 4se={4 * mc_se:.4f}")

    hard = hazards.hard_limit_scenario(limit_age=115.0)
    hard_limit_result = limits.solve_effective_limit(hard, one_person, 1e-12)
    plateau_profile = [limits.solve_effective_limit(plateau_47, one_person, eps)
                       for eps in (1e-6, 1e-12)]
    gap = plateau_profile[1].limit_age - plateau_profile[0].limit_age
    record("limit-vs-effective-limit",
           hard.endpoint() == 115.0 and hard_limit_result.limit_age == 115.0
           and plateau_47.endpoint() is None and gap > 10.0,
           f"hard_Le(1e-12)={hard_limit_result.limit_age} plateau_gap={gap:.2f}y")

    plan = survival.ExposurePlan(base_age=110.0, start_year=1995, counts=(10, 10, 10))
    config = simulate.SimulationConfig(model=plateau_47, plan=plan,
                                       seed=args.seed, replications=20_000)
    estimate, se = simulate.empirical_exceedance(config, 118.0)
    analytic = survival.cohort_exceedance(plateau_47, plan, 118.0)
    record("oracle-agreement-118", abs(estimate - analytic) <= 4 * max(se, 1e-12),
           f"mc={estimate:.5f} analytic={analytic:.5f} 4se={4 * se:.5f}")

    csv_a = dataio.records_to_csv(simulate.simulate_lifetimes(
        simulate.SimulationConfig(model=plateau_47, plan=plan, seed=args.seed)))
    csv_b = dataio.records_to_csv(simulate.simulate_lifetimes(
        simulate.SimulationConfig(model=plateau_47, plan=plan, seed=args.seed)))
    record("simulation-determinism", csv_a == csv_b,
           f"bytes={len(csv_a)} identical={csv_a == csv_b}")

    width = max(len(name) for name, _, _ in checks)
    all_ok = True
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        all_ok &= ok
        print(f"{status}  {name:<{width}}  {detail}")
    print(f"{'ALL PASS' if all_ok else 'FAILURES PRESENT'} ({sum(ok for _, ok, _ in checks)}"
          f"/{len(checks)})")
    return 0 if all_ok else 2


# -- wiring ----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="mradlab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"mradlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectories", help="emit (age, annual death probability) rows")
    _add_model_args(p)
    p.add_argument("--from", dest="age_from", type=float, default=30.0)
    p.add_argument("--to", dest="age_to", type=float, default=130.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", help="write CSV here instead of JSON to stdout")
    p.set_defaults(func=_cmd_trajectories)

    p = sub.add_parser("limit", help="solve the effective limit for one epsilon")
    _add_model_args(p)
    _add_plan_args(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("profile", help="effective limits across several epsilons")
    _add_model_args(p)
    _add_plan_args(p)
    p.add_argument("--epsilons", required=True, help="comma-separated thresholds")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("fit-tail", help="fit exponential/GPD tails to record excesses")
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=float, default=110.0)
    p.add_argument("--kind", choices=("exponential", "gpd", "both"), default="both")
    p.set_defaults(func=_cmd_fit_tail)

    p = sub.add_parser("test-split", help="test for a mortality change between periods")
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=float, default=110.0)
    p.add_argument("--split-year", type=int, required=True,
                   help="last death year of the early period")
    p.set_defaults(func=_cmd_test_split)

    p = sub.add_parser("hazard", help="raw annual death probabilities by age")
    p.add_argument("--input", required=True)
    p.add_argument("--from-age", type=int, default=110)
    p.add_argument("--to-age", type=int, default=115)
    p.add_argument("--out", help="write CSV here instead of JSON to stdout")
    p.set_defaults(func=_cmd_hazard)

    p = sub.add_parser("trend", help="yearly series plus linear and trend-break fits")
    p.add_argument("--input", required=True)
    p.add_argument("--field", default="mrad")
    p.add_argument("--country", default=None)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--threshold", type=float, default=110.0)
    p.add_argument("--permutations", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write the yearly series CSV here")
    p.set_defaults(func=_cmd_trend)

    p = sub.add_parser("correlate", help="correlate two series columns")
    p.add_argument("--input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.add_argument("--country", default=None)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--threshold", type=float, default=110.0)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("simulate", help="simulate death records under a scenario")
    _add_model_args(p)
    _add_plan_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--out", help="write records CSV here instead of JSON to stdout")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("mrad-model", help="max-of-exponentials overlay values")
    p.add_argument("--mean-excess", type=float, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--age", type=float, default=None)
    p.add_argument("--counts", default=None, help="comma-separated yearly counts")
    p.set_defaults(func=_cmd_mrad_model)

    p = sub.add_parser("repro", help="run the headline-number suite, print pass/fail")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_repro)

    return parser


def _read_thread_cap() -> Optional[int]:
    raw_value = os.environ.get(THREADS_ENV_VAR)
    if raw_value is None:
        return None
    try:
        cap = int(raw_value)
    except ValueError:
        raise _UsageError(f"{THREADS_ENV_VAR} must be an integer, got {raw_value!r}")
    if cap < 1:
        raise _UsageError(f"{THREADS_ENV_VAR} must be at least 1, got {cap}")
    return cap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        _read_thread_cap()  # validated; execution is single-threaded either way
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"mradlab: usage error: {exc}", file=sys.stderr)
        return 1
    except (MradlabError, FileNotFoundError, ValueError) as exc:
        print(f"mradlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
