"""Experiment runner.

Subcommands: metric | single-card | mix-exact | collide | couple |
golden | appendix.  A JSON config file can predefine any flag; explicit
command-line flags win.  Exit codes: 0 success, 1 an asserted inequality
or golden comparison failed, 2 invalid arguments, 3 infeasible
hypotheses for the requested profile.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import exact
from .appendix import (appendix_quasi_uniform_check, appendix_rw_bounds_check,
                       three_distance_scan)
from .coupling import coupled_run, replay_worked_example, worked_example_expected
from .estimators import (PROFILES, InfeasibleError, estimate_full_collide,
                         estimate_l1_collision, fit_scaling)
from .params import (PHI, ShuffleParams, gamma, golden_gap_report,
                     golden_lmax_check, l_max, norm, position_weight,
                     select_time_T1, select_time_T2, spread_triple,
                     enumerate_N_ell)
from .reporting import record, write_csv, write_jsonl

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_BAD_ARGS = 2
EXIT_INFEASIBLE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocshuffle")
    parser.add_argument("--config", help="JSON config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--alpha", type=str,
                       help="m = floor(alpha * n); 'golden' for the inverse golden ratio")
        p.add_argument("--ell", type=float)
        p.add_argument("--profile", choices=sorted(PROFILES), default=None)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--workers", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--allow-large", action="store_true", default=None)
        return p

    common(sub.add_parser("metric", help="norm/metric tables for (n, m)"))
    common(sub.add_parser("single-card", help="exact single-card mixing profile"))
    common(sub.add_parser("mix-exact", help="exact full-deck mixing (small n)"))
    common(sub.add_parser("collide", help="collision probability estimates"))
    p = common(sub.add_parser("couple", help="three-phase coupling runs"))
    p.add_argument("--replay-worked-example", action="store_true")
    p = common(sub.add_parser("golden", help="golden-ratio norm and gap checks"))
    p.add_argument("--nmax", type=int, default=1024)
    common(sub.add_parser("appendix", help="supporting-inequality validators"))
    return parser


_DEFAULTS = {"seed": 0, "trials": 10000, "workers": 1, "delta": 0.25,
             "allow_large": False, "profile": "desk"}


def _resolve(args: argparse.Namespace) -> dict:
    config = dict(_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            config.update(json.load(fh))
    for key, val in vars(args).items():
        if key in ("config", "command"):
            continue
        if val is not None:
            config[key] = val
    return config


def _record_config(config: dict) -> dict:
    """Drop execution-only keys so the recorded config (and its hash)
    depends only on the experiment, not on how it was scheduled."""
    return {k: v for k, v in config.items() if k not in ("workers", "out")}


def _params_from(config: dict) -> ShuffleParams:
    n = config.get("n")
    if n is None:
        raise ValueError("n is required")
    m = config.get("m")
    alpha = config.get("alpha")
    if m is None and alpha is None:
        raise ValueError("one of m or alpha is required")
    if m is None:
        a = PHI if str(alpha) == "golden" else float(alpha)
        m = int(math.floor(a * n))
    return ShuffleParams(n=int(n), m=int(m))


def cmd_metric(config: dict) -> int:
    params = _params_from(config)
    n = params.n
    ell = config.get("ell") or 2.0 * math.sqrt(n)
    lm = l_max(params)
    sample = list(range(1, min(n, 5) + 1)) + [params.m, n]
    gammas = []
    e = math.sqrt(n)
    while e <= lm:
        gammas.append((e, gamma(params, e), len(enumerate_N_ell(params, e))))
        e *= 2.0
    payload = {
        "n": n, "m": params.m, "modulus": params.modulus,
        "p_table": {x: position_weight(params, x) for x in sorted(set(sample))},
        "norm_samples": {x: vars(norm(params, position_weight(params, x)))
                         for x in sorted(set(sample))},
        "l_max": lm,
        "ell": ell,
        "gamma_at_ell": gamma(params, ell),
        "gamma_curve": gammas,
        "spread_triple": spread_triple(params, min(ell, lm * 0.99)),
        "T1": select_time_T1(params, n),
        "T2": select_time_T2(params, n),
    }
    rec = record("metric", _record_config(config), payload, config["seed"])
    body = write_jsonl(config.get("out"), [rec])
    print(body, end="")
    print(f"# l_max = {lm:g}, gamma(ell={ell:g}) = {payload['gamma_at_ell']}",
          file=sys.stderr)
    return EXIT_OK


def cmd_single_card(config: dict) -> int:
    params = _params_from(config)
    delta = config["delta"]
    t_mix = exact.single_card_mixing_time(params, delta=delta)
    horizon = max(t_mix, 1)
    profile = exact.tv_profile(params, horizon)
    import numpy as np

    rows = []
    dist = np.zeros(params.n)
    dist[0] = 1.0
    for t in range(horizon + 1):
        nz = dist[dist > 0]
        ent = float((nz * np.log(params.n * nz)).sum())
        rows.append((t, f"{profile[t]:.12g}", f"{ent:.12g}"))
        dist = exact.evolve_single_card(params, dist)
    body = write_csv(config.get("out"), ["t", "tv", "ent"], rows)
    if not config.get("out"):
        print(body, end="")
    print(f"# t_mix({delta:g}) = {t_mix} for n={params.n}, m={params.m}",
          file=sys.stderr)
    return EXIT_OK


def cmd_mix_exact(config: dict) -> int:
    params = _params_from(config)
    t_mix, profile = exact.mixing_time_exact_small(
        params, delta=config["delta"], allow_large=config["allow_large"])
    rows = []
    for t, tv in profile:
        dv = exact.full_deck_dist(params, t, allow_large=config["allow_large"])
        rep = exact.entropy_report(dv, params, t)
        rows.append((t, f"{tv:.12g}", f"{rep.ent:.12g}"))
    body = write_csv(config.get("out"), ["t", "tv", "ent"], rows)
    if not config.get("out"):
        print(body, end="")
    print(f"# t_mix({config['delta']:g}) = {t_mix} "
          f"({exact.parity_class(params)} target)", file=sys.stderr)
    return EXIT_OK


def cmd_collide(config: dict) -> int:
    params = _params_from(config)
    profile = PROFILES[config["profile"]]
    seed, trials, workers = config["seed"], config["trials"], config["workers"]
    records = []
    est = estimate_l1_collision(params, "adjacent", trials, seed=seed,
                                workers=workers)
    records.append(record("l1_collision_adjacent", _record_config(config), vars(est), seed))
    if config.get("ell"):
        est = estimate_full_collide(params, config["ell"], profile, trials,
                                    seed=seed, workers=workers)
        records.append(record("full_collide", _record_config(config), vars(est), seed))
    body = write_jsonl(config.get("out"), records)
    print(body, end="")
    return EXIT_OK


def cmd_couple(config: dict, replay: bool = False) -> int:
    params = _params_from(config)
    if replay:
        got = replay_worked_example(params)
        want = worked_example_expected(params)
        for step, (g, w) in enumerate(zip(got, want)):
            marker = "ok" if g == w else "MISMATCH"
            print(f"step {step + 1}: tracked {g[0:2]} primed {g[2:4]} "
                  f"expected {w[0:2]} {w[2:4]} [{marker}]")
        return EXIT_OK if got == want else EXIT_VIOLATION
    seed, trials = config["seed"], config["trials"]
    ell = config.get("ell") or math.sqrt(params.n)
    cards = (1, params.n // 2, params.n)
    records = []
    successes = 0
    runs = min(trials, 200)
    for r in range(runs):
        rep = coupled_run(params, cards, seed=seed + r, ell=ell,
                          check_spread=False)
        successes += bool(rep.success)
    records.append(record("couple", _record_config(config),
                          {"runs": runs, "couplings_completed": successes},
                          seed))
    body = write_jsonl(config.get("out"), records)
    print(body, end="")
    return EXIT_OK


def cmd_golden(config: dict, nmax: int) -> int:
    rows = []
    ok = True
    n = 64
    while n <= max(nmax, 64):
        lm, bound, passed = golden_lmax_check(n)
        rows.append((n, f"{lm:.6g}", f"{bound:.6g}", int(passed)))
        ok &= passed
        n *= 2
    for N in (10, 100, 1000):
        rep = golden_gap_report(N)
        ok &= rep.structure_ok and rep.covering_ok
    body = write_csv(config.get("out"), ["n", "l_max", "bound", "pass"], rows)
    print(body, end="")
    print(f"# golden checks {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_appendix(config: dict) -> int:
    budget = min(config["trials"], 100000)
    qu = appendix_quasi_uniform_check(budget=budget, seed=config["seed"])
    rw = appendix_rw_bounds_check(n_values=(10, 100, 1000),
                                  k_values=None)
    td = three_distance_scan(1000)
    payload = {
        "quasi_uniform": {"passed": qu.passed,
                          "cases_special": qu.cases_special,
                          "cases_general": qu.cases_general,
                          "counterexample": qu.counterexample},
        "rw_bounds": {"passed": rw.passed,
                      "binomial_pairs": rw.binomial_pairs,
                      "max_walk_pairs": rw.max_walk_pairs,
                      "violations": rw.violations[:3]},
        "three_distance": {"passed": td.passed, "checked": td.checked},
    }
    rec = record("appendix", _record_config(config), payload, config["seed"])
    body = write_jsonl(config.get("out"), [rec])
    print(body, end="")
    ok = qu.passed and rw.passed and td.passed
    return EXIT_OK if ok else EXIT_VIOLATION


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve(args)
        if args.command == "metric":
            return cmd_metric(config)
        if args.command == "single-card":
            return cmd_single_card(config)
        if args.command == "mix-exact":
            return cmd_mix_exact(config)
        if args.command == "collide":
            return cmd_collide(config)
        if args.command == "couple":
            return cmd_couple(config, replay=args.replay_worked_example)
        if args.command == "golden":
            return cmd_golden(config, args.nmax)
        if args.command == "appendix":
            return cmd_appendix(config)
        raise ValueError(f"unknown command {args.command}")
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS


if __name__ == "__main__":
    sys.exit(main())
