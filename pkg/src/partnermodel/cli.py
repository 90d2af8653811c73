"""Command-line front end.

Subcommands: analytic, sweep-lambda-c, mfe, simulate, micro, couple,
branching.  Randomized commands require --seed or generate one and print it.
Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import analytic, branching, io, macro, mfe, micro
from .kernels import BACKEND
from .params import DomainError, IntegrationError, Params


def _add_rates(sp, required=True):
    sp.add_argument("--lambda", dest="lam", type=float, required=required,
                    help="transmission rate within a partnership")
    sp.add_argument("--r-plus", dest="r_plus", type=float, required=required,
                    help="partnership formation rate")
    sp.add_argument("--r-minus", dest="r_minus", type=float, required=required,
                    help="partnership breakup rate")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="partnermodel",
        description="Partner model: analytics, mean-field ODEs, exact "
                    "simulation and branching bounds.")
    ap.add_argument("--config", type=Path, default=None,
                    help="JSON file of defaults; explicit flags override")
    sub = ap.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analytic", help="closed-form quantities")
    _add_rates(p_an)
    p_an.add_argument("--out", type=Path, default=None, help="write JSON report")

    p_sw = sub.add_parser("sweep-lambda-c", help="critical-rate level data on a grid")
    p_sw.add_argument("--r-plus-min", type=float, required=True)
    p_sw.add_argument("--r-plus-max", type=float, required=True)
    p_sw.add_argument("--r-plus-steps", type=int, default=20)
    p_sw.add_argument("--r-minus-min", type=float, required=True)
    p_sw.add_argument("--r-minus-max", type=float, required=True)
    p_sw.add_argument("--r-minus-steps", type=int, default=20)
    p_sw.add_argument("--out", type=Path, default=None,
                      help="CSV path (default: stdout)")

    p_mfe = sub.add_parser("mfe", help="integrate the mean-field equations")
    _add_rates(p_mfe)
    p_mfe.add_argument("--y0", type=float, default=None)
    p_mfe.add_argument("--i0", type=float, default=None)
    p_mfe.add_argument("--si0", type=float, default=None)
    p_mfe.add_argument("--ii0", type=float, default=None)
    p_mfe.add_argument("--t-end", type=float, default=50.0)
    p_mfe.add_argument("--dt", type=float, default=mfe.DEFAULT_DT)
    p_mfe.add_argument("--sample-dt", type=float, default=0.1)
    p_mfe.add_argument("--to-equilibrium", action="store_true",
                       help="report the attracting equilibrium instead")
    p_mfe.add_argument("--out", type=Path, default=None,
                       help="trajectory CSV (or equilibrium JSON)")

    p_sim = sub.add_parser("simulate", help="exact aggregate-chain simulation")
    _add_rates(p_sim)
    p_sim.add_argument("--n", type=int, required=True, help="population size")
    p_sim.add_argument("--i0", type=int, default=None,
                       help="initial infectious singles (default ceil(N/10))")
    p_sim.add_argument("--t-end", type=float, default=100.0)
    p_sim.add_argument("--sample-dt", type=float, default=0.1)
    p_sim.add_argument("--replicas", type=int, default=1)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--run-past-extinction", action="store_true")
    p_sim.add_argument("--avg-from", type=float, default=0.0,
                       help="start of the time-average window in summaries")
    p_sim.add_argument("--out", type=Path, required=True, help="output directory")

    p_mic = sub.add_parser("micro", help="site-level simulation (N <= 200)")
    _add_rates(p_mic)
    p_mic.add_argument("--n", type=int, required=True)
    p_mic.add_argument("--i0", type=int, default=None)
    p_mic.add_argument("--t-end", type=float, default=20.0)
    p_mic.add_argument("--sample-dt", type=float, default=0.1)
    p_mic.add_argument("--seed", type=int, default=None)
    p_mic.add_argument("--out", type=Path, required=True, help="output directory")

    p_cp = sub.add_parser("couple", help="paired site-level runs off one event stream")
    _add_rates(p_cp)
    p_cp.add_argument("--n", type=int, required=True)
    p_cp.add_argument("--i0-a", type=int, default=1)
    p_cp.add_argument("--i0-b", type=int, default=None,
                      help="default ceil(N/10); must be >= --i0-a")
    p_cp.add_argument("--pairs", type=int, default=None,
                      help="initial partnerships (default N//4)")
    p_cp.add_argument("--t-end", type=float, default=20.0)
    p_cp.add_argument("--sample-dt", type=float, default=0.1)
    p_cp.add_argument("--seed", type=int, default=None)
    p_cp.add_argument("--out", type=Path, default=None, help="JSON report")

    p_br = sub.add_parser("branching", help="upper/lower bounding branching process")
    _add_rates(p_br)
    p_br.add_argument("--kind", choices=[branching.UBP, branching.LBP], required=True)
    p_br.add_argument("--delta", type=float, required=True)
    p_br.add_argument("--i0", type=int, default=1)
    p_br.add_argument("--si0", type=int, default=0)
    p_br.add_argument("--ii0", type=int, default=0)
    p_br.add_argument("--t-end", type=float, default=100.0)
    p_br.add_argument("--sample-dt", type=float, default=0.1)
    p_br.add_argument("--replicas", type=int, default=1)
    p_br.add_argument("--seed", type=int, default=None)
    p_br.add_argument("--cap", type=int, default=branching.DEFAULT_CAP)
    p_br.add_argument("--jobs", type=int, default=1)
    p_br.add_argument("--out", type=Path, default=None, help="JSON summary list")
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Merge --config JSON into parser defaults; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", type=Path, default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is not None:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
        if not isinstance(cfg, dict):
            raise DomainError("--config must hold a JSON object")
        ap.set_defaults(**cfg)
        for sp_action in ap._subparsers._group_actions:
            for sp in sp_action.choices.values():
                matched = {}
                for action in sp._actions:
                    if action.dest in cfg:
                        matched[action.dest] = cfg[action.dest]
                        action.required = False
                sp.set_defaults(**matched)
    return argv


def _params(args) -> Params:
    return Params(lam=args.lam, r_plus=args.r_plus, r_minus=args.r_minus)


def _ensure_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}")
    return args.seed


def _fmt(x: float) -> str:
    return format(x, ".9g")


def cmd_analytic(args) -> int:
    p = _params(args)
    d = analytic.derived_constants(p)
    ab = analytic.absorption_closed_form(p)
    r0 = analytic.r0(p)
    cv = analytic.lambda_c(p.r_plus, p.r_minus)
    istar = analytic.i_star(p)
    print(f"y_star   = {_fmt(d.y_star)}")
    print(f"p_r      = {_fmt(d.p_r)}")
    print(f"beta     = {_fmt(d.beta)}")
    print(f"r0       = {_fmt(r0)}")
    print(f"lambda_c = {io.critical_value_csv(cv)}")
    print(f"i_star   = {'none' if istar is None else _fmt(istar)}")
    print("absorption probabilities (from single / one-sided / two-sided):")
    print(f"  to one infectious single : {_fmt(ab.p_af)} {_fmt(ab.p_bf)} {_fmt(ab.p_cf)}")
    print(f"  to two infectious singles: {_fmt(ab.p_ag)} {_fmt(ab.p_bg)} {_fmt(ab.p_cg)}")
    print(f"  drift increments: delta_s={_fmt(ab.delta_s)} "
          f"delta_si={_fmt(ab.delta_si)} delta_ii={_fmt(ab.delta_ii)}")
    if args.out is not None:
        io.write_json(args.out, {
            "y_star": d.y_star, "p_r": d.p_r, "beta": d.beta, "r0": r0,
            "lambda_c": io.critical_value_json(cv),
            "i_star": istar,
            "absorption": {
                "p_af": ab.p_af, "p_ag": ab.p_ag, "p_bf": ab.p_bf,
                "p_bg": ab.p_bg, "p_cf": ab.p_cf, "p_cg": ab.p_cg,
                "delta_s": ab.delta_s, "delta_si": ab.delta_si,
                "delta_ii": ab.delta_ii,
            },
        })
    return 0


def cmd_sweep_lambda_c(args) -> int:
    if args.r_plus_min > args.r_plus_max or args.r_minus_min > args.r_minus_max:
        raise DomainError("grid bounds must be ordered")
    if args.r_plus_steps < 1 or args.r_minus_steps < 1:
        raise DomainError("grid steps must be >= 1")
    rp_grid = np.linspace(args.r_plus_min, args.r_plus_max, args.r_plus_steps)
    rm_grid = np.linspace(args.r_minus_min, args.r_minus_max, args.r_minus_steps)
    rows = []
    for rp in rp_grid:
        for rm in rm_grid:
            cv = analytic.lambda_c(rp, rm)
            if cv.is_finite:
                r0_at = analytic.r0(Params(lam=cv.value, r_plus=rp, r_minus=rm))
                if abs(r0_at - 1.0) > 1e-8:
                    raise RuntimeError(
                        f"critical-value check failed at ({rp:g}, {rm:g}): "
                        f"r0(lambda_c) = {r0_at!r}")
            rows.append((rp, rm, cv))
    lines = ["r_plus,r_minus,lambda_c"]
    lines += [f"{_fmt(rp)},{_fmt(rm)},{io.critical_value_csv(cv)}"
              for rp, rm, cv in rows]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_mfe(args) -> int:
    p = _params(args)
    if args.to_equilibrium:
        eq = mfe.mfe_equilibrium(p, dt=args.dt)
        payload = {"y": eq.y, "i": eq.i, "si": eq.si, "ii": eq.ii}
        print(json.dumps(payload, indent=2))
        if args.out is not None:
            io.write_json(args.out, payload)
        return 0
    start = mfe.interior_start(p)
    y0 = start.y if args.y0 is None else args.y0
    i0 = start.i if args.i0 is None else args.i0
    si0 = start.si if args.si0 is None else args.si0
    ii0 = start.ii if args.ii0 is None else args.ii0
    state0 = mfe.MfeState(y0, i0, si0, ii0)
    stride = max(1, round(args.sample_dt / args.dt))
    traj = mfe.integrate(state0, p, args.t_end, dt=args.dt, sample_stride=stride)
    if args.out is not None:
        io.write_mfe_csv(args.out, traj.times, traj.states)
        print(f"wrote {args.out} ({len(traj.times)} samples)")
    else:
        final = traj.final_state()
        print(f"t={traj.t_final:g} y={_fmt(final.y)} i={_fmt(final.i)} "
              f"si={_fmt(final.si)} ii={_fmt(final.ii)}")
    return 0


def cmd_simulate(args) -> int:
    p = _params(args)
    if args.n < 2 or args.replicas < 1:
        raise DomainError("need --n >= 2 and --replicas >= 1")
    master = _ensure_seed(args)
    init = macro.MacroState.default(args.n, args.i0)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    results = macro.run_replicas(
        init, p, args.t_end, master, args.replicas, jobs=args.jobs,
        sample_dt=args.sample_dt, run_past_extinction=args.run_past_extinction)
    summaries = []
    for r, res in enumerate(results):
        io.write_trajectory_csv(outdir / f"traj_r{r:04d}.csv", res)
        summaries.append(macro.summarize(res, avg_from=args.avg_from))
    io.write_json(outdir / "summary.json",
                  {"backend": BACKEND, "master_seed": master,
                   "n": args.n, "replicas": summaries})
    print(f"wrote {args.replicas} trajectories to {outdir}")
    return 0


def cmd_micro(args) -> int:
    p = _params(args)
    seed = _ensure_seed(args)
    i0 = math.ceil(0.1 * args.n) if args.i0 is None else args.i0
    if not (0 <= i0 <= args.n):
        raise DomainError("--i0 must lie in [0, n]")
    init = micro.MicroState.build(args.n, infected_sites=range(i0))
    res = micro.simulate_micro(init, p, args.t_end, seed, sample_dt=args.sample_dt)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    mres = macro.MacroResult(
        N=args.n, seed=seed, times=res.times, states=res.states,
        n_events=res.n_events, absorbed=bool(res.final.aggregate().infection_free),
        absorption_time=float("nan"), t_final=float(res.times[-1]),
        final_state=res.final.aggregate(), event_times=None,
        event_channels=None, truncated=False)
    io.write_trajectory_csv(outdir / "traj_micro.csv", mres)
    io.write_json(outdir / "summary.json", {
        "seed": seed, "n": args.n, "applied_events": res.n_events,
        "candidate_events": res.n_candidates,
        "final_counts": list(res.final.aggregate().as_tuple()),
    })
    print(f"wrote site-level trajectory to {outdir}")
    return 0


def cmd_couple(args) -> int:
    p = _params(args)
    seed = _ensure_seed(args)
    n = args.n
    i0_b = math.ceil(0.1 * n) if args.i0_b is None else args.i0_b
    n_pairs = n // 4 if args.pairs is None else args.pairs
    if not (0 <= args.i0_a <= i0_b <= n):
        raise DomainError("need 0 <= --i0-a <= --i0-b <= n")
    if 2 * n_pairs > n:
        raise DomainError("--pairs cannot exceed n/2")
    # Pair up the tail sites so initial partnerships are infection-free.
    if i0_b + 2 * n_pairs > n:
        raise DomainError("--pairs and --i0-b overlap; reduce one of them")
    pairs = [(n - 2 * k - 1, n - 2 * k - 2) for k in range(n_pairs)]
    init_a = micro.MicroState.build(n, infected_sites=range(args.i0_a), pairs=pairs)
    init_b = micro.MicroState.build(n, infected_sites=range(i0_b), pairs=pairs)
    res = micro.coupled_pair(init_a, init_b, p, args.t_end, seed,
                             sample_dt=args.sample_dt)
    report = {
        "seed": seed, "n": n, "t_end": args.t_end,
        "samples": len(res.times),
        "containment_violations": res.containment_violations,
        "edge_mismatches": res.edge_mismatches,
    }
    print(json.dumps(report, indent=2))
    if args.out is not None:
        io.write_json(args.out, report)
    if res.containment_violations or res.edge_mismatches:
        print("coupling violated", file=sys.stderr)
        return 1
    return 0


def cmd_branching(args) -> int:
    p = _params(args)
    if args.replicas < 1:
        raise DomainError("need --replicas >= 1")
    master = _ensure_seed(args)
    bp = branching.BranchingParams(p, args.delta, args.kind)
    init = branching.BranchingState(args.i0, args.si0, args.ii0)
    results = branching.run_replicas(init, bp, args.t_end, master,
                                     args.replicas, jobs=args.jobs,
                                     sample_dt=args.sample_dt, cap=args.cap)
    summaries = [branching.summarize(res) for res in results]
    payload = {"master_seed": master, "runs": summaries}
    if args.out is not None:
        io.write_json(args.out, payload)
        print(f"wrote {args.replicas} run summaries to {args.out}")
    else:
        print(json.dumps(payload, indent=2))
    return 0


_COMMANDS = {
    "analytic": cmd_analytic,
    "sweep-lambda-c": cmd_sweep_lambda_c,
    "mfe": cmd_mfe,
    "simulate": cmd_simulate,
    "micro": cmd_micro,
    "couple": cmd_couple,
    "branching": cmd_branching,
}


def main(argv=None) -> int:
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _apply_config(ap, list(argv))
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except (OSError, json.JSONDecodeError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (IntegrationError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
