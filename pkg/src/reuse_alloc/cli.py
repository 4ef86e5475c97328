"""Command-line front end.

Commands: run (trial batteries), compare (adds the LP value and the empirical
ratio), lp (LP value, optionally the y vector or the fluid-guide value),
certify (certificate report), gen (instance JSON), randproc (fluid
availability of a single-unit process spec).

Output is CSV with a header row, 12 significant digits, fully determined by
the flags and the mandatory --seed; there is no wall-clock seeding anywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import benchmarks, distributions, generators, model, policies, randproc

_GENERATORS = {
    "example_a1": generators.example_a1,
    "example_a2": generators.example_a2,
    "omniscient_gap": generators.omniscient_gap,
    "upper_triangular": generators.upper_triangular,
    "mnl_counterexample": generators.mnl_counterexample,
}


class CliError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _emit(rows, header, out_path=None):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _gen_kwargs(pairs):
    out = {}
    for key, raw in pairs:
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load_instance(args) -> tuple:
    if getattr(args, "instance", None):
        with open(args.instance) as fh:
            inst = model.from_json(json.load(fh))
        name = os.path.basename(args.instance)
    elif getattr(args, "gen", None):
        maker = _GENERATORS.get(args.gen)
        if maker is None:
            raise CliError(f"unknown generator {args.gen!r}")
        try:
            inst = maker(**_gen_kwargs(args.param))
        except TypeError as exc:
            raise CliError(f"bad generator parameters: {exc}") from None
        name = args.gen
    else:
        raise CliError("provide --instance FILE or --gen NAME")
    bad = model.validate(inst)
    if bad:
        raise CliError("invalid instance: " + "; ".join(bad))
    return inst, name


def _policies(args):
    out = []
    for name in args.policies.split(","):
        name = name.strip()
        if name == "galg":
            raise CliError("galg is a benchmark value; use `compare` with policy galg")
        try:
            out.append((name, policies.make_policy(name)))
        except ValueError:
            raise CliError(f"unknown policy {name!r}") from None
    return out


def _dump_trace(path, instance, policy, trials, seed, shared):
    from .engine import simulate

    rows = []
    for k in range(trials):
        tr = simulate(instance, policy, seed, k, shared_durations=shared)
        for rec in tr.records:
            rows.append((k, rec.arrival, rec.time,
                         rec.decision, "" if rec.resource is None else rec.resource,
                         ";".join(str(u) for u in rec.units), rec.reward))
    _emit(rows, ["trial", "arrival", "time", "decision", "resource", "units", "reward"], path)


def cmd_run(args) -> int:
    from .engine import run_trials

    inst, name = _load_instance(args)
    named = _policies(args)
    rows = []
    rids = [r.id for r in inst.resources]
    for pname, pol in named:
        s = run_trials(inst, pol, args.trials, args.seed,
                       threads=args.threads, shared_durations=args.shared_durations)
        rows.append([name, pname, args.trials, args.seed, s.mean, s.se, s.ci95[0], s.ci95[1]]
                    + [s.per_resource_mean[r] for r in rids])
    header = (["instance", "policy", "trials", "seed", "mean", "se", "ci_lo", "ci_hi"]
              + [f"mean_r{r}" for r in rids])
    _emit(rows, header, args.out)
    if args.trace:
        if len(named) != 1:
            raise CliError("--trace needs exactly one policy")
        _dump_trace(args.trace, inst, named[0][1], args.trials, args.seed, args.shared_durations)
    return 0


def cmd_compare(args) -> int:
    from .engine import run_trials

    inst, name = _load_instance(args)
    lp = benchmarks.lp_value(inst)
    rows = []
    for pname in args.policies.split(","):
        pname = pname.strip()
        if pname == "galg":
            guide = policies.run_galg(inst)
            mean, se = guide.fluid_reward, 0.0
        else:
            try:
                pol = policies.make_policy(pname)
            except ValueError:
                raise CliError(f"unknown policy {pname!r}") from None
            s = run_trials(inst, pol, args.trials, args.seed, threads=args.threads)
            mean, se = s.mean, s.se
        rows.append([name, pname, args.trials, args.seed, mean, se, lp, mean / lp if lp else float("nan")])
    _emit(rows, ["instance", "policy", "trials", "seed", "mean", "se", "lp_value", "ratio"], args.out)
    return 0


def cmd_lp(args) -> int:
    inst, name = _load_instance(args)
    sol = benchmarks.solve_lp(benchmarks.build_lp(inst))
    if args.y_csv:
        rows = [[t, rid, v] for (t, rid), v in sorted(sol.y.items()) if v > 1e-12]
        _emit(rows, ["arrival", "resource", "y"], args.out)
        return 0
    rows = [[name, sol.status, sol.objective]]
    header = ["instance", "status", "lp_value"]
    if args.galg:
        rows[0].append(policies.run_galg(inst).fluid_reward)
        header.append("galg_fluid")
    _emit(rows, header, args.out)
    return 0


def cmd_certify(args) -> int:
    inst, name = _load_instance(args)
    sol = benchmarks.solve_lp(benchmarks.build_lp(inst))
    opt = benchmarks.lp_rounding_policy(inst, sol)
    report = benchmarks.certificate_check(inst, args.alg, opt, args.trials,
                                          args.alpha, args.beta, master_seed=args.seed)
    rows = [[name, r.resource, r.theta, r.opt_lambda_sum, r.opt_i, r.lhs, r.rhs, r.se,
             "pass" if r.passed else "fail"] for r in report.rows]
    rows.append([name, "cond1", report.cond1_lhs, "", "", report.cond1_lhs, report.cond1_rhs,
                 report.cond1_se, "pass" if report.cond1_passed else "fail"])
    _emit(rows, ["instance", "resource", "theta", "opt_lambda_sum", "opt_i", "lhs", "rhs", "se", "status"],
          args.out)
    return 0


def cmd_gen(args) -> int:
    maker = _GENERATORS.get(args.name)
    if maker is None:
        raise CliError(f"unknown generator {args.name!r}")
    try:
        inst = maker(**_gen_kwargs(args.param))
    except TypeError as exc:
        raise CliError(f"bad generator parameters: {exc}") from None
    text = json.dumps(model.to_json(inst), indent=None)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0


def cmd_randproc(args) -> int:
    with open(args.spec) as fh:
        obj = json.load(fh)
    spec = randproc.ProcessSpec(
        dist=distributions.from_json(obj["distribution"]),
        sigma=tuple(obj["sigma"]), p=tuple(obj["p"]))
    eta, reward = randproc.fluid_process(spec)
    rows = [[t, spec.sigma[t], spec.p[t], float(eta[t])] for t in range(len(eta))]
    rows.append(["reward", "", "", reward])
    _emit(rows, ["arrival", "sigma", "p", "eta"], args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reuse-alloc",
                                 description="online allocation of reusable resources: trials and benchmarks")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_instance_opts(p):
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--gen", help="built-in generator name")
        p.add_argument("--param", nargs=2, action="append", default=[],
                       metavar=("KEY", "VALUE"), help="generator parameter, repeatable")
        p.add_argument("--out", help="write CSV here instead of stdout")

    p = sub.add_parser("run", help="simulate policies, print summary CSV")
    add_instance_opts(p)
    p.add_argument("--policies", required=True, help="comma-separated policy names")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=int(os.environ.get("REUSE_ALLOC_THREADS", "1")))
    p.add_argument("--trace", help="dump per-arrival trace CSV here")
    p.add_argument("--shared-durations", action="store_true",
                   help="multi-unit allocations share one duration draw")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="policies vs the LP bound")
    add_instance_opts(p)
    p.add_argument("--policies", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=int(os.environ.get("REUSE_ALLOC_THREADS", "1")))
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("lp", help="solve the fluid LP bound")
    add_instance_opts(p)
    p.add_argument("--y-csv", action="store_true", help="print nonzero y values")
    p.add_argument("--galg", action="store_true", help="add the fluid-guide value column")
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("certify", help="empirical certificate report")
    add_instance_opts(p)
    p.add_argument("--alg", default="galg", choices=["galg", "rba", "galg_swapped"])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("gen", help="write a generated instance as JSON")
    p.add_argument("name")
    p.add_argument("--param", nargs=2, action="append", default=[], metavar=("KEY", "VALUE"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("randproc", help="fluid availability of a process spec")
    p.add_argument("spec", help="JSON file with distribution, sigma, p")
    p.add_argument("--out")
    p.set_defaults(func=cmd_randproc)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, benchmarks.UnsupportedMode, model.NoEdges, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
