"""``scenred`` command line: generate, cluster, reduce, solve, evaluate, experiment, bound.

Exit codes: 0 success, 2 usage or validation error, 3 solver failure,
4 violated approximation certificate.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import clustering, harness, matrix_clustering
from . import scenarios as scen
from .dro import evaluate_solution, load_instance, reduce_and_solve, solve
from .errors import (
    IterationLimit,
    NoConvergence,
    ScenredError,
    SearchBudgetExceeded,
    SolverFailure,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CERTIFICATE = 0, 2, 3, 4
SOLVER_ERRORS = (SolverFailure, IterationLimit, NoConvergence, SearchBudgetExceeded)


class UsageError(Exception):
    pass


class CertificateViolation(Exception):
    pass


def _floats(text, flag):
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{flag} needs at least one number")
    return vals


def _ints(text, flag, low=None):
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{flag} needs at least one integer")
    if low is not None and any(v < low for v in vals):
        raise UsageError(f"{flag} values must be >= {low}, got {text!r}")
    return vals


def _positive_k(k):
    if k is None or k < 1:
        raise UsageError(f"--k must be a positive integer, got {k}")
    return k


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _echo(args):
    obj = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    obj.update(rng=scen.RNG_ALGORITHM, perturbation=scen.PERTURBATION_MODE, interval_clipping=True)
    return obj


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    if args.count < 1:
        raise UsageError(f"--count must be a positive integer, got {args.count}")
    if args.kind == "matrices":
        if args.assets < 1:
            raise UsageError(f"--assets must be positive, got {args.assets}")
        data = scen.generate_covariance_scenarios(args.assets, args.count, seed=args.seed)
        _emit(scen.dumps_json(data), args.out)
        return EXIT_OK
    if args.kind == "instance":
        if not 0 <= args.s_inc < 1:
            raise UsageError(f"--s-inc must lie in [0, 1), got {args.s_inc}")
        inst = harness.synthetic_linear_instance(args.count, args.s_inc, args.seed, args.dim, args.rows,
                                                 args.samples, args.delta)
        _emit(inst.to_json(), args.out)
        return EXIT_OK
    if args.base is not None:
        base = _floats(args.base, "--base")
    else:
        if args.dim < 1:
            raise UsageError(f"--dim must be positive, got {args.dim}")
        base = scen.make_rng([args.seed, 7]).uniform(1.0, 10.0, size=args.dim).tolist()
    data = scen.generate_perturbed(scen.PerturbationSpec(base, args.s_inc, args.count, args.seed))
    fmt = "json" if args.out and args.out.endswith(".json") else "csv"
    _emit(scen.dumps_json(data) if fmt == "json" else scen.dumps_csv(data), args.out)
    return EXIT_OK


def cmd_cluster(args):
    _positive_k(args.k)
    data = scen.load(args.input)
    if isinstance(data, scen.MatrixScenarioSet):
        if args.method == "opt":
            part = matrix_clustering.optimal_matrix_partition(data, args.k)
        elif args.method == "kmeans":
            part = matrix_clustering.frobenius_kmeans(data, args.k, seed=args.seed)
        else:
            raise UsageError("--method hyperrect needs vector scenarios")
        obj = part.to_json_obj(data)
        if not part.certify(data):
            raise CertificateViolation("matrix partition fails its PSD-order certificate")
    else:
        if args.method == "opt":
            part = clustering.optimal_partition(data, args.k)
        elif args.method == "kmeans":
            part = clustering.kmeans_partition(data, args.k, seed=args.seed)
        else:
            splits = _ints(args.splits, "--splits", 1) if args.splits else clustering.choose_splits(data, args.k)
            part = clustering.hyperrect_partition(data, splits).partition
        obj = part.to_json_obj()
        obj["guarantee"] = part.guarantee
    obj["config"] = _echo(args)
    _emit(json.dumps(obj, indent=1) + "\n", args.out)
    return EXIT_OK


def _check_certificate(report):
    if not report.certificate_ok:
        raise CertificateViolation(
            f"reduced solution evaluates to {report.evaluated_value!r}, above the certified bound "
            f"{report.certificate_bound!r}"
        )


def cmd_reduce(args):
    _positive_k(args.k)
    inst = load_instance(args.instance)
    report, original, reduced = reduce_and_solve(inst, args.method, args.k, seed=args.seed, solver=args.solver,
                                                 config=_echo(args))
    _check_certificate(report)
    obj = {"metrics": report.to_json_obj(), "original": original.to_json_obj(), "reduced": reduced.to_json_obj()}
    _emit(json.dumps(obj, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_solve(args):
    inst = load_instance(args.instance)
    sol = solve(inst, args.solver)
    obj = sol.to_json_obj()
    obj["config"] = _echo(args)
    _emit(json.dumps(obj, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_evaluate(args):
    inst = load_instance(args.instance)
    if (args.x is None) == (args.solution is None):
        raise UsageError("pass exactly one of --x or --solution")
    if args.x is not None:
        x = _floats(args.x, "--x")
    else:
        x = json.loads(Path(args.solution).read_text(encoding="utf-8"))["x"]
    value = evaluate_solution(inst, x)
    _emit(json.dumps({"x": [float(v) for v in x], "worst_case_value": value, "config": _echo(args)}, indent=1) + "\n",
          args.out)
    return EXIT_OK


def cmd_experiment(args):
    cfg = harness.GridConfig(
        scenario_counts=_ints(args.scenarios, "--scenarios", 1),
        ks=_ints(args.ks, "--k", 1),
        s_incs=_floats(args.s_inc, "--s-inc"),
        seeds=_ints(args.seeds, "--seeds", 0),
        methods=[m.strip() for m in args.methods.split(",") if m.strip()],
        n_vars=args.dim, n_rows=args.rows, n_samples=args.samples, delta=args.delta, solver=args.solver,
        instance_seed=args.instance_seed,
    )
    try:
        cfg.validate()
    except ScenredError as exc:
        raise UsageError(str(exc)) from None
    if args.parallel < 1:
        raise UsageError(f"--parallel must be >= 1, got {args.parallel}")
    if args.parallel > 1:
        warnings.warn("parallel grid points share the CPU; solve times and TF get noisier", stacklevel=1)
    rows = harness.run_grid(cfg, parallel=args.parallel)
    bad = [r for r in rows if r.get("certificate_ok") is False]
    if bad:
        r = bad[0]
        raise CertificateViolation(f"certificate failed for method={r['method']} K={r['K']} seed={r.get('seed')}")
    _emit(harness.rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_bound(args):
    if args.input:
        data = scen.load(args.input)
        if isinstance(data, scen.MatrixScenarioSet):
            raise UsageError("bound needs vector scenarios")
        lower, upper = data.lower(), data.upper()
    else:
        if args.lower is None or args.upper is None:
            raise UsageError("give --in or both --lower and --upper")
        lower, upper = np.array(_floats(args.lower, "--lower")), np.array(_floats(args.upper, "--upper"))
        if lower.shape != upper.shape:
            raise UsageError("--lower and --upper need the same number of entries")
        if not (np.all(lower > 0) and np.all(upper >= lower)):
            raise UsageError("the box needs 0 < lower <= upper componentwise")
    splits = _ints(args.splits, "--splits")
    if len(splits) == 1 and lower.size > 1:
        splits = splits * lower.size
    res = clustering.hyperrect_partition(box=(lower, upper), splits=tuple(splits))
    print(f"{res.bound:.12g}")
    for i, bp in enumerate(res.breakpoints):
        print(f"axis {i}: " + ", ".join(f"{v:.12g}" for v in bp))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="scenred", description="Scenario reduction for distributionally robust optimization.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthetic scenarios or a synthetic DRO instance")
    g.add_argument("--kind", choices=("vectors", "matrices", "instance"), default="vectors")
    g.add_argument("--base", help="comma-separated positive base cost vector")
    g.add_argument("--dim", type=int, default=8, help="random base dimension when --base is absent")
    g.add_argument("--rows", type=int, default=4, help="covering constraints of a generated instance")
    g.add_argument("--count", type=int, default=20)
    g.add_argument("--s-inc", type=float, default=0.5)
    g.add_argument("--assets", type=int, default=4)
    g.add_argument("--samples", type=int, default=100)
    g.add_argument("--delta", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("cluster", help="partition a scenario file")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--method", choices=("opt", "kmeans", "hyperrect"), default="opt")
    c.add_argument("--splits", help="hyperrect split counts per axis")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_cluster)

    r = sub.add_parser("reduce", help="reduce an instance, solve both problems and report metrics")
    r.add_argument("--instance", required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--method", choices=("opt", "kmeans", "hyperrect"), default="opt")
    r.add_argument("--solver", choices=("auto", "box-dual", "cutting-plane"), default="auto")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("solve", help="solve a DRO instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--solver", choices=("auto", "box-dual", "cutting-plane"), default="auto")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="worst-case expected cost of a fixed decision")
    e.add_argument("--instance", required=True)
    e.add_argument("--x", help="comma-separated decision vector")
    e.add_argument("--solution", help="solution JSON written by 'solve'")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="metrics over a grid of synthetic instances (CSV)")
    x.add_argument("--scenarios", default="20", help="comma-separated scenario counts")
    x.add_argument("--k", dest="ks", default="5", help="comma-separated cluster counts")
    x.add_argument("--s-inc", default="0.5")
    x.add_argument("--seeds", default="0")
    x.add_argument("--methods", default="opt,kmeans")
    x.add_argument("--dim", type=int, default=8)
    x.add_argument("--rows", type=int, default=4)
    x.add_argument("--samples", type=int, default=100)
    x.add_argument("--delta", type=float, default=0.1)
    x.add_argument("--solver", choices=("auto", "box-dual", "cutting-plane"), default="auto")
    x.add_argument("--instance-seed", type=int, default=0)
    x.add_argument("--parallel", type=int, default=1)
    x.add_argument("--out")
    x.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bound", help="hyperrectangle guarantee for given split counts")
    b.add_argument("--in", dest="input")
    b.add_argument("--lower")
    b.add_argument("--upper")
    b.add_argument("--splits", required=True)
    b.set_defaults(func=cmd_bound)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"scenred {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificateViolation as exc:
        print(f"scenred {args.command}: certificate violated: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except SOLVER_ERRORS as exc:
        print(f"scenred {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ScenredError, OSError) as exc:
        print(f"scenred {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
