"""Command-line front end.

Exit codes: 0 all requested checks passed, 1 a check or guard failed,
2 the input could not be parsed or validated.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from fractions import Fraction

from . import general_space, inference, modelfile, partitions, process, verify
from .errors import HorizonExceeded, MvpsError, OutOfRange, ZeroMassBlock
from .general_space import GeneralMixtureModel
from .measure import DEFAULT_TOL, scalar_eq
from .partitions import Partition
from .process import rebalance

log = logging.getLogger("mvps")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("POLYA_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"POLYA_SEED={raw!r} is not an integer") from None


def jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, Partition):
        return [list(b) for b in x.blocks]
    return x


def emit(obj, out) -> None:
    out.write(json.dumps(jsonable(obj), indent=2) + "\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _load_model(path):
    return modelfile.load(path)


def _finite_model(path):
    model = _load_model(path)
    if isinstance(model, GeneralMixtureModel):
        raise InputError(f"{path}: a finite-state model is required here")
    return model


def _parse_partition(text: str, space) -> Partition:
    try:
        blocks = [[space.index(s.strip()) for s in b.split(",") if s.strip()] for b in text.split("|")]
        return Partition.from_blocks(blocks, space.k)
    except (KeyError, ValueError) as e:
        raise InputError(f"bad partition {text!r}: {e}") from None


def _labels(space, blocks):
    return [[space.labels[j] for j in b] for b in blocks]


# -- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    seed = args.seed if args.seed is not None else default_seed()
    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        if isinstance(model, GeneralMixtureModel):
            traj = general_space.sample_hierarchical(model, args.n, seed) if args.hierarchical \
                else general_space.sample_urn(model, args.n, seed)
            w.writerow(["step", "value", "block"])
            for i, (x, l) in enumerate(zip(traj.values, traj.blocks), 1):
                w.writerow([i, repr(x), l])
        else:
            traj = process.sample(model.family(), args.n, seed)
            w.writerow(["step", "state"])
            for i, s in enumerate(traj.labels, 1):
                w.writerow([i, s])
    finally:
        if close:
            out.close()
    return EXIT_OK


# -- verify ------------------------------------------------------------------

def _suite_partition(args, model) -> Partition:
    if args.partition:
        return _parse_partition(args.partition, model.space)
    if model.partition is not None:
        return model.partition
    P = partitions.recover_partition(model.nu, model.R)
    if P is None:
        raise InputError("explicit kernel is not a conditional kernel; pass --partition")
    return P


def _counterexample_json(space, cx):
    if cx is None:
        return None
    return {
        "trajectory": [space.labels[x] for x in cx.trajectory],
        "swapped": [space.labels[x] for x in cx.swapped],
        "position": cx.position,
        "probabilities": list(cx.probabilities),
    }


def _suff_json(space, report):
    out = {"holds": report.holds}
    if report.counterexample is not None:
        key, (h1, m1), (h2, m2) = report.counterexample
        out["counterexample"] = {
            "key": list(key),
            "histories": [[space.labels[x] for x in h1], [space.labels[x] for x in h2]],
            "masses": [m1, m2],
        }
    return out


def _probability_form(model):
    """``(R, a1, a2)`` with ``R`` of unit row mass, or raise InputError."""
    if model.coefficients is not None:
        fam = model.family()
        return model.R, fam.a(1), (fam.a(2) if len(model.coefficients) >= 2 else None)
    try:
        spec = rebalance(process.MvpsSpec(model.theta, model.nu, model.R))
    except MvpsError as e:
        raise InputError(f"identities need constant row mass: {e}") from None
    return spec.R, process.mvps_coefficients(spec.theta, 1), process.mvps_coefficients(spec.theta, 2)


def cmd_verify(args) -> int:
    model = _finite_model(args.model)
    fam = model.family()
    space = model.space
    L = args.max_len
    report = {"suite": args.suite, "max_len": L}
    ok = True
    if args.suite == "exchangeability":
        r = verify.check_exchangeable(fam, L)
        ok = r.exchangeable
        report.update(exchangeable=r.exchangeable, counterexample=_counterexample_json(space, r.counterexample))
    elif args.suite == "identities":
        R, a1, a2 = _probability_form(model)
        balance = verify.check_detailed_balance(model.nu, R)
        report["detailed_balance_violation"] = balance
        report["a1"], report["a2"] = a1, a2
        if a2 is not None:
            c = verify.cstar(a1, a2)
            ident = verify.check_kernel_identity(model.nu, R, c)
            idem = verify.check_kernel_identity(model.nu, R, 0)
            report.update(cstar=c, kernel_identity_violation=ident, idempotence_violation=idem)
            ok = all(scalar_eq(v, 0, DEFAULT_TOL) for v in (balance, c, ident, idem))
        else:
            ok = scalar_eq(balance, 0, DEFAULT_TOL)
    elif args.suite == "johnson":
        P = _suite_partition(args, model)
        r = verify.check_johnson_sufficientness(fam, P, L)
        ok = r.holds
        report["partition"] = _labels(space, P.blocks)
        report.update(_suff_json(space, r))
    elif args.suite == "hill":
        P = _suite_partition(args, model)
        if args.weights:
            w = [Fraction(x) for x in args.weights.split(",")]
        else:
            w = [model.theta * x for x in model.nu.weights]
        r = verify.check_hill_sufficientness(fam, w, P, L)
        ok = r.holds
        report["partition"] = _labels(space, P.blocks)
        report["weights"] = w
        report.update(_suff_json(space, r))
    elif args.suite == "characterize":
        r = verify.characterize(fam, L)
        ok = r.verdict == verify.MVPS
        report.update(
            verdict=r.verdict,
            theta_hat=r.theta_hat,
            degenerate_iid=r.degenerate_iid,
            coefficient_trace=[list(t) for t in r.coefficient_trace],
            counterexample=_counterexample_json(space, r.counterexample),
        )
    report["passed"] = ok
    if args.pretty:
        for key, value in jsonable(report).items():
            print(f"{key:>28}  {value}")
    else:
        emit(report, sys.stdout)
    return EXIT_OK if ok else EXIT_FAIL


# -- enumerate / bell --------------------------------------------------------

def cmd_enumerate(args) -> int:
    for P in partitions.iter_partitions(args.k):
        print(P)
    return EXIT_OK


def cmd_bell(args) -> int:
    print(partitions.bell_number(args.k))
    return EXIT_OK


# -- fit ---------------------------------------------------------------------

def _read_trajectory(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise InputError(str(e)) from None
    if not rows:
        return []
    header = [h.strip() for h in rows[0]]
    if "state" not in header:
        raise InputError(f"{path}:1: expected a 'state' column, got {header}")
    col = header.index("state")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        out.append((lineno, row[col].strip()))
    return out


def cmd_fit(args) -> int:
    rows = _read_trajectory(args.trajectory)
    nu = None
    if args.nu:
        model = _finite_model(args.nu)
        space = model.space
        nu = model.nu
    elif args.states:
        space = process.StateSpace(tuple(s.strip() for s in args.states.split(",")))
    elif args.k:
        space = process.StateSpace.of_size(args.k)
    else:
        space = process.StateSpace(tuple(sorted({s for _, s in rows}))) if rows else None
    if not rows:
        raise OutOfRange("empty trajectory")
    t = []
    for lineno, s in rows:
        try:
            t.append(space.index(s))
        except KeyError:
            raise InputError(f"{args.trajectory}:{lineno}: unknown state {s!r}") from None
    if args.k and args.k != space.k:
        raise InputError(f"--k {args.k} disagrees with {space.k} states")
    result = inference.fit_model(t, nu=nu, k=space.k)
    emit(_fit_json(space, result), sys.stdout)
    return EXIT_OK


def _fit_json(space, r):
    return {
        "partition": _labels(space, r.partition.blocks),
        "theta_hat": r.theta_hat,
        "theta_status": r.theta_status,
        "log_likelihood": r.log_likelihood,
        "nu": r.nu,
        "nu_estimated": r.nu_estimated,
        "states": list(space.labels),
        "per_partition_table": [
            {
                "partition": _labels(space, row.partition.blocks),
                "theta": row.theta,
                "log_likelihood": row.log_likelihood,
                "status": row.status,
            }
            for row in r.per_partition_table
        ],
    }


# -- compare-laws ------------------------------------------------------------

def cmd_compare_laws(args) -> int:
    model = _load_model(args.model)
    if not isinstance(model, GeneralMixtureModel):
        raise InputError(f"{args.model}: compare-laws needs a general (binned) model")
    seed = args.seed if args.seed is not None else default_seed()
    cmp = general_space.compare_laws(model, args.prefix, args.reps, seed)
    band = 3 * cmp.mc_bound
    ok = cmp.tv_urn <= band and cmp.tv_hierarchical <= band
    if args.csv:
        out, close = _open_out(args.csv)
        try:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["sequence", "exact", "exact_float", "urn", "hierarchical"])
            for s, ex, u, h in zip(cmp.sequences, cmp.exact, cmp.urn, cmp.hierarchical):
                w.writerow(["-".join(map(str, s)), str(ex), repr(float(ex)), repr(u), repr(h)])
        finally:
            if close:
                out.close()
    emit(
        {
            "prefix": args.prefix,
            "reps": args.reps,
            "seed": seed,
            "tv_urn": cmp.tv_urn,
            "tv_hierarchical": cmp.tv_hierarchical,
            "mc_bound": cmp.mc_bound,
            "band": band,
            "passed": ok,
            "exact_total": sum(cmp.exact, Fraction(0)) if all(isinstance(p, Fraction) for p in cmp.exact) else float(sum(cmp.exact)),
        },
        sys.stdout,
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_show_model(args) -> int:
    sys.stdout.write(modelfile.dumps(_load_model(args.model)) + "\n")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvps", description="Measure-valued Polya urn toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample a trajectory to CSV")
    s.add_argument("model")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="output CSV (default stdout)")
    s.add_argument("--hierarchical", action="store_true", help="general models: use the Dirichlet-mixture sampler")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="run an exact verification suite")
    s.add_argument("model")
    s.add_argument("--suite", required=True, choices=["exchangeability", "identities", "johnson", "hill", "characterize"])
    s.add_argument("--max-len", type=int, default=5)
    s.add_argument("--partition", help="blocks as labels, e.g. 'x1|x2,x3'")
    s.add_argument("--weights", help="hill suite: comma-separated positive weights (default theta*nu)")
    s.add_argument("--pretty", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("enumerate", help="list all partitions of k states")
    s.add_argument("k", type=int)
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("bell", help="print the Bell number B_k")
    s.add_argument("k", type=int)
    s.set_defaults(func=cmd_bell)

    s = sub.add_parser("fit", help="maximum-likelihood (theta, partition) for a trajectory CSV")
    s.add_argument("trajectory")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--nu", help="model file supplying states and the base measure")
    g.add_argument("--estimate-nu", action="store_true")
    s.add_argument("--k", type=int)
    s.add_argument("--states", help="comma-separated state labels")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("compare-laws", help="urn vs hierarchical sampler against the exact block law")
    s.add_argument("model")
    s.add_argument("--prefix", type=int, default=3)
    s.add_argument("--reps", type=int, default=10**5)
    s.add_argument("--seed", type=int)
    s.add_argument("--csv", help="per-sequence probabilities (plot-ready)")
    s.set_defaults(func=cmd_compare_laws)

    s = sub.add_parser("show-model", help="re-emit a model file in canonical form")
    s.add_argument("model")
    s.set_defaults(func=cmd_show_model)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.func(args)
    except (modelfile.ModelError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (OutOfRange, HorizonExceeded, ZeroMassBlock) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    except MvpsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
