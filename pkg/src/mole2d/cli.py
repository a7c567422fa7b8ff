"""Command-line entry point: ``mole2d {estimate,bootstrap,synth,verify}``."""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys

import numpy as np

from . import acceptance
from .cycles import FCB_MST, FCB_ODO, MCB, cycle_basis
from .errors import CapExceeded, Mole2DError
from .estimator import DEFAULT_ALPHA, DEFAULT_CAP, gamma_estimator, integer_screening, mole2d
from .io import G2O, POSITION_MODES, TORO, from_instance, read, write_bootstrapped, write_g2o, write_truth
from .synth import circle_graph, grid_walk

log = logging.getLogger("mole2d")

BASES = (FCB_ODO, FCB_MST, MCB)


def _format_report(g, est, screening, hypotheses, basis_kind, alpha, cap, status="ok") -> str:
    """``key value`` lines followed by a CSV block of per-iteration statistics."""
    lines = [
        f"status {status}",
        f"basis {basis_kind}",
        f"alpha {alpha!r}",
        f"cap {cap}",
        f"nodes {g.node_count}",
        f"n {g.n}",
        f"m {g.m}",
        f"cycles {g.cyclomatic}",
        f"trace_P_gamma {float(np.trace(est.covariance)) if est.dim else 0.0!r}",
        f"gamma_set_size {screening.size}",
        f"iterations {screening.iterations}",
        f"flagged {','.join(str(i) for i in sorted(screening.flags)) or '-'}",
    ]
    for i, cands in enumerate(screening.per_coordinate):
        lines.append(f"gamma_hat.{i} {float(est.gamma_hat[i])!r}")
        lines.append(f"gamma_candidates.{i} {','.join(str(c) for c in cands)}")
    lines.append(f"hypotheses {len(hypotheses)}")
    for k, h in enumerate(hypotheses):
        lines.append(f"hypothesis.{k}.cost {h.cost!r}")
        lines.append(f"hypothesis.{k}.gamma {','.join(str(v) for v in h.gamma.tolist()) or '-'}")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "resolved", "resolved_percent"])
    for it, (u, pct) in enumerate(zip(screening.resolved_counts, screening.resolved_percent()), start=1):
        w.writerow([it, u, f"{pct:.4f}"])
    return "\n".join(lines) + "\n\n" + buf.getvalue()


def parse_report(text: str) -> tuple[dict, list]:
    """Inverse of the report writer: ``(key -> value string, csv rows)``."""
    head, _, block = text.partition("\n\n")
    values = dict(line.split(" ", 1) for line in head.splitlines() if line)
    rows = list(csv.DictReader(_io.StringIO(block)))
    return values, rows


def cmd_estimate(args) -> int:
    g2 = read(args.input, args.format)
    g = g2.orientation
    cap = args.max_hypotheses if args.max_hypotheses > 0 else None
    C = cycle_basis(g, args.basis)
    est = gamma_estimator(g, C)
    report_path = f"{args.output}.report.txt"
    try:
        screening = integer_screening(est, args.alpha, cap)
    except CapExceeded as exc:
        with open(report_path, "w") as fh:
            fh.write(_format_report(g, est, exc.hypotheses, [], args.basis, args.alpha, cap, "cap-exceeded"))
        raise
    result = mole2d(g, args.alpha, args.basis, cap, workers=args.workers, basis=C)
    for k, h in enumerate(result):
        with open(f"{args.output}.hyp{k}.g2o", "w") as fh:
            fh.write(write_bootstrapped(g2, h, args.positions))
    with open(report_path, "w") as fh:
        fh.write(_format_report(g, est, screening, result.hypotheses, args.basis, args.alpha, cap))
    print(f"{len(result)} hypotheses; best cost {result.best.cost:.6g}; report {report_path}")
    return 0


def cmd_bootstrap(args) -> int:
    g2 = read(args.input, args.format)
    result = mole2d(g2.orientation, args.alpha, args.basis, args.max_hypotheses or None)
    with open(args.output, "w") as fh:
        fh.write(write_bootstrapped(g2, result.best, args.positions))
    print(f"wrote {args.output} from the best of {len(result)} hypotheses (cost {result.best.cost:.6g})")
    return 0


def cmd_synth(args) -> int:
    if args.family == "circle":
        inst = circle_graph(args.steps, args.noise, args.mode, args.seed)
    else:
        inst = grid_walk(args.rows, args.cols, args.chord_prob, args.sigma, args.seed, steps=args.walk_steps)
    prefix = args.output or args.family
    g2 = from_instance(inst)
    gamma = inst.gamma_true(cycle_basis(inst.graph, args.basis))
    with open(f"{prefix}.g2o", "w") as fh:
        fh.write(write_g2o(g2))
    with open(f"{prefix}.truth", "w") as fh:
        fh.write(write_truth(inst, gamma))
    g = inst.graph
    print(f"wrote {prefix}.g2o and {prefix}.truth (nodes {g.node_count}, edges {g.m}, cycles {g.cyclomatic})")
    return 0


def cmd_verify(args) -> int:
    numbers = acceptance.SUITES[args.suite]
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        for key in ("trials", "graphs", "instances", "draws", "samples"):
            overrides[key] = args.trials
    results = acceptance.run(numbers, **overrides)
    failed = 0
    for r in results:
        print(r.line())
        if r.number == 1 and args.suite == "identity" and r.values.get("rows"):
            print("  n   l  basis   residual")
            for n, ell, kind, res in r.values["rows"]:
                print(f"  {n:2d} {ell:3d}  {kind:7s} {res:.2e}")
        failed += r.gating and not r.passed and not r.skipped
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "name", "status", "seconds", "detail"])
            for r in results:
                status = "skip" if r.skipped else ("pass" if r.passed else "fail")
                w.writerow([r.number, r.name, status, f"{r.seconds:.3f}", r.detail])
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mole2d", description="Multi-hypothesis orientation estimation for 2D pose graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="screen cycle integers and write one file per hypothesis")
    e.add_argument("--input", required=True)
    e.add_argument("--format", choices=(G2O, TORO), default=G2O)
    e.add_argument("--basis", choices=BASES, default=MCB)
    e.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    e.add_argument("--max-hypotheses", type=int, default=DEFAULT_CAP, help="cap on |Gamma|; 0 disables")
    e.add_argument("--output", required=True, help="prefix for PREFIX.hyp<k>.g2o and PREFIX.report.txt")
    e.add_argument("--positions", choices=POSITION_MODES, default="odometry")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bootstrap", help="write the best hypothesis as an initial guess")
    b.add_argument("--input", required=True)
    b.add_argument("--output", required=True)
    b.add_argument("--format", choices=(G2O, TORO), default=G2O)
    b.add_argument("--positions", choices=POSITION_MODES, default="odometry")
    b.add_argument("--basis", choices=BASES, default=MCB)
    b.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    b.add_argument("--max-hypotheses", type=int, default=DEFAULT_CAP)
    b.set_defaults(func=cmd_bootstrap)

    s = sub.add_parser("synth", help="generate a synthetic instance with a truth sidecar")
    s.add_argument("family", choices=("circle", "grid"))
    s.add_argument("--output", help="file prefix (default: the family name)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--basis", choices=BASES, default=MCB, help="basis for the TRUTH_GAMMA line")
    s.add_argument("--steps", type=int, default=18)
    s.add_argument("--noise", type=float, default=0.2)
    s.add_argument("--mode", choices=("fixed", "gaussian"), default="fixed")
    s.add_argument("--rows", type=int, default=10)
    s.add_argument("--cols", type=int, default=10)
    s.add_argument("--chord-prob", type=float, default=0.1)
    s.add_argument("--sigma", type=float, default=0.1)
    s.add_argument("--walk-steps", type=int, default=None)
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("verify", help="run acceptance criteria")
    v.add_argument("--suite", choices=tuple(acceptance.SUITES), default="all")
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--csv", default=None, help="also write results as CSV")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (Mole2DError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
