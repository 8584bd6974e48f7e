"""Batch front door: `fracvi verify|solve|sweep|qvi|poincare`.

Exit codes: 0 success (all enabled assertions green), 1 assertion or
convergence failure (reports still written), 2 config error.  Every report
embeds the fully resolved configuration.  Identical config and seed give
byte-identical CSV output on a platform.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import (ConfigError, load_json, parse_poincare_config,
                     parse_qvi_config, parse_solve_config, parse_sweep_config)
from .grid import dump_field_csv
from .qvi import ObstacleQviSpec, gradient_qvi_solve, obstacle_qvi_solve
from .stability import convergence_verdict, sweep_orders
from .spaces import poincare_best_constant
from .verify import run_verify
from .vi import GradientBound, solve_gradient_vi, solve_vi


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=repr)
        fh.write("\n")


def cmd_solve(args) -> int:
    try:
        cfg = load_json(args.config)
        prob = parse_solve_config(cfg)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _outdir(args)
    if isinstance(prob.constraint, GradientBound):
        rep = solve_gradient_vi(prob.coeffs, prob.F, prob.constraint.g,
                                prob.constraint.nu, prob.s, prob.mask,
                                prob.solver)
    else:
        rep = solve_vi(prob.coeffs, prob.F, prob.constraint, prob.s,
                       prob.mask, prob.solver)
    dump_field_csv(rep.solution, out / "solution.csv")
    payload = json.loads(rep.to_json())
    payload["config"] = prob.resolved
    _write_json(out / "report.json", payload)
    print(f"solved: iters={rep.iterations} converged={rep.converged} "
          f"kkt={tuple(f'{v:.2e}' for v in rep.kkt)}")
    return 0 if rep.converged else 1


def cmd_sweep(args) -> int:
    try:
        cfg = load_json(args.config)
        spec, solver, resolved = parse_sweep_config(cfg)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _outdir(args)
    report = sweep_orders(spec, solver)
    (out / "sweep.csv").write_text(report.to_csv())
    ok, summary = convergence_verdict(report, tol_factor=args.tol_factor)
    payload = {"verdict": ok, "summary": summary, "config": resolved,
               "solver_tol": report.solver_tol}
    _write_json(out / "report.json", payload)
    print(f"sweep rows={len(report.rows)} verdict={ok}")
    if not ok:
        for f in summary["failures"]:
            print(f"  - {f}")
    return 0 if ok else 1


def cmd_qvi(args) -> int:
    try:
        cfg = load_json(args.config)
        spec, solver, resolved = parse_qvi_config(cfg)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _outdir(args)
    if isinstance(spec, ObstacleQviSpec):
        rep = obstacle_qvi_solve(spec, solver)
    else:
        rep = gradient_qvi_solve(spec, solver)
    dump_field_csv(rep.solution, out / "solution.csv")
    payload = {
        "picard_iterations": rep.picard_iterations,
        "converged": rep.converged,
        "residual_trace": [repr(float(r)) for r in rep.residual_trace],
        "extras": {k: repr(v) for k, v in rep.extras.items()},
        "config": resolved,
    }
    _write_json(out / "qvi.json", payload)
    print(f"qvi: picard={rep.picard_iterations} converged={rep.converged} "
          f"residual={rep.residual_trace[-1]:.3e}")
    return 0 if rep.converged else 1


def cmd_poincare(args) -> int:
    try:
        cfg = load_json(args.config)
        mask, s_list, tol, refine, resolved = parse_poincare_config(cfg)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _outdir(args)
    rows = ["s,lambda,c,iters,residual,converged"]
    all_ok = True
    for s in s_list:
        rep = poincare_best_constant(mask, s, tol=tol, refine=refine)
        rows.append(rep.csv_row())
        all_ok &= rep.converged
        print(f"s={s}: lambda={rep.lambda_s:.8f} c={rep.c:.8f} "
              f"iters={rep.iterations} converged={rep.converged}")
    (out / "poincare.csv").write_text("\n".join(rows) + "\n")
    _write_json(out / "report.json", {"config": resolved})
    return 0 if all_ok else 1


def cmd_verify(args) -> int:
    try:
        fails = run_verify(args.suite, seed=args.seed)
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0 if fails == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracvi",
        description="Fractional-gradient variational inequality workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run the built-in property suites")
    pv.add_argument("--suite", default="all")
    pv.add_argument("--seed", type=int, default=0)
    pv.set_defaults(fn=cmd_verify)

    for name, fn in (("solve", cmd_solve), ("sweep", cmd_sweep),
                     ("qvi", cmd_qvi), ("poincare", cmd_poincare)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--out", default=".")
        if name == "sweep":
            p.add_argument("--tol-factor", type=float, default=10.0)
        p.set_defaults(fn=fn)

    args = parser.parse_args(argv)
    workers = os.environ.get("FRACVI_THREADS")
    if workers is not None:
        os.environ.setdefault("OMP_NUM_THREADS", workers)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
