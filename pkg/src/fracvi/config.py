"""JSON problem-description parsing with exhaustive validation.

Schema violations are collected and reported together (never first-only);
unknown keys are errors.  Field expressions use a fixed tiny grammar over
x1..x3 with sin, cos, exp, abs, min, max, arithmetic and the constants
pi and e.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass

import numpy as np

from .grid import (DomainMask, ScalarField, TorusGrid, VectorField, ball_mask,
                   build_grid, full_mask, interval_mask, sample)
from .qvi import (ConstantBound, CustomSource, GradientQviSpec, KernelBound,
                  ObstacleQviSpec, TruncationSource)
from .spaces import DualDatum
from .stability import SweepSpec, dyadic_schedule
from .vi import (Coefficients, GradientBound, LinearMatrix, ObstacleLower,
                 ObstacleUpper, PLaplace, SolverConfig, Unconstrained)


class ConfigError(ValueError):
    """Config rejected; .errors lists every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("config invalid:\n  - " + "\n  - ".join(self.errors))


_ALLOWED_CALLS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs,
                  "min": np.minimum, "max": np.maximum}
_ALLOWED_NAMES = {"pi": np.pi, "e": np.e}


def _eval_node(node, env):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, env)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise ValueError(f"literal {node.value!r} not allowed")
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        if node.id in _ALLOWED_NAMES:
            return _ALLOWED_NAMES[node.id]
        raise ValueError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp):
        ops = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
               ast.Div: np.divide, ast.Pow: np.power}
        for t, fn in ops.items():
            if isinstance(node.op, t):
                return fn(_eval_node(node.left, env), _eval_node(node.right, env))
        raise ValueError("operator not allowed")
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_eval_node(node.operand, env)
        if isinstance(node.op, ast.UAdd):
            return +_eval_node(node.operand, env)
        raise ValueError("unary operator not allowed")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
            raise ValueError("call not allowed (sin, cos, exp, abs, min, max only)")
        if node.keywords:
            raise ValueError("keyword arguments not allowed")
        args = [_eval_node(a, env) for a in node.args]
        return _ALLOWED_CALLS[node.func.id](*args)
    raise ValueError(f"syntax element {type(node).__name__} not allowed")


def eval_expression(expr: str, grid: TorusGrid) -> np.ndarray:
    """Evaluate the tiny grammar over the grid nodes."""
    tree = ast.parse(expr, mode="eval")
    coords = grid.flat_coords()
    env = {f"x{j+1}": coords[j] for j in range(grid.d)}
    out = _eval_node(tree, env)
    return np.broadcast_to(np.asarray(out, dtype=float), (grid.size,)).copy()


def _field_from(value, grid, errors, where) -> ScalarField | None:
    try:
        if isinstance(value, str):
            return ScalarField(grid, eval_expression(value, grid))
        if isinstance(value, (int, float)):
            return ScalarField(grid, np.full(grid.size, float(value)))
        if isinstance(value, dict) and "samples" in value:
            return ScalarField(grid, np.asarray(value["samples"], dtype=float))
        errors.append(f"{where}: expected expression, number or samples")
    except Exception as exc:
        errors.append(f"{where}: {exc}")
    return None


def _require(cfg, key, errors, where="config", default=KeyError):
    if key in cfg:
        return cfg[key]
    if default is KeyError:
        errors.append(f"{where}: missing required key {key!r}")
        return None
    return default


def _check_unknown(cfg, allowed, errors, where="config"):
    for key in cfg:
        if key not in allowed:
            errors.append(f"{where}: unknown key {key!r}")


def _parse_mask(cfg, grid, errors) -> DomainMask | None:
    if cfg is None:
        return full_mask(grid)
    _check_unknown(cfg, {"type", "params"}, errors, "omega")
    typ = _require(cfg, "type", errors, "omega")
    params = cfg.get("params")
    try:
        if typ == "full":
            return full_mask(grid)
        if typ == "interval":
            return interval_mask(grid, params[0], params[1])
        if typ == "box":
            return interval_mask(grid, params[0], params[1])
        if typ == "ball":
            return ball_mask(grid, params["center"], params["radius"])
        errors.append(f"omega: unknown type {typ!r}")
    except Exception as exc:
        errors.append(f"omega: {exc}")
    return None


def _parse_solver(cfg, errors) -> SolverConfig | None:
    cfg = cfg or {}
    allowed = {"tol", "max_iters", "armijo_c", "backtrack", "rho", "rho_band",
               "rho_scale", "omega", "picard_cap", "fp_tau", "seed"}
    _check_unknown(cfg, allowed, errors, "solver")
    try:
        return SolverConfig(**{k: cfg[k] for k in cfg})
    except Exception as exc:
        errors.append(f"solver: {exc}")
        return None


@dataclass
class SolveProblem:
    grid: TorusGrid
    mask: DomainMask
    coeffs: Coefficients
    F: DualDatum
    constraint: object
    s: float
    solver: SolverConfig
    resolved: dict


_TOP_KEYS = {"d", "L", "N", "omega", "s", "p", "principal", "beta",
             "constraint", "rhs", "solver", "seed"}


def parse_solve_config(cfg: dict) -> SolveProblem:
    errors = []
    _check_unknown(cfg, _TOP_KEYS, errors)
    d = _require(cfg, "d", errors)
    L = _require(cfg, "L", errors)
    N = _require(cfg, "N", errors)
    s = _require(cfg, "s", errors)
    p = _require(cfg, "p", errors, default=2.0)
    if s is not None and not (isinstance(s, (int, float)) and 0.0 <= s <= 1.0):
        errors.append(f"s out of [0,1]: {s}")
    grid = None
    if not errors:
        try:
            grid = build_grid(d, L, N)
        except Exception as exc:
            errors.append(str(exc))
    if grid is None:
        raise ConfigError(errors)

    mask = _parse_mask(cfg.get("omega"), grid, errors)

    principal_cfg = cfg.get("principal", {"type": "plaplace", "weight": 1.0})
    principal = None
    ptype = principal_cfg.get("type")
    if ptype == "plaplace":
        _check_unknown(principal_cfg, {"type", "weight"}, errors, "principal")
        w = principal_cfg.get("weight", 1.0)
        if isinstance(w, str):
            wf = _field_from(w, grid, errors, "principal.weight")
            principal = PLaplace(wf) if wf else None
        else:
            principal = PLaplace(float(w))
    elif ptype == "linear":
        _check_unknown(principal_cfg, {"type", "matrix"}, errors, "principal")
        try:
            principal = LinearMatrix(np.asarray(principal_cfg["matrix"], float))
        except Exception as exc:
            errors.append(f"principal: {exc}")
    else:
        errors.append(f"principal: unknown type {ptype!r}")

    coeffs = None
    if principal is not None:
        try:
            coeffs = Coefficients(p=float(p), principal=principal,
                                  beta=float(cfg.get("beta", 0.0)))
        except Exception as exc:
            errors.append(f"coefficients: {exc}")

    constraint = Unconstrained()
    ccfg = cfg.get("constraint")
    if ccfg:
        ctype = ccfg.get("type")
        if ctype in (None, "none"):
            _check_unknown(ccfg, {"type"}, errors, "constraint")
        elif ctype == "obstacle_lower":
            _check_unknown(ccfg, {"type", "psi"}, errors, "constraint")
            psi = _field_from(ccfg.get("psi"), grid, errors, "constraint.psi")
            if psi:
                constraint = ObstacleLower(psi)
        elif ctype == "obstacle_upper":
            _check_unknown(ccfg, {"type", "phi"}, errors, "constraint")
            phi = _field_from(ccfg.get("phi"), grid, errors, "constraint.phi")
            if phi:
                constraint = ObstacleUpper(phi)
        elif ctype == "gradient_bound":
            _check_unknown(ccfg, {"type", "g", "nu"}, errors, "constraint")
            gf = _field_from(ccfg.get("g"), grid, errors, "constraint.g")
            nu = ccfg.get("nu", 0.0)
            if not (isinstance(nu, (int, float)) and nu > 0):
                errors.append(
                    f"constraint: gradient bound needs nu > 0 (got {nu})")
            elif gf:
                try:
                    constraint = GradientBound(gf, float(nu))
                except Exception as exc:
                    errors.append(f"constraint: {exc}")
        else:
            errors.append(f"constraint: unknown type {ctype!r}")

    rhs = cfg.get("rhs", {})
    _check_unknown(rhs, {"f0", "f"}, errors, "rhs")
    f0 = _field_from(rhs.get("f0", 0.0), grid, errors, "rhs.f0")
    fcomp = rhs.get("f")
    comps = []
    if fcomp is None:
        comps = [np.zeros(grid.size) for _ in range(grid.d)]
    else:
        if not isinstance(fcomp, list) or len(fcomp) != grid.d:
            errors.append(f"rhs.f: need a list of {grid.d} component expressions")
        else:
            for j, expr in enumerate(fcomp):
                fj = _field_from(expr, grid, errors, f"rhs.f[{j}]")
                comps.append(fj.values if fj else np.zeros(grid.size))

    solver = _parse_solver(cfg.get("solver"), errors)
    if errors:
        raise ConfigError(errors)

    if mask is not None and f0 is not None:
        f0 = ScalarField(grid, np.where(mask.inside, f0.values, 0.0))
    F = DualDatum(f0, VectorField(grid, comps))
    resolved = dict(cfg)
    resolved.setdefault("p", p)
    resolved.setdefault("beta", cfg.get("beta", 0.0))
    resolved["solver"] = {**(cfg.get("solver") or {}),
                          "tol": solver.tol, "max_iters": solver.max_iters,
                          "seed": solver.seed}
    return SolveProblem(grid, mask, coeffs, F, constraint, float(s), solver,
                        resolved)


def parse_sweep_config(cfg: dict):
    errors = []
    allowed = _TOP_KEYS | {"sigma", "s_list", "schedule", "family", "battery"}
    _check_unknown(cfg, allowed, errors)
    base_keys = {k: cfg[k] for k in cfg if k in _TOP_KEYS}
    base_keys.setdefault("s", cfg.get("sigma", 0.5))
    try:
        prob = parse_solve_config(base_keys)
    except ConfigError as exc:
        errors.extend(exc.errors)
        raise ConfigError(errors)
    sigma = _require(cfg, "sigma", errors)
    s_list = cfg.get("s_list")
    sched = cfg.get("schedule")
    if s_list is None and sched is None:
        errors.append("sweep: need s_list or schedule")
    if s_list is None and sched is not None:
        _check_unknown(sched, {"kind", "direction", "i_min", "i_max"}, errors,
                       "schedule")
        if sched.get("kind", "dyadic") != "dyadic":
            errors.append("schedule: only the dyadic kind is defined")
        else:
            s_list = dyadic_schedule(sigma, sched.get("direction", "down"),
                                     sched.get("i_min", 1), sched.get("i_max", 6))
    family = cfg.get("family", "fixed")
    battery = cfg.get("battery", {})
    _check_unknown(battery, {"count", "seed", "kmax"}, errors, "battery")
    if "seed" not in battery and "seed" not in (cfg.get("solver") or {}):
        errors.append("battery: seeded randomness requires an explicit seed")
    if errors:
        raise ConfigError(errors)
    spec = SweepSpec(
        coeffs=prob.coeffs, F=prob.F, mask=prob.mask, sigma=float(sigma),
        s_list=[float(x) for x in s_list], family=family,
        constraint=prob.constraint,
        bound_floor=getattr(prob.constraint, "nu", 0.0),
        battery_count=battery.get("count", 8),
        battery_seed=battery.get("seed", (cfg.get("solver") or {}).get("seed", 0)),
        battery_kmax=battery.get("kmax"),
    )
    resolved = dict(prob.resolved)
    resolved.update({"sigma": sigma, "s_list": spec.s_list, "family": family,
                     "battery": {"count": spec.battery_count,
                                 "seed": spec.battery_seed}})
    return spec, prob.solver, resolved


def parse_qvi_config(cfg: dict):
    errors = []
    allowed = _TOP_KEYS | {"qvi"}
    _check_unknown(cfg, allowed, errors)
    base_keys = {k: cfg[k] for k in cfg if k in _TOP_KEYS}
    try:
        prob = parse_solve_config(base_keys)
    except ConfigError as exc:
        errors.extend(exc.errors)
        raise ConfigError(errors)
    qcfg = _require(cfg, "qvi", errors) or {}
    _check_unknown(qcfg, {"type", "t", "T", "G", "omega", "picard_cap"}, errors,
                   "qvi")
    qtype = qcfg.get("type")
    solver = prob.solver
    if "omega" in qcfg or "picard_cap" in qcfg:
        solver = SolverConfig(**{**_solver_dict(solver),
                                 "omega": qcfg.get("omega", solver.omega),
                                 "picard_cap": qcfg.get("picard_cap",
                                                        solver.picard_cap)})
    spec = None
    if qtype == "obstacle":
        t = qcfg.get("t", prob.s)
        tcfg = qcfg.get("T", {})
        ttype = tcfg.get("type")
        source = None
        if ttype == "truncation":
            k = _field_from(tcfg.get("k"), prob.grid, errors, "qvi.T.k")
            if k:
                source = TruncationSource(ScalarField(
                    prob.grid, np.where(prob.mask.inside, k.values, 0.0)))
        elif ttype == "custom_field":
            fld = _field_from(tcfg.get("value"), prob.grid, errors, "qvi.T.value")
            if fld:
                masked = ScalarField(prob.grid,
                                     np.where(prob.mask.inside, fld.values, 0.0))
                source = CustomSource(lambda u, D, m=masked: m.copy(),
                                      tcfg.get("M", float(np.max(
                                          np.abs(masked.values)) or 1.0)))
        else:
            errors.append(f"qvi.T: unknown source type {ttype!r}")
        if not errors and source is not None:
            try:
                spec = ObstacleQviSpec(prob.coeffs, prob.F, prob.s, float(t),
                                       source, prob.mask)
            except Exception as exc:
                errors.append(f"qvi: {exc}")
    elif qtype == "gradient":
        gcfg = qcfg.get("G", {})
        gtype = gcfg.get("type")
        nu = gcfg.get("nu", 0.0)
        if not (isinstance(nu, (int, float)) and nu > 0):
            errors.append(f"qvi.G: bound operator needs nu > 0 (got {nu})")
        bound = None
        if gtype == "constant":
            gf = _field_from(gcfg.get("g"), prob.grid, errors, "qvi.G.g")
            if gf and not errors:
                bound = ConstantBound(gf, float(nu))
        elif gtype == "kernel":
            try:
                theta_expr = gcfg["theta"]
                fb = gcfg["fbnd"]  # {"floor":..., "cap":..., "scale":...}
                cap = float(gcfg.get("cap", 10.0))

                def theta(xs, ys, expr=theta_expr, g=prob.grid):
                    env = {f"x{j+1}": xs[j] for j in range(g.d)}
                    env.update({f"y{j+1}": ys[j] for j in range(g.d)})
                    return _eval_node(ast.parse(expr, mode="eval"), env)

                def fbnd(xs, w, base=float(fb.get("base", 1.0)),
                         scale=float(fb.get("scale", 1.0))):
                    return base + scale * np.abs(w)

                bound = KernelBound(theta, fbnd, float(nu), cap)
            except Exception as exc:
                errors.append(f"qvi.G: {exc}")
        else:
            errors.append(f"qvi.G: unknown bound type {gtype!r}")
        if bound is not None and not errors:
            spec = GradientQviSpec(prob.coeffs, prob.F, prob.s, bound,
                                   float(nu), prob.mask)
    else:
        errors.append(f"qvi: unknown type {qtype!r}")
    if errors or spec is None:
        raise ConfigError(errors or ["qvi: could not build the problem"])
    resolved = dict(prob.resolved)
    resolved["qvi"] = {k: v for k, v in qcfg.items() if k in ("type", "t",
                                                              "omega",
                                                              "picard_cap")}
    return spec, solver, resolved


def parse_poincare_config(cfg: dict):
    errors = []
    allowed = {"d", "L", "N", "omega", "s", "s_list", "tol", "refine"}
    _check_unknown(cfg, allowed, errors)
    try:
        grid = build_grid(cfg.get("d", 1), cfg.get("L", np.pi),
                          cfg.get("N", 256))
    except Exception as exc:
        errors.append(str(exc))
        raise ConfigError(errors)
    mask = _parse_mask(cfg.get("omega"), grid, errors)
    s_list = cfg.get("s_list") or ([cfg["s"]] if "s" in cfg else None)
    if s_list is None:
        errors.append("poincare: need s or s_list")
    else:
        for s in s_list:
            if not (0.0 <= s <= 1.0):
                errors.append(f"s out of [0,1]: {s}")
    if errors:
        raise ConfigError(errors)
    return (mask, [float(s) for s in s_list], float(cfg.get("tol", 1e-10)),
            int(cfg.get("refine", 8)), dict(cfg))


def _solver_dict(sc: SolverConfig) -> dict:
    return {k: getattr(sc, k) for k in
            ("tol", "max_iters", "armijo_c", "backtrack", "rho", "rho_band",
             "rho_scale", "omega", "picard_cap", "fp_tau", "seed")}


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
