"""Built-in property suites behind `fracvi verify`.

Each case prints one PASS/FAIL line; the runner returns the number of
failures.  Cases are small (N <= 256) so the whole run stays in seconds.
"""

from __future__ import annotations

import numpy as np

from .grid import (ScalarField, VectorField, build_grid, full_mask, inner,
                   interval_mask, lp_norm, lp_norm_vec)
from .spaces import (DualDatum, gn_residual, lambda_norm,
                     poincare_best_constant)
from .spectral import (frac_divergence, frac_gradient, frac_laplacian,
                       riesz_potential)
from .stability import band_limited_field
from .vi import (Coefficients, ObstacleLower, PLaplace, SolverConfig,
                 Unconstrained, solve_vi)


def _case(name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    return 0 if ok else 1


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def suite_spectral(seed=0):
    fails = 0
    g = build_grid(1, np.pi, 128)
    rng = np.random.default_rng(seed)
    u = band_limited_field(g, rng)
    Phi = VectorField(g, [band_limited_field(g, rng).values])
    worst = 0.0
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        a = inner(u, frac_divergence(Phi, s))
        Du = frac_gradient(u, s)
        b = sum(float(np.dot(p, q)) for p, q in
                zip(Phi.components, Du.components)) * g.h
        worst = max(worst, abs(a + b) / max(abs(a), abs(b), 1e-300))
    fails += _case("duality <u, D^s.Phi> + <Phi, D^s u> = 0", worst <= 1e-10,
                   f"worst rel {worst:.2e}")

    s, sig = 0.3, 0.8
    Dsig = frac_gradient(u, sig)
    lifted = VectorField(g, [riesz_potential(
        ScalarField(g, c), sig - s).values for c in Dsig.components])
    Ds = frac_gradient(u, s)
    err = max(float(np.max(np.abs(a - b))) for a, b in
              zip(lifted.components, Ds.components))
    fails += _case("semigroup D^s u = I_(sigma-s) D^sigma u", err <= 1e-12,
                   f"max abs {err:.2e}")

    r = 0.45
    comp = frac_divergence(frac_gradient(u, r), s).values
    lap = frac_laplacian(u, (s + r) / 2.0).values
    err = float(np.max(np.abs(comp + lap)))
    fails += _case("composition D^s.D^r = -(-Delta)^((s+r)/2)", err <= 1e-12,
                   f"max abs {err:.2e}")

    x = g.axis_coords()
    sin2 = ScalarField(g, np.sin(2 * x))
    d1 = frac_gradient(sin2, 1.0).components[0]
    err = float(np.max(np.abs(d1 - 2 * np.cos(2 * x))))
    fails += _case("limit s=1 classical derivative", err <= 1e-12,
                   f"max abs {err:.2e}")

    back = frac_divergence(frac_gradient(u, 0.0), 0.0).values
    err = float(np.max(np.abs(back + u.values)))
    fails += _case("limit s=0 Riesz identity -D^0.D^0 = id", err <= 1e-12,
                   f"max abs {err:.2e}")
    return fails


def suite_spaces(seed=0):
    fails = 0
    g = build_grid(1, np.pi, 128)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        u = band_limited_field(g, rng)
        ratio = gn_residual(u, 0.2, 0.5, 0.9, 2.0)
        worst = max(worst, ratio)
    fails += _case("Gagliardo-Nirenberg ratio <= 1 (p=2)", worst <= 1.0 + 1e-12,
                   f"worst {worst:.12f}")

    u = band_limited_field(g, rng)
    v = band_limited_field(g, rng)
    lhs = lambda_norm(ScalarField(g, u.values + v.values), 0.6, 2.0)
    rhs = lambda_norm(u, 0.6, 2.0) + lambda_norm(v, 0.6, 2.0)
    fails += _case("lambda-norm triangle inequality", lhs <= rhs + 1e-12)

    mask = interval_mask(g, -1.0, 1.0)
    rep = poincare_best_constant(mask, 0.5, tol=1e-8)
    ok = rep.converged and rep.lambda_s > 0
    fails += _case("Poincare eigenvalue positive and converged", ok,
                   f"lambda={rep.lambda_s:.6f} c={rep.c:.6f}")
    worst = 0.0
    for _ in range(10):
        w = ScalarField(g, np.where(mask.inside,
                                    band_limited_field(g, rng).values, 0.0))
        nw = lp_norm(w, 2)
        ngrad = lp_norm_vec(frac_gradient(w, 0.5), 2)
        worst = max(worst, nw / max(rep.c * ngrad, 1e-300))
    fails += _case("Poincare inequality with computed constant",
                   worst <= 1.0 + 1e-8, f"worst ratio {worst:.6f}")
    return fails


def suite_solver(seed=0):
    fails = 0
    g = build_grid(1, np.pi, 128)
    x = g.axis_coords()
    mask = full_mask(g)
    F = DualDatum(ScalarField(g, np.sin(x)),
                  VectorField(g, [np.zeros(g.size)]))
    coeffs = Coefficients(p=2.0, principal=PLaplace(1.0), beta=1.0)
    worst = 0.0
    for s in (0.0, 0.5, 1.0):
        rep = solve_vi(coeffs, F, Unconstrained(), s, mask)
        worst = max(worst, float(np.max(np.abs(rep.solution.values
                                               - 0.5 * np.sin(x)))))
    fails += _case("closed form u = sin(x)/2 for every s", worst <= 1e-10,
                   f"max abs {worst:.2e}")

    omega = interval_mask(g, -1.0, 1.0)
    psi = ScalarField(g, np.where(omega.inside, 0.5 - 4.0 * x**2, -1.0))
    Fm = DualDatum(ScalarField(g, np.where(omega.inside, -1.0, 0.0)),
                   VectorField(g, [np.zeros(g.size)]))
    cfg = SolverConfig(tol=1e-9)
    rep = solve_vi(Coefficients(p=2.0, principal=PLaplace(1.0)), Fm,
                   ObstacleLower(psi), 1.0, omega, cfg)
    feas, sign, comp = rep.kkt
    ok = rep.converged and feas == 0.0 and sign <= 1e-5 and comp <= 1e-5
    fails += _case("obstacle solve KKT residuals", ok,
                   f"kkt=({feas:.1e},{sign:.1e},{comp:.1e})")
    return fails


SUITES = {"spectral": suite_spectral, "spaces": suite_spaces,
          "solver": suite_solver}


def run_verify(suite: str = "all", seed: int = 0) -> int:
    names = list(SUITES) if suite == "all" else [suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite {unknown[0]!r} (have {sorted(SUITES)})")
    fails = 0
    for name in names:
        print(f"-- suite {name}")
        fails += SUITES[name](seed=seed)
    print(f"verify: {'all green' if fails == 0 else f'{fails} failure(s)'}")
    return fails
