"""Constrained variational-inequality solvers for fractional divergence-form
operators: find u in K with <A_s(u) - F, v - u> >= 0 for all v in K.

Built-in operator families:
  * PLaplace: a(x, xi) = alpha(x) |xi|^(p-2) xi  (heterogeneous (s,p)-Laplacian),
  * LinearMatrix: a(xi) = A xi with symmetric elliptic A (p = 2 only),
  * GeneralHandles: user callables a(x, r, xi), b(x, r) (no convergence
    guarantee; the solver certifies the final VI residual only),
plus the built-in lower-order term beta*|r|^(p-2)*r and an optional Lipschitz
drift e(x, r) (p = 2, small-Lipschitz regime).

Solvers: diagonal Fourier solve (p=2, constant coefficients, full box),
preconditioned CG (p=2 linear, masked), projected gradient descent with
Barzilai-Borwein steps and Armijo backtracking (obstacle sets and p != 2),
ADMM splitting for gradient-norm constraints, damped Picard for frozen
coefficients and drift.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grid import (DomainMask, ScalarField, TorusGrid, VectorField,
                   full_mask, inner, lp_norm, lp_norm_vec, zeros)
from .spaces import DualDatum, dual_norm_upper, poincare_best_constant
from .spectral import (frac_divergence, frac_gradient, laplacian_weights,
                       multiplier_table)


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# problem statement
# ---------------------------------------------------------------------------

@dataclass
class PLaplace:
    """a(x, xi) = weight(x) |xi|^(p-2) xi, weight >= alpha_* > 0."""

    weight: object = 1.0  # float or ScalarField

    def weight_values(self, grid: TorusGrid) -> np.ndarray:
        if isinstance(self.weight, ScalarField):
            return self.weight.values
        return np.full(grid.size, float(self.weight))


@dataclass
class LinearMatrix:
    """a(x, xi) = A(x) xi, symmetric with ellipticity bound alpha > 0; p=2.

    A is (d, d) for a constant matrix or (d, d, n) with one matrix per node.
    """

    A: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if self.A.ndim not in (2, 3) or self.A.shape[0] != self.A.shape[1]:
            raise SolverError("LinearMatrix needs (d, d) or (d, d, n) data")
        sym = np.swapaxes(self.A, 0, 1)
        if not np.allclose(self.A, sym, atol=1e-12):
            raise SolverError("LinearMatrix must be symmetric")
        if self.alpha <= 0.0:
            raise SolverError("LinearMatrix must be elliptic (alpha > 0)")

    @property
    def is_constant(self) -> bool:
        return self.A.ndim == 2

    @property
    def alpha(self) -> float:
        if self.is_constant:
            return float(np.linalg.eigvalsh(self.A)[0])
        return float(np.min(np.linalg.eigvalsh(np.moveaxis(self.A, 2, 0))[:, 0]))

    @property
    def alpha_max(self) -> float:
        if self.is_constant:
            return float(np.linalg.eigvalsh(self.A)[-1])
        return float(np.max(np.linalg.eigvalsh(np.moveaxis(self.A, 2, 0))[:, -1]))


@dataclass
class GeneralHandles:
    """Carathéodory handles a(x, r, xi) -> flux components, b(x, r) -> values."""

    a: object
    b: object


@dataclass
class Drift:
    """e(x, r) -> vector components, |e(x,r)-e(x,rho)| <= lam*|r-rho|, e(x,0)=0."""

    e: object
    lam: float


@dataclass
class Coefficients:
    p: float
    principal: object = field(default_factory=PLaplace)
    beta: float = 0.0
    drift: Drift | None = None
    certificate: dict | None = None

    def __post_init__(self):
        if not (1.0 < self.p < np.inf):
            raise SolverError(f"p must be in (1, inf), got {self.p}")
        if self.beta < 0.0:
            raise SolverError("beta must be >= 0")
        if isinstance(self.principal, LinearMatrix) and self.p != 2.0:
            raise SolverError("LinearMatrix principal part requires p = 2")
        if self.drift is not None and self.p != 2.0:
            raise SolverError("drift perturbation requires p = 2")
        if self.certificate:
            self._check_certificate()

    def _check_certificate(self):
        c = self.certificate
        p = self.p
        d = c.get("d", 1)
        s = c.get("s", 1.0)
        sp = s * p
        pstar = d * p / (d - sp) if sp < d else np.inf
        for key, cap in (("q1", min(pstar, p * p / (p - 1.0))),
                         ("q2", min(pstar, p + 1.0)),
                         ("q3", p)):
            q = c.get(key)
            if q is not None and not (1.0 < q < cap):
                raise SolverError(f"certificate exponent {key}={q} violates 1<{key}<{cap}")

    @property
    def is_potential(self) -> bool:
        return isinstance(self.principal, (PLaplace, LinearMatrix)) and self.drift is None

    def monotonicity_constant(self, grid: TorusGrid) -> float:
        """Monotonicity constant alpha_p of the p-Laplacian-type lower bound."""
        if isinstance(self.principal, PLaplace):
            astar = float(np.min(self.principal.weight_values(grid)))
            if astar <= 0.0:
                raise SolverError("PLaplace weight must be bounded below by alpha_* > 0")
            base = 2.0 ** (2.0 - self.p) if self.p >= 2.0 else self.p - 1.0
            return astar * base
        if isinstance(self.principal, LinearMatrix):
            return self.principal.alpha
        raise SolverError("no monotonicity constant for general handles")


@dataclass
class Unconstrained:
    pass


@dataclass
class ObstacleLower:
    psi: ScalarField


@dataclass
class ObstacleUpper:
    phi: ScalarField


@dataclass
class GradientBound:
    g: ScalarField
    nu: float

    def __post_init__(self):
        if self.nu <= 0.0:
            raise SolverError(f"gradient bound needs nu > 0, got {self.nu}")
        if np.min(self.g.values) < self.nu:
            raise SolverError("gradient bound field dips below its floor nu")


@dataclass
class SolverConfig:
    tol: float = 1e-8
    max_iters: int = 50000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    rho: float = 10.0
    rho_band: float = 10.0
    rho_scale: float = 2.0
    omega: float = 0.7
    picard_cap: int = 200
    fp_tau: float = 0.0  # 0 -> auto estimate (GeneralHandles inner step)
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0.0:
            raise SolverError("tol must be positive")
        if not (0.0 < self.omega <= 1.0):
            raise SolverError("Picard damping omega must be in (0, 1]")


@dataclass
class SolveReport:
    solution: ScalarField
    s: float
    iterations: int
    energy_trace: np.ndarray
    kkt: tuple
    converged: bool
    wall_time: float
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "s": self.s,
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "kkt": list(self.kkt),
            "energy_final": float(self.energy_trace[-1]) if len(self.energy_trace) else None,
            "extras": {k: (list(v) if isinstance(v, np.ndarray) else v)
                       for k, v in self.extras.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# operator pieces
# ---------------------------------------------------------------------------

_EPS_REG = 1e-12


def _reg_mag(comps, p, scale):
    mag = np.sqrt(sum(c * c for c in comps))
    if p < 2.0:
        eps = _EPS_REG * (1.0 + scale)
        mag = np.sqrt(mag * mag + eps * eps)
    return mag


def _flux(coeffs: Coefficients, Du: VectorField) -> list:
    """a(x, D^s u) for the built-in principal parts."""
    if isinstance(coeffs.principal, PLaplace):
        w = coeffs.principal.weight_values(Du.grid)
        if coeffs.p == 2.0:
            return [w * c for c in Du.components]
        mag = _reg_mag(Du.components, coeffs.p, float(np.max(Du.magnitude(), initial=0.0)))
        fac = w * mag ** (coeffs.p - 2.0)
        return [fac * c for c in Du.components]
    A = coeffs.principal.A
    return [sum(A[i, j] * Du.components[j] for j in range(Du.grid.d))
            for i in range(Du.grid.d)]


def _lower_order(coeffs: Coefficients, u: ScalarField) -> np.ndarray:
    if coeffs.beta == 0.0:
        return np.zeros(u.grid.size)
    if coeffs.p == 2.0:
        return coeffs.beta * u.values
    scale = float(np.max(np.abs(u.values), initial=0.0))
    eps = _EPS_REG * (1.0 + scale) if coeffs.p < 2.0 else 0.0
    mag = np.sqrt(u.values**2 + eps * eps)
    return coeffs.beta * mag ** (coeffs.p - 2.0) * u.values


def energy(u: ScalarField, coeffs: Coefficients, F: DualDatum, s: float) -> float:
    """Potential integral alpha|D^s u|^p/p + beta|u|^p/p - <F, u>."""
    if not coeffs.is_potential:
        raise SolverError("energy of a non-potential operator")
    Du = frac_gradient(u, s)
    hd = u.grid.h**u.grid.d
    p = coeffs.p
    if isinstance(coeffs.principal, PLaplace):
        w = coeffs.principal.weight_values(u.grid)
        mag = Du.magnitude()
        val = float(np.sum(w * mag**p)) * hd / p
    else:
        A = coeffs.principal.A
        acc = np.zeros(u.grid.size)
        for i in range(u.grid.d):
            for j in range(u.grid.d):
                acc += A[i, j] * Du.components[i] * Du.components[j]
        val = 0.5 * float(np.sum(acc)) * hd
    if coeffs.beta > 0.0:
        val += coeffs.beta * float(np.sum(np.abs(u.values) ** p)) * hd / p
    val -= inner(F.f0, u)
    for fj, dj in zip(F.f.components, Du.components):
        val -= float(np.dot(fj, dj)) * hd
    return val


def _operator_minus_F(u: ScalarField, coeffs: Coefficients, F: DualDatum,
                      s: float, mask: DomainMask,
                      frozen_drift: list | None = None) -> np.ndarray:
    """mask( -D^s.(a(D^s u) [+ e] - f) + b(u) - f0 ) as raw values."""
    Du = frac_gradient(u, s)
    flux = _flux(coeffs, Du)
    if frozen_drift is not None:
        flux = [fl + e for fl, e in zip(flux, frozen_drift)]
    flux = [fl - fj for fl, fj in zip(flux, F.f.components)]
    div = frac_divergence(VectorField(u.grid, flux), s)
    out = -div.values + _lower_order(coeffs, u) - F.f0.values
    return np.where(mask.inside, out, 0.0)


def energy_gradient(u: ScalarField, coeffs: Coefficients, F: DualDatum,
                    s: float, mask: DomainMask | None = None) -> ScalarField:
    if not coeffs.is_potential:
        raise SolverError("energy gradient of a non-potential operator")
    if mask is None:
        mask = full_mask(u.grid)
    return ScalarField(u.grid, _operator_minus_F(u, coeffs, F, s, mask))


# ---------------------------------------------------------------------------
# projections and residuals
# ---------------------------------------------------------------------------

def _project(vals: np.ndarray, K, mask: DomainMask) -> np.ndarray:
    out = np.where(mask.inside, vals, 0.0)
    if isinstance(K, ObstacleLower):
        out = np.where(mask.inside, np.maximum(out, K.psi.values), 0.0)
    elif isinstance(K, ObstacleUpper):
        out = np.where(mask.inside, np.minimum(out, K.phi.values), 0.0)
    return out


def _check_feasible(K, mask: DomainMask):
    if isinstance(K, ObstacleLower) and np.any(K.psi.values[~mask.inside] > 0.0):
        raise SolverError("lower obstacle positive outside Omega: K is empty")
    if isinstance(K, ObstacleUpper) and np.any(K.phi.values[~mask.inside] < 0.0):
        raise SolverError("upper obstacle negative outside Omega: K is empty")


def kkt_residuals(u: ScalarField, coeffs: Coefficients, F: DualDatum, K, s: float,
                  mask: DomainMask, extras: dict | None = None) -> tuple:
    """(primal feasibility, multiplier sign violation, complementarity gap)."""
    if isinstance(K, GradientBound):
        if not extras:
            raise SolverError("gradient-bound KKT needs the ADMM report extras")
        Du = frac_gradient(u, s)
        feas = float(np.max(np.maximum(Du.magnitude() - K.g.values, 0.0)))
        return (feas, extras["dual_residual"], extras["duality_gap"])
    lam = _operator_minus_F(u, coeffs, F, s, mask)
    if isinstance(K, Unconstrained):
        return (0.0, float(np.max(np.abs(lam))), 0.0)
    if isinstance(K, ObstacleLower):
        slack = u.values - K.psi.values
        feas = float(np.max(np.maximum(-slack[mask.inside], 0.0), initial=0.0))
        sign = float(np.max(np.maximum(-lam, 0.0)))
        comp = abs(float(np.dot(lam[mask.inside], slack[mask.inside]))
                   * u.grid.h**u.grid.d)
        return (feas, sign, comp)
    slack = K.phi.values - u.values
    feas = float(np.max(np.maximum(-slack[mask.inside], 0.0), initial=0.0))
    sign = float(np.max(np.maximum(lam, 0.0)))
    comp = abs(float(np.dot(lam[mask.inside], slack[mask.inside]))
               * u.grid.h**u.grid.d)
    return (feas, sign, comp)


# ---------------------------------------------------------------------------
# linear solve machinery (p = 2)
# ---------------------------------------------------------------------------

def _riesz_rep(F: DualDatum, s: float) -> np.ndarray:
    """G with <F, v> = (G, v): G = f0 - D^s . f."""
    if all(not fj.any() for fj in F.f.components):
        return F.f0.values.copy()
    return F.f0.values - frac_divergence(F.f, s).values


class _MaskedLinearOp:
    """u -> mask(rho*(-D^s.(a D^s u) + beta u) + shift u) for p=2 built-ins."""

    def __init__(self, grid: TorusGrid, coeffs: Coefficients, s: float,
                 mask: DomainMask, rho: float = 1.0, beta_shift: float = 0.0):
        self.grid = grid
        self.coeffs = coeffs
        self.s = s
        self.mask = mask
        self.rho = rho
        self.beta_shift = beta_shift
        w = laplacian_weights(grid, s)
        if isinstance(coeffs.principal, PLaplace):
            abar = float(np.mean(coeffs.principal.weight_values(grid)))
        else:
            A = coeffs.principal.A
            abar = float(np.mean([np.mean(A[i, i]) for i in range(grid.d)]))
        self.pre = 1.0 / (rho * abar * w + rho * coeffs.beta + beta_shift + 1e-8)

    def apply(self, vals: np.ndarray) -> np.ndarray:
        u = ScalarField(self.grid, np.where(self.mask.inside, vals, 0.0))
        Du = frac_gradient(u, self.s)
        flux = _flux(self.coeffs, Du)
        out = -frac_divergence(VectorField(self.grid, flux), self.s).values
        out = self.rho * (out + self.coeffs.beta * u.values) + self.beta_shift * u.values
        return np.where(self.mask.inside, out, 0.0)

    def precondition(self, r: np.ndarray) -> np.ndarray:
        z = np.fft.ifftn(self.pre * np.fft.fftn(r.reshape(self.grid.shape))).real
        return np.where(self.mask.inside, z.reshape(-1), 0.0)

    def solve(self, b: np.ndarray, x0: np.ndarray, tol: float, maxit: int = 2000):
        x = np.where(self.mask.inside, x0, 0.0)
        r = np.where(self.mask.inside, b, 0.0) - self.apply(x)
        bn = float(np.linalg.norm(b)) + 1e-300
        if np.linalg.norm(r) <= tol * bn:
            return x, 0, float(np.linalg.norm(r) / bn)
        z = self.precondition(r)
        p = z.copy()
        rz = float(np.dot(r, z))
        its = 0
        for its in range(1, maxit + 1):
            Ap = self.apply(p)
            pAp = float(np.dot(p, Ap))
            if pAp <= 0.0 or rz == 0.0:
                break
            alpha = rz / pAp
            x = x + alpha * p
            r = r - alpha * Ap
            if np.linalg.norm(r) <= tol * bn:
                break
            z = self.precondition(r)
            rz_new = float(np.dot(r, z))
            p = z + (rz_new / rz) * p
            rz = rz_new
        return x, its, float(np.linalg.norm(r) / bn)


# ---------------------------------------------------------------------------
# solve_vi
# ---------------------------------------------------------------------------

def _fast_path_applies(coeffs: Coefficients, K, mask: DomainMask) -> bool:
    return (coeffs.p == 2.0 and isinstance(K, Unconstrained) and mask.is_full_box
            and coeffs.drift is None
            and ((isinstance(coeffs.principal, LinearMatrix)
                  and coeffs.principal.is_constant)
                 or (isinstance(coeffs.principal, PLaplace)
                     and not isinstance(coeffs.principal.weight, ScalarField))))


def _diagonal_solve(coeffs: Coefficients, F: DualDatum, s: float,
                    grid: TorusGrid) -> ScalarField:
    if isinstance(coeffs.principal, PLaplace):
        alpha = float(coeffs.principal.weight)
        w = alpha * laplacian_weights(grid, s)
    else:
        # isotropic part of A acts on the gradient: for symmetric A the
        # divergence-form symbol is sum_ij A_ij m_i conj(m_j) -> kappa^T A kappa / |kappa|^(2-2s)
        tab = multiplier_table(grid, s)
        w = np.zeros(grid.shape)
        A = coeffs.principal.A
        for i in range(grid.d):
            for j in range(grid.d):
                w = w + (A[i, j] * tab.components[i] * np.conj(tab.components[j])).real
    den = w + coeffs.beta
    Gh = np.fft.fftn(_riesz_rep(F, s).reshape(grid.shape))
    flat0 = (0,) * grid.d
    with np.errstate(divide="ignore", invalid="ignore"):
        uh = np.where(den > 0.0, Gh / np.where(den > 0.0, den, 1.0), 0.0)
    if den[flat0] == 0.0:
        uh[flat0] = 0.0  # mean indeterminate at beta=0: fixed to zero
    u = np.fft.ifftn(uh).real.reshape(-1)
    return ScalarField(grid, u)


def _estimate_lipschitz(coeffs: Coefficients, s: float, grid: TorusGrid,
                        u0: ScalarField) -> float:
    kmax = np.pi * (grid.N // 2) / grid.L * np.sqrt(grid.d)
    if isinstance(coeffs.principal, PLaplace):
        amax = float(np.max(coeffs.principal.weight_values(grid)))
    else:
        amax = coeffs.principal.alpha_max
    p = coeffs.p
    gscale = 1.0 + float(np.max(frac_gradient(u0, s).magnitude(), initial=0.0))
    uscale = 1.0 + float(np.max(np.abs(u0.values), initial=0.0))
    fac = max(p - 1.0, 1.0)
    L = amax * kmax ** (2.0 * s) * fac * gscale ** (p - 2.0) if p >= 2.0 else \
        amax * kmax ** (2.0 * s) * fac
    L += coeffs.beta * fac * (uscale ** (p - 2.0) if p >= 2.0 else 1.0)
    return max(L, 1e-12)


def _spg(coeffs, F, K, s, mask, config, u0=None):
    """Projected gradient descent with BB steps and Armijo backtracking."""
    grid = F.f0.grid
    if u0 is None:
        u = ScalarField(grid, _project(np.zeros(grid.size), K, mask))
    else:
        u = ScalarField(grid, _project(u0.values, K, mask))
    tau_ref = 1.0 / _estimate_lipschitz(coeffs, s, grid, u)
    g = energy_gradient(u, coeffs, F, s, mask).values
    e = energy(u, coeffs, F, s)
    trace = [e]
    tau = tau_ref
    hd = grid.h**grid.d
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        step = _project(u.values - tau * g, K, mask)
        direction = step - u.values
        dg = float(np.dot(g, direction)) * hd
        e_new = None
        bt = 0
        while True:
            trial = ScalarField(grid, step)
            e_new = energy(trial, coeffs, F, s)
            if e_new <= e + config.armijo_c * dg or bt >= 60:
                break
            tau *= config.backtrack
            step = _project(u.values - tau * g, K, mask)
            direction = step - u.values
            dg = float(np.dot(g, direction)) * hd
            bt += 1
        u_new = ScalarField(grid, step)
        g_new = energy_gradient(u_new, coeffs, F, s, mask).values
        # stationarity ||u - P_K(u - tau grad)|| / tau at the accepted step
        res = float(np.linalg.norm(
            u_new.values - _project(u_new.values - tau * g_new, K, mask))
            * np.sqrt(hd)) / tau
        du = u_new.values - u.values
        dgrad = g_new - g
        u, g, e = u_new, g_new, e_new
        trace.append(e)
        if res <= config.tol:
            converged = True
            break
        sty = float(np.dot(du, dgrad))
        if sty > 0.0:
            tau = float(np.dot(du, du)) / sty
        else:
            tau = tau_ref
        tau = min(max(tau, 1e-6 * tau_ref), 1e6 * tau_ref)
    return u, np.asarray(trace), it, converged, res


def solve_vi(coeffs: Coefficients, F: DualDatum, K, s: float, mask: DomainMask,
             config: SolverConfig | None = None,
             u0: ScalarField | None = None) -> SolveReport:
    """Solve <A_s(u) - F, v - u> >= 0 over K (unconstrained or obstacle)."""
    config = config or SolverConfig()
    if isinstance(K, GradientBound):
        raise SolverError("gradient-norm constraints are handled by solve_gradient_vi")
    grid = F.f0.grid
    _check_feasible(K, mask)
    t0 = time.perf_counter()

    if coeffs.drift is not None:
        return _solve_drift(coeffs, F, K, s, mask, config, u0, t0)
    if isinstance(coeffs.principal, GeneralHandles):
        return _solve_general(coeffs, F, K, s, mask, config, u0, t0)

    if _fast_path_applies(coeffs, K, mask) and u0 is None:
        u = _diagonal_solve(coeffs, F, s, grid)
        e = energy(u, coeffs, F, s)
        kkt = kkt_residuals(u, coeffs, F, K, s, mask)
        return SolveReport(u, s, 0, np.asarray([e]), kkt, True,
                           time.perf_counter() - t0, {"path": "diagonal"})

    if (coeffs.p == 2.0 and isinstance(K, Unconstrained)
            and not isinstance(coeffs.principal, GeneralHandles)):
        op = _MaskedLinearOp(grid, coeffs, s, mask)
        b = np.where(mask.inside, _riesz_rep(F, s), 0.0)
        x0 = u0.values if u0 is not None else np.zeros(grid.size)
        x, its, res = op.solve(b, x0, tol=config.tol * 1e-2, maxit=config.max_iters)
        u = ScalarField(grid, x)
        e = energy(u, coeffs, F, s)
        kkt = kkt_residuals(u, coeffs, F, K, s, mask)
        return SolveReport(u, s, its, np.asarray([e]), kkt,
                           res <= config.tol, time.perf_counter() - t0,
                           {"path": "pcg", "linear_residual": res})

    u, trace, its, conv, res = _spg(coeffs, F, K, s, mask, config, u0)
    kkt = kkt_residuals(u, coeffs, F, K, s, mask)
    extras = {"path": "spg", "projected_residual": res}
    if not conv:
        extras["residual_trace_tail"] = res
    return SolveReport(u, s, its, trace, kkt, conv,
                       time.perf_counter() - t0, extras)


def _solve_drift(coeffs, F, K, s, mask, config, u0, t0):
    """Damped Picard over the frozen drift e(u^k); p=2, alpha2 > lam*c_{2,s}."""
    grid = F.f0.grid
    alpha2 = coeffs.monotonicity_constant(grid)
    c2s = poincare_best_constant(mask, s, tol=1e-8).c if mask.complement_nonempty() else 1.0
    if alpha2 <= coeffs.drift.lam * c2s:
        raise SolverError(
            f"drift too strong: alpha2={alpha2} <= lam*c_2s={coeffs.drift.lam * c2s}")
    frozen = Coefficients(p=2.0, principal=coeffs.principal, beta=coeffs.beta)
    u = u0 or zeros(grid)
    coords = grid.flat_coords()
    trace = []
    converged = False
    k = 0
    for k in range(1, config.picard_cap + 1):
        evals = coeffs.drift.e(coords, u.values)
        f_shift = [fj - ej for fj, ej in zip(F.f.components, evals)]
        F_eff = DualDatum(F.f0, VectorField(grid, f_shift))
        rep = solve_vi(frozen, F_eff, K, s, mask, config)
        new_vals = (1.0 - config.omega) * u.values + config.omega * rep.solution.values
        resid = float(np.linalg.norm(new_vals - u.values) * np.sqrt(grid.h**grid.d))
        u = ScalarField(grid, new_vals)
        trace.append(resid)
        if resid <= config.tol:
            converged = True
            break
    kkt = kkt_residuals(u, coeffs, F, K, s, mask)
    return SolveReport(u, s, k, np.asarray(trace), kkt, converged,
                       time.perf_counter() - t0, {"path": "picard-drift"})


def _solve_general(coeffs, F, K, s, mask, config, u0, t0):
    """Frozen-coefficient Picard for GeneralHandles; certifies residual only."""
    grid = F.f0.grid
    coords = grid.flat_coords()
    u = u0 or ScalarField(grid, _project(np.zeros(grid.size), K, mask))
    handles = coeffs.principal
    tau = config.fp_tau
    trace = []
    converged = False
    k = 0
    for k in range(1, config.picard_cap + 1):
        r_frozen = u.values.copy()

        def op(vals):
            uu = ScalarField(grid, np.where(mask.inside, vals, 0.0))
            Du = frac_gradient(uu, s)
            flux = handles.a(coords, r_frozen, Du.components)
            flux = [np.asarray(fl) - fj for fl, fj in zip(flux, F.f.components)]
            div = frac_divergence(VectorField(grid, flux), s)
            out = -div.values + np.asarray(handles.b(coords, r_frozen)) - F.f0.values
            return np.where(mask.inside, out, 0.0)

        if tau <= 0.0:
            kmax = np.pi * (grid.N // 2) / grid.L * np.sqrt(grid.d)
            tau = 1.0 / (kmax ** (2.0 * s) + 1.0)
        v = u.values.copy()
        for _ in range(200):
            v_new = _project(v - tau * op(v), K, mask)
            if np.linalg.norm(v_new - v) <= 0.1 * config.tol * tau:
                v = v_new
                break
            v = v_new
        new_vals = (1.0 - config.omega) * u.values + config.omega * v
        resid = float(np.linalg.norm(new_vals - u.values) * np.sqrt(grid.h**grid.d))
        u = ScalarField(grid, new_vals)
        trace.append(resid)
        if resid <= config.tol:
            converged = True
            break
    vi_res = float(np.linalg.norm(
        u.values - _project(u.values - tau * _general_residual(u, coeffs, F, s, mask),
                            K, mask)) * np.sqrt(grid.h**grid.d)) / tau
    return SolveReport(u, s, k, np.asarray(trace), (0.0, vi_res, 0.0), converged,
                       time.perf_counter() - t0,
                       {"path": "picard-general", "vi_residual": vi_res})


def _general_residual(u, coeffs, F, s, mask):
    grid = u.grid
    coords = grid.flat_coords()
    Du = frac_gradient(u, s)
    flux = coeffs.principal.a(coords, u.values, Du.components)
    flux = [np.asarray(fl) - fj for fl, fj in zip(flux, F.f.components)]
    div = frac_divergence(VectorField(grid, flux), s)
    out = -div.values + np.asarray(coeffs.principal.b(coords, u.values)) - F.f0.values
    return np.where(mask.inside, out, 0.0)


# ---------------------------------------------------------------------------
# gradient-constraint ADMM
# ---------------------------------------------------------------------------

def solve_gradient_vi(coeffs: Coefficients, F: DualDatum, g: ScalarField,
                      nu: float, s: float, mask: DomainMask,
                      config: SolverConfig | None = None,
                      u0: ScalarField | None = None) -> SolveReport:
    """ADMM splitting for K = {|D^s u| <= g}: z ~ D^s u with radial prox."""
    config = config or SolverConfig()
    K = GradientBound(g, nu)
    if not coeffs.is_potential:
        raise SolverError("gradient-constraint solver needs potential-type coefficients")
    grid = F.f0.grid
    p = coeffs.p
    if isinstance(coeffs.principal, PLaplace):
        alpha_vals = coeffs.principal.weight_values(grid)
    else:
        raise SolverError("gradient-constraint solver supports PLaplace principal parts")
    use_wblock = coeffs.beta > 0.0 and p != 2.0
    if mask.is_full_box and coeffs.beta == 0.0:
        raise SolverError(
            "gradient-constraint solve on the full box with beta = 0 is "
            "singular (no Poincare control); shrink Omega or set beta > 0")
    t0 = time.perf_counter()

    rho = config.rho
    u = (u0 or zeros(grid)).copy()
    u = ScalarField(grid, np.where(mask.inside, u.values, 0.0))
    z = [c.copy() for c in frac_gradient(u, s).components]
    yz = [np.zeros(grid.size) for _ in range(grid.d)]
    w = u.values.copy()
    yw = np.zeros(grid.size)
    hd = grid.h**grid.d
    sqhd = np.sqrt(hd)
    gvals = g.values
    it = 0
    rp = rd = np.inf
    converged = False
    beta_shift = coeffs.beta if (p == 2.0 and coeffs.beta > 0.0) else 0.0

    def make_lin(rho_now):
        shift = beta_shift + (rho_now if use_wblock else 0.0)
        return _MaskedLinearOp(grid,
                               Coefficients(p=2.0, principal=PLaplace(1.0), beta=0.0),
                               s, mask, rho=rho_now, beta_shift=shift)

    lin = make_lin(rho)
    x_warm = u.values.copy()
    for it in range(1, config.max_iters + 1):
        # u-update: [rho (-Delta)^s + beta_shift (+rho)] u = f0 - rho div_s(z-yz) (+ rho(w-yw))
        vz = VectorField(grid, [zz - yy for zz, yy in zip(z, yz)])
        b = F.f0.values - rho * frac_divergence(vz, s).values
        if use_wblock:
            b = b + rho * (w - yw)
        b = np.where(mask.inside, b, 0.0)
        x_warm, _, _ = lin.solve(b, x_warm, tol=1e-12)
        u = ScalarField(grid, x_warm)
        Du = frac_gradient(u, s)
        # z-update: radial prox of (alpha/p)|z|^p + indicator(|z|<=g)
        tz = [du + yy + fj / rho for du, yy, fj in
              zip(Du.components, yz, F.f.components)]
        tmag = np.sqrt(sum(t * t for t in tz))
        rmag = _kernels.radial_prox(tmag, gvals, alpha_vals, rho, p)
        scalefac = np.where(tmag > 0.0, rmag / np.where(tmag > 0.0, tmag, 1.0), 0.0)
        z_old = z
        z = [scalefac * t for t in tz]
        if use_wblock:
            tw = u.values + yw
            w_old = w
            wmag = _kernels.radial_prox(np.abs(tw), np.full(grid.size, np.inf),
                                        np.full(grid.size, coeffs.beta), rho, p)
            w = np.sign(tw) * wmag
        # dual ascent
        r_pr = [du - zz for du, zz in zip(Du.components, z)]
        yz = [yy + r for yy, r in zip(yz, r_pr)]
        rp = np.sqrt(sum(float(np.dot(r, r)) for r in r_pr) * hd)
        dz = VectorField(grid, [a - b_ for a, b_ in zip(z, z_old)])
        rd = rho * float(np.linalg.norm(frac_divergence(dz, s).values)) * sqhd
        if use_wblock:
            yw = yw + (u.values - w)
            rp = np.hypot(rp, float(np.linalg.norm(u.values - w)) * sqhd)
            rd = np.hypot(rd, rho * float(np.linalg.norm(w - w_old)) * sqhd)
        feas = float(np.max(np.maximum(Du.magnitude() - gvals, 0.0)))
        if rp <= config.tol and rd <= config.tol and feas <= config.tol * (
                1.0 + float(np.max(gvals))):
            converged = True
            break
        if it % 10 == 0:
            if rp > config.rho_band * rd:
                rho *= config.rho_scale
                yz = [yy / config.rho_scale for yy in yz]
                yw = yw / config.rho_scale
                lin = make_lin(rho)
            elif rd > config.rho_band * rp:
                rho /= config.rho_scale
                yz = [yy * config.rho_scale for yy in yz]
                yw = yw * config.rho_scale
                lin = make_lin(rho)
    ymag = np.sqrt(sum((rho * yy) ** 2 for yy in yz))
    zmag = np.sqrt(sum(zz * zz for zz in z))
    gap = float(np.sum(ymag * np.maximum(gvals - zmag, 0.0)) * hd)
    extras = {
        "path": "admm",
        "primal_residual": rp,
        "dual_residual": rd,
        "duality_gap": gap,
        "rho_final": rho,
    }
    kkt = kkt_residuals(u, coeffs, F, K, s, mask, extras)
    e = energy(u, coeffs, F, s) if coeffs.is_potential else np.nan
    return SolveReport(u, s, it, np.asarray([e]), kkt, converged,
                       time.perf_counter() - t0, extras)


# ---------------------------------------------------------------------------
# data-continuity certificate
# ---------------------------------------------------------------------------

def holder_modulus_check(coeffs: Coefficients, F1: DualDatum, F2: DualDatum,
                         K, s: float, mask: DomainMask,
                         config: SolverConfig | None = None) -> dict:
    """Compare ||D^s(u1-u2)||_p against the solution-map modulus bound.

    p>=2: lhs <= alpha_p^(1/(1-p)) ||F1-F2||^(1/(p-1));
    1<p<2: lhs <= 2^((p-1)(2-p)/p) alpha_p^((3-p)/(1-p)) ||F1-F2||
                  (||F1||^(1/(1-p)) + ||F2||^(1/(1-p)))^(2-p),
    dual norms taken as the certified upper-bound surrogate.
    """
    config = config or SolverConfig()
    grid = F1.f0.grid
    if isinstance(K, ObstacleLower) and np.max(K.psi.values) > 0.0:
        raise SolverError("modulus bound needs 0 in K (obstacle must be <= 0)")
    if isinstance(K, ObstacleUpper) and np.min(K.phi.values) < 0.0:
        raise SolverError("modulus bound needs 0 in K (upper obstacle >= 0)")
    rep1 = solve_vi(coeffs, F1, K, s, mask, config)
    rep2 = solve_vi(coeffs, F2, K, s, mask, config)
    d12 = ScalarField(grid, rep1.solution.values - rep2.solution.values)
    p = coeffs.p
    lhs = lp_norm_vec(frac_gradient(d12, s), p)
    dF = DualDatum(ScalarField(grid, F1.f0.values - F2.f0.values),
                   VectorField(grid, [a - b for a, b in
                                      zip(F1.f.components, F2.f.components)]))
    ndF = dual_norm_upper(dF, s, p, mask)
    alpha_p = coeffs.monotonicity_constant(grid)
    if p >= 2.0:
        rhs = alpha_p ** (1.0 / (1.0 - p)) * ndF ** (1.0 / (p - 1.0))
    else:
        n1 = dual_norm_upper(F1, s, p, mask)
        n2 = dual_norm_upper(F2, s, p, mask)
        cp = (2.0 ** ((p - 1.0) * (2.0 - p) / p) * alpha_p ** ((3.0 - p) / (1.0 - p))
              * (n1 ** (1.0 / (1.0 - p)) + n2 ** (1.0 / (1.0 - p))) ** (2.0 - p))
        rhs = cp * ndF
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ok": bool(lhs <= rhs),
        "dual_norm_delta": ndF,
        "iterations": (rep1.iterations, rep2.iterations),
        "converged": bool(rep1.converged and rep2.converged),
    }
