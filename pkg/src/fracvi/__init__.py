"""fracvi: Riesz fractional gradient calculus (D^s, D^s., I_alpha, the
fractional (s,p)-Laplacian) on a truncated periodic box, with solvers for
obstacle- and gradient-constrained variational and quasi-variational
inequalities and an order-sweep stability harness."""

from ._backend import backend_name
from .grid import (DomainMask, GridError, ScalarField, TorusGrid, VectorField,
                   apply_mask, ball_mask, build_grid, dump_field_csv,
                   full_mask, inner, inner_vec, interval_mask, lp_norm,
                   lp_norm_vec, sample, zeros)
from .spectral import (FracOrder, MultiplierTable, SpectralError,
                       frac_divergence, frac_gradient, frac_laplacian,
                       kernel_gradient_oracle, kernel_gradient_pv_limit,
                       multiplier_table, normalization_constant,
                       riesz_potential)
from .spaces import (DualDatum, PoincareReport, dual_apply, dual_norm_upper,
                     embedding_probe, gn_residual, lambda_norm,
                     poincare_best_constant, sobolev_exponent)
from .vi import (Coefficients, Drift, GeneralHandles, GradientBound,
                 LinearMatrix, ObstacleLower, ObstacleUpper, PLaplace,
                 SolveReport, SolverConfig, SolverError, Unconstrained,
                 energy, energy_gradient, holder_modulus_check, kkt_residuals,
                 solve_gradient_vi, solve_vi)
from .stability import (SweepReport, SweepSpec, band_limited_field,
                        convergence_verdict, dyadic_schedule,
                        gradient_recovery_bound, obstacle_recovery_sequence,
                        sweep_orders, test_battery)
from .qvi import (ConstantBound, CustomBound, CustomSource, GradientQviSpec,
                  KernelBound, ObstacleQviSpec, QviReport, TruncationSource,
                  UrysonSource, auxiliary_obstacle, gradient_qvi_solve,
                  obstacle_qvi_solve, qvi_residual)

__version__ = "0.1.0"
