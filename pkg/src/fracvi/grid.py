"""Periodic computational box, grid functions, masks, norms and inner products.

The box [-L, L)^d with N nodes per axis (node-centered at x_j = -L + j*h,
h = 2L/N) stands in for R^d: fields of interest are supported well inside
the box so that periodization error is a controlled truncation effect.
Fields are stored as flat float64 arrays of length N^d, row-major over axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or mismatched grid operands."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [-L, L)^d, d in {1,2,3}."""

    d: int
    L: float
    N: int

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    def axis_coords(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    def coords(self) -> list:
        """d arrays of shape grid.shape with the node coordinates."""
        ax = self.axis_coords()
        return list(np.meshgrid(*([ax] * self.d), indexing="ij"))

    def flat_coords(self) -> list:
        return [c.reshape(-1) for c in self.coords()]


def build_grid(d: int, L: float, N: int) -> TorusGrid:
    if d not in (1, 2, 3):
        raise GridError(f"dimension must be 1, 2 or 3, got {d}")
    if not (L > 0):
        raise GridError(f"half-length L must be positive, got {L}")
    if N % 2 != 0:
        raise GridError(f"N must be even, got {N}")
    if N < 8:
        raise GridError(f"N must be >= 8, got {N}")
    return TorusGrid(d=d, L=float(L), N=int(N))


def _check_finite(values: np.ndarray, what: str, grid: TorusGrid | None = None):
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values.reshape(-1)))[0])
        loc = ""
        if grid is not None:
            loc = " at x=(" + ", ".join(
                f"{c[bad]:.6g}" for c in grid.flat_coords()) + ")"
        raise GridError(f"non-finite value in {what} (flat index {bad}{loc})")


@dataclass
class ScalarField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.size != self.grid.size:
            raise GridError(
                f"field length {self.values.size} != grid size {self.grid.size}")
        _check_finite(self.values, "ScalarField")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    grid: TorusGrid
    components: list

    def __post_init__(self):
        if len(self.components) != self.grid.d:
            raise GridError(
                f"need {self.grid.d} components, got {len(self.components)}")
        self.components = [
            np.asarray(c, dtype=np.float64).reshape(-1) for c in self.components
        ]
        for c in self.components:
            if c.size != self.grid.size:
                raise GridError("component length mismatch")
            _check_finite(c, "VectorField")

    def magnitude(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.components))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, [c.copy() for c in self.components])


@dataclass
class DomainMask:
    """Omega as a boolean node set; fields of the solvers vanish off it."""

    grid: TorusGrid
    inside: np.ndarray

    def __post_init__(self):
        self.inside = np.asarray(self.inside, dtype=bool).reshape(-1)
        if self.inside.size != self.grid.size:
            raise GridError("mask length mismatch")
        if not self.inside.any():
            raise GridError("mask has no interior point")

    @property
    def is_full_box(self) -> bool:
        return bool(self.inside.all())

    def complement_nonempty(self) -> bool:
        return not self.inside.all()


def full_mask(grid: TorusGrid) -> DomainMask:
    return DomainMask(grid, np.ones(grid.size, dtype=bool))


def interval_mask(grid: TorusGrid, a: float, b: float) -> DomainMask:
    """Omega = (a, b)^d as an open box; d=1 gives an interval."""
    inside = np.ones(grid.size, dtype=bool)
    for c in grid.flat_coords():
        inside &= (c > a) & (c < b)
    return DomainMask(grid, inside)


def ball_mask(grid: TorusGrid, center, radius: float) -> DomainMask:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    r2 = np.zeros(grid.size)
    for j, c in enumerate(grid.flat_coords()):
        r2 += (c - center[j]) ** 2
    return DomainMask(grid, r2 < radius**2)


def sample(grid: TorusGrid, fn) -> ScalarField:
    """Evaluate fn at the nodes; fn receives d coordinate arrays."""
    vals = np.asarray(fn(*grid.flat_coords()), dtype=np.float64)
    vals = np.broadcast_to(vals, (grid.size,)).copy()
    _check_finite(vals, "sampled function", grid)
    return ScalarField(grid, vals)


def lp_norm(f: ScalarField, p: float) -> float:
    """Quadrature norm (sum |f_j|^p h^d)^(1/p); p=inf gives the max norm."""
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise GridError(f"p must be >= 1, got {p}")
    hd = f.grid.h**f.grid.d
    return float((np.sum(np.abs(f.values) ** p) * hd) ** (1.0 / p))


def lp_norm_vec(V: VectorField, p: float) -> float:
    mag = V.magnitude()
    if p == np.inf:
        return float(np.max(mag))
    if p < 1:
        raise GridError(f"p must be >= 1, got {p}")
    hd = V.grid.h**V.grid.d
    return float((np.sum(mag**p) * hd) ** (1.0 / p))


def inner(f: ScalarField, g: ScalarField) -> float:
    if f.grid != g.grid:
        raise GridError("inner product needs a shared grid")
    return float(np.dot(f.values, g.values) * f.grid.h**f.grid.d)


def inner_vec(V: VectorField, W: VectorField) -> float:
    if V.grid != W.grid:
        raise GridError("inner product needs a shared grid")
    hd = V.grid.h**V.grid.d
    return float(sum(np.dot(a, b) for a, b in zip(V.components, W.components)) * hd)


def apply_mask(f: ScalarField, mask: DomainMask) -> ScalarField:
    if f.grid != mask.grid:
        raise GridError("field and mask grids differ")
    return ScalarField(f.grid, np.where(mask.inside, f.values, 0.0))


def zeros(grid: TorusGrid) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.size))


def dump_field_csv(f: ScalarField, path):
    """CSV dump: header "index,x1[,x2[,x3]],value" in node order."""
    coords = f.grid.flat_coords()
    cols = ["index"] + [f"x{j+1}" for j in range(f.grid.d)] + ["value"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(f.grid.size):
            row = [str(i)] + [repr(float(c[i])) for c in coords]
            row.append(repr(float(f.values[i])))
            fh.write(",".join(row) + "\n")
