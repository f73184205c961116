"""State-space discretizations, ordering cones and the duality indicator.

Grids are finite rectangular truncations of R^d with a fixed row-major
point ordering (axis 0 slowest), so every matrix built on top of them is
reproducible bit-for-bit.  Cones are generated by d linearly independent
vectors; the identity basis gives the Pareto cone R^d_+.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyGrid,
    NonCommensurate,
    SingularBasis,
)

BOUNDARY_POLICIES = ("truncate_mass", "reflect", "absorb")

# relative tolerance for closed-cone membership at the boundary
_CONE_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Rectangular lattice on [lower, upper] with per-axis spacing."""

    lower: np.ndarray
    upper: np.ndarray
    spacing: np.ndarray
    boundary_policy: tuple[tuple[str, str], ...]

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple[int, ...]:
        n = np.rint((self.upper - self.lower) / self.spacing).astype(int) + 1
        return tuple(int(k) for k in n)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        """All grid points, shape (n_points, dim), row-major (axis 0 slowest)."""
        axes = [self.lower[i] + self.spacing[i] * np.arange(self.shape[i])
                for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel(order="C") for m in mesh], axis=-1)

    def axis_points(self, axis: int) -> np.ndarray:
        return self.lower[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def index_of(self, x, tol: float = 1e-9):
        """Flat index of the grid point at x, or None if x is off-lattice."""
        idx = (np.asarray(x, dtype=float) - self.lower) / self.spacing
        ridx = np.rint(idx)
        if np.any(np.abs(idx - ridx) > tol):
            return None
        ridx = ridx.astype(int)
        if np.any(ridx < 0) or np.any(ridx >= self.shape):
            return None
        return int(np.ravel_multi_index(tuple(ridx), self.shape, order="C"))

    def contains_point(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


def _normalize_policy(boundary_policy, dim: int):
    """Accept a single name, a per-axis list, or per-axis-end pairs."""
    if isinstance(boundary_policy, str):
        if boundary_policy not in BOUNDARY_POLICIES:
            raise ValueError(f"unknown boundary policy {boundary_policy!r}")
        return tuple(((boundary_policy, boundary_policy),) * dim)
    policy = []
    for axis_spec in boundary_policy:
        if isinstance(axis_spec, str):
            axis_spec = (axis_spec, axis_spec)
        lo, hi = axis_spec
        for name in (lo, hi):
            if name not in BOUNDARY_POLICIES:
                raise ValueError(f"unknown boundary policy {name!r}")
        policy.append((lo, hi))
    if len(policy) != dim:
        raise DimensionMismatch("boundary policy length != grid dimension")
    return tuple(policy)


def build_grid(lower, upper, spacing, boundary_policy="truncate_mass") -> Grid:
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    spacing = np.atleast_1d(np.asarray(spacing, dtype=float))
    if not (len(lower) == len(upper) == len(spacing)):
        raise DimensionMismatch("lower/upper/spacing must have equal length")
    if np.any(spacing <= 0):
        raise NonCommensurate("spacing must be positive")
    if np.any(upper <= lower):
        raise EmptyGrid("upper must exceed lower on every axis")
    ratio = (upper - lower) / spacing
    if np.any(np.abs(ratio - np.rint(ratio)) > 1e-9 * np.maximum(1.0, ratio)):
        raise NonCommensurate(f"spacing does not divide the range evenly: {ratio}")
    n = np.rint(ratio).astype(int) + 1
    if np.any(n < 2):
        raise EmptyGrid("every axis needs at least two points")
    policy = _normalize_policy(boundary_policy, len(lower))
    return Grid(lower=lower, upper=upper, spacing=spacing, boundary_policy=policy)


@dataclass(frozen=True)
class Cone:
    """Ordering cone generated by d linearly independent basis vectors."""

    basis: np.ndarray          # columns are the generating vectors e_1..e_d
    det_abs: float = field(default=0.0)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise SingularBasis("basis must be a square matrix of column vectors")
        det = np.linalg.det(basis)
        if abs(det) < 1e-12:
            raise SingularBasis("cone basis vectors are linearly dependent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "det_abs", abs(det))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def pareto(cls, dim: int) -> "Cone":
        return cls(basis=np.eye(dim))

    @classmethod
    def from_vectors(cls, *vectors) -> "Cone":
        return cls(basis=np.stack([np.asarray(v, float) for v in vectors], axis=-1))


def lightcone_2d() -> Cone:
    """The cone {(x, y): y >= |x|}, generated by (1,1) and (-1,1)."""
    return Cone.from_vectors([1.0, 1.0], [-1.0, 1.0])


def cone_contains(c: Cone, v) -> bool:
    v = np.asarray(v, dtype=float)
    if v.shape != (c.dim,):
        raise DimensionMismatch(f"vector of dim {v.shape} vs cone of dim {c.dim}")
    try:
        alpha = np.linalg.solve(c.basis, v)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded in __post_init__
        raise SingularBasis(str(exc)) from exc
    tol = _CONE_TOL * float(np.linalg.norm(v))
    return bool(np.all(alpha >= -tol))


def cone_contains_many(c: Cone, vs: np.ndarray) -> np.ndarray:
    """Vectorized membership test for an (n, d) array of vectors."""
    vs = np.asarray(vs, dtype=float)
    alpha = np.linalg.solve(c.basis, vs.T).T
    tol = _CONE_TOL * np.linalg.norm(vs, axis=-1, keepdims=True)
    return np.all(alpha >= -tol, axis=-1)


def duality_indicator_matrix(g: Grid, c: Cone) -> np.ndarray:
    """f-matrix with entry [ix, iy] = 1 iff x - y lies in the cone."""
    if g.dim != c.dim:
        raise DimensionMismatch("grid and cone dimensions differ")
    pts = g.points()
    diffs = pts[:, None, :] - pts[None, :, :]
    flat = diffs.reshape(-1, g.dim)
    inside = cone_contains_many(c, flat).reshape(len(pts), len(pts))
    return inside.astype(float)


@dataclass(frozen=True)
class GridMeasure:
    """Signed measure on the points of a grid (weights in point order)."""

    weights: np.ndarray
    is_probability: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel(order="C")
        object.__setattr__(self, "weights", w)
        if not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite")
        if self.is_probability:
            if np.any(w < 0):
                raise ValueError("probability measure has a negative weight")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"probability weights sum to {w.sum()}, not 1")

    @classmethod
    def delta(cls, grid: Grid, x) -> "GridMeasure":
        idx = grid.index_of(x)
        if idx is None:
            raise DimensionMismatch(f"point {x} is not on the grid")
        w = np.zeros(grid.n_points)
        w[idx] = 1.0
        return cls(weights=w, is_probability=True)


@dataclass(frozen=True)
class GridFunction:
    """Real-valued function on the points of a grid (values in point order)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel(order="C")
        object.__setattr__(self, "values", v)
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
