"""Generator specifications and their discretization to finite Q-matrices.

A ProcessSpec declares drift, diffusion and jump parts of a Levy-type
generator  L g = sum a_ij d2g/dxi dxj + b . grad g + integral terms.
Discretization uses upwind first differences for the drift, central
second differences with the positive 7-point stencil for cross terms,
and midpoint quadrature per grid cell for jump kernels, so conditional
positivity holds by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    CFLWarning,
    ClippingWarning,
    DimensionMismatch,
    PositivityViolation,
)
from .state_space import Grid

__all__ = [
    "ProcessSpec",
    "JumpKernel",
    "AtomicJumpKernel",
    "DensityJumpKernel",
    "SeparableJumpKernel",
    "QMatrix",
    "ValidationReport",
    "discretize",
    "adjoint",
    "validate_qmatrix",
]


# ---------------------------------------------------------------------------
# jump kernels

def map_target(grid: Grid, w, tol: float = 1e-6):
    """Grid index receiving a jump to the point w, honoring boundary policy.

    Returns None when the mass leaves the grid (truncate_mass policy).
    """
    w = np.asarray(w, dtype=float).copy()
    for axis in range(grid.dim):
        lo, hi = grid.lower[axis], grid.upper[axis]
        pol_lo, pol_hi = grid.boundary_policy[axis]
        h_ax = grid.spacing[axis]
        for _ in range(64):
            if w[axis] < lo - tol * h_ax:
                if pol_lo == "reflect":
                    # edge mirror, matching the stencil's reflect convention
                    w[axis] = 2 * lo - w[axis] - h_ax
                elif pol_lo == "absorb":
                    w[axis] = lo
                else:
                    return None
            elif w[axis] > hi + tol * h_ax:
                if pol_hi == "reflect":
                    w[axis] = 2 * hi - w[axis] + h_ax
                elif pol_hi == "absorb":
                    w[axis] = hi
                else:
                    return None
            else:
                break
    idx = np.rint((w - grid.lower) / grid.spacing).astype(int)
    idx = np.clip(idx, 0, np.array(grid.shape) - 1)
    return int(np.ravel_multi_index(tuple(idx), grid.shape, order="C"))


class JumpKernel:
    """Interface shared by concrete jump kernels."""

    def cell_rates(self, x: np.ndarray, grid: Grid) -> np.ndarray:
        """Rates from state x into each grid cell (length grid.n_points)."""
        raise NotImplementedError

    def total_rate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def compensator_drift(self, x: np.ndarray, cutoff: float) -> np.ndarray:
        """integral of (w - x) over |w - x| <= cutoff against nu(x, dw)."""
        raise NotImplementedError


@dataclass(frozen=True)
class AtomicJumpKernel(JumpKernel):
    """Finite list of jump channels.

    Each channel is (displacement, rate) or (target_map, rate); rates may
    be constants or callables of the state.  rate_derivs, when supplied,
    are the z-derivatives of the rate functions used by the dual
    construction (never differentiated numerically there).
    """

    jumps: tuple            # ((displacement | target_map, rate), ...)
    rate_derivs: tuple = ()  # optional, aligned with jumps

    def _channels(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        for where, rate in self.jumps:
            r = float(rate(x) if callable(rate) else rate)
            if callable(where):
                w = np.atleast_1d(np.asarray(where(x), dtype=float))
            else:
                w = x + np.atleast_1d(np.asarray(where, dtype=float))
            yield w, r

    def cell_rates(self, x, grid: Grid) -> np.ndarray:
        out = np.zeros(grid.n_points)
        for w, r in self._channels(x):
            if r == 0.0:
                continue
            idx = map_target(grid, w)
            if idx is not None:
                out[idx] += r
        return out

    def total_rate(self, x) -> float:
        return sum(r for _, r in self._channels(x))

    def compensator_drift(self, x, cutoff: float) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        drift = np.zeros_like(x)
        for w, r in self._channels(x):
            dz = w - x
            if np.linalg.norm(dz) <= cutoff:
                drift += dz * r
        return drift


@dataclass(frozen=True)
class DensityJumpKernel(JumpKernel):
    """Jump kernel with a Lebesgue density nu(x, w).

    density(x, W) is vectorized over an (m, d) array of targets W.
    derivs maps sorted axis tuples I to the mixed derivative densities
    d^{|I|} nu / dz_I, supplied analytically.
    """

    density: Callable
    derivs: dict = field(default_factory=dict)
    smoothness: int = 0
    support_note: str = ""

    def cell_rates(self, x, grid: Grid) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pts = grid.points()
        vol = float(np.prod(grid.spacing))
        rates = np.asarray(self.density(x, pts), dtype=float) * vol
        rates = np.clip(rates, 0.0, None)
        return rates

    def total_rate(self, x) -> float:
        raise NotImplementedError("total rate of a density kernel is grid-bound; "
                                  "use cell_rates(x, grid).sum()")

    def compensator_drift(self, x, cutoff: float) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class SeparableJumpKernel(JumpKernel):
    """Sum of per-axis kernels nu_j(z_j, dw_j), each moving one coordinate."""

    components: tuple       # ((axis, JumpKernel acting in 1-D), ...)

    def cell_rates(self, x, grid: Grid) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(grid.n_points)
        for axis, kern in self.components:
            # embed the 1-D channel along the given axis
            for w1, r in kern._channels(np.array([x[axis]])):
                if r == 0.0:
                    continue
                w = x.copy()
                w[axis] = w1[0]
                idx = map_target(grid, w)
                if idx is not None:
                    out[idx] += r
        return out

    def total_rate(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return sum(kern.total_rate(np.array([x[axis]]))
                   for axis, kern in self.components)

    def compensator_drift(self, x, cutoff: float) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        drift = np.zeros_like(x)
        for axis, kern in self.components:
            drift[axis] += kern.compensator_drift(np.array([x[axis]]), cutoff)[0]
        return drift


# ---------------------------------------------------------------------------
# process specifications

@dataclass(frozen=True)
class ProcessSpec:
    """Declarative description of a Levy-type generator.

    Structured coefficient declarations (drift_components, diffusion_diag,
    diffusion_offdiag) carry the separability information that the dual
    construction needs; generic callables (drift, diffusion) suffice for
    discretization and simulation.
    """

    dim: int
    drift: Optional[Callable] = None
    drift_components: Optional[tuple] = None        # b_j(x_j), unary callables
    diffusion: Optional[Callable] = None
    diffusion_diag: Optional[tuple] = None          # a_jj(x_j), unary callables
    diffusion_diag_deriv: Optional[tuple] = None    # a'_jj(x_j)
    diffusion_offdiag: Optional[dict] = None        # {(i, j): a_ij(x_i, x_j)}, i < j
    jump: Optional[JumpKernel] = None
    jump_compensated: bool = False
    compensator_cutoff: float = 1.0
    domain: str = "full_space"                      # 'full_space' | 'half_line'
    boundary: Optional[str] = None                  # 'reflect' | 'absorb' | 'none'

    def __post_init__(self):
        if self.drift is None and self.drift_components is None \
                and self.diffusion is None and self.diffusion_diag is None \
                and self.jump is None:
            raise ValueError("at least one of drift/diffusion/jump is required")
        if self.domain not in ("full_space", "half_line"):
            raise ValueError(f"unknown domain {self.domain!r}")

    @classmethod
    def one_dim(cls, a=None, b=None, da=None, nu=None, domain="full_space",
                boundary=None, jump_compensated=False, compensator_cutoff=1.0):
        """Convenience constructor for 1-D specs with separable declarations."""
        def as_unary(c):
            if c is None:
                return None
            return c if callable(c) else (lambda s, _c=float(c): _c * np.ones_like(np.asarray(s, float)))
        a_u, b_u, da_u = as_unary(a), as_unary(b), as_unary(da)
        return cls(
            dim=1,
            drift_components=(b_u,) if b_u is not None else None,
            diffusion_diag=(a_u,) if a_u is not None else None,
            diffusion_diag_deriv=(da_u,) if da_u is not None else None,
            jump=nu,
            jump_compensated=jump_compensated,
            compensator_cutoff=compensator_cutoff,
            domain=domain,
            boundary=boundary,
        )

    def eval_drift(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.drift_components is not None:
            return np.array([float(bj(x[j])) for j, bj in
                             enumerate(self.drift_components)])
        if self.drift is not None:
            return np.atleast_1d(np.asarray(self.drift(x), dtype=float))
        return np.zeros(self.dim)

    def eval_diffusion(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.diffusion_diag is not None:
            a = np.zeros((self.dim, self.dim))
            for j, ajj in enumerate(self.diffusion_diag):
                a[j, j] = float(ajj(x[j]))
            for (i, j), aij in (self.diffusion_offdiag or {}).items():
                a[i, j] = a[j, i] = float(aij(x[i], x[j]))
            return a
        if self.diffusion is not None:
            a = np.asarray(self.diffusion(x), dtype=float)
            if a.ndim == 0:
                a = a.reshape(1, 1)
            return a
        return np.zeros((self.dim, self.dim))

    def has_diffusion(self) -> bool:
        return self.diffusion is not None or self.diffusion_diag is not None

    def check_psd(self, probes: np.ndarray, tol: float = 1e-10):
        """First probe point where the diffusion matrix fails PSD, or None."""
        for x in probes:
            eigs = np.linalg.eigvalsh(self.eval_diffusion(x))
            if eigs.min() < -tol:
                return x, float(eigs.min())
        return None


# ---------------------------------------------------------------------------
# Q-matrices

@dataclass(frozen=True)
class QMatrix:
    """Finite-state generator on the points of a grid."""

    entries: np.ndarray
    state_grid: Grid

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    offdiag_violations: tuple    # ((i, j, value), ...)
    rowsum_defects: tuple        # ((i, value), ...)
    max_offdiag_negativity: float
    max_rowsum_defect: float


def _axis_neighbor(grid: Grid, midx, axis, step):
    """Index of the neighbor `step` cells away, boundary-mapped; None drops it."""
    j = midx[axis] + step
    n = grid.shape[axis]
    pol_lo, pol_hi = grid.boundary_policy[axis]
    if j < 0:
        if pol_lo == "reflect":
            # mirror about the face through the boundary point's cell edge,
            # so the boundary state keeps the suppressed move (Neumann)
            j = -j - 1
        elif pol_lo == "absorb":
            j = 0
        else:
            return None
    elif j >= n:
        if pol_hi == "reflect":
            j = 2 * n - 1 - j
        elif pol_hi == "absorb":
            j = n - 1
        else:
            return None
    out = list(midx)
    out[axis] = j
    return tuple(out)


def _absorbing_faces(grid: Grid):
    """Flat indices of states on faces with absorb policy (zero rows)."""
    idx = []
    for axis in range(grid.dim):
        pol_lo, pol_hi = grid.boundary_policy[axis]
        for end, pol in ((0, pol_lo), (grid.shape[axis] - 1, pol_hi)):
            if pol != "absorb":
                continue
            grids = [np.arange(n) for n in grid.shape]
            grids[axis] = np.array([end])
            mesh = np.meshgrid(*grids, indexing="ij")
            flat = np.ravel_multi_index([m.ravel() for m in mesh], grid.shape,
                                        order="C")
            idx.extend(int(i) for i in flat)
    return sorted(set(idx))


def discretize(spec: ProcessSpec, grid: Grid, clip_cross: bool = True) -> QMatrix:
    """Finite-difference / quadrature discretization of the generator.

    Upwind drift, central diffusion with the positive cross stencil,
    midpoint jump quadrature; boundary rows follow the grid's per-axis
    boundary policy.
    """
    if spec.dim != grid.dim:
        raise DimensionMismatch("spec and grid dimensions differ")
    n_states = grid.n_points
    Q = np.zeros((n_states, n_states))
    h = grid.spacing
    pts = grid.points()
    shape = grid.shape
    absorbing = set(_absorbing_faces(grid))
    cfl_warned = False
    clip_warned = False

    # kernels with a non-conservative diagonal (a genuine death term)
    # provide their generator rows whole instead of off-diagonal rates
    jump_matrix = None
    if spec.jump is not None and hasattr(spec.jump, "generator_matrix"):
        jump_matrix = spec.jump.generator_matrix(grid)

    for i in range(n_states):
        if i in absorbing:
            continue
        x = pts[i]
        midx = np.unravel_index(i, shape, order="C")

        def add(target_midx, rate):
            if target_midx is None:
                Q[i, i] -= rate          # truncated mass: killing
                return
            j = int(np.ravel_multi_index(target_midx, shape, order="C"))
            if j != i:
                Q[i, j] += rate
                Q[i, i] -= rate

        b = spec.eval_drift(x)
        if spec.jump is not None and spec.jump_compensated:
            b = b - spec.jump.compensator_drift(x, spec.compensator_cutoff)

        a = spec.eval_diffusion(x) if spec.has_diffusion() else None
        if a is not None:
            off_budget = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
            diag_rates = np.diag(a) - off_budget
            if np.any(diag_rates < -1e-12):
                if not clip_cross:
                    raise PositivityViolation(
                        f"cross terms exceed diagonal at state {i}: a = {a}")
                if not clip_warned:
                    warnings.warn(
                        "cross-diffusion terms clipped to preserve positivity",
                        ClippingWarning)
                    clip_warned = True
                diag_rates = np.clip(diag_rates, 0.0, None)
            for ax in range(spec.dim):
                r = diag_rates[ax] / h[ax] ** 2
                if r != 0.0:
                    add(_axis_neighbor(grid, midx, ax, +1), r)
                    add(_axis_neighbor(grid, midx, ax, -1), r)
                if not cfl_warned and a[ax, ax] > 0 and \
                        abs(b[ax]) * h[ax] > 2.0 * a[ax, ax]:
                    warnings.warn(
                        f"drift dominates diffusion at spacing {h[ax]} (axis {ax})",
                        CFLWarning)
                    cfl_warned = True
            for ai in range(spec.dim):
                for aj in range(ai + 1, spec.dim):
                    if a[ai, aj] == 0.0:
                        continue
                    m = abs(a[ai, aj]) / (h[ai] * h[aj])
                    sgn = 1 if a[ai, aj] > 0 else -1
                    for direction in (+1, -1):
                        t = _axis_neighbor(grid, midx, ai, direction)
                        if t is not None:
                            t = _axis_neighbor(grid, t, aj, direction * sgn)
                        add(t, m)

        for ax in range(spec.dim):
            if b[ax] > 0:
                add(_axis_neighbor(grid, midx, ax, +1), b[ax] / h[ax])
            elif b[ax] < 0:
                add(_axis_neighbor(grid, midx, ax, -1), -b[ax] / h[ax])

        if jump_matrix is not None:
            Q[i] += jump_matrix[i]
        elif spec.jump is not None:
            rates = spec.jump.cell_rates(x, grid)
            rates_sum = float(rates.sum()) - float(rates[i])
            Q[i] += rates
            Q[i, i] -= float(rates[i])      # same-cell jumps are self-loops
            Q[i, i] -= rates_sum

    return QMatrix(entries=Q, state_grid=grid)


def adjoint(q: QMatrix, g: Grid = None) -> QMatrix:
    """Discrete standard dual L': transpose under the counting pairing."""
    return QMatrix(entries=q.entries.T.copy(), state_grid=q.state_grid)


def validate_qmatrix(q: QMatrix, conservative: bool = True,
                     offdiag_tol: float = 1e-12,
                     rowsum_tol: float = 1e-10) -> ValidationReport:
    """Report conditional-positivity and row-sum defects."""
    Q = q.entries
    off = Q - np.diag(np.diag(Q))
    viol_idx = np.argwhere(off < -offdiag_tol)
    violations = tuple((int(i), int(j), float(Q[i, j])) for i, j in viol_idx)
    rs = Q.sum(axis=1)
    if conservative:
        bad_rows = np.nonzero(np.abs(rs) > rowsum_tol)[0]
    else:
        bad_rows = np.nonzero(rs > rowsum_tol)[0]   # killing allowed, sums <= 0
    defects = tuple((int(i), float(rs[i])) for i in bad_rows)
    max_neg = float(-off.min()) if off.size and off.min() < 0 else 0.0
    max_defect = float(np.abs(rs).max()) if conservative else \
        float(max(rs.max(), 0.0))
    return ValidationReport(
        passed=not violations and not defects,
        offdiag_violations=violations,
        rowsum_defects=defects,
        max_offdiag_negativity=max_neg,
        max_rowsum_defect=max_defect,
    )
