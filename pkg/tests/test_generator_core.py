import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualgen.errors import CFLWarning, DimensionMismatch
from dualgen.generator_core import (
    AtomicJumpKernel,
    ProcessSpec,
    SeparableJumpKernel,
    adjoint,
    discretize,
    map_target,
    validate_qmatrix,
)
from dualgen.state_space import build_grid


def _const(v):
    return lambda s, _v=float(v): _v * np.ones_like(np.asarray(s, dtype=float))


def test_diffusion_interior_stencil():
    spec = ProcessSpec.one_dim(a=_const(0.5))
    g = build_grid([0.0], [4.0], [0.5])
    Q = discretize(spec, g).entries
    i = 4                                    # interior state
    h2 = 0.5 ** 2
    assert Q[i, i - 1] == pytest.approx(0.5 / h2)
    assert Q[i, i + 1] == pytest.approx(0.5 / h2)
    assert Q[i, i] == pytest.approx(-1.0 / h2)


def test_upwind_drift_direction():
    g = build_grid([-2.0], [2.0], [0.5])
    Qp = discretize(ProcessSpec.one_dim(b=_const(1.0)), g).entries
    Qm = discretize(ProcessSpec.one_dim(b=_const(-1.0)), g).entries
    i = 4
    assert Qp[i, i + 1] == pytest.approx(2.0) and Qp[i, i - 1] == 0.0
    assert Qm[i, i - 1] == pytest.approx(2.0) and Qm[i, i + 1] == 0.0


def test_reflecting_boundary_conservative():
    spec = ProcessSpec.one_dim(a=_const(1.0))
    g = build_grid([0.0], [3.0], [1.0], boundary_policy="reflect")
    q = discretize(spec, g)
    rep = validate_qmatrix(q, conservative=True)
    assert rep.passed
    # edge mirror: the suppressed outward move returns to the boundary
    # state itself, leaving only the inward rate
    assert q.entries[0, 1] == pytest.approx(1.0)
    assert q.entries[0, 0] == pytest.approx(-1.0)


def test_absorbing_boundary_zero_rows():
    spec = ProcessSpec.one_dim(a=_const(1.0))
    g = build_grid([0.0], [3.0], [1.0], boundary_policy="absorb")
    Q = discretize(spec, g).entries
    assert np.all(Q[0] == 0.0) and np.all(Q[-1] == 0.0)


def test_truncating_boundary_kills_mass():
    spec = ProcessSpec.one_dim(a=_const(1.0))
    g = build_grid([0.0], [3.0], [1.0])
    q = discretize(spec, g)
    rep = validate_qmatrix(q, conservative=False)
    assert rep.passed
    assert q.entries[0].sum() < -0.5        # outward flux killed


def test_map_target_boundary_conventions():
    g = build_grid([0.0], [4.0], [1.0], boundary_policy="reflect")
    assert map_target(g, [-1.0]) == 0       # edge mirror of -1 is 0
    assert map_target(g, [-2.0]) == 1
    assert map_target(g, [6.0]) == 3        # mirror of 6 about the top edge 4.5
    g_abs = build_grid([0.0], [4.0], [1.0], boundary_policy="absorb")
    assert map_target(g_abs, [-3.0]) == 0
    g_tr = build_grid([0.0], [4.0], [1.0])
    assert map_target(g_tr, [-1.0]) is None


def test_atomic_jump_rates_placed():
    nu = AtomicJumpKernel(jumps=(((2.0,), 3.0),))
    spec = ProcessSpec.one_dim(nu=nu)
    g = build_grid([0.0], [8.0], [1.0])
    Q = discretize(spec, g).entries
    assert Q[1, 3] == pytest.approx(3.0)
    assert Q[1, 1] == pytest.approx(-3.0)


def test_separable_jump_moves_one_axis():
    up = AtomicJumpKernel(jumps=(((1.0,), 2.0),))
    nu = SeparableJumpKernel(components=((1, up),))
    spec = ProcessSpec(dim=2, jump=nu)
    g = build_grid([0.0, 0.0], [2.0, 2.0], [1.0, 1.0])
    Q = discretize(spec, g).entries
    i = g.index_of([1.0, 1.0])
    j = g.index_of([1.0, 2.0])
    assert Q[i, j] == pytest.approx(2.0)


def test_compensated_jump_shifts_drift():
    nu = AtomicJumpKernel(jumps=(((1.0,), 2.0),))
    spec = ProcessSpec.one_dim(a=_const(1.0), nu=nu, jump_compensated=True,
                               compensator_cutoff=1.5)
    g = build_grid([0.0], [8.0], [1.0])
    Q = discretize(spec, g).entries
    i = 4
    # compensator drift = -2: upwind down move of rate 2 on top of diffusion
    assert Q[i, i - 1] == pytest.approx(1.0 + 2.0)
    assert Q[i, i + 1] == pytest.approx(1.0 + 2.0)


def test_cross_diffusion_positive_stencil_conservative():
    spec = ProcessSpec(
        dim=2,
        diffusion_diag=(_const(1.0), _const(1.0)),
        diffusion_diag_deriv=(_const(0.0), _const(0.0)),
        diffusion_offdiag={(0, 1): lambda xi, xj: 0.5},
    )
    g = build_grid([0.0, 0.0], [3.0, 3.0], [1.0, 1.0],
                   boundary_policy="reflect")
    rep = validate_qmatrix(discretize(spec, g))
    assert rep.passed


def test_cfl_warning_on_drift_dominated():
    spec = ProcessSpec.one_dim(a=_const(0.01), b=_const(5.0))
    g = build_grid([0.0], [4.0], [1.0])
    with pytest.warns(CFLWarning):
        discretize(spec, g)


def test_dimension_mismatch():
    spec = ProcessSpec.one_dim(a=_const(1.0))
    g = build_grid([0.0, 0.0], [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(DimensionMismatch):
        discretize(spec, g)


def test_adjoint_is_transpose():
    spec = ProcessSpec.one_dim(b=_const(1.0))
    g = build_grid([0.0], [4.0], [1.0])
    q = discretize(spec, g)
    assert np.array_equal(adjoint(q).entries, q.entries.T)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(-2.0, 2.0))
def test_discretization_conditionally_positive(a, b):
    spec = ProcessSpec.one_dim(a=_const(a), b=_const(b))
    g = build_grid([-2.0], [2.0], [0.5], boundary_policy="reflect")
    rep = validate_qmatrix(discretize(spec, g))
    assert rep.passed
