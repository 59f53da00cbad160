import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from detmodes.lattice import TorusGeometry
from detmodes.solver import ForcingSpec, SimParams, SpectralGrid, VorticityField, random_field
from detmodes.sync import (CouplingSpec, ModeProjector, NodeLayout, NodeLayoutError, NodeObserver,
                           NoConvergenceError, find_empirical_threshold, gronwall_check, make_node_layout,
                           node_observation, periodic_alpha, project_high_modes, project_low_modes, run_sync,
                           tile_shape, write_sync_csv)


@pytest.fixture(scope="module")
def grid32():
    return SpectralGrid(TorusGeometry(), 32)


@given(st.integers(0, 200), st.integers(0, 50))
@settings(max_examples=40, deadline=None)
def test_projection_properties(m, seed):
    grid = SpectralGrid(TorusGeometry(), 32)
    f = random_field(grid, seed)
    p = project_low_modes(f, m)
    q = project_high_modes(f, m)
    assert np.array_equal((p + q).coeffs, f.coeffs)
    assert np.allclose(project_low_modes(p, m).coeffs, p.coeffs)
    assert abs(grid.inner(p.coeffs, q.coeffs)) < 1e-12 * f.norm() ** 2
    lam = ModeProjector(grid, m).lambda_next
    assert q.norm() ** 2 * lam <= q.grad_norm() ** 2 * (1 + 1e-12)


def test_projection_counts_real_eigenfunctions(grid32):
    x1, x2 = grid32.coords()
    basis = [np.cos(x1), np.sin(x1), np.cos(x2), np.sin(x2), np.sin(x1 + x2), np.cos(x1 + x2)]
    for m in range(7):
        f = VorticityField.from_physical(sum(basis), grid32)
        p = project_low_modes(f, m).physical()
        kept = [np.allclose(np.sum(p * b) / np.sum(b * b), 1.0) for b in basis]
        assert sum(kept) == m or (m == 6 and sum(kept) == 6)


def test_full_projection_is_identity(grid32):
    f = random_field(grid32, 0)
    full = len(grid32.resolved_spectrum)
    assert np.array_equal(project_low_modes(f, full).coeffs, f.coeffs)
    with pytest.raises(ValueError):
        project_low_modes(f, full + 1)


def test_node_layouts():
    g = TorusGeometry(gamma=0.5)
    assert tile_shape(g, 8) == (4, 2)
    assert tile_shape(g, 9) == (6, 3)
    lay = make_node_layout(g, 8, seed=1)
    assert lay.N == 8 and lay.side == pytest.approx(math.pi)
    pts = lay.points.copy()
    pts[0] += [lay.side * 1.5, 0]
    with pytest.raises(NodeLayoutError):
        NodeLayout(g, 4, 2, pts)
    with pytest.raises(NodeLayoutError):
        NodeLayout(g, 3, 3, np.zeros((9, 2)))


def test_node_observation(grid32):
    lay = make_node_layout(grid32.geometry, 16, seed=2)
    vals, eta = node_observation(VorticityField.zeros(grid32), lay)
    assert eta == 0 and not vals.any()
    f = random_field(grid32, 3)
    vals, eta = node_observation(f, lay)
    assert np.allclose(vals, f.velocity_at(lay.points))
    u1, u2 = f.velocity(pad=4)
    assert eta <= np.sqrt(u1**2 + u2**2).max() * (1 + 1e-3)
    # Single mode phi = cos(x2) has psi = -cos(x2), u = (-sin(x2), 0).
    x1, x2 = grid32.coords()
    g = VorticityField.from_physical(np.cos(x2), grid32)
    v, _ = node_observation(g, lay)
    assert np.allclose(v[:, 0], -np.sin(lay.points[:, 1])) and np.allclose(v[:, 1], 0)


def test_interpolant_is_piecewise_constant(grid32):
    lay = make_node_layout(grid32.geometry, 4, "center")
    obs = NodeObserver(grid32, lay)
    nodal = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    assert np.array_equal(obs.tile_of_point[:16, :16], np.zeros((16, 16)))
    assert obs.interpolant_curl(nodal).shape == grid32.shape


def test_coupling_validation():
    with pytest.raises(ValueError):
        CouplingSpec(kind="mode_projection")
    with pytest.raises(ValueError):
        CouplingSpec(kind="node_values", N=4, mechanism="direct_replacement")
    with pytest.raises(ValueError):
        CouplingSpec(m=2, mechanism="nudging")
    with pytest.raises(ValueError):
        CouplingSpec(kind="node_values", m=3, N=4, mechanism="nudging", nudging_gain=1)


def _params():
    return SimParams(nu=0.05, mu=0.5, dt=0.05, forcing=ForcingSpec("kolmogorov", s=1, amplitude=0.075))


def test_identical_initial_data(grid32):
    f = random_field(grid32, 1)
    r = run_sync(f, f, _params(), CouplingSpec(m=0), horizon=2.0)
    assert np.all(r.gap == 0) and r.converged
    assert np.all(np.diff(r.t) > 0)


def test_full_replacement_collapses(grid32):
    a, b = random_field(grid32, 1), random_field(grid32, 2)
    full = len(grid32.resolved_spectrum)
    r = run_sync(a, b, _params(), CouplingSpec(m=full), horizon=1.0, sample_every=1)
    assert r.gap[1] == 0


def test_replacement_keeps_low_modes_equal(grid32):
    a, b = random_field(grid32, 1), random_field(grid32, 2)
    r = run_sync(a, b, _params(), CouplingSpec(m=7), horizon=2.0, sample_every=1)
    assert r.observed_gap[0] > 0 and np.all(r.observed_gap[1:] == 0)


def test_mode_nudging_converges(grid32):
    a, b = random_field(grid32, 1), random_field(grid32, 2)
    r = run_sync(a, b, _params(), CouplingSpec(m=11, mechanism="nudging", nudging_gain=2.0))
    assert r.converged and r.decay_rate_estimate > 0


def test_node_rounding_recorded(grid32):
    a, b = random_field(grid32, 1), random_field(grid32, 2)
    r = run_sync(a, b, _params(), CouplingSpec(kind="node_values", N=10, mechanism="nudging",
                                                 nudging_gain=0.5), horizon=1.0)
    assert r.nodes_used == 16


def test_unforced_search_picks_smallest(grid32, tmp_path):
    p = SimParams(nu=0.05, mu=0.5, dt=0.05)
    a, b = random_field(grid32, 1), random_field(grid32, 2)

    def one(m):
        return run_sync(a, b, p, CouplingSpec(m=m), horizon=60)

    star, table, monotone = find_empirical_threshold(one, [0, 4, 8])
    assert star == 0 and monotone and 8 in table
    star2, table2, _ = find_empirical_threshold(one, [0, 4], jobs=2)
    assert star2 == 0 and set(table2) == {0, 4}
    write_sync_csv(table[0], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("t,gap,observed_gap")


def test_search_errors():
    class R:
        converged = False

    with pytest.raises(NoConvergenceError):
        find_empirical_threshold(lambda m: R(), [1, 2])
    with pytest.raises(ValueError):
        find_empirical_threshold(lambda m: R(), [])


def test_search_detects_non_monotone():
    class R:
        def __init__(self, ok):
            self.converged = ok

    pattern = {0: False, 1: True, 2: False, 3: True}
    star, table, monotone = find_empirical_threshold(lambda m: R(pattern[m]), [0, 1, 2, 3])
    assert star == 1 and not monotone


def test_gronwall():
    t = np.linspace(0, 10, 1001)
    g = gronwall_check(t, 1.0, 0.0, T=1.0)
    assert g.gamma == pytest.approx(1.0) and g.Gamma == 0 and g.verdict
    g = gronwall_check(t, np.sin(t) - 0.5, 0.0, T=2.0)
    assert g.gamma < 0 and not g.verdict
    with pytest.raises(ValueError):
        gronwall_check(t, 1.0, 0.0, T=6.0)


def test_periodic_alpha():
    a = periodic_alpha(np.array([0.0, 4.0]), lambda_next=2.0, nu=1.0, c_J=1.0)
    assert list(a) == [2.0, 0.0]
