import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from detmodes.lattice import TorusGeometry
from detmodes.solver import (BlowUpError, ForcingSpec, GridMismatchError, SimParams, SpectralGrid, Stepper,
                             VorticityField, energy_identity_residual, forcing_norms, is_conjugate_symmetric,
                             jacobian, load_snapshot, poisson_invert, random_field, run, save_snapshot, step,
                             verify_time_average_bounds, write_trajectory_csv)


def mode(grid, k1, k2, amp=1.0):
    x1, x2 = grid.coords()
    return VorticityField.from_physical(amp * np.cos(k1 * x1 + k2 * x2), grid)


def test_roundtrip_and_norms(grid64):
    f = mode(grid64, 2, 3)
    x1, x2 = grid64.coords()
    assert np.allclose(f.physical(), np.cos(2 * x1 + 3 * x2))
    area = 4 * math.pi**2
    assert f.norm() ** 2 == pytest.approx(area / 2)
    assert f.grad_norm() ** 2 == pytest.approx(13 * area / 2)
    assert f.lap_norm() ** 2 == pytest.approx(169 * area / 2)
    assert f.velocity_norm() ** 2 == pytest.approx(area / 26)
    assert f.sup() == pytest.approx(1.0)


def test_point_evaluation(grid64):
    f = random_field(grid64, 3)
    pts = np.array([[0.0, 0.0], [0.3, 1.7], [5.0, 2.2]])
    x1, x2 = grid64.coords()
    assert f.evaluate(pts[:1])[0] == pytest.approx(f.physical()[0, 0])
    u1, u2 = f.velocity()
    v = f.velocity_at(pts[:1])
    assert v[0, 0] == pytest.approx(u1[0, 0]) and v[0, 1] == pytest.approx(u2[0, 0])
    assert f.evaluate(pts).shape == (3,)


def test_jacobian_identities(grid64):
    a, b = random_field(grid64, 1), random_field(grid64, 2)
    j = jacobian(a, b)
    assert abs(grid64.inner(j.coeffs, b.coeffs)) < 1e-10 * a.norm() * b.norm() ** 2
    assert np.allclose(jacobian(b, a).coeffs, -j.coeffs, atol=1e-12)


def test_poisson_and_symmetry(grid64):
    f = random_field(grid64, 5)
    assert is_conjugate_symmetric(f)
    psi = poisson_invert(f)
    assert np.allclose(psi.laplacian().coeffs, f.coeffs)
    bad = f.copy()
    bad.coeffs[0, 0] = 1.0
    with pytest.raises(ValueError):
        poisson_invert(bad)


def test_grid_mismatch(square):
    with pytest.raises(GridMismatchError):
        random_field(SpectralGrid(square, 32), 0) + random_field(SpectralGrid(square, 64), 0)


@given(st.integers(1, 6), st.integers(0, 6), st.floats(0.001, 0.2), st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_single_mode_decay_property(k1, k2, nu, mu):
    grid = SpectralGrid(TorusGeometry(), 32)
    f = mode(grid, k1, k2)
    p = SimParams(nu=nu, mu=mu, dt=0.1, t_end=1.0)
    out = run(f, p, sample_every=10).final
    rate = nu * (k1 * k1 + k2 * k2) + mu
    assert np.allclose(out.coeffs, f.coeffs * math.exp(-rate), rtol=1e-10, atol=1e-14)


def test_kolmogorov_forcing_and_steady_state(grid64):
    F = ForcingSpec("kolmogorov", s=2, amplitude=0.3)
    norms = forcing_norms(grid64, F)
    assert norms["F_inf"] == pytest.approx(0.6)
    assert norms["f_L2"] == pytest.approx(0.3 * 2 * math.pi / math.sqrt(2))
    p = SimParams(nu=0.1, mu=0.2, dt=0.1, t_end=60, forcing=F)
    out = run(VorticityField.zeros(grid64), p, sample_every=100).final
    laminar = 0.6 / (0.1 * 4 + 0.2)
    assert out.sup() == pytest.approx(laminar, rel=1e-6)


def test_prescribed_envelope():
    F = ForcingSpec("kolmogorov", s=1, amplitude=1.0, time_dependence="prescribed", envelope=[[0, 0], [1, 2]])
    assert F.factor(0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ForcingSpec("kolmogorov", time_dependence="prescribed")
    with pytest.raises(ValueError):
        ForcingSpec("swirl")


def test_custom_forcing_symmetric(grid64):
    F = ForcingSpec("spectral_custom", custom=[[2, 0, 1.0, 0.5], [1, -3, 0.2, 0.0]])
    c = F.curl(grid64)
    assert is_conjugate_symmetric(VorticityField(c, grid64))


def test_energy_identity_forced(grid64):
    p = SimParams(nu=0.02, mu=0.1, dt=0.01, forcing=ForcingSpec("kolmogorov", s=3, amplitude=0.5))
    assert energy_identity_residual(random_field(grid64, 7), p) < 1e-8


def test_blowup_detected(grid64):
    f = random_field(grid64, 1, rms_vorticity=1e3)
    p = SimParams(nu=0.0, dt=10.0, t_end=500.0)
    with pytest.raises(BlowUpError):
        run(f, p, sample_every=1000)


def test_step_matches_stepper(grid64):
    f = random_field(grid64, 2)
    p = SimParams(nu=0.01, dt=0.01)
    assert np.allclose(step(f, p).coeffs, Stepper(grid64, p).advance(f.coeffs, 0.0))


def test_io(tmp_path, grid64):
    f = random_field(grid64, 4)
    save_snapshot(f, tmp_path / "f.bin", t=1.5)
    g, t = load_snapshot(tmp_path / "f.bin")
    assert t == 1.5 and g.grid == grid64 and np.array_equal(g.coeffs, f.coeffs)
    tr = run(f, SimParams(nu=0.01, dt=0.01, t_end=0.05))
    write_trajectory_csv(tr, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().startswith("t,energy,enstrophy,grad_vort_sq,vort_sup")


def test_time_average_window_validation(grid64):
    tr = run(random_field(grid64, 1), SimParams(nu=0.1, dt=0.05, t_end=1.0))
    with pytest.raises(ValueError):
        verify_time_average_bounds(tr, tr.params, grid64.geometry, T=5.0)


def test_anisotropic_mode_decay():
    g = TorusGeometry(gamma=0.5)
    grid = SpectralGrid(g, 64, 32)
    x1, x2 = grid.coords()
    f = VorticityField.from_physical(np.sin(0.5 * 3 * x1 + 2 * x2), grid)
    out = run(f, SimParams(nu=0.1, dt=0.1, t_end=1.0), sample_every=10).final
    assert np.allclose(out.coeffs, f.coeffs * math.exp(-0.1 * (2.25 + 4)), rtol=1e-10, atol=1e-14)
