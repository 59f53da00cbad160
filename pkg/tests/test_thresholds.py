import math

import pytest
from hypothesis import given, settings, strategies as st

from detmodes.lattice import TorusGeometry, enumerate_spectrum
from detmodes.thresholds import (ForcingStrength, attractor_dimension_bound, kolmogorov_norms, modes_damped,
                                 modes_dirichlet, modes_periodic, node_spacing_bound, nodes_damped,
                                 nodes_periodic, smallest_at_least, smallest_exceeding, write_reports_json)

UNIT = TorusGeometry(L=1.0)


def test_pins():
    assert modes_dirichlet(100.0, 1.0, 1.0).required_count == 47
    assert modes_periodic(1000.0, 1.0, UNIT).required_count == 179
    assert nodes_periodic(100.0, 1.0, UNIT).required_count == 466
    assert nodes_damped(100.0, 1.0, 1.0, UNIT).required_count == 825
    assert modes_damped(100.0, 1.0, 1.0, UNIT, boundary="stress_free").required_count == 15


def test_hand_arithmetic():
    # 4 * 100^2 / (27 pi^3) = 47.78..., the smallest m + 1 above it is 48
    assert 4e4 / (27 * math.pi**3) == pytest.approx(47.780, abs=1e-3)
    assert 1000 / math.pi**1.5 == pytest.approx(179.59, abs=1e-2)
    assert math.sqrt(68 / math.pi) * 100 == pytest.approx(465.25, abs=1e-2)
    assert math.sqrt(68) * 100 == pytest.approx(824.62, abs=1e-2)
    assert 100 / (2 * math.pi) == pytest.approx(15.915, abs=1e-3)


def test_rounding_helpers():
    assert smallest_exceeding(3.0) == 4
    assert smallest_exceeding(3.2) == 4
    assert smallest_at_least(3.0) == 3
    assert smallest_at_least(3.2) == 4


@given(st.floats(0, 500), st.floats(0.01, 10))
@settings(max_examples=200, deadline=None)
def test_required_count_is_minimal(f, nu):
    for rep in (modes_dirichlet(f, nu, 1.0), modes_periodic(f, nu, UNIT), nodes_periodic(f, nu, UNIT),
                modes_periodic(f, nu, TorusGeometry(1.0, 0.5))):
        assert rep.satisfies(rep.required_count)
        if rep.required_count > 0:
            assert not rep.satisfies(rep.required_count - 1)


@given(st.floats(0.001, 5), st.floats(0.05, 2), st.floats(0.05, 2))
@settings(max_examples=200, deadline=None)
def test_damped_monotone_and_minimal(F, mu, nu):
    a = modes_damped(F, mu, nu, TorusGeometry())
    b = modes_damped(2 * F, mu, nu, TorusGeometry())
    assert a.required_count <= b.required_count
    assert a.satisfies(a.required_count)
    if a.required_count > 0:
        assert not a.satisfies(a.required_count - 1)
    n = nodes_damped(F, mu, nu, TorusGeometry())
    assert n.extras["spacing_at_count"] < n.extras["spacing_bound"]


def test_zero_forcing():
    assert modes_dirichlet(0.0, 1.0, 1.0).required_count == 0
    assert nodes_damped(0.0, 1.0, 1.0, UNIT).required_count == 1
    assert node_spacing_bound(0.0, 1.0, 1.0) == math.inf


def test_spectral_count_never_larger():
    g = TorusGeometry()
    spec = enumerate_spectrum(g, 3000)
    for F in (0.01, 0.1, 0.5):
        rep = modes_damped(F, 0.5, 0.05, g, spectrum=spec)
        assert rep.spectral_count <= rep.required_count
        assert spec.full_eigenvalues[rep.spectral_count] >= rep.extras["lambda_bound"]
        assert rep.best_count == rep.spectral_count
    rep = modes_periodic(0.5, 0.05, g, spectrum=spec)
    assert rep.spectral_count <= rep.required_count


def test_gamma_branches():
    g = TorusGeometry(gamma=0.5)
    rep = modes_damped(1.0, 1.0, 1.0, g)
    assert rep.theorem_id == "modes_damped_gamma"
    assert rep.raw_rhs == pytest.approx(4 + 2 / math.pi**2 * g.area)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        modes_dirichlet(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        modes_damped(1.0, 1.0, 1.0, UNIT, boundary="slip")
    with pytest.raises(ValueError):
        ForcingStrength()


def test_kolmogorov_and_dimension(tmp_path):
    n = kolmogorov_norms(2.0, 3, TorusGeometry())
    assert n["F_inf"] == pytest.approx(6.0)
    assert n["f_L2"] == pytest.approx(2.0 * math.pi * math.sqrt(2))
    d = attractor_dimension_bound(1.0, 1.0, 2 * math.pi, rot_f_L2=1.0, F_inf=1.0)
    assert d["dim_inf"] == pytest.approx(math.sqrt(6 / math.pi**3) * 4 * math.pi**2)
    write_reports_json([modes_damped(1.0, 1.0, 1.0, UNIT)], tmp_path / "t.json")
    assert "required_count" in (tmp_path / "t.json").read_text()
