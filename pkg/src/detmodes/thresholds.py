"""Closed-form determining-mode and determining-node counts.

Every calculator returns a :class:`ThresholdReport` whose ``required_count`` is the
smallest integer satisfying the printed inequality. Mode conditions are stated for
``m + 1``; the reported count is ``m`` itself.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import LatticeSpectrum, TorusGeometry

SQRT68 = math.sqrt(68.0)
DIM_COEFF = math.sqrt(6 / math.pi**3)


@dataclass
class ForcingStrength:
    """limsup-type forcing norms; any subset may be given."""

    f_L2: float | None = None
    F_inf: float | None = None
    rot_f_L2: float | None = None

    def __post_init__(self):
        vals = [v for v in (self.f_L2, self.F_inf, self.rot_f_L2) if v is not None]
        if not vals:
            raise ValueError("at least one forcing norm is required")
        if any(v < 0 for v in vals):
            raise ValueError("forcing norms must be nonnegative")


@dataclass
class ThresholdReport:
    theorem_id: str
    required_count: int
    raw_rhs: float
    relation: str  # ">" or ">="
    offset: int  # 1 for mode counts (condition on m + 1), 0 for node counts
    grashof: float | None = None
    inputs_echo: dict = field(default_factory=dict)
    spectral_count: int | None = None
    extras: dict = field(default_factory=dict)

    def satisfies(self, count: int) -> bool:
        """Whether ``count`` modes / nodes meet the printed inequality."""
        lhs = count + self.offset
        return lhs > self.raw_rhs if self.relation == ">" else lhs >= self.raw_rhs

    @property
    def best_count(self) -> int:
        """The spectral count when available (it is never larger), else the formula count."""
        if self.spectral_count is None:
            return self.required_count
        return min(self.spectral_count, self.required_count)

    def to_json(self) -> dict:
        return asdict(self)


def smallest_exceeding(rhs: float) -> int:
    """Smallest integer n with n > rhs (for rhs >= 0)."""
    fl = math.floor(rhs)
    return int(fl) + 1


def smallest_at_least(rhs: float) -> int:
    return int(math.ceil(rhs))


def _positive(**kw):
    for k, v in kw.items():
        if v is None or not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def _nonneg(**kw):
    for k, v in kw.items():
        if v is None or v < 0:
            raise ValueError(f"{k} must be nonnegative, got {v}")


def _mode_report(theorem_id, rhs, relation, **kw):
    lhs = smallest_exceeding(rhs) if relation == ">" else smallest_at_least(rhs)
    return ThresholdReport(theorem_id, max(lhs - 1, 0), float(rhs), relation, 1, **kw)


def spectral_mode_count(spectrum: LatticeSpectrum, bound: float, relation: str = ">") -> int:
    """Smallest m with lambda_{m+1} (>|>=) bound, from enumerated eigenvalues."""
    lam = spectrum.full_eigenvalues
    ok = lam > bound if relation == ">" else lam >= bound
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        raise ValueError(f"spectrum with {len(lam)} eigenvalues never exceeds {bound}")
    return int(idx[0])  # index i holds lambda_{i+1}


def modes_dirichlet(f_L2: float, nu: float, area: float) -> ThresholdReport:
    """First m Stokes modes determine the Dirichlet problem when m + 1 > 4 G^2 / (27 pi^3)."""
    _nonneg(f_L2=f_L2)
    _positive(nu=nu, area=area)
    G = f_L2 * area / nu**2
    rhs = 4 / (27 * math.pi**3) * G**2
    return _mode_report("modes_dirichlet", rhs, ">", grashof=G,
                        inputs_echo={"f_L2": f_L2, "nu": nu, "area": area})


def modes_periodic(f_L2: float, nu: float, geometry: TorusGeometry,
                   spectrum: LatticeSpectrum | None = None) -> ThresholdReport:
    _nonneg(f_L2=f_L2)
    _positive(nu=nu)
    g = geometry.gamma
    G = f_L2 * geometry.area / nu**2
    echo = {"f_L2": f_L2, "nu": nu, "L": geometry.L, "gamma": g}
    if g == 1:
        rep = _mode_report("modes_periodic_square", G / math.pi**1.5, ">", grashof=G, inputs_echo=echo)
    else:
        rhs = 2 / g + 2 / math.pi**2 * (g * math.pi) ** -0.5 * G
        rep = _mode_report("modes_periodic_gamma", rhs, ">", grashof=G, inputs_echo=echo)
    bound = (g * math.pi) ** -0.5 * f_L2 / nu**2
    rep.extras["lambda_bound"] = bound
    if spectrum is not None:
        rep.spectral_count = spectral_mode_count(spectrum, bound, ">")
    return rep


def nodes_periodic(f_L2: float, nu: float, geometry: TorusGeometry) -> ThresholdReport:
    _nonneg(f_L2=f_L2)
    _positive(nu=nu)
    G = f_L2 * geometry.area / nu**2
    rhs = math.sqrt(68 / (geometry.gamma * math.pi)) * G
    return ThresholdReport("nodes_periodic", smallest_exceeding(rhs), float(rhs), ">", 0, grashof=G,
                           inputs_echo={"f_L2": f_L2, "nu": nu, "L": geometry.L, "gamma": geometry.gamma})


def modes_damped(F_inf: float, mu: float, nu: float, geometry: TorusGeometry,
                 boundary: str = "periodic", spectrum: LatticeSpectrum | None = None) -> ThresholdReport:
    """Determining modes for the damped system.

    ``boundary="stress_free"`` treats ``geometry.area`` as the measure of a general
    bounded domain with the Li-Yau eigenvalue bound.
    """
    _nonneg(F_inf=F_inf)
    _positive(mu=mu, nu=nu)
    ratio = F_inf * geometry.area / (mu * nu)
    echo = {"F_inf": F_inf, "mu": mu, "nu": nu, "L": geometry.L, "gamma": geometry.gamma,
            "boundary": boundary}
    if boundary == "stress_free":
        rep = _mode_report("modes_damped_stress_free", ratio / (2 * math.pi), ">", inputs_echo=echo)
    elif boundary != "periodic":
        raise ValueError(f"unknown boundary {boundary!r}")
    elif geometry.gamma == 1:
        rhs = F_inf * geometry.L**2 / (math.pi**2 * mu * nu)
        rep = _mode_report("modes_damped_square", rhs, ">=", inputs_echo=echo)
    else:
        rhs = 2 / geometry.gamma + 2 / math.pi**2 * ratio
        rep = _mode_report("modes_damped_gamma", rhs, ">", inputs_echo=echo)
    bound = F_inf / (mu * nu)
    rep.extras["lambda_bound"] = bound
    rep.extras["dimensionless_forcing"] = ratio
    if spectrum is not None and boundary == "periodic":
        rep.spectral_count = spectral_mode_count(spectrum, bound, ">=")
    return rep


def nodes_damped(F_inf: float, mu: float, nu: float, geometry: TorusGeometry) -> ThresholdReport:
    _nonneg(F_inf=F_inf)
    _positive(mu=mu, nu=nu)
    ratio = F_inf * geometry.area / (mu * nu)
    rhs = SQRT68 * ratio
    N = smallest_exceeding(rhs)
    rep = ThresholdReport("nodes_damped", N, float(rhs), ">", 0,
                          inputs_echo={"F_inf": F_inf, "mu": mu, "nu": nu, "L": geometry.L,
                                       "gamma": geometry.gamma})
    rep.extras["spacing_bound"] = node_spacing_bound(F_inf, mu, nu)
    rep.extras["spacing_at_count"] = math.sqrt(geometry.area / N)
    return rep


def node_spacing_bound(F_inf: float, mu: float, nu: float) -> float:
    """Upper bound on the node lattice spacing l, independent of the domain."""
    if F_inf == 0:
        return math.inf
    return 68**-0.25 * math.sqrt(mu * nu / F_inf)


def attractor_dimension_bound(mu: float, nu: float, L: float, rot_f_L2: float | None = None,
                              F_inf: float | None = None) -> dict:
    """Fractal-dimension upper bounds on the square torus [0, L]^2."""
    _positive(mu=mu, nu=nu, L=L)
    if rot_f_L2 is None and F_inf is None:
        raise ValueError("need rot_f_L2 or F_inf")
    out = {}
    if rot_f_L2 is not None:
        out["dim_L2"] = DIM_COEFF * rot_f_L2 * L / (mu * nu)
    if F_inf is not None:
        out["dim_inf"] = DIM_COEFF * F_inf * L**2 / (mu * nu)
    return out


def kolmogorov_norms(amplitude: float, s: int, geometry: TorusGeometry) -> dict:
    """Norms of f = (A sin(2 pi s x2 / L), 0) on the given torus."""
    k = 2 * math.pi * s / geometry.L
    half_area = math.sqrt(geometry.area / 2)
    A = abs(amplitude)
    return {"f_L2": A * half_area, "F_inf": A * k, "rot_f_L2": A * k * half_area}


def write_reports_json(reports, path) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_json() for r in reports], fh, indent=2, sort_keys=True)
