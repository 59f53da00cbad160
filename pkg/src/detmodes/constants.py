"""Sharp Agmon constant on the square torus and the other explicit constants.

The Agmon constant on [0, 2 pi]^2 is

    c_AT^2 = pi^-2 sup_{mu > 0} H(mu),   H(mu) = mu * sum_n 1 / (mu^2 + Lambda_n^2),

with Lambda_n running over |k|^2 on the half lattice. For the finite-dimensional
space of trigonometric polynomials with Lambda_n <= X the supremum is attained at
an interior mu*_X, and those truncated constants increase to c_AT^2. The full
series H(mu) increases monotonically towards pi^2 / 4 (see ``agmon_series``), so
the supremum is the limit mu -> infinity and c_AT^2 = 1/4. Balancing the two
leading deficits, 1/(2 mu) from the lattice and pi mu / (2 X) from the truncation,
gives c_X^2 = c_AT^2 - 1 / (pi^{3/2} sqrt(X)) + o(X^{-1/2}), which is the
extrapolation reported as the constant.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, special

from .lattice import TorusGeometry


class ConvergenceError(RuntimeError):
    pass


def half_lattice_values(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values Lambda = k1^2 + k2^2 <= cutoff on the half lattice, with multiplicities."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    r = math.isqrt(cutoff)
    k2 = np.arange(-r, r + 1)
    counts = np.zeros(cutoff + 1, dtype=np.int64)
    for k1 in range(0, r + 1):
        vals = k1 * k1 + k2 * k2
        if k1 == 0:
            vals = vals[k2 > 0]
        vals = vals[vals <= cutoff]
        np.add.at(counts, vals, 1)
    values = np.nonzero(counts)[0]
    return values.astype(float), counts[values].astype(float)


def lattice_H(mu, values, weights):
    """Truncated H(mu) = mu * sum w / (mu^2 + Lambda^2); vectorised over mu."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    out = np.array([m * np.sum(weights / (m * m + values * values)) for m in mu])
    return out if out.size > 1 else float(out[0])


def lattice_dH(mu, values, weights):
    """d/dmu of the truncated H; vanishes at the finite-dimensional maximiser."""
    d = mu * mu + values * values
    return float(np.sum(weights * (values * values - mu * mu) / (d * d)))


def agmon_series(mu: float, images: int = 8) -> float:
    """Full (untruncated) H(mu) by Poisson summation.

    H(mu) = pi^2/4 - 1/(2 mu) - pi * sum_{m != 0} kei(2 pi sqrt(mu) |m|),
    using the Hankel transform of r / (1 + r^4), which is -kei. Independent of the
    direct lattice sum and accurate for mu >~ 0.1 with the default image count.
    """
    m1, m2 = np.meshgrid(np.arange(-images, images + 1), np.arange(-images, images + 1))
    r = np.hypot(m1, m2).ravel()
    r = r[r > 0]
    return float(math.pi**2 / 4 - 1 / (2 * mu) - math.pi * np.sum(special.kei(2 * math.pi * math.sqrt(mu) * r)))


def truncation_tail_bound(mu: float, cutoff: int, n_inside: int) -> float:
    """Rigorous upper bound on sum_{Lambda_n > cutoff} mu / (mu^2 + Lambda_n^2).

    Uses Lambda_n >= max(cutoff, n / 2) and an integral comparison for n > 2 cutoff.
    """
    between = max(2 * cutoff - n_inside, 0)
    return between * mu / (mu * mu + cutoff * cutoff) + 2 * (math.pi / 2 - math.atan(cutoff / mu))


def _golden_max(f, a, b, tol=1e-10, max_iter=500):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            return 0.5 * (a + b)
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    raise ConvergenceError("golden-section search did not converge")


@dataclass
class AgmonResult:
    c_AT_sq: float
    """Extrapolated sharp constant squared."""
    c_AT_sq_truncated: float
    """Sharp constant of the truncated space; a certified lower bound for c_AT^2."""
    mu_star: float
    cutoff: int
    tail_bound: float
    """Rigorous bound on the omitted part of H(mu_star), in c_AT^2 units."""
    n_terms: int

    @property
    def nu_star(self) -> float:
        return self.mu_star**-2


def truncated_agmon_constant(cutoff: int, log_bracket=(-3.0, 3.0), tol: float = 1e-12):
    """(c_X^2, mu*_X) for the space of trigonometric polynomials with Lambda <= cutoff."""
    values, weights = half_lattice_values(cutoff)
    lo, hi = (math.log(10) * e for e in log_bracket)
    # The maximiser drifts like sqrt(cutoff / pi); widen the bracket if it hits the edge.
    while True:
        s = _golden_max(lambda s: lattice_H(math.exp(s), values, weights), lo, hi, tol=1e-8)
        if hi - s > 1e-3:
            break
        lo, hi = hi - 1.0, hi + math.log(10)
    # Refine on the sign change of dH/dmu.
    a, b = math.exp(s - 1e-3), math.exp(s + 1e-3)
    if lattice_dH(a, values, weights) > 0 > lattice_dH(b, values, weights):
        mu = optimize.brentq(lattice_dH, a, b, args=(values, weights), xtol=tol * a, rtol=1e-15)
    else:
        mu = math.exp(s)
    H = lattice_H(mu, values, weights)
    return H / math.pi**2, mu, values, weights


def compute_agmon_constant(cutoff: int = 10_000, tolerance: float = 1e-6) -> AgmonResult:
    """Sharp Agmon constant squared from the lattice sum truncated at ``cutoff``.

    The reported value is checked against a run at twice the cutoff; a
    ``ConvergenceError`` is raised when the two disagree by more than ``tolerance``.
    """
    res = _agmon_at(cutoff)
    other = _agmon_at(2 * cutoff)
    if abs(res.c_AT_sq - other.c_AT_sq) >= tolerance:
        raise ConvergenceError(
            f"cutoff doubling changed c_AT^2 by {abs(res.c_AT_sq - other.c_AT_sq):.3e} >= {tolerance}")
    if not 0 < res.c_AT_sq < 1 / math.pi:
        raise ConvergenceError(f"c_AT^2 = {res.c_AT_sq} outside (0, 1/pi)")
    return res


def _agmon_at(cutoff: int) -> AgmonResult:
    c_trunc, mu, values, weights = truncated_agmon_constant(cutoff)
    n_inside = int(weights.sum())
    tail = truncation_tail_bound(mu, cutoff, n_inside) / math.pi**2
    estimate = c_trunc + 1 / (math.pi**1.5 * math.sqrt(cutoff))
    return AgmonResult(estimate, c_trunc, mu, cutoff, tail, n_inside)


def two_equations_residuals(nu: float, values, weights) -> tuple[float, float]:
    """Relative residuals of the two stationarity identities at nu = mu^-2."""
    d = 1 + nu * values * values
    s1 = 0.5 * np.sum(weights / d)
    rhs1 = nu * np.sum(weights * values * values / d**2)
    rhs2 = np.sum(weights / d**2)
    return float(abs(s1 - rhs1) / s1), float(abs(s1 - rhs2) / s1)


def scaled_agmon_constant(gamma: float, c_AT: float = 0.5) -> dict:
    """Agmon constant on the torus with aspect ratio gamma: c_AT / sqrt(gamma) and 1 / sqrt(gamma pi).

    The scaling argument needs 1/gamma to be an integer; ``valid`` flags that case.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    inv = 1 / gamma
    return {
        "c_AT_gamma": c_AT / math.sqrt(gamma),
        "coarse_bound": 1 / math.sqrt(gamma * math.pi),
        "valid": abs(inv - round(inv)) < 1e-12,
    }


def extremal_agmon_function(nu_param: float, cutoff: int, grid: int | None = None) -> np.ndarray:
    """Extremal function (2 pi^2)^-1 sum cos(k_n x) / (1 + nu Lambda_n^2) on [0, 2 pi]^2, x0 = 0.

    Returned as real grid values of shape (grid, grid); the grid defaults to 4x the
    largest wavenumber so the peak at the origin is sampled exactly.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if not nu_param > 0:
        raise ValueError("nu_param must be positive")
    coeffs, n = extremal_coefficients(nu_param, cutoff, grid)
    return np.fft.irfft2(coeffs, s=(n, n)) * n * n


def extremal_coefficients(nu_param: float, cutoff: int, grid: int | None = None):
    """rfft-layout Fourier coefficients of the extremal function and the grid size used."""
    r = math.isqrt(cutoff)
    n = grid or int(2 ** math.ceil(math.log2(8 * r + 2)))
    if n <= 2 * r:
        raise ValueError("grid too coarse for the cutoff")
    k = np.fft.fftfreq(n, 1 / n)
    k1 = k[:, None]
    k2 = np.arange(n // 2 + 1)[None, :]
    lam = k1**2 + k2**2
    mask = (lam <= cutoff) & (lam > 0)
    c = np.zeros((n, n // 2 + 1), dtype=complex)
    # cos(k.x) splits as half-amplitude on k and -k; rfft keeps k2 >= 0.
    c[mask] = 0.5 / (2 * math.pi**2) / (1 + nu_param * lam[mask] ** 2)
    return c, n


def tabulate_bound_constants(gamma: float = 1.0, c_AT: float = 0.5) -> dict:
    """Explicit constants for the aspect ratio gamma."""
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    c_L = (6 / (gamma * math.pi)) ** 0.25
    c_AT_gamma = c_AT / math.sqrt(gamma)
    return {
        "gamma": gamma,
        "c_b": math.sqrt(8 / (27 * math.pi)),
        "c_2": math.sqrt(16 / (27 * math.pi)),
        "c_L": c_L,
        "c_AT_gamma": c_AT_gamma,
        # The thresholds use the coarse Agmon bound, which is also below c_L^2.
        "c_J": 1 / math.sqrt(gamma * math.pi),
        "c_J_min": min(c_L**2, c_AT_gamma),
    }


@dataclass
class ConstantsTable:
    c_AT_squared: float
    mu_star: float
    tail_bound: float
    cutoff: int
    c_AT_sq_truncated: float
    c_b: float
    c_2: float
    c_L: float
    c_J: float
    c_AT_gamma: float
    gamma: float = 1.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["c_AT_sq"] = d.pop("c_AT_squared")
        return d


def constants_table(gamma: float = 1.0, cutoff: int = 10_000, tolerance: float = 1e-6) -> ConstantsTable:
    agmon = compute_agmon_constant(cutoff, tolerance)
    t = tabulate_bound_constants(gamma, math.sqrt(agmon.c_AT_sq))
    return ConstantsTable(
        c_AT_squared=agmon.c_AT_sq, mu_star=agmon.mu_star, tail_bound=agmon.tail_bound,
        cutoff=cutoff, c_AT_sq_truncated=agmon.c_AT_sq_truncated,
        c_b=t["c_b"], c_2=t["c_2"], c_L=t["c_L"], c_J=t["c_J"], c_AT_gamma=t["c_AT_gamma"], gamma=gamma)


def write_constants_json(table: ConstantsTable, path) -> None:
    with open(path, "w") as fh:
        json.dump(table.to_json(), fh, indent=2, sort_keys=True)
