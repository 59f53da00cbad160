"""Laplacian spectrum on the periodic rectangle [0, L/gamma] x [0, L].

Eigenvalues are enumerated in exact integer lattice units and only scaled by
the physical factor (2*pi/L)**2 at the very end, so ties sort exactly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# Hard ceiling on the half-width of the enumeration box.
MAX_LATTICE_RADIUS = 20_000


class LatticeBoundsError(RuntimeError):
    """Raised when the requested eigenvalues need a wavenumber box that is too large."""


@dataclass(frozen=True)
class TorusGeometry:
    """Periodic domain with side ``L`` along x2 and ``L / gamma`` along x1."""

    L: float = 2 * math.pi
    gamma: float = 1.0

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise ValueError(f"aspect ratio gamma must lie in (0, 1], got {self.gamma}")
        if not self.L > 0:
            raise ValueError(f"side length L must be positive, got {self.L}")

    @property
    def area(self) -> float:
        return self.L**2 / self.gamma

    @property
    def lengths(self) -> tuple[float, float]:
        """(L1, L2) = (L / gamma, L)."""
        return self.L / self.gamma, self.L

    @property
    def unit(self) -> float:
        """Physical factor (2 pi / L)^2 multiplying the lattice units."""
        return (2 * math.pi / self.L) ** 2

    @property
    def lambda1(self) -> float:
        return float(self.unit * min(self.gamma**2, 1.0))


def _rational_gamma(gamma: float) -> Fraction | None:
    frac = Fraction(gamma).limit_denominator(10_000)
    if abs(float(frac) - gamma) <= 1e-13 * gamma:
        return frac
    return None


def _lattice_keys(k1, k2, gamma):
    """Integer (or float, for irrational gamma) keys proportional to gamma^2 k1^2 + k2^2."""
    frac = _rational_gamma(gamma)
    if frac is None:
        return gamma**2 * k1.astype(float) ** 2 + k2.astype(float) ** 2, 1.0
    p, q = frac.numerator, frac.denominator
    keys = (p * p) * k1.astype(np.int64) ** 2 + (q * q) * k2.astype(np.int64) ** 2
    return keys, float(q * q)


@dataclass
class LatticeSpectrum:
    """Sorted eigenvalues of -Laplacian on mean-zero functions.

    ``half_eigenvalues[n]`` is Lambda_{n+1}, realised by ``wavevectors[n]`` in the
    half lattice {k1 > 0} U {k1 = 0, k2 > 0}. Every Lambda carries a sine and a
    cosine eigenfunction, so ``full_eigenvalues`` lists each value twice.
    """

    geometry: TorusGeometry
    half_eigenvalues: np.ndarray
    wavevectors: np.ndarray
    half_keys: np.ndarray = field(repr=False)
    count: int | None = None

    @property
    def full_eigenvalues(self) -> np.ndarray:
        return np.repeat(self.half_eigenvalues, 2)[: len(self)]

    def __len__(self):
        full = 2 * len(self.half_eigenvalues)
        return full if self.count is None else min(self.count, full)

    def eigenvalue(self, j: int) -> float:
        """lambda_j with the 1-based index used throughout the theory."""
        if j < 1 or j > len(self):
            raise IndexError(f"eigenvalue index {j} outside 1..{len(self)}")
        return float(self.half_eigenvalues[(j - 1) // 2])

    def truncated(self, count: int) -> "LatticeSpectrum":
        n = (count + 1) // 2
        return LatticeSpectrum(self.geometry, self.half_eigenvalues[:n],
                               self.wavevectors[:n], self.half_keys[:n], count)


def _order(keys, k1, k2):
    # Ties broken by descending (k1, k2): (1,0) before (0,1), (1,1) before (1,-1).
    return np.lexsort((-k2, -k1, keys))


def enumerate_spectrum(geometry: TorusGeometry, count: int) -> LatticeSpectrum:
    """Return the first ``count`` eigenvalues lambda_j (with multiplicity)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n_half = (count + 1) // 2
    gamma = geometry.gamma
    # Initial box from the area law: about pi R / (2 gamma) half-lattice points below R.
    R = 2.0 * gamma * n_half / math.pi + 4.0
    while True:
        K2 = int(math.ceil(math.sqrt(R))) + 1
        K1 = int(math.ceil(math.sqrt(R) / gamma)) + 1
        if max(K1, K2) > MAX_LATTICE_RADIUS:
            raise LatticeBoundsError(
                f"enumerating {count} eigenvalues needs wavenumbers beyond {MAX_LATTICE_RADIUS}")
        k1, k2 = np.meshgrid(np.arange(0, K1 + 1), np.arange(-K2, K2 + 1), indexing="ij")
        k1, k2 = k1.ravel(), k2.ravel()
        half = (k1 > 0) | ((k1 == 0) & (k2 > 0))
        k1, k2 = k1[half], k2[half]
        keys, denom = _lattice_keys(k1, k2, gamma)
        # Smallest key any lattice point outside the box can have.
        outside = min(_lattice_keys(np.array([K1 + 1]), np.array([0]), gamma)[0][0],
                      _lattice_keys(np.array([0]), np.array([K2 + 1]), gamma)[0][0])
        order = _order(keys, k1, k2)
        if len(order) >= n_half and keys[order[n_half - 1]] < outside:
            break
        R *= 2.0
    sel = order[:n_half]
    half_keys = keys[sel]
    values = geometry.unit * (half_keys / denom).astype(float)
    wv = np.stack([k1[sel], k2[sel]], axis=1)
    return LatticeSpectrum(geometry, values, wv, half_keys, count)


def spectrum_from_modes(geometry: TorusGeometry, k1, k2) -> LatticeSpectrum:
    """Sort an explicit set of half-lattice wavevectors (e.g. the modes a grid resolves)."""
    k1 = np.asarray(k1, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    keys, denom = _lattice_keys(k1, k2, geometry.gamma)
    order = _order(keys, k1, k2)
    values = geometry.unit * (keys[order] / denom).astype(float)
    return LatticeSpectrum(geometry, values, np.stack([k1[order], k2[order]], axis=1), keys[order])


@dataclass
class BoundReport:
    """Outcome of checking a family of lower bounds against enumerated data."""

    checks: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, name, observed, required, index_offset=1):
        observed = np.asarray(observed, dtype=float)
        required = np.asarray(required, dtype=float)
        if observed.size == 0:
            return
        ratio = observed / required
        self.checks[name] = {"count": int(observed.size), "min_ratio": float(ratio.min()),
                             "argmin": int(np.argmin(ratio)) + index_offset}
        # Relative slack only absorbs the final floating-point scaling.
        bad = np.nonzero(observed < required * (1 - 1e-12))[0]
        for i in bad:
            self.violations.append({"bound": name, "index": int(i) + index_offset,
                                    "observed": float(observed[i]), "required": float(required[i])})


def verify_eigenvalue_bounds(spectrum: LatticeSpectrum, geometry: TorusGeometry | None = None) -> BoundReport:
    """Check the explicit lower bounds on lambda_m and Lambda_n against the enumeration."""
    geometry = geometry or spectrum.geometry
    if geometry != spectrum.geometry:
        raise ValueError("spectrum was enumerated for a different geometry")
    lam = spectrum.full_eigenvalues
    m = np.arange(1, len(lam) + 1)
    report = BoundReport()
    base = 4 * math.pi**2 / geometry.L**2
    if geometry.gamma == 1:
        report.add("lambda_m >= lambda_1 m / 4", lam, lam[0] * m / 4)
        n = np.arange(1, len(spectrum.half_eigenvalues) + 1)
        # Lambda_n >= n/2 is stated in units where lambda_1 = 1.
        report.add("Lambda_n >= n / 2", spectrum.half_eigenvalues / base, n / 2)
    start = int(math.ceil(2 / geometry.gamma - 1e-12))
    sel = m >= start
    report.add("lambda_m >= (m gamma / 8) 4 pi^2 / L^2 for m >= 2/gamma",
               lam[sel], m[sel] * geometry.gamma / 8 * base, index_offset=start)
    return report


def write_spectrum_csv(spectrum: LatticeSpectrum, path) -> None:
    """One row per eigenvalue lambda_j: index, lambda, k1, k2."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "lambda", "k1", "k2"])
        for j in range(1, len(spectrum) + 1):
            a, b = spectrum.wavevectors[(j - 1) // 2]
            w.writerow([j, repr(spectrum.eigenvalue(j)), int(a), int(b)])
