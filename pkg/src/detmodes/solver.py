"""Pseudospectral integrator for the (damped) 2D vorticity equation

    d_t phi + J(Lap^-1 phi, phi) - nu Lap phi + mu phi = rot f

on the torus [0, L/gamma] x [0, L]. Fields are stored as normalised rfft2
coefficients (phi(x) = sum_k c_k exp(i k.x)) with x1 along axis 0. The quadratic
term is dealiased with the 2/3 rule and the diagonal linear part is integrated
exactly by ETDRK4.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .lattice import LatticeSpectrum, TorusGeometry, enumerate_spectrum, spectrum_from_modes

BLOWUP_LIMIT = 1e15


class BlowUpError(FloatingPointError):
    def __init__(self, t):
        super().__init__(f"solution blew up at t = {t:.6g}")
        self.t = t


class GridMismatchError(ValueError):
    pass


class SpectralGrid:
    """Wavenumbers, dealiasing mask and quadrature weights for an (n1, n2) grid."""

    def __init__(self, geometry: TorusGeometry, n1: int, n2: int | None = None):
        n2 = n1 if n2 is None else n2
        if n1 < 4 or n2 < 4 or n1 % 2 or n2 % 2:
            raise ValueError("grid sizes must be even and >= 4")
        self.geometry = geometry
        self.n1, self.n2 = n1, n2
        L1, L2 = geometry.lengths
        self.i1 = np.fft.fftfreq(n1, 1 / n1).astype(np.int64)[:, None]
        self.i2 = np.arange(n2 // 2 + 1, dtype=np.int64)[None, :]
        self.kx = 2 * np.pi / L1 * self.i1
        self.ky = 2 * np.pi / L2 * self.i2
        self.ksq = self.kx**2 + self.ky**2
        self.inv_ksq = np.zeros_like(self.ksq)
        self.inv_ksq[self.ksq > 0] = 1 / self.ksq[self.ksq > 0]
        self.kmax1, self.kmax2 = (n1 - 1) // 3, (n2 - 1) // 3
        self.dealias = (np.abs(self.i1) <= self.kmax1) & (self.i2 <= self.kmax2)
        self.dealias[0, 0] = False
        w = np.full((1, n2 // 2 + 1), 2.0)
        w[0, 0] = 1.0
        w[0, -1] = 1.0
        self.weights = np.broadcast_to(w, self.ksq.shape)

    @property
    def shape(self):
        return (self.n1, self.n2 // 2 + 1)

    @property
    def physical_shape(self):
        return (self.n1, self.n2)

    def key(self):
        return (self.geometry, self.n1, self.n2)

    def __eq__(self, other):
        return isinstance(other, SpectralGrid) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def coords(self):
        L1, L2 = self.geometry.lengths
        x1 = np.arange(self.n1) * L1 / self.n1
        x2 = np.arange(self.n2) * L2 / self.n2
        return np.meshgrid(x1, x2, indexing="ij")

    def inner(self, a, b):
        """L2 inner product over the torus of two coefficient arrays (last two axes)."""
        return self.geometry.area * np.sum(self.weights * (a * np.conj(b)).real, axis=(-2, -1))

    def norm_sq(self, a):
        return self.geometry.area * np.sum(self.weights * np.abs(a) ** 2, axis=(-2, -1))

    @cached_property
    def resolved_spectrum(self) -> LatticeSpectrum:
        """Eigenvalue ordering of all modes kept by the dealiasing mask."""
        i1 = np.broadcast_to(self.i1, self.shape)[self.dealias]
        i2 = np.broadcast_to(self.i2, self.shape)[self.dealias]
        half = (i1 > 0) | ((i1 == 0) & (i2 > 0)) | ((i1 < 0) & (i2 > 0))
        # rfft storage keeps k2 >= 0; map to the half lattice {k1 > 0} U {k1 = 0, k2 > 0}.
        k1 = np.where(i1 < 0, -i1, i1)[half]
        k2 = np.where(i1 < 0, -i2, i2)[half]
        return spectrum_from_modes(self.geometry, k1, k2)

    def index_of(self, k1: int, k2: int):
        """Storage index (row, col) of wavevector (k1, k2) and whether it is stored conjugated."""
        if k2 < 0 or (k2 == 0 and k1 < 0):
            k1, k2, conj = -k1, -k2, True
        else:
            conj = False
        if abs(k1) > self.kmax1 or k2 > self.kmax2:
            raise GridMismatchError(f"wavevector {(k1, k2)} is not resolved on this grid")
        return (k1 % self.n1, k2), conj


@dataclass
class VorticityField:
    coeffs: np.ndarray
    grid: SpectralGrid

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape, dtype=complex), grid)

    @classmethod
    def from_physical(cls, values, grid, dealias=True):
        c = np.fft.rfft2(np.asarray(values, dtype=float), norm="forward")
        c[..., 0, 0] = 0
        c[..., grid.n1 // 2, :] = 0
        c[..., :, -1] = 0
        if dealias:
            c = c * grid.dealias
        return cls(c, grid)

    def physical(self, pad: int = 1) -> np.ndarray:
        if pad == 1:
            return np.fft.irfft2(self.coeffs, s=self.grid.physical_shape, norm="forward")
        return np.fft.irfft2(pad_coeffs(self.coeffs, self.grid, pad),
                             s=(pad * self.grid.n1, pad * self.grid.n2), norm="forward")

    def copy(self):
        return VorticityField(self.coeffs.copy(), self.grid)

    def __add__(self, other):
        _same_grid(self, other)
        return VorticityField(self.coeffs + other.coeffs, self.grid)

    def __sub__(self, other):
        _same_grid(self, other)
        return VorticityField(self.coeffs - other.coeffs, self.grid)

    def __mul__(self, s):
        return VorticityField(self.coeffs * s, self.grid)

    __rmul__ = __mul__

    def laplacian(self):
        return VorticityField(-self.grid.ksq * self.coeffs, self.grid)

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[..., 0, 0])

    def norm(self) -> float:
        return float(np.sqrt(self.grid.norm_sq(self.coeffs)))

    def grad_norm(self) -> float:
        g = self.grid
        return float(np.sqrt(g.geometry.area * np.sum(g.weights * g.ksq * np.abs(self.coeffs) ** 2)))

    def lap_norm(self) -> float:
        return float(np.sqrt(self.grid.norm_sq(self.grid.ksq * self.coeffs)))

    def velocity_norm(self) -> float:
        """||u|| = ||grad Lap^-1 phi|| for the velocity with this vorticity."""
        return float(np.sqrt(self.grid.geometry.area
                             * np.sum(self.grid.weights * self.grid.inv_ksq * np.abs(self.coeffs) ** 2)))

    def sup(self, pad: int = 2) -> float:
        return float(np.max(np.abs(self.physical(pad))))

    def velocity(self, pad: int = 1):
        """Physical velocity components (u1, u2) = (-d2 psi, d1 psi)."""
        psi = -self.coeffs * self.grid.inv_ksq
        u1 = VorticityField(-1j * self.grid.ky * psi, self.grid).physical(pad)
        u2 = VorticityField(1j * self.grid.kx * psi, self.grid).physical(pad)
        return u1, u2

    def evaluate(self, points) -> np.ndarray:
        """Exact trigonometric-sum values at arbitrary points, shape (P,)."""
        return evaluate_coeffs(self.coeffs, self.grid, points)

    def velocity_at(self, points) -> np.ndarray:
        """Velocity vectors at arbitrary points, shape (P, 2)."""
        psi = -self.coeffs * self.grid.inv_ksq
        u1 = evaluate_coeffs(-1j * self.grid.ky * psi, self.grid, points)
        u2 = evaluate_coeffs(1j * self.grid.kx * psi, self.grid, points)
        return np.stack([u1, u2], axis=-1)


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")


def evaluate_coeffs(c, grid, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nz = np.nonzero(np.abs(c) > 0)
    if nz[0].size == 0:
        return np.zeros(len(points))
    kx = np.broadcast_to(grid.kx, grid.shape)[nz]
    ky = np.broadcast_to(grid.ky, grid.shape)[nz]
    w = grid.weights[nz]
    phase = np.exp(1j * (points[:, 0:1] * kx[None, :] + points[:, 1:2] * ky[None, :]))
    # Columns with weight 2 stand for k and its conjugate partner.
    return np.real(phase @ (w * c[nz]))


def pad_coeffs(c, grid, pad):
    """Zero-pad to a pad-times finer grid; Nyquist modes are assumed to be zero."""
    n1, n2 = grid.n1, grid.n2
    m1, m2 = pad * n1, pad * n2
    out = np.zeros(c.shape[:-2] + (m1, m2 // 2 + 1), dtype=complex)
    h = n1 // 2
    out[..., :h, : n2 // 2 + 1] = c[..., :h, :]
    out[..., m1 - h + 1:, : n2 // 2 + 1] = c[..., h + 1:, :]
    return out


def is_conjugate_symmetric(field: VorticityField, tol: float = 1e-12) -> bool:
    """Column k2 = 0 must satisfy c(-k1, 0) = conj c(k1, 0); other columns are implicit."""
    col = field.coeffs[..., :, 0]
    mirrored = np.conj(np.roll(col[..., ::-1], 1, axis=-1))
    scale = max(np.max(np.abs(col)), 1e-300)
    return bool(np.max(np.abs(col - mirrored)) <= tol * scale) and abs(field.mean) <= tol * max(scale, 1.0)


# --- operators -------------------------------------------------------------------


def poisson_invert(field: VorticityField, tol: float = 1e-14) -> VorticityField:
    """Stream function psi with Lap psi = phi."""
    if abs(field.mean) > tol * max(1.0, float(np.max(np.abs(field.coeffs)))):
        raise ValueError("poisson_invert needs a zero-mean field")
    return VorticityField(-field.coeffs * field.grid.inv_ksq, field.grid)


def _jacobian_coeffs(psi, phi, grid):
    """Dealiased J(psi, phi) = d1 psi d2 phi - d2 psi d1 phi for coefficient arrays."""
    s = grid.physical_shape
    psi = psi * grid.dealias
    phi = phi * grid.dealias
    d1psi = np.fft.irfft2(1j * grid.kx * psi, s=s, norm="forward")
    d2psi = np.fft.irfft2(1j * grid.ky * psi, s=s, norm="forward")
    d1phi = np.fft.irfft2(1j * grid.kx * phi, s=s, norm="forward")
    d2phi = np.fft.irfft2(1j * grid.ky * phi, s=s, norm="forward")
    return np.fft.rfft2(d1psi * d2phi - d2psi * d1phi, norm="forward") * grid.dealias


def jacobian(psi: VorticityField, phi: VorticityField) -> VorticityField:
    _same_grid(psi, phi)
    return VorticityField(_jacobian_coeffs(psi.coeffs, phi.coeffs, psi.grid), psi.grid)


def advection(phi_coeffs, grid):
    """J(Lap^-1 phi, phi) for a (possibly stacked) coefficient array."""
    return _jacobian_coeffs(-phi_coeffs * grid.inv_ksq, phi_coeffs, grid)


# --- forcing and parameters ----------------------------------------------------------


@dataclass
class ForcingSpec:
    """Body force described through its curl.

    ``kolmogorov`` is f = (A sin(2 pi s x2 / L), 0). ``spectral_custom`` takes
    ``custom`` as a list of [k1, k2, re, im] coefficients of rot f. ``prescribed``
    time dependence scales the force by a piecewise-linear envelope.
    """

    kind: str = "zero"
    s: int = 1
    amplitude: float = 0.0
    time_dependence: str = "constant"
    envelope: list = field(default_factory=list)  # [[t, factor], ...]
    custom: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("kolmogorov", "spectral_custom", "zero"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "kolmogorov" and self.s < 1:
            raise ValueError("Kolmogorov forcing needs s >= 1")
        if self.time_dependence not in ("constant", "prescribed"):
            raise ValueError(f"unknown time dependence {self.time_dependence!r}")
        if self.time_dependence == "prescribed" and not self.envelope:
            raise ValueError("prescribed forcing needs an envelope")

    def curl(self, grid: SpectralGrid) -> np.ndarray:
        """Coefficients of rot f (time-independent part)."""
        c = np.zeros(grid.shape, dtype=complex)
        if self.kind == "kolmogorov":
            k = 2 * math.pi * self.s / grid.geometry.L
            idx, _ = grid.index_of(0, self.s)
            # rot f = -d2 f1 = -A k cos(k x2)
            c[idx] = -0.5 * self.amplitude * k
        elif self.kind == "spectral_custom":
            for k1, k2, re, im in self.custom:
                idx, conj = grid.index_of(int(k1), int(k2))
                val = complex(re, im)
                c[idx] = np.conj(val) if conj else val
                if idx[1] == 0:
                    c[(-idx[0]) % grid.n1, 0] = np.conj(c[idx])
        return c * grid.dealias

    def factor(self, t: float) -> float:
        if self.time_dependence == "constant":
            return 1.0
        ts, fs = zip(*self.envelope)
        return float(np.interp(t, ts, fs))

    def to_json(self):
        return {"kind": self.kind, "s": self.s, "amplitude": self.amplitude,
                "time_dependence": self.time_dependence, "envelope": self.envelope, "custom": self.custom}


@dataclass
class SimParams:
    nu: float
    mu: float = 0.0
    dt: float = 1e-2
    t_end: float = 1.0
    dealias: str = "2/3"
    forcing: ForcingSpec = field(default_factory=ForcingSpec)

    def __post_init__(self):
        if self.nu < 0 or self.mu < 0:
            raise ValueError("nu and mu must be nonnegative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dealias != "2/3":
            raise ValueError("only the 2/3 dealiasing rule is implemented")
        if isinstance(self.forcing, dict):
            self.forcing = ForcingSpec(**self.forcing)

    def to_json(self):
        return {"nu": self.nu, "mu": self.mu, "dt": self.dt, "t_end": self.t_end,
                "dealias": self.dealias, "forcing": self.forcing.to_json()}


def forcing_norms(grid: SpectralGrid, forcing: ForcingSpec) -> dict:
    """||f|| (velocity forcing, recovered from its curl), ||rot f|| and ||rot f||_inf."""
    F = VorticityField(forcing.curl(grid), grid)
    return {"f_L2": F.velocity_norm(), "rot_f_L2": F.norm(), "F_inf": F.sup(pad=4)}


# --- time stepping ----------------------------------------------------------------


def _etd_coefficients(lin, h, n_contour=32):
    """ETDRK4 weights for diagonal linear operator ``lin`` via a contour integral."""
    z = lin * h
    r = np.exp(2j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    zc = z[..., None] + r
    E = np.exp(z)
    E2 = np.exp(z / 2)
    Q = h * np.real(np.mean((np.exp(zc / 2) - 1) / zc, axis=-1))
    f1 = h * np.real(np.mean((-4 - zc + np.exp(zc) * (4 - 3 * zc + zc**2)) / zc**3, axis=-1))
    f2 = h * np.real(np.mean((2 + zc + np.exp(zc) * (zc - 2)) / zc**3, axis=-1))
    f3 = h * np.real(np.mean((-4 - 3 * zc - zc**2 + np.exp(zc) * (4 - zc)) / zc**3, axis=-1))
    return E, E2, Q, f1, f2, f3


class Stepper:
    """ETDRK4 stepper for fixed grid and parameters.

    ``extra`` is an optional callable (coeffs, t) -> coeffs added to the explicit
    right-hand side; the synchronisation harness uses it for nudging.
    """

    def __init__(self, grid: SpectralGrid, params: SimParams, extra=None):
        self.grid = grid
        self.params = params
        self.lin = -(params.nu * grid.ksq + params.mu)
        self.coef = _etd_coefficients(self.lin, params.dt)
        self.forcing = params.forcing.curl(grid)
        self.extra = extra

    def rhs(self, c, t):
        out = -advection(c, self.grid)
        if self.params.forcing.kind != "zero":
            out = out + self.params.forcing.factor(t) * self.forcing
        if self.extra is not None:
            out = out + self.extra(c, t)
        return out * self.grid.dealias

    def advance(self, c, t):
        E, E2, Q, f1, f2, f3 = self.coef
        h = self.params.dt
        Nu = self.rhs(c, t)
        a = E2 * c + Q * Nu
        Na = self.rhs(a, t + h / 2)
        b = E2 * c + Q * Na
        Nb = self.rhs(b, t + h / 2)
        cc = E2 * a + Q * (2 * Nb - Nu)
        Nc = self.rhs(cc, t + h)
        new = E * c + f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc
        new *= self.grid.dealias
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > BLOWUP_LIMIT:
            raise BlowUpError(t + h)
        return new


_STEPPERS: dict = {}


def step(state: VorticityField, params: SimParams, t: float = 0.0) -> VorticityField:
    """Advance ``state`` by one time step ``params.dt`` starting at time ``t``."""
    key = (state.grid, id(params))
    stepper = _STEPPERS.get(key)
    if stepper is None or stepper.params is not params:
        _STEPPERS.clear()
        stepper = _STEPPERS[key] = Stepper(state.grid, params)
    return VorticityField(stepper.advance(state.coeffs, t), state.grid)


# --- diagnostics ------------------------------------------------------------------


@dataclass
class DiagnosticsSample:
    t: float
    energy: float
    enstrophy: float
    grad_vorticity_sq: float
    vorticity_sup: float
    mean_grad_u_sq: float = 0.0
    mean_grad_vort_sq: float = 0.0


def diagnostics(field_: VorticityField, t: float) -> DiagnosticsSample:
    g = field_.grid
    c = field_.coeffs
    e = 0.5 * g.geometry.area * float(np.sum(g.weights * g.inv_ksq * np.abs(c) ** 2))
    z = 0.5 * field_.norm() ** 2
    p = g.geometry.area * float(np.sum(g.weights * g.ksq * np.abs(c) ** 2))
    return DiagnosticsSample(t, e, z, p, field_.sup(pad=2))


def energy_identity_rhs(c, grid, params, t):
    """d/dt (1/2)||phi||^2 predicted by the balance -nu||grad phi||^2 - mu||phi||^2 + (rot f, phi)."""
    area = grid.geometry.area
    w = grid.weights
    val = -params.nu * area * np.sum(w * grid.ksq * np.abs(c) ** 2) - params.mu * area * np.sum(w * np.abs(c) ** 2)
    if params.forcing.kind != "zero":
        val += params.forcing.factor(t) * grid.inner(params.forcing.curl(grid), c)
    return float(val)


def energy_identity_residual(state: VorticityField, params: SimParams, t: float = 0.0) -> float:
    """Relative mismatch of one step against the enstrophy balance.

    The balance is integrated with Simpson's rule, using a midpoint obtained from
    two half steps.
    """
    grid = state.grid
    half = replace(params, dt=params.dt / 2)
    sh = Stepper(grid, half)
    mid = sh.advance(state.coeffs, t)
    end = Stepper(grid, params).advance(state.coeffs, t)
    z0 = 0.5 * grid.norm_sq(state.coeffs)
    z1 = 0.5 * grid.norm_sq(end)
    integral = params.dt / 6 * (energy_identity_rhs(state.coeffs, grid, params, t)
                                + 4 * energy_identity_rhs(mid, grid, params, t + params.dt / 2)
                                + energy_identity_rhs(end, grid, params, t + params.dt))
    return float(abs(z1 - z0 - integral) / max(z0, 1e-300))


@dataclass
class Trajectory:
    samples: list
    final: VorticityField
    t_final: float
    params: SimParams

    def array(self, name):
        return np.array([getattr(s, name) for s in self.samples])

    @property
    def times(self):
        return self.array("t")


def run(initial: VorticityField, params: SimParams, sample_every: int = 1, t0: float = 0.0,
        callback=None) -> Trajectory:
    """Integrate to ``params.t_end`` recording diagnostics every ``sample_every`` steps."""
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    stepper = Stepper(initial.grid, params)
    c = initial.coeffs * initial.grid.dealias
    n_steps = int(round((params.t_end - t0) / params.dt))
    samples = []
    acc_u = acc_p = 0.0
    prev = diagnostics(VorticityField(c, initial.grid), t0)
    samples.append(prev)
    t = t0
    for i in range(1, n_steps + 1):
        c = stepper.advance(c, t)
        t = t0 + i * params.dt
        if callback is not None:
            callback(t, c)
        if i % sample_every == 0 or i == n_steps:
            d = diagnostics(VorticityField(c, initial.grid), t)
            dt = d.t - prev.t
            acc_u += 0.5 * dt * (2 * prev.enstrophy + 2 * d.enstrophy)
            acc_p += 0.5 * dt * (prev.grad_vorticity_sq + d.grad_vorticity_sq)
            span = d.t - t0
            d.mean_grad_u_sq = acc_u / span
            d.mean_grad_vort_sq = acc_p / span
            samples.append(d)
            prev = d
    return Trajectory(samples, VorticityField(c, initial.grid), t, params)


def random_field(grid: SpectralGrid, seed: int, k_peak: float = 4.0, rms_vorticity: float = 1.0,
                 kmax: float | None = None) -> VorticityField:
    """Seeded Gaussian field with energy spectrum ~ k^4 exp(-2 (k / k_peak)^2)."""
    rng = np.random.default_rng(seed)
    noise = VorticityField.from_physical(rng.standard_normal(grid.physical_shape), grid).coeffs
    L2 = grid.geometry.L
    k = np.sqrt(grid.ksq) * L2 / (2 * np.pi)
    # Vorticity spectrum k^2 E(k) spread over a ring of circumference ~ k.
    amp = np.sqrt(k**5 * np.exp(-2 * (k / k_peak) ** 2))
    if kmax is not None:
        amp = amp * (k <= kmax)
    c = noise * amp * grid.dealias
    f = VorticityField(c, grid)
    rms = f.norm() / math.sqrt(grid.geometry.area)
    return f * (rms_vorticity / rms) if rms > 0 else f


# --- time-average bounds -------------------------------------------------------------


@dataclass
class BoundCheck:
    name: str
    max_ratio: float
    worst_window_start: float
    windows: int

    @property
    def ok(self) -> bool:
        return self.max_ratio <= 1.0


def _window_means(t, y, T):
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))])
    starts, means = [], []
    for i, t0 in enumerate(t):
        j = np.searchsorted(t, t0 + T - 1e-12 * max(1.0, T))
        if j >= len(t):
            break
        starts.append(t0)
        means.append((cum[j] - cum[i]) / (t[j] - t[i]))
    return np.array(starts), np.array(means)


def verify_time_average_bounds(trajectory: Trajectory, params: SimParams, geometry: TorusGeometry,
                               T: float, t_start: float = 0.0, lambda1: float | None = None) -> list:
    """Sliding-window checks of the time-averaged ||grad u||^2 and ||grad phi||^2 bounds.

    ``f`` is the L2 norm of the velocity forcing, maximised over the run when the
    forcing is time dependent.
    """
    t = trajectory.times
    if t[-1] - max(t_start, t[0]) < T:
        raise ValueError("averaging window exceeds the trajectory")
    if lambda1 is None:
        lambda1 = enumerate_spectrum(geometry, 1).eigenvalue(1)
    grid = trajectory.final.grid
    f = forcing_norms(grid, params.forcing)["f_L2"]
    if params.forcing.time_dependence == "prescribed":
        f *= max(abs(v) for _, v in params.forcing.envelope)
    nu = params.nu
    sel = t >= t_start
    tt = t[sel]
    checks = []
    for name, y, bound in (
        ("grad_u_sq", 2 * trajectory.array("enstrophy")[sel], f**2 / (T * nu**3 * lambda1**2) + f**2 / (nu**2 * lambda1)),
        ("grad_vort_sq", trajectory.array("grad_vorticity_sq")[sel], f**2 / (T * nu**3 * lambda1) + f**2 / nu**2),
    ):
        starts, means = _window_means(tt, y, T)
        if bound == 0:
            ratios = np.where(means <= 0, 0.0, np.inf)
        else:
            ratios = means / bound
        i = int(np.argmax(ratios))
        checks.append(BoundCheck(name, float(ratios[i]), float(starts[i]), len(starts)))
    return checks


# --- files ----------------------------------------------------------------------


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "energy", "enstrophy", "grad_vort_sq", "vort_sup"])
        for s in trajectory.samples:
            w.writerow([repr(s.t), repr(s.energy), repr(s.enstrophy), repr(s.grad_vorticity_sq),
                        repr(s.vorticity_sup)])


def save_snapshot(field_: VorticityField, path, t: float = 0.0) -> None:
    """Flat little-endian complex128 coefficients plus a JSON sidecar at ``path + '.json'``."""
    g = field_.grid
    np.ascontiguousarray(field_.coeffs, dtype="<c16").tofile(str(path))
    meta = {"layout": "rfft2", "shape": list(g.shape), "grid_size": [g.n1, g.n2],
            "geometry": {"L": g.geometry.L, "gamma": g.geometry.gamma}, "t": t}
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_snapshot(path):
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    grid = SpectralGrid(TorusGeometry(**meta["geometry"]), *meta["grid_size"])
    c = np.fromfile(str(path), dtype="<c16").reshape(meta["shape"])
    return VorticityField(c, grid), meta["t"]
