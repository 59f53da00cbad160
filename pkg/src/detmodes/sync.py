"""Master/slave synchronisation through low modes or nodal values.

Master and slave are advanced as one stacked ETDRK4 system so that nudging
terms see consistent stage values. Mode coupling projects onto the first ``m``
eigenfunctions in the deterministic eigenvalue order of ``lattice``; node
coupling observes the velocity at one point per square of a tiling of the torus.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from .lattice import LatticeSpectrum, TorusGeometry
from .solver import SimParams, SpectralGrid, Stepper, VorticityField


# --- low-mode projection -------------------------------------------------------------


class ModeProjector:
    """P_m on a grid: keeps whole sin/cos pairs for the first m // 2 wavevectors,
    and only the sine partner of the next one when m is odd."""

    def __init__(self, grid: SpectralGrid, m: int, spectrum: LatticeSpectrum | None = None):
        spectrum = spectrum if spectrum is not None else grid.resolved_spectrum
        if m < 0:
            raise ValueError("m must be nonnegative")
        if m > len(spectrum):
            raise ValueError(f"m = {m} exceeds the {len(spectrum)} enumerated eigenfunctions")
        self.grid, self.m = grid, m
        self.full = np.zeros(grid.shape, dtype=bool)
        self.partial = np.zeros(grid.shape, dtype=bool)
        pairs = m // 2
        for n in range(pairs + (m % 2)):
            k1, k2 = (int(v) for v in spectrum.wavevectors[n])
            target = self.full if n < pairs else self.partial
            (r, col), _ = grid.index_of(k1, k2)
            target[r, col] = True
            if col == 0:
                target[(-r) % grid.n1, 0] = True
        self.lambda_next = spectrum.eigenvalue(m + 1) if m < len(spectrum) else math.inf

    def apply(self, c):
        out = np.where(self.full, c, 0)
        if self.partial.any():
            # Sine component of exp(i k.x) coefficients is the imaginary part.
            out = out + np.where(self.partial, 1j * np.imag(c), 0)
        return out

    def complement(self, c):
        return c - self.apply(c)


def project_low_modes(field_: VorticityField, m: int, spectrum: LatticeSpectrum | None = None) -> VorticityField:
    return VorticityField(ModeProjector(field_.grid, m, spectrum).apply(field_.coeffs), field_.grid)


def project_high_modes(field_: VorticityField, m: int, spectrum: LatticeSpectrum | None = None) -> VorticityField:
    return VorticityField(ModeProjector(field_.grid, m, spectrum).complement(field_.coeffs), field_.grid)


# --- nodes ------------------------------------------------------------------------


class NodeLayoutError(ValueError):
    pass


@dataclass
class NodeLayout:
    """N = n1 * n2 squares of side l tiling [0, L/gamma] x [0, L], one point per square."""

    geometry: TorusGeometry
    n1: int
    n2: int
    points: np.ndarray

    def __post_init__(self):
        L1, L2 = self.geometry.lengths
        l1, l2 = L1 / self.n1, L2 / self.n2
        if not math.isclose(l1, l2, rel_tol=1e-12):
            raise NodeLayoutError(f"tiles are {l1} x {l2}, not squares")
        self.points = np.asarray(self.points, dtype=float)
        if self.points.shape != (self.N, 2):
            raise NodeLayoutError("need exactly one point per square")
        i = np.floor(self.points[:, 0] / l1 + 1e-12).astype(int)
        j = np.floor(self.points[:, 1] / l2 + 1e-12).astype(int)
        ii, jj = np.divmod(np.arange(self.N), self.n2)
        lo_ok = (self.points >= -1e-12).all()
        if not lo_ok or not (np.all(np.minimum(i, self.n1 - 1) == ii) and np.all(np.minimum(j, self.n2 - 1) == jj)):
            raise NodeLayoutError("a node lies outside its square")

    @property
    def N(self) -> int:
        return self.n1 * self.n2

    @property
    def side(self) -> float:
        return self.geometry.L / self.n2


def tile_shape(geometry: TorusGeometry, N_min: int) -> tuple[int, int]:
    """Smallest square tiling (n1, n2) with n1 * n2 >= N_min."""
    frac = Fraction(geometry.gamma).limit_denominator(1000)
    if not math.isclose(float(frac), geometry.gamma, rel_tol=1e-12):
        raise NodeLayoutError("square tilings need a rational aspect ratio")
    p, q = frac.numerator, frac.denominator  # L1 / L2 = q / p
    j = 1
    while p * q * j * j < N_min:
        j += 1
    return q * j, p * j


def make_node_layout(geometry: TorusGeometry, N_min: int, placement: str = "random",
                     seed: int = 0) -> NodeLayout:
    n1, n2 = tile_shape(geometry, max(N_min, 1))
    l = geometry.L / n2
    ii, jj = np.divmod(np.arange(n1 * n2), n2)
    corner = np.stack([ii * l, jj * l], axis=1)
    if placement == "random":
        off = np.random.default_rng(seed).uniform(0, l, size=(n1 * n2, 2))
    elif placement == "center":
        off = np.full((n1 * n2, 2), l / 2)
    elif placement == "corner":
        off = np.zeros((n1 * n2, 2))
    else:
        raise ValueError(f"unknown placement {placement!r}")
    return NodeLayout(geometry, n1, n2, corner + off)


class NodeObserver:
    """Velocity at the nodes via precomputed Fourier phases, plus the
    piecewise-constant interpolant of nodal data on the physical grid."""

    def __init__(self, grid: SpectralGrid, layout: NodeLayout):
        if layout.geometry != grid.geometry:
            raise NodeLayoutError("layout and grid use different geometries")
        self.grid, self.layout = grid, layout
        # exp(i k.x) factorises, so nodal values cost two small matrix products.
        rows = np.nonzero(np.abs(grid.i1[:, 0]) <= grid.kmax1)[0]
        cols = np.arange(grid.kmax2 + 1)
        self.rows, self.cols = rows, cols
        kx = grid.kx[rows, 0]
        ky = grid.ky[0, cols]
        pts = layout.points
        self.E1 = np.exp(1j * pts[:, :1] * kx[None, :])
        self.E2 = np.exp(1j * pts[:, 1:] * ky[None, :]) * grid.weights[0, cols][None, :]
        inv = grid.inv_ksq[np.ix_(rows, cols)]
        # u = (-d2 psi, d1 psi) with psi = -phi / |k|^2
        self.op1 = 1j * ky[None, :] * inv
        self.op2 = -1j * kx[:, None] * inv
        x1, x2 = grid.coords()
        l = layout.side
        ti = np.minimum((x1 / l).astype(int), layout.n1 - 1)
        tj = np.minimum((x2 / l).astype(int), layout.n2 - 1)
        self.tile_of_point = ti * layout.n2 + tj

    def velocities(self, c) -> np.ndarray:
        """Velocity at every node, shape (N, 2)."""
        v = c[np.ix_(self.rows, self.cols)]
        out = []
        for op in (self.op1, self.op2):
            out.append(np.real(np.sum((self.E1 @ (v * op)) * self.E2, axis=1)))
        return np.stack(out, axis=-1)

    def eta(self, c) -> float:
        return float(np.max(np.linalg.norm(self.velocities(c), axis=-1)))

    def interpolant_curl(self, nodal) -> np.ndarray:
        """Coefficients of rot I_h(w) for nodal velocity data w of shape (N, 2)."""
        g = self.grid
        X1 = nodal[self.tile_of_point, 0]
        X2 = nodal[self.tile_of_point, 1]
        c1 = np.fft.rfft2(X1, norm="forward")
        c2 = np.fft.rfft2(X2, norm="forward")
        return (1j * g.kx * c2 - 1j * g.ky * c1) * g.dealias


def node_observation(field_: VorticityField, layout: NodeLayout):
    """(velocity values at the nodes, eta = max_j |u(x^j)|)."""
    obs = NodeObserver(field_.grid, layout)
    vals = obs.velocities(field_.coeffs)
    return vals, float(np.max(np.linalg.norm(vals, axis=-1)))


# --- synchronisation --------------------------------------------------------------


@dataclass
class CouplingSpec:
    kind: str = "mode_projection"  # or node_values
    m: int | None = None
    N: int | None = None
    placement: str = "random"
    node_seed: int = 0
    mechanism: str = "direct_replacement"  # or nudging
    nudging_gain: float | None = None

    def __post_init__(self):
        if self.kind == "mode_projection":
            if self.m is None or self.N is not None:
                raise ValueError("mode coupling needs m and no N")
        elif self.kind == "node_values":
            if self.N is None or self.m is not None:
                raise ValueError("node coupling needs N and no m")
            if self.mechanism != "nudging":
                raise ValueError("node coupling is realised by nudging")
        else:
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.mechanism not in ("direct_replacement", "nudging"):
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.mechanism == "nudging" and not (self.nudging_gain and self.nudging_gain > 0):
            raise ValueError("nudging needs a positive gain")


@dataclass
class SyncResult:
    t: np.ndarray
    gap: np.ndarray  # ||u - v|| (velocity, L2)
    observed_gap: np.ndarray  # ||P_m(u - v)|| or eta(u - v)
    master_norm: np.ndarray  # ||u||
    master_sup: np.ndarray  # ||rot u||_inf
    converged: bool
    decay_rate_estimate: float
    final_gap: float  # relative to the master's RMS velocity
    reference: float
    coupling: CouplingSpec | None = None
    lambda_next: float | None = None
    high_gap: np.ndarray | None = None  # ||Q_m(phi - psi)||^2 for Gronwall checks
    master_grad_sq: np.ndarray | None = None  # ||grad phi||^2
    nodes_used: int | None = None
    master: VorticityField | None = field(default=None, repr=False)
    slave: VorticityField | None = field(default=None, repr=False)

    @property
    def relative_gap(self):
        return self.gap / self.reference

    def summary(self) -> dict:
        return {"converged": self.converged, "final_gap": self.final_gap,
                "decay_rate_estimate": self.decay_rate_estimate, "nodes_used": self.nodes_used,
                "coupling": asdict(self.coupling) if self.coupling else None}


def _decay_rate(t, rel):
    ok = rel > 1e-13
    if ok.sum() < 3:
        return float("nan")
    tt, y = t[ok], np.log(rel[ok])
    start = len(tt) // 4
    if len(tt) - start < 2:
        start = 0
    slope = np.polyfit(tt[start:], y[start:], 1)[0]
    return float(-slope)


def run_sync(master_init: VorticityField, slave_init: VorticityField, params: SimParams,
             coupling: CouplingSpec, horizon: float | None = None, sample_every: int = 10,
             spectrum: LatticeSpectrum | None = None, threshold: float = 1e-8,
             tail_fraction: float = 0.2) -> SyncResult:
    """Advance master and slave in lockstep and record their separation.

    ``converged`` requires the gap, relative to the master's RMS velocity over the
    run, to stay below ``threshold`` for the last ``tail_fraction`` of the horizon.
    """
    grid = master_init.grid
    if slave_init.grid != grid:
        raise ValueError("master and slave must share a grid")
    if horizon is None:
        horizon = 50 / params.mu if params.mu > 0 else 50 * eddy_turnover_time(master_init)
    proj = observer = layout = None
    if coupling.kind == "mode_projection":
        proj = ModeProjector(grid, coupling.m, spectrum)
    else:
        # Extra nodes never hurt: round N up to the nearest square tiling.
        layout = make_node_layout(grid.geometry, coupling.N, coupling.placement, coupling.node_seed)
        observer = NodeObserver(grid, layout)

    extra = None
    if coupling.mechanism == "nudging":
        gain = coupling.nudging_gain

        if proj is not None:
            def extra(c, t):
                out = np.zeros_like(c)
                out[1] = -gain * proj.apply(c[1] - c[0])
                return out
        else:
            def extra(c, t):
                out = np.zeros_like(c)
                w = observer.velocities(c[1] - c[0])
                out[1] = -gain * observer.interpolant_curl(w)
                return out

    stepper = Stepper(grid, replace(params, t_end=horizon), extra=extra)
    c = np.stack([master_init.coeffs, slave_init.coeffs]) * grid.dealias
    n_steps = int(round(horizon / params.dt))
    ts, gaps, obs, mnorm, msup, high, mgrad = [], [], [], [], [], [], []

    def record(t, c):
        d = c[0] - c[1]
        ts.append(t)
        gaps.append(_vel_norm(d, grid))
        if proj is not None:
            obs.append(_vel_norm(proj.apply(d), grid))
            high.append(float(grid.norm_sq(proj.complement(d))))
        else:
            obs.append(observer.eta(d))
        mnorm.append(_vel_norm(c[0], grid))
        msup.append(VorticityField(c[0], grid).sup(pad=2))
        mgrad.append(float(grid.norm_sq(np.sqrt(grid.ksq) * c[0])))

    record(0.0, c)
    for i in range(1, n_steps + 1):
        c = stepper.advance(c, (i - 1) * params.dt)
        if coupling.mechanism == "direct_replacement":
            c[1] = c[1] - proj.apply(c[1]) + proj.apply(c[0])
        if i % sample_every == 0 or i == n_steps:
            record(i * params.dt, c)

    t = np.array(ts)
    gap = np.array(gaps)
    mn = np.array(mnorm)
    ref = float(np.sqrt(np.mean(mn**2)))
    if ref == 0:
        ref = 1.0
    rel = gap / ref
    tail = t >= (1 - tail_fraction) * t[-1]
    converged = bool(rel[-1] < threshold and np.all(rel[tail] < threshold))
    return SyncResult(
        t, gap, np.array(obs), mn, np.array(msup), converged, _decay_rate(t, rel), float(rel[-1]), ref,
        coupling=coupling,
        lambda_next=proj.lambda_next if proj is not None else None,
        high_gap=np.array(high) if proj is not None else None,
        master_grad_sq=np.array(mgrad),
        nodes_used=layout.N if layout is not None else None,
        master=VorticityField(c[0], grid), slave=VorticityField(c[1], grid))


def eddy_turnover_time(field_: VorticityField) -> float:
    """L / U_rms for the given vorticity field."""
    g = field_.grid
    u_rms = field_.velocity_norm() / math.sqrt(g.geometry.area)
    if u_rms == 0:
        raise ValueError("a zero field has no eddy turnover time; pass a horizon")
    return g.geometry.L / u_rms


def _vel_norm(c, grid):
    return float(np.sqrt(grid.geometry.area * np.sum(grid.weights * grid.inv_ksq * np.abs(c) ** 2)))


class NoConvergenceError(RuntimeError):
    pass


def find_empirical_threshold(run_one, candidates, jobs: int = 1):
    """Smallest candidate count for which ``run_one(count)`` reports convergence.

    With ``jobs == 1`` this bisects over the sorted candidates, which assumes
    convergence is monotone in the count; the candidate just above the bisection
    result is run as a spot check, and a failure there triggers a linear scan.
    With ``jobs > 1`` every candidate runs in a thread pool and monotonicity is
    checked on the full table. Returns ``(count_star, {count: SyncResult},
    monotone)``.
    """
    cands = sorted(set(int(c) for c in candidates))
    if not cands:
        raise ValueError("empty search range")
    table = {}

    def test(c):
        if c not in table:
            table[c] = run_one(c)
        return table[c].converged

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for c, res in zip(cands, pool.map(run_one, cands)):
                table[c] = res
        flags = [table[c].converged for c in cands]
        if not any(flags):
            raise NoConvergenceError(f"no convergence in {cands[0]}..{cands[-1]}")
        monotone = all(not x or y for x, y in zip(flags, flags[1:]))
        return cands[flags.index(True)], table, monotone

    lo, hi = 0, len(cands) - 1
    if not test(cands[hi]):
        raise NoConvergenceError(f"no convergence even at {cands[hi]}")
    while lo < hi:
        mid = (lo + hi) // 2
        if test(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    star = cands[lo]
    monotone = True
    if lo + 1 < len(cands) and not test(cands[lo + 1]):
        monotone = False
        star = next(c for c in cands if test(c))
    return star, table, monotone


# --- Gronwall-lemma diagnostics -----------------------------------------------------


@dataclass
class GronwallCheck:
    gamma: float  # liminf proxy of windowed mean of alpha
    Gamma: float  # limsup proxy of windowed mean of alpha^-
    beta_mean: float  # windowed mean of beta^+ over the last window
    verdict: bool


def gronwall_check(t, alpha, beta, T: float, burn_in: float = 0.0, beta_tol: float = 1e-8) -> GronwallCheck:
    """Windowed averages of alpha, alpha^- and beta^+ over windows of length T."""
    t = np.asarray(t, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), t.shape)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), t.shape)
    sel = t >= burn_in
    t, alpha, beta = t[sel], alpha[sel], beta[sel]
    if len(t) < 2 or t[-1] - t[0] < 2 * T:
        raise ValueError("trace must span at least two windows of length T")
    means_a = _windows(t, alpha, T)
    means_m = _windows(t, np.maximum(-alpha, 0), T)
    means_b = _windows(t, np.maximum(beta, 0), T)
    gamma = float(means_a.min())
    Gamma = float(means_m.max())
    beta_last = float(means_b[-1])
    verdict = gamma > 0 and math.isfinite(Gamma) and beta_last <= beta_tol
    return GronwallCheck(gamma, Gamma, beta_last, verdict)


def _windows(t, y, T):
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))])
    out = []
    for i in range(len(t)):
        j = np.searchsorted(t, t[i] + T - 1e-12 * max(T, 1.0))
        if j >= len(t):
            break
        out.append((cum[j] - cum[i]) / (t[j] - t[i]))
    return np.array(out)


def damped_alpha(result: SyncResult, nu: float) -> np.ndarray:
    """alpha(t) = nu lambda_{m+1} - ||phi(t)||_inf^2 / (nu lambda_{m+1}) along the master."""
    lam = result.lambda_next
    return nu * lam - result.master_sup**2 / (nu * lam)


def periodic_alpha(grad_vort_sq, lambda_next: float, nu: float, c_J: float) -> np.ndarray:
    """alpha(t) = nu lambda_{m+1} - c_J^2 ||grad phi(t)||^2 / (nu lambda_{m+1})."""
    return nu * lambda_next - c_J**2 * np.asarray(grad_vort_sq) / (nu * lambda_next)


def empirical_beta(t, xi, alpha) -> np.ndarray:
    """beta(t) = xi' + alpha xi from a recorded xi trace (finite differences)."""
    return np.gradient(np.asarray(xi, dtype=float), t) + np.asarray(alpha) * np.asarray(xi)


# --- files ------------------------------------------------------------------------


def write_sync_csv(result: SyncResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "gap", "observed_gap", "master_norm", "master_vort_sup"])
        for row in zip(result.t, result.gap, result.observed_gap, result.master_norm, result.master_sup):
            w.writerow([repr(float(v)) for v in row])


def write_sync_summary(path, **summary) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))
