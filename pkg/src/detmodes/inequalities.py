"""Randomised checks of the functional inequalities with explicit constants.

Each case maps a batch of band-limited fields to ratios LHS / RHS with the
constant stripped, so a sound constant means ``ratio <= constant_bound``. The
evaluation grid has more than four times the band limit, so L4 norms and
trilinear forms are integrated exactly by the trapezoidal rule. Sup norms start
from the maximum on a 4x zero-padded grid and are then refined by Newton steps on
the exact trigonometric sum.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import tabulate_bound_constants
from .lattice import TorusGeometry
from .solver import SpectralGrid, VorticityField, pad_coeffs
from .sync import make_node_layout

CASES = ("agmon_scalar", "agmon_vector", "ladyzhenskaya_phi", "ladyzhenskaya_grad",
         "node_L2", "node_H1", "node_vorticity", "trilinear_b1", "trilinear_b2")
DEFAULT_SLACK = 1e-10


@dataclass(frozen=True)
class InequalityCase:
    name: str
    constant_bound: float
    gamma: float = 1.0

    def __post_init__(self):
        if self.name not in CASES:
            raise ValueError(f"unknown inequality {self.name!r}")


def default_case(name: str, gamma: float = 1.0, c_AT: float = 0.5) -> InequalityCase:
    """Case with the constant from ``constants`` for this aspect ratio."""
    t = tabulate_bound_constants(gamma, c_AT)
    bound = {
        "agmon_scalar": t["c_AT_gamma"], "agmon_vector": t["c_AT_gamma"],
        "ladyzhenskaya_phi": t["c_L"], "ladyzhenskaya_grad": t["c_L"],
        "trilinear_b1": t["c_b"], "trilinear_b2": t["c_2"],
    }.get(name, 1.0)
    return InequalityCase(name, bound, gamma)


@dataclass
class ViolationReport:
    case: InequalityCase
    samples: int
    max_ratio: float
    worst_seed: int
    violations: list = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        d = asdict(self)
        d["slack"] = 1 - self.max_ratio / self.case.constant_bound
        return d


# --- sampling ---------------------------------------------------------------------


def sample_grid(cutoff: int, geometry: TorusGeometry) -> SpectralGrid:
    """Grid on which fields with |k| <= cutoff (in units of 2 pi / L) are handled exactly."""
    k1max = int(math.floor(cutoff / geometry.gamma + 1e-9))
    n1 = 4 * k1max + 2
    n2 = 4 * cutoff + 2
    return SpectralGrid(geometry, n1 + n1 % 2, n2 + n2 % 2)


def band_mask(grid: SpectralGrid, cutoff: int) -> np.ndarray:
    unit = 2 * math.pi / grid.geometry.L
    mask = grid.ksq <= (cutoff * unit) ** 2 * (1 + 1e-12)
    mask &= grid.dealias
    return mask


def sample_field(cutoff: int, seed: int, geometry: TorusGeometry | None = None,
                 grid: SpectralGrid | None = None) -> VorticityField:
    """Zero-mean real field with |k| <= cutoff, random spectral slope and sparsity."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    geometry = geometry or TorusGeometry()
    grid = grid or sample_grid(cutoff, geometry)
    rng = np.random.default_rng(seed)
    mask = band_mask(grid, cutoff)
    slope = rng.uniform(0.0, 4.0)
    keep = rng.uniform(0.05, 1.0)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c *= (rng.uniform(size=grid.shape) < keep)
    k = np.sqrt(grid.ksq) * grid.geometry.L / (2 * math.pi)
    c = np.where(mask, c * np.where(k > 0, k, 1.0) ** -slope, 0)
    # Column k2 = 0 stores both k and -k: enforce conjugate symmetry there.
    col = c[:, 0]
    sym = 0.5 * (col + np.conj(np.roll(col[::-1], 1)))
    c[:, 0] = sym
    c[0, 0] = 0
    if not np.any(c):
        # Sparsity removed everything: fall back to one lowest mode.
        idx, _ = grid.index_of(0, 1)
        c[idx] = 1.0
    return VorticityField(c, grid)


# --- norms and point values -------------------------------------------------------


def _norm_sq(c, grid, power=0):
    """area * sum |k|^(2 power) |c|^2; negative powers skip the zero mode."""
    k = grid.ksq**power if power >= 0 else grid.inv_ksq ** (-power)
    return grid.geometry.area * np.sum(grid.weights * k * np.abs(c) ** 2, axis=(-2, -1))


def _phys(c, grid):
    return np.fft.irfft2(c, s=grid.physical_shape, norm="forward")


def _mean(x):
    return np.mean(x, axis=(-2, -1))


def _grad(c, grid):
    return 1j * grid.kx * c, 1j * grid.ky * c


def _velocity(c, grid):
    psi = -c * grid.inv_ksq
    return -1j * grid.ky * psi, 1j * grid.kx * psi


class _Trig:
    """Exact evaluation of stacked trigonometric sums and their derivatives at points."""

    def __init__(self, comps, grid):
        # comps: list of (B, n1, n2h) coefficient arrays for vector components
        nz = np.nonzero(np.any(np.stack([np.abs(c) for c in comps]) > 0, axis=(0, 1)))
        self.kx = np.broadcast_to(grid.kx, grid.shape)[nz]
        self.ky = np.broadcast_to(grid.ky, grid.shape)[nz]
        w = grid.weights[nz]
        self.a = np.stack([c[:, nz[0], nz[1]] * w for c in comps], axis=1)  # (B, C, M)

    def values(self, x):
        """x: (B, P, 2) -> (B, C, P)."""
        ph = np.exp(1j * (x[..., 0:1] * self.kx + x[..., 1:2] * self.ky))  # (B, P, M)
        return np.real(np.einsum("bcm,bpm->bcp", self.a, ph))

    def derivs(self, x):
        """Value, gradient and Hessian at one point per sample, x: (B, 2)."""
        ph = np.exp(1j * (x[:, 0:1] * self.kx + x[:, 1:2] * self.ky))  # (B, M)
        t = self.a * ph[:, None, :]
        f = np.real(t.sum(-1))
        g = np.stack([np.real((t * 1j * self.kx).sum(-1)), np.real((t * 1j * self.ky).sum(-1))], -1)
        hxx = -np.real((t * self.kx**2).sum(-1))
        hxy = -np.real((t * self.kx * self.ky).sum(-1))
        hyy = -np.real((t * self.ky**2).sum(-1))
        H = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
        return f, g, H


def sup_norm(comps, grid, pad: int = 4, newton_steps: int = 8) -> np.ndarray:
    """max_x |u(x)| for stacked fields with components ``comps``; shape (B,)."""
    n1, n2 = pad * grid.n1, pad * grid.n2
    mag = sum(np.fft.irfft2(pad_coeffs(c, grid, pad), s=(n1, n2), norm="forward") ** 2 for c in comps)
    flat = mag.reshape(mag.shape[0], -1)
    best = np.max(flat, axis=1)
    i = np.argmax(flat, axis=1)
    L1, L2 = grid.geometry.lengths
    x = np.stack([(i // n2) * L1 / n1, (i % n2) * L2 / n2], -1)
    trig = _Trig(comps, grid)
    for _ in range(newton_steps):
        f, g, H = trig.derivs(x)
        grad = np.einsum("bc,bcd->bd", f, g)
        hess = np.einsum("bcd,bce->bde", g, g) + np.einsum("bc,bcde->bde", f, H)
        det = hess[:, 0, 0] * hess[:, 1, 1] - hess[:, 0, 1] ** 2
        ok = np.abs(det) > 1e-300
        step = np.zeros_like(x)
        inv = np.stack([np.stack([hess[:, 1, 1], -hess[:, 0, 1]], -1),
                        np.stack([-hess[:, 1, 0], hess[:, 0, 0]], -1)], -2)
        step[ok] = np.einsum("bde,be->bd", inv[ok], grad[ok]) / det[ok, None]
        # Do not wander beyond a padded-grid cell.
        h = max(L1 / n1, L2 / n2)
        step = np.clip(step, -h, h)
        x = x - step
        val = np.sum(trig.values(x[:, None, :])[..., 0] ** 2, axis=1)
        best = np.maximum(best, val)
    return np.sqrt(best)


# --- ratios -----------------------------------------------------------------------


def case_ratios(case: InequalityCase, fields, grid: SpectralGrid, node_points=None, N=None):
    """Ratios for a batch. ``fields`` is a list of (B, n1, n2h) arrays; the number of
    independent fields used depends on the case (1 to 3)."""
    area = grid.geometry.area
    c = fields[0]
    name = case.name
    if name == "agmon_scalar":
        return sup_norm([c], grid) / (_norm_sq(c, grid) * _norm_sq(c, grid, 2)) ** 0.25
    if name == "agmon_vector":
        d = fields[1]
        num = sup_norm([c, d], grid)
        return num / ((_norm_sq(c, grid) + _norm_sq(d, grid)) * (_norm_sq(c, grid, 2) + _norm_sq(d, grid, 2))) ** 0.25
    if name == "ladyzhenskaya_phi":
        l4 = (area * _mean(_phys(c, grid) ** 4)) ** 0.25
        return l4 / (_norm_sq(c, grid) * _norm_sq(c, grid, 1)) ** 0.25
    if name == "ladyzhenskaya_grad":
        gx, gy = (_phys(v, grid) for v in _grad(c, grid))
        l4 = (area * _mean((gx**2 + gy**2) ** 2)) ** 0.25
        return l4 / (_norm_sq(c, grid, 1) * _norm_sq(c, grid, 2)) ** 0.25
    if name in ("trilinear_b1", "trilinear_b2"):
        vel = [_velocity(f, grid) for f in fields[:3]]
        if name == "trilinear_b1":
            v, u = vel[0], vel[1]
            b = _trilinear(v, v, u, grid)
            # ||grad u|| = ||rot u|| for divergence-free u
            den = np.sqrt(_norm_sq(fields[0], grid, -1) * _norm_sq(fields[0], grid)) * np.sqrt(_norm_sq(fields[1], grid))
            return np.abs(b) / den
        u, v, w = vel
        b = _trilinear(u, v, w, grid)
        nu_ = (_norm_sq(fields[0], grid, -1) * _norm_sq(fields[0], grid)) ** 0.25
        nw_ = (_norm_sq(fields[2], grid, -1) * _norm_sq(fields[2], grid)) ** 0.25
        return np.abs(b) / (nu_ * np.sqrt(_norm_sq(fields[1], grid)) * nw_)
    if name in ("node_L2", "node_H1", "node_vorticity"):
        if node_points is None or N is None:
            raise ValueError("node cases need node points")
        l2 = area / N
        if name == "node_vorticity":
            comps = list(_velocity(c, grid))
            lhs = _norm_sq(c, grid, -1)
            lap = _norm_sq(c, grid, 1)  # ||Lap u|| = ||grad rot u||
        else:
            comps = [c]
            lhs = _norm_sq(c, grid, 1 if name == "node_H1" else 0)
            lap = _norm_sq(c, grid, 2)
        vals = _Trig(comps, grid).values(node_points)
        eta2 = np.max(np.sum(vals**2, axis=1), axis=-1)
        if name == "node_H1":
            rhs = 2 * 68**-0.5 * N * eta2 + 68**0.5 * l2 * lap
        else:
            rhs = 4 * l2 * N * eta2 + 68 * l2**2 * lap
        return lhs / rhs
    raise ValueError(name)


def _trilinear(u, v, w, grid):
    """b(u, v, w) = int (u . grad) v . w for velocity coefficient pairs."""
    area = grid.geometry.area
    U = [_phys(x, grid) for x in u]
    W = [_phys(x, grid) for x in w]
    total = 0.0
    for j in range(2):
        dv = [_phys(d, grid) for d in _grad(v[j], grid)]
        total = total + (U[0] * dv[0] + U[1] * dv[1]) * W[j]
    return area * _mean(total)


FIELDS_PER_CASE = {"agmon_vector": 2, "trilinear_b1": 2, "trilinear_b2": 3}


def check_inequality(case: InequalityCase, *fields: VorticityField, nodes=None) -> float:
    """Ratio for single fields; ``nodes`` is a ``NodeLayout`` for the node cases."""
    grid = fields[0].grid
    need = FIELDS_PER_CASE.get(case.name, 1)
    if len(fields) != need:
        raise ValueError(f"{case.name} needs {need} field(s)")
    arrs = [f.coeffs[None] for f in fields]
    if any(_norm_sq(a, grid)[0] == 0 for a in arrs):
        raise ValueError("degenerate (zero) field")
    pts = N = None
    if nodes is not None:
        pts, N = nodes.points[None], nodes.N
    return float(case_ratios(case, arrs, grid, pts, N)[0])


# --- campaigns --------------------------------------------------------------------


DEFAULT_CUTOFFS = (1, 2, 3, 4, 6, 8, 12)


def run_campaign(cases, sample_count: int = 10_000, cutoffs=DEFAULT_CUTOFFS, base_seed: int = 0,
                 slack: float = DEFAULT_SLACK, batch: int = 250, node_tiles=(1, 2, 3, 4, 6, 8),
                 geometry: TorusGeometry | None = None) -> list:
    """Sample ``sample_count`` fields per case, cycling through the cutoff schedule.

    Sample i uses seed ``base_seed + i`` (and deterministic offsets for extra
    fields); the reported ``worst_seed`` reproduces the worst sample.
    """
    reports = []
    for case in cases:
        geom = geometry or TorusGeometry(gamma=case.gamma)
        if geom.gamma != case.gamma:
            raise ValueError("geometry and case disagree on gamma")
        reports.append(_campaign_one(case, geom, sample_count, cutoffs, base_seed, slack, batch, node_tiles))
    return reports


def _campaign_one(case, geom, n, cutoffs, base_seed, slack, batch, node_tiles):
    need = FIELDS_PER_CASE.get(case.name, 1)
    node_case = case.name.startswith("node")
    best, worst_seed, violations, skipped = -np.inf, None, [], 0
    seeds = base_seed + np.arange(n)
    # Group by (cutoff, node tiling) so each batch shares a grid.
    groups = {}
    for i, s in enumerate(seeds):
        key = (cutoffs[i % len(cutoffs)], node_tiles[(i // len(cutoffs)) % len(node_tiles)] if node_case else 0)
        groups.setdefault(key, []).append(int(s))
    for (cut, tiles), group in sorted(groups.items()):
        grid = sample_grid(cut, geom)
        for start in range(0, len(group), batch):
            chunk = group[start:start + batch]
            arrs = [np.stack([sample_field(cut, s + 1_000_003 * k, geom, grid).coeffs for s in chunk])
                    for k in range(need)]
            pts = N = None
            if node_case:
                pts, N = _node_points(geom, tiles, chunk)
            nonzero = np.all([_norm_sq(a, grid) > 0 for a in arrs], axis=0)
            skipped += int((~nonzero).sum())
            r = case_ratios(case, arrs, grid, pts, N)
            r = np.where(nonzero, r, -np.inf)
            j = int(np.argmax(r))
            if r[j] > best:
                best, worst_seed = float(r[j]), chunk[j]
            bad = np.nonzero(r > case.constant_bound * (1 + slack))[0]
            for b in bad:
                violations.append({"seed": chunk[b], "cutoff": cut, "ratio": float(r[b])})
    return ViolationReport(case, n, best, worst_seed, violations, skipped)


def _node_points(geom, tiles, chunk):
    """One layout per sample; the first third of each batch uses corner nodes."""
    n2 = tiles
    layout0 = make_node_layout(geom, int(round(n2 * n2 / geom.gamma)), "corner")
    pts = []
    for s in chunk:
        placement = "corner" if s % 3 == 0 else "random"
        pts.append(make_node_layout(geom, layout0.N, placement, seed=s).points)
    return np.stack(pts), layout0.N


def write_campaign_json(reports, path) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_json() for r in reports], fh, indent=2, sort_keys=True)
