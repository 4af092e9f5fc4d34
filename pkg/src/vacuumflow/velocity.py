"""Catalog of analytic velocity fields with exact gradients and divergences.

Velocities are prescribed as closures, not grid samples: residual evaluators
and the characteristics oracle then see the exact gradient and divergence,
which removes one discretization error source.  All closures are pure and
vectorized over point arrays of shape (..., d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .exponents import Exponent, INF
from .fields import Grid, lp_norm, make_field

__all__ = [
    "VelocityField",
    "CATALOG_IDS",
    "make_velocity",
    "sobolev_norm_estimate",
    "trace_check",
]

CATALOG_IDS = (
    "uniform",
    "solid_rotation",
    "shear",
    "sine_zero_trace",
    "divfree_stream",
    "radial_power",
)


@dataclass(frozen=True)
class VelocityField:
    """A prescribed velocity with exact derivative evaluators.

    eval(t, pts) -> (..., d); grad(t, pts) -> (..., d, d) with entry [i, j] =
    d u_i / d x_j; div(t, pts) -> (...).  ``lipschitz_bound`` is a coarse sup
    bound on |grad u| used by the boundary-trace check.
    """

    id: str
    d: int
    eval: Callable
    grad: Callable
    div: Callable
    zero_trace: bool
    time_independent: bool
    declared_class: tuple
    lipschitz_bound: float
    params: dict = field(default_factory=dict)


def _constant_like(pts, value: float) -> np.ndarray:
    return np.full(pts.shape[:-1], value, dtype=float)


def _make_uniform(params: dict) -> VelocityField:
    v = np.asarray(params.get("v", (1.0, 0.0)), dtype=float)
    d = v.shape[0]

    def ev(t, pts):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(v, pts.shape).copy()

    def gr(t, pts):
        pts = np.asarray(pts, dtype=float)
        return np.zeros(pts.shape[:-1] + (d, d))

    def dv(t, pts):
        return _constant_like(np.asarray(pts, dtype=float), 0.0)

    return VelocityField("uniform", d, ev, gr, dv, zero_trace=False,
                         time_independent=True, declared_class=(INF, INF),
                         lipschitz_bound=0.0, params={"v": tuple(v)})


def _make_solid_rotation(params: dict) -> VelocityField:
    omega = float(params.get("omega", 1.0))
    center = np.asarray(params.get("center", (0.0, 0.0)), dtype=float)

    def ev(t, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty_like(pts)
        out[..., 0] = -omega * (pts[..., 1] - center[1])
        out[..., 1] = omega * (pts[..., 0] - center[0])
        return out

    def gr(t, pts):
        pts = np.asarray(pts, dtype=float)
        g = np.zeros(pts.shape[:-1] + (2, 2))
        g[..., 0, 1] = -omega
        g[..., 1, 0] = omega
        return g

    def dv(t, pts):
        return _constant_like(np.asarray(pts, dtype=float), 0.0)

    return VelocityField("solid_rotation", 2, ev, gr, dv, zero_trace=False,
                         time_independent=True, declared_class=(INF, INF),
                         lipschitz_bound=abs(omega),
                         params={"omega": omega, "center": tuple(center)})


def _make_shear(params: dict) -> VelocityField:
    rate = float(params.get("rate", 1.0))
    d = int(params.get("d", 2))
    if d < 2:
        raise ValueError("shear needs at least two dimensions")

    def ev(t, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros_like(pts)
        out[..., 0] = rate * pts[..., 1]
        return out

    def gr(t, pts):
        pts = np.asarray(pts, dtype=float)
        g = np.zeros(pts.shape[:-1] + (d, d))
        g[..., 0, 1] = rate
        return g

    def dv(t, pts):
        return _constant_like(np.asarray(pts, dtype=float), 0.0)

    return VelocityField("shear", d, ev, gr, dv, zero_trace=False,
                         time_independent=True, declared_class=(INF, INF),
                         lipschitz_bound=abs(rate), params={"rate": rate, "d": d})


def _make_sine_zero_trace(params: dict) -> VelocityField:
    """Componentwise A*sin(m*pi*x_a); vanishes on boxes with integer corners."""
    amp = float(params.get("amplitude", 1.0))
    m = int(params.get("wavenumber", 1))
    d = int(params.get("d", 1))
    k = m * math.pi

    def ev(t, pts):
        pts = np.asarray(pts, dtype=float)
        return amp * np.sin(k * pts)

    def gr(t, pts):
        pts = np.asarray(pts, dtype=float)
        g = np.zeros(pts.shape[:-1] + (d, d))
        diag = amp * k * np.cos(k * pts)
        for a in range(d):
            g[..., a, a] = diag[..., a]
        return g

    def dv(t, pts):
        pts = np.asarray(pts, dtype=float)
        return amp * k * np.sum(np.cos(k * pts), axis=-1)

    return VelocityField("sine_zero_trace", d, ev, gr, dv, zero_trace=True,
                         time_independent=True, declared_class=(INF, INF),
                         lipschitz_bound=abs(amp) * k,
                         params={"amplitude": amp, "wavenumber": m, "d": d})


def _make_divfree_stream(params: dict) -> VelocityField:
    """2D field from the stream function A*sin(pi (x-lo)/L) per axis.

    Exactly divergence free, tangential on the box (normal trace zero), so
    characteristics never leave the box.
    """
    amp = float(params.get("amplitude", 1.0))
    lo = np.asarray(params.get("lo", (0.0, 0.0)), dtype=float)
    length = np.asarray(params.get("length", (1.0, 1.0)), dtype=float)
    kx = math.pi / length[0]
    ky = math.pi / length[1]

    def _phases(pts):
        pts = np.asarray(pts, dtype=float)
        return kx * (pts[..., 0] - lo[0]), ky * (pts[..., 1] - lo[1])

    def ev(t, pts):
        ax, ay = _phases(pts)
        out = np.empty(np.asarray(pts).shape, dtype=float)
        out[..., 0] = amp * ky * np.sin(ax) * np.cos(ay)
        out[..., 1] = -amp * kx * np.cos(ax) * np.sin(ay)
        return out

    def gr(t, pts):
        ax, ay = _phases(pts)
        g = np.empty(np.asarray(pts).shape[:-1] + (2, 2))
        g[..., 0, 0] = amp * ky * kx * np.cos(ax) * np.cos(ay)
        g[..., 0, 1] = -amp * ky * ky * np.sin(ax) * np.sin(ay)
        g[..., 1, 0] = amp * kx * kx * np.sin(ax) * np.sin(ay)
        g[..., 1, 1] = -amp * kx * ky * np.cos(ax) * np.cos(ay)
        return g

    def dv(t, pts):
        return _constant_like(np.asarray(pts, dtype=float), 0.0)

    lip = abs(amp) * max(kx, ky) ** 2
    return VelocityField("divfree_stream", 2, ev, gr, dv, zero_trace=False,
                         time_independent=True, declared_class=(INF, INF),
                         lipschitz_bound=lip,
                         params={"amplitude": amp, "lo": tuple(lo),
                                 "length": tuple(length)})


def _make_radial_power(params: dict) -> VelocityField:
    """u(x) = x |x|^(a-1) near the origin, a in (0, 1).

    The divergence (d + a - 1) |x|^(a-1) is unbounded at the origin while the
    field stays in W^{1,q} for q (1-a) < d; this is the catalog entry beyond
    bounded-divergence theory.  Evaluators return 0 at the origin itself;
    gradients there are meaningless and callers are expected to stay away.
    """
    a = float(params.get("a", 0.5))
    if not 0.0 < a < 1.0:
        raise ValueError(f"radial_power requires a in (0, 1), got {a}")
    d = int(params.get("d", 2))
    center = np.asarray(params.get("center", (0.0,) * d), dtype=float)

    def _radius(pts):
        pts = np.asarray(pts, dtype=float)
        rel = pts - center
        r = np.sqrt(np.sum(rel * rel, axis=-1))
        return rel, r

    def ev(t, pts):
        rel, r = _radius(pts)
        safe = np.where(r > 0, r, 1.0)
        scale = np.where(r > 0, safe ** (a - 1.0), 0.0)
        return rel * scale[..., None]

    def gr(t, pts):
        rel, r = _radius(pts)
        safe = np.where(r > 0, r, 1.0)
        s1 = np.where(r > 0, safe ** (a - 1.0), 0.0)
        s3 = np.where(r > 0, safe ** (a - 3.0), 0.0)
        g = (a - 1.0) * s3[..., None, None] * rel[..., :, None] * rel[..., None, :]
        for i in range(d):
            g[..., i, i] += s1
        return g

    def dv(t, pts):
        _, r = _radius(pts)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, (d + a - 1.0) * safe ** (a - 1.0), 0.0)

    # representative Sobolev class: any q < d / (1 - a); declare 9/10 of that
    q_decl = Exponent(Fraction(9, 10) * Fraction(d) / (1 - Fraction(a)))
    return VelocityField("radial_power", d, ev, gr, dv, zero_trace=False,
                         time_independent=True, declared_class=(INF, q_decl),
                         lipschitz_bound=math.inf,
                         params={"a": a, "d": d, "center": tuple(center)})


_FACTORIES = {
    "uniform": _make_uniform,
    "solid_rotation": _make_solid_rotation,
    "shear": _make_shear,
    "sine_zero_trace": _make_sine_zero_trace,
    "divfree_stream": _make_divfree_stream,
    "radial_power": _make_radial_power,
}


def make_velocity(id: str, params: dict | None = None) -> VelocityField:
    """Build a catalog velocity. Unknown ids and invalid parameters raise."""
    if id not in _FACTORIES:
        raise ValueError(f"unknown velocity id {id!r}; catalog: {CATALOG_IDS}")
    return _FACTORIES[id](dict(params or {}))


def _time_samples(grid: Grid, u: VelocityField, nt: int = 33) -> np.ndarray:
    if u.time_independent or grid.t_final == 0:
        return np.array([0.0])
    return np.linspace(0.0, grid.t_final, nt)


def sobolev_norm_estimate(u: VelocityField, grid: Grid, p, q) -> float:
    """Discrete L^p-in-time norm of (|u|^q + |grad u|^q)^(1/q) on the grid."""
    p, q = Exponent(p), Exponent(q)
    pts = grid.center_mesh()
    vol = grid.cell_volume

    def spatial(t: float) -> float:
        vel = u.eval(t, pts)
        g = u.grad(t, pts)
        speed = np.sqrt(np.sum(vel * vel, axis=-1))
        gnorm = np.sqrt(np.sum(g * g, axis=(-2, -1)))
        if q.is_inf:
            return float(max(speed.max(initial=0.0), gnorm.max(initial=0.0)))
        qf = float(q)
        total = math.fsum((speed**qf + gnorm**qf).ravel().tolist()) * vol
        return total ** (1.0 / qf)

    times = _time_samples(grid, u)
    vals = np.array([spatial(t) for t in times])
    if p.is_inf:
        return float(vals.max())
    if u.time_independent:
        return float(vals[0]) * grid.t_final ** (1.0 / float(p))
    pf = float(p)
    return float(np.trapezoid(vals**pf, times)) ** (1.0 / pf)


def trace_check(u: VelocityField, grid: Grid) -> bool:
    """Whether |u| on the boundary-adjacent cell layer is <= C h.

    C comes from the field's Lipschitz metadata (a zero-trace Lipschitz field
    satisfies |u| <= L * dist <= L * h / 2 there, tested with headroom 10).
    Periodic domains have no boundary and return True.
    """
    if grid.domain.periodic:
        return True
    mask = np.zeros(tuple(grid.n), dtype=bool)
    for a in range(grid.d):
        sl = [slice(None)] * grid.d
        sl[a] = 0
        mask[tuple(sl)] = True
        sl[a] = grid.n[a] - 1
        mask[tuple(sl)] = True
    pts = grid.center_mesh()[mask]
    maxu = 0.0
    for t in _time_samples(grid, u, nt=3):
        vel = u.eval(t, pts)
        maxu = max(maxu, float(np.sqrt(np.sum(vel * vel, axis=-1)).max(initial=0.0)))
    bound = 10.0 * u.lipschitz_bound * float(np.max(grid.h))
    if not math.isfinite(bound):
        return True
    return maxu <= bound + 1e-12
