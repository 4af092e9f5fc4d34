"""Exact-solution oracle from the flow of the velocity field.

Integrates dX/dt = u(t, X) together with the log-Jacobian dL/dt = div u(t, X)
by classical RK4, seeded at every cell center.  The resulting flow map gives
reference solutions for the mass-transport and pure-advection problems and the
exact measure of a transported vacuum region, all without solving a PDE.

Cells whose trajectory leaves a box domain are flagged as escaped and excluded
from the produced fields rather than extrapolated: the weak formulations this
oracle feeds assume no-flux data, and extrapolating would fake them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Grid, ScalarField, Trajectory, interpolate
from .velocity import VelocityField

__all__ = [
    "FlowMap",
    "compute_flow",
    "exact_continuity",
    "exact_transport",
    "exact_vacuum_measure",
    "oracle_trajectory",
]


@dataclass
class FlowMap:
    """Forward and backward characteristics sampled at cell centers.

    For each output time t: forward_pos[k] = X(t; x) and forward_logjac[k] =
    integral of div u along that forward path; backward_pos[k] = the time-0
    foot of the characteristic arriving at x at time t, with backward_logjac
    the divergence integral along it.  Escape masks are sticky.
    """

    grid: Grid
    times: np.ndarray
    forward_pos: np.ndarray      # (K, M, d)
    forward_logjac: np.ndarray   # (K, M)
    forward_escaped: np.ndarray  # (K, M) bool
    backward_pos: np.ndarray
    backward_logjac: np.ndarray
    backward_escaped: np.ndarray
    rk_steps: int
    order: int = 4

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(self.times[-1])):
            raise ValueError(f"flow map has no output near t={t}")
        return i


def _escape_update(grid: Grid, pos: np.ndarray, escaped: np.ndarray,
                   tol_frac: float = 1e-9) -> None:
    """Flag positions that left a box domain; clamp the rest in place."""
    if grid.domain.periodic:
        return
    for a, (lo, hi) in enumerate(grid.domain.bounds):
        tol = tol_frac * (hi - lo)
        x = pos[:, a]
        escaped |= (x < lo - tol) | (x > hi + tol)
        np.clip(x, lo, hi, out=x)


def _rk4_path(u: VelocityField, grid: Grid, pos: np.ndarray, logjac: np.ndarray,
              escaped: np.ndarray, t0: float, t1: float, nsteps: int) -> None:
    """Advance (pos, logjac) in place from t0 to t1 (either direction)."""
    if nsteps <= 0 or t1 == t0:
        return
    dt = (t1 - t0) / nsteps
    for k in range(nsteps):
        t = t0 + k * dt
        p1 = pos
        k1 = u.eval(t, p1)
        g1 = u.div(t, p1)
        p2 = pos + 0.5 * dt * k1
        k2 = u.eval(t + 0.5 * dt, p2)
        g2 = u.div(t + 0.5 * dt, p2)
        p3 = pos + 0.5 * dt * k2
        k3 = u.eval(t + 0.5 * dt, p3)
        g3 = u.div(t + 0.5 * dt, p3)
        p4 = pos + dt * k3
        k4 = u.eval(t + dt, p4)
        g4 = u.div(t + dt, p4)
        pos += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        logjac += dt / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4)
        _escape_update(grid, pos, escaped)


def compute_flow(u: VelocityField, grid: Grid, times, rk_steps: int = 256) -> FlowMap:
    """Integrate the characteristic system at all cell centers.

    ``rk_steps`` is the step count across the full interval [0, max(times)];
    each segment gets a proportional (rounded-up) share, so the effective step
    size never exceeds max(times)/rk_steps.
    """
    times = np.array(sorted(float(t) for t in times), dtype=float)
    if times.size == 0 or times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    if np.any(np.diff(times) <= 0):
        raise ValueError("output times must be distinct")
    t_max = times[-1]
    seeds = grid.center_points()
    m = seeds.shape[0]
    base_dt = t_max / rk_steps if t_max > 0 else 1.0

    k_out = times.size
    fpos = np.empty((k_out, m, grid.d))
    flog = np.empty((k_out, m))
    fesc = np.zeros((k_out, m), dtype=bool)

    pos = seeds.copy()
    logjac = np.zeros(m)
    escaped = np.zeros(m, dtype=bool)
    fpos[0], flog[0], fesc[0] = pos, logjac.copy(), escaped.copy()
    for i in range(1, k_out):
        nsteps = max(1, int(math.ceil((times[i] - times[i - 1]) / base_dt - 1e-12)))
        _rk4_path(u, grid, pos, logjac, escaped, times[i - 1], times[i], nsteps)
        fpos[i], flog[i], fesc[i] = pos.copy(), logjac.copy(), escaped.copy()

    bpos = np.empty_like(fpos)
    blog = np.empty_like(flog)
    besc = np.zeros_like(fesc)
    bpos[0], blog[0] = seeds, 0.0
    for i in range(1, k_out):
        pos = seeds.copy()
        acc = np.zeros(m)
        esc = np.zeros(m, dtype=bool)
        nsteps = max(1, int(math.ceil(times[i] / base_dt - 1e-12)))
        _rk4_path(u, grid, pos, acc, esc, times[i], 0.0, nsteps)
        bpos[i] = pos
        blog[i] = -acc  # acc integrated t -> 0; flip to get int_0^t div u
        besc[i] = esc

    return FlowMap(grid, times, fpos, flog, fesc, bpos, blog, besc, rk_steps)


def exact_continuity(rho0: ScalarField, flow: FlowMap, t: float) -> ScalarField:
    """Mass-transport reference: pull back rho0 and weight by exp(-L)."""
    i = flow.index_at(t)
    feet = flow.backward_pos[i].reshape(tuple(flow.grid.n) + (flow.grid.d,))
    vals = interpolate(rho0, feet) * np.exp(-flow.backward_logjac[i]).reshape(flow.grid.n)
    escaped = flow.backward_escaped[i].reshape(flow.grid.n)
    valid = None if not escaped.any() else ~escaped
    if valid is not None:
        vals = np.where(escaped, 0.0, vals)
    return ScalarField(flow.grid, vals, time=float(flow.times[i]),
                       nonneg=rho0.nonneg, valid=valid)


def exact_transport(s0: ScalarField, flow: FlowMap, t: float) -> ScalarField:
    """Pure-advection reference: composition with the inverse flow."""
    i = flow.index_at(t)
    feet = flow.backward_pos[i].reshape(tuple(flow.grid.n) + (flow.grid.d,))
    vals = interpolate(s0, feet)
    escaped = flow.backward_escaped[i].reshape(flow.grid.n)
    valid = None if not escaped.any() else ~escaped
    if valid is not None:
        vals = np.where(escaped, 0.0, vals)
    return ScalarField(flow.grid, vals, time=float(flow.times[i]),
                       nonneg=s0.nonneg, valid=valid)


def exact_vacuum_measure(rho0: ScalarField, flow: FlowMap, t: float) -> float:
    """Measure of the transported zero set: integral of exp(L) over {rho0 = 0}.

    Requires initial data with an exactly-zero region (indicator-built);
    escaped cells are excluded.
    """
    i = flow.index_at(t)
    zero = (rho0.values.reshape(-1) == 0.0) & ~flow.forward_escaped[i]
    if not zero.any():
        return 0.0
    weights = np.exp(flow.forward_logjac[i][zero])
    return math.fsum(weights.tolist()) * flow.grid.cell_volume


def oracle_trajectory(initial: ScalarField, flow: FlowMap,
                      problem: str = "continuity",
                      metadata: dict | None = None) -> Trajectory:
    """Bundle oracle snapshots at all flow output times into a trajectory."""
    if problem == "continuity":
        fields = [exact_continuity(initial, flow, t) for t in flow.times]
    elif problem == "transport":
        fields = [exact_transport(initial, flow, t) for t in flow.times]
    else:
        raise ValueError(f"unknown problem {problem!r}")
    meta = {"scheme": f"oracle_{problem}", "rk_steps": flow.rk_steps}
    meta.update(metadata or {})
    return Trajectory(fields, metadata=meta)
