"""Spatial domains, uniform cell-centered grids, sampled fields and norms.

This is the substrate everything else consumes.  Grids are uniform and
cell-centered; fields are immutable snapshots (their value arrays are frozen
after construction), so analysis passes can share them freely across threads.
Quadrature is midpoint in space; spatial sums use compensated summation so
that linearity of the integral holds to near machine precision.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exponents import Exponent

__all__ = [
    "Domain",
    "Grid",
    "ScalarField",
    "Trajectory",
    "bochner_norm",
    "dist_boundary",
    "field_from_binary",
    "field_to_binary",
    "field_to_csv",
    "integrate",
    "interpolate",
    "lp_norm",
    "make_field",
    "read_binary",
]

PERIODIC = "periodic_box"
LIPSCHITZ = "lipschitz_box"


@dataclass(frozen=True)
class Domain:
    """An axis-aligned box, either periodic or with a Lipschitz boundary."""

    kind: str
    bounds: tuple

    def __post_init__(self):
        if self.kind not in (PERIODIC, LIPSCHITZ):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        for lo, hi in bounds:
            if not hi > lo:
                raise ValueError(f"degenerate axis interval [{lo}, {hi}]")

    @property
    def d(self) -> int:
        return len(self.bounds)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.bounds])

    @property
    def lo(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def periodic(self) -> bool:
        return self.kind == PERIODIC

    def distance_to_boundary(self, points: np.ndarray) -> np.ndarray:
        """Distance to the nearest face, vectorized over points (..., d)."""
        if self.periodic:
            raise ValueError("periodic domains have no boundary")
        points = np.asarray(points, dtype=float)
        dists = []
        for a, (lo, hi) in enumerate(self.bounds):
            x = points[..., a]
            dists.append(np.minimum(x - lo, hi - x))
        return np.min(np.stack(dists, axis=0), axis=0)

    def boundary_direction(self, points: np.ndarray) -> np.ndarray:
        """Unit gradient of the boundary distance (points inward).

        At ties between faces an arbitrary nearest face is chosen; the tie set
        has measure zero.
        """
        if self.periodic:
            raise ValueError("periodic domains have no boundary")
        points = np.asarray(points, dtype=float)
        per_face = []  # 2*d candidate distances
        for a, (lo, hi) in enumerate(self.bounds):
            per_face.append(points[..., a] - lo)
            per_face.append(hi - points[..., a])
        stack = np.stack(per_face, axis=-1)
        nearest = np.argmin(stack, axis=-1)
        grad = np.zeros_like(points)
        for a in range(self.d):
            grad[..., a] = np.where(nearest == 2 * a, 1.0, grad[..., a])
            grad[..., a] = np.where(nearest == 2 * a + 1, -1.0, grad[..., a])
        return grad


def dist_boundary(x, domain: Domain) -> float:
    """Distance from a single point to the boundary of a Lipschitz box."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != domain.d:
        raise ValueError("point dimension does not match the domain")
    return float(domain.distance_to_boundary(x[None, :])[0])


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid over a domain, with a time interval."""

    domain: Domain
    n: tuple
    t_final: float = 1.0

    def __post_init__(self):
        n = tuple(int(k) for k in self.n)
        object.__setattr__(self, "n", n)
        if len(n) != self.domain.d:
            raise ValueError("cell counts must match the domain dimension")
        if any(k < 1 for k in n):
            raise ValueError("need at least one cell per axis")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def h(self) -> np.ndarray:
        return self.domain.lengths / np.array(self.n, dtype=float)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.n))

    def centers(self, axis: int) -> np.ndarray:
        lo, _ = self.domain.bounds[axis]
        h = self.h[axis]
        return lo + (np.arange(self.n[axis]) + 0.5) * h

    def center_mesh(self) -> np.ndarray:
        """Cell-center coordinates, shape (*n, d)."""
        axes = [self.centers(a) for a in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def center_points(self) -> np.ndarray:
        """Flattened cell centers, shape (num_cells, d)."""
        return self.center_mesh().reshape(-1, self.d)

    def boundary_distance_field(self) -> np.ndarray:
        """Distance of each cell center to the boundary, shape n."""
        mesh = self.center_mesh()
        return self.domain.distance_to_boundary(mesh)


@dataclass(frozen=True)
class ScalarField:
    """A grid-sampled scalar snapshot at one time.

    ``valid`` optionally masks cells excluded from quadrature (used by the
    characteristics oracle for escaped trajectories).  Value arrays are frozen.
    """

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    nonneg: bool = False
    valid: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != tuple(self.grid.n):
            raise ValueError(
                f"value shape {values.shape} does not match grid cells {self.grid.n}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.valid is not None:
            valid = np.array(self.valid, dtype=bool)
            if valid.shape != values.shape:
                raise ValueError("validity mask shape does not match values")
            valid.flags.writeable = False
            object.__setattr__(self, "valid", valid)
        if self.nonneg:
            vals = values if self.valid is None else values[self.valid]
            if vals.size and float(vals.min()) < 0.0:
                raise ValueError(
                    f"field flagged nonnegative has min {vals.min()}"
                )

    def with_values(self, values, *, time=None, nonneg=None, valid="keep"):
        return ScalarField(
            self.grid,
            values,
            time=self.time if time is None else time,
            nonneg=self.nonneg if nonneg is None else nonneg,
            valid=self.valid if valid == "keep" else valid,
        )


def make_field(grid: Grid, values, time: float = 0.0, nonneg: bool = False,
               valid=None) -> ScalarField:
    values = np.broadcast_to(np.asarray(values, dtype=float), tuple(grid.n))
    return ScalarField(grid, values, time=time, nonneg=nonneg, valid=valid)


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature: sum of values times cell volume (compensated)."""
    vals = f.values if f.valid is None else f.values[f.valid]
    return math.fsum(vals.ravel().tolist()) * f.grid.cell_volume


def _exponent_float(r) -> float:
    return float(Exponent(r))


def lp_norm(f: ScalarField, r) -> float:
    """Discrete Lebesgue norm (integral form); max-abs for r = inf."""
    r = Exponent(r)
    vals = f.values if f.valid is None else f.values[f.valid]
    if vals.size == 0:
        return 0.0
    if r.is_inf:
        return float(np.max(np.abs(vals)))
    rf = float(r)
    powered = np.abs(vals, dtype=float) ** rf
    total = math.fsum(powered.ravel().tolist()) * f.grid.cell_volume
    return total ** (1.0 / rf)


def bochner_norm(traj: "Trajectory", p, r) -> float:
    """Time-space norm: L^p in time (trapezoid) of the spatial L^r norm."""
    p = Exponent(p)
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    g = np.array([lp_norm(f, r) for f in traj.fields])
    if p.is_inf:
        return float(np.max(g))
    if len(traj) == 1:
        return 0.0
    pf = float(p)
    total = float(np.trapezoid(g**pf, traj.times))
    return total ** (1.0 / pf)


class Trajectory:
    """A time-stamped sequence of fields on one grid.

    Times are strictly increasing; production trajectories start at t = 0
    (segment views built by analyses may relax that).
    """

    def __init__(self, fields: Sequence[ScalarField], metadata: dict | None = None,
                 require_zero_start: bool = True):
        fields = list(fields)
        if not fields:
            raise ValueError("a trajectory needs at least one snapshot")
        grid = fields[0].grid
        for f in fields:
            if f.grid is not grid and f.grid != grid:
                raise ValueError("all snapshots must share one grid")
        times = np.array([f.time for f in fields], dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if require_zero_start and times[0] != 0.0:
            raise ValueError(f"trajectory must start at t=0, got {times[0]}")
        self.fields = fields
        self.times = times
        self.grid = grid
        self.metadata = dict(metadata or {})

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(self.times[-1])):
            raise ValueError(f"no snapshot near t={t}; available {self.times}")
        return i

    def field_at(self, t: float) -> ScalarField:
        return self.fields[self.index_at(t)]

    def restricted(self, t_end: float) -> "Trajectory":
        i = self.index_at(t_end)
        return Trajectory(self.fields[: i + 1], metadata=self.metadata,
                          require_zero_start=self.times[0] == 0.0)

    def shifted(self, offset: float) -> "Trajectory":
        """View of the same fields with times moved by ``offset``."""
        fields = [replace(f, values=f.values, time=f.time + offset) for f in self.fields]
        return Trajectory(fields, metadata=self.metadata, require_zero_start=False)

    def window(self, t0: float, t1: float, tol: float = 1e-9) -> "Trajectory":
        scale = max(1.0, abs(self.times[-1]))
        keep = [f for f, t in zip(self.fields, self.times)
                if t0 - tol * scale <= t <= t1 + tol * scale]
        return Trajectory(keep, metadata=self.metadata, require_zero_start=False)


def interpolate(f: ScalarField, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of a cell-centered field at points (..., d).

    Periodic domains wrap; boxes clamp to the outermost cell centers
    (constant extension).  The result is clipped to the hull of the stencil
    corners, so interpolation can never overshoot the local value range.
    """
    grid = f.grid
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, grid.d)
    m = flat.shape[0]

    idx0 = np.empty((m, grid.d), dtype=np.int64)
    idx1 = np.empty((m, grid.d), dtype=np.int64)
    w = np.empty((m, grid.d), dtype=float)
    for a in range(grid.d):
        lo, _ = grid.domain.bounds[a]
        h = grid.h[a]
        n = grid.n[a]
        frac = (flat[:, a] - lo) / h - 0.5
        if grid.domain.periodic:
            frac = np.mod(frac, n)
            i0 = np.floor(frac).astype(np.int64)
            wa = frac - i0
            idx0[:, a] = np.mod(i0, n)
            idx1[:, a] = np.mod(i0 + 1, n)
        else:
            frac = np.clip(frac, 0.0, n - 1.0)
            i0 = np.clip(np.floor(frac).astype(np.int64), 0, max(n - 2, 0))
            wa = np.clip(frac - i0, 0.0, 1.0)
            idx0[:, a] = i0
            idx1[:, a] = np.minimum(i0 + 1, n - 1)
        # snap to the lattice so grid-aligned queries reproduce cell values
        # exactly (keeps indicator data free of eps-level contamination)
        wa = np.where(wa < 1e-12, 0.0, wa)
        wa = np.where(wa > 1.0 - 1e-12, 1.0, wa)
        w[:, a] = wa

    out = np.zeros(m, dtype=float)
    corner_lo = np.full(m, np.inf)
    corner_hi = np.full(m, -np.inf)
    for corner in range(1 << grid.d):
        weight = np.ones(m, dtype=float)
        sel = []
        for a in range(grid.d):
            if corner >> a & 1:
                weight *= w[:, a]
                sel.append(idx1[:, a])
            else:
                weight *= 1.0 - w[:, a]
                sel.append(idx0[:, a])
        vals = f.values[tuple(sel)]
        out += weight * vals
        corner_lo = np.minimum(corner_lo, vals)
        corner_hi = np.maximum(corner_hi, vals)
    out = np.clip(out, corner_lo, corner_hi)
    return out.reshape(pts.shape[:-1])


# ---------------------------------------------------------------------------
# snapshot export

def field_to_csv(f: ScalarField, path) -> None:
    """One row per cell: coordinates, then the value."""
    mesh = f.grid.center_points()
    vals = f.values.reshape(-1)
    header = ",".join(f"x{a}" for a in range(f.grid.d)) + ",value"
    data = np.column_stack([mesh, vals])
    np.savetxt(path, data, delimiter=",", header=header, comments="")


_MAGIC = b"VFLD"


def field_to_binary(f: ScalarField, path) -> None:
    """Compact dump: header (dims, n, h, time), float64 little-endian payload."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<i", f.grid.d))
        fh.write(struct.pack(f"<{f.grid.d}i", *f.grid.n))
        fh.write(struct.pack(f"<{f.grid.d}d", *f.grid.h))
        fh.write(struct.pack("<d", f.time))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_binary(path) -> dict:
    """Read a binary dump back into a plain dict."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a field dump")
        (d,) = struct.unpack("<i", fh.read(4))
        n = struct.unpack(f"<{d}i", fh.read(4 * d))
        h = struct.unpack(f"<{d}d", fh.read(8 * d))
        (time,) = struct.unpack("<d", fh.read(8))
        payload = np.frombuffer(fh.read(), dtype="<f8").reshape(n)
    return {"d": d, "n": n, "h": np.array(h), "time": time, "values": payload}


def field_from_binary(path, grid: Grid) -> ScalarField:
    raw = read_binary(path)
    if tuple(raw["n"]) != tuple(grid.n):
        raise ValueError("dump resolution does not match the grid")
    return ScalarField(grid, raw["values"], time=raw["time"])
