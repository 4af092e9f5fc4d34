"""Vacuum-region analysis: indicator fields, measure continuity, inclusion,
and the conserved product integral.

The headline quantities: the measure of the zero set of a density over time
(it should evolve continuously, never jump), the inclusion of that zero set
in the zero set of any companion density transported by the same velocity,
and the time-invariance of the integral of the companion density over the
vacuum region.

The zero set is exact for indicator-built initial data evolved by the
characteristics oracle; a small positive threshold is the explicit, reported
surrogate for solver fields, which never reach exact zero from positive data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField, Trajectory, integrate, lp_norm
from .velocity import VelocityField
from .weak_forms import TestFunction, make_renorm, residual

__all__ = [
    "VacuumReport",
    "bdelta_limit_error",
    "conserved_product_deviation",
    "inclusion_defect",
    "product_residual",
    "vacuum_indicator",
    "vacuum_measure_series",
]


def vacuum_indicator(rho: ScalarField, threshold: float = 0.0) -> ScalarField:
    """Indicator of {rho <= threshold}; threshold 0 tests for exact zeros."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    vals = np.where(rho.values <= threshold, 1.0, 0.0)
    return ScalarField(rho.grid, vals, time=rho.time, nonneg=True,
                       valid=rho.valid)


@dataclass(frozen=True)
class MeasureSeries:
    """Vacuum measures per snapshot plus a continuity-modulus table.

    modulus[k] = (gap, max |V(t+gap) - V(t)|) over dyadic multiples of the
    snapshot spacing.  ``fitted_exponent`` is the log-log slope through the
    resolved gaps (None when every jump sits below the resolution floor, in
    which case the series is constant and trivially continuous).
    """

    times: np.ndarray
    measures: np.ndarray
    modulus: tuple
    fitted_exponent: float | None
    continuous: bool
    resolution_floor: float

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.times, self.measures]),
                   delimiter=",", header="time,measure", comments="")


def vacuum_measure_series(traj: Trajectory, threshold: float = 0.0,
                          floor_cells: float = 4.0) -> MeasureSeries:
    """Vacuum measure over time and its modulus of continuity.

    The modulus at gap g is the largest change of the measure over any window
    of that width.  Gaps whose modulus is below a few cell volumes are
    unresolved (the measure is quantized in cells) and excluded from the
    exponent fit; the continuity verdict requires the modulus to shrink with
    the gap at a positive fitted rate, or to sit entirely below the floor.
    """
    measures = np.array([integrate(vacuum_indicator(f, threshold))
                         for f in traj.fields])
    times = traj.times.copy()
    k = times.size
    modulus = []
    gap_cells = 1
    while gap_cells < k:
        jump = float(np.max(np.abs(measures[gap_cells:] - measures[:-gap_cells])))
        gap = float(times[gap_cells] - times[0])
        modulus.append((gap, jump))
        gap_cells *= 2
    floor = floor_cells * traj.grid.cell_volume
    resolved = [(g, j) for g, j in modulus if j > floor]
    if len(resolved) >= 2:
        gs = np.log([g for g, _ in resolved])
        js = np.log([j for _, j in resolved])
        exponent = float(np.polyfit(gs, js, 1)[0])
        continuous = exponent > 0
    else:
        exponent = None
        continuous = True  # nothing above the floor: constant series
    return MeasureSeries(times, measures, tuple(modulus), exponent,
                         continuous, floor)


def _check_compatible(a: Trajectory, b: Trajectory) -> None:
    if a.grid != b.grid:
        raise ValueError("trajectories live on different grids")
    if a.times.size != b.times.size or not np.allclose(a.times, b.times,
                                                       rtol=0, atol=1e-12):
        raise ValueError("trajectories have mismatched output times")


def inclusion_defect(rho_traj: Trajectory, r_traj: Trajectory,
                     threshold: float = 0.0) -> np.ndarray:
    """Measure of {rho(t) = 0} \\ {R(t) = 0} per snapshot.

    Zero everywhere is the verdict the inclusion property predicts whenever
    the reference density starts strictly positive.
    """
    _check_compatible(rho_traj, r_traj)
    out = np.empty(rho_traj.times.size)
    vol = rho_traj.grid.cell_volume
    for i, (f, g) in enumerate(zip(rho_traj.fields, r_traj.fields)):
        vac_rho = f.values <= threshold
        positive_r = g.values > threshold
        bad = vac_rho & positive_r
        if f.valid is not None:
            bad &= f.valid
        if g.valid is not None:
            bad &= g.valid
        out[i] = float(bad.sum()) * vol
    return out


@dataclass(frozen=True)
class ProductSeries:
    times: np.ndarray
    product_integral: np.ndarray        # int s_rho(t) R(t) dx
    product_integral_fixed0: np.ndarray  # diagnostic: int s_rho(0) R(t) dx
    max_deviation: float

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.product_integral,
                                self.product_integral_fixed0])
        np.savetxt(path, data, delimiter=",",
                   header="time,product_integral,product_integral_fixed0",
                   comments="")


def conserved_product_deviation(rho_traj: Trajectory, r_traj: Trajectory,
                                threshold: float = 0.0) -> ProductSeries:
    """Drift of the integral of R over the vacuum region of rho.

    The conserved quantity binds the time-t indicator; the fixed-time-0
    variant is tabulated alongside as a diagnostic.
    """
    _check_compatible(rho_traj, r_traj)
    vol = rho_traj.grid.cell_volume
    ind0 = vacuum_indicator(rho_traj.fields[0], threshold).values
    series = np.empty(rho_traj.times.size)
    series0 = np.empty_like(series)
    for i, (f, g) in enumerate(zip(rho_traj.fields, r_traj.fields)):
        ind = vacuum_indicator(f, threshold).values
        rv = g.values
        series[i] = math.fsum((ind * rv).ravel().tolist()) * vol
        series0[i] = math.fsum((ind0 * rv).ravel().tolist()) * vol
    dev = float(np.max(np.abs(series - series[0])))
    return ProductSeries(rho_traj.times.copy(), series, series0, dev)


def product_residual(rho_traj: Trajectory, s_traj: Trajectory,
                     u: VelocityField, phi: TestFunction) -> float:
    """Mass-equation residual of the pointwise product of the two solutions.

    The notion is chosen by the test function: space-compact functions score
    the distributional identity, others the up-to-the-boundary one.  Exponent
    hypotheses are the caller's business (the scenario gate checks them).
    """
    _check_compatible(rho_traj, s_traj)
    fields = []
    for f, g in zip(rho_traj.fields, s_traj.fields):
        valid = None
        if f.valid is not None or g.valid is not None:
            valid = np.ones(f.values.shape, dtype=bool)
            if f.valid is not None:
                valid &= f.valid
            if g.valid is not None:
                valid &= g.valid
        fields.append(ScalarField(f.grid, f.values * g.values, time=f.time,
                                  valid=valid))
    product = Trajectory(fields, metadata={"scheme": "product"})
    notion = "distributional" if phi.compact_in_space else "weak"
    return residual(CONTINUITY_PROBLEM, notion, product, u, phi=phi)


CONTINUITY_PROBLEM = "continuity"


def bdelta_limit_error(rho: ScalarField, delta_list, threshold: float = 0.0):
    """L^1 gap between the reciprocal-family surrogate and the indicator.

    Returns rows (delta, gap) for decreasing delta.  The gap is pointwise
    delta/(delta + rho) off the vacuum, so it decreases monotonically with
    delta and obeys gap <= delta/(delta + m) |Omega| whenever the nonzero
    values stay above m.
    """
    deltas = [float(d) for d in delta_list]
    if any(d <= 0 for d in deltas):
        raise ValueError("delta values must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta values must be strictly decreasing")
    ind = vacuum_indicator(rho, threshold)
    rows = []
    for d in deltas:
        bd = make_renorm("bdelta", {"delta": d})
        gap_field = ScalarField(rho.grid, np.abs(bd.b(rho.values) - ind.values),
                                time=rho.time, valid=rho.valid)
        rows.append((d, lp_norm(gap_field, 1)))
    return rows


@dataclass
class VacuumReport:
    """Aggregated vacuum diagnostics for one scenario, JSON-serializable."""

    threshold: float
    measure_series: MeasureSeries | None = None
    inclusion_times: np.ndarray | None = None
    inclusion_defects: np.ndarray | None = None
    product: ProductSeries | None = None
    bdelta_rows: list | None = None
    criteria: list = field(default_factory=list)

    def add_criterion(self, name: str, value: float, tolerance: float,
                      passed: bool | None = None) -> None:
        if passed is None:
            passed = value <= tolerance
        self.criteria.append({"name": name, "value": value,
                              "tolerance": tolerance, "pass": bool(passed)})

    @property
    def all_pass(self) -> bool:
        return all(c["pass"] for c in self.criteria)

    def to_dict(self) -> dict:
        out = {"threshold": self.threshold, "criteria": self.criteria}
        if self.measure_series is not None:
            ms = self.measure_series
            out["measure_series"] = {
                "times": ms.times.tolist(),
                "measures": ms.measures.tolist(),
                "modulus": [list(row) for row in ms.modulus],
                "fitted_exponent": ms.fitted_exponent,
                "continuous": ms.continuous,
                "resolution_floor": ms.resolution_floor,
            }
        if self.inclusion_defects is not None:
            out["inclusion"] = {
                "times": self.inclusion_times.tolist(),
                "defects": self.inclusion_defects.tolist(),
            }
        if self.product is not None:
            out["product"] = {
                "times": self.product.times.tolist(),
                "integral": self.product.product_integral.tolist(),
                "integral_fixed0": self.product.product_integral_fixed0.tolist(),
                "max_deviation": self.product.max_deviation,
            }
        if self.bdelta_rows is not None:
            out["bdelta"] = [list(r) for r in self.bdelta_rows]
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
