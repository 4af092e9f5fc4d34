"""Test functions, renormalizing functions, and weak-form residuals.

Eight solution notions are scored for each of the two equations: the identity
may be tested against space-compact or up-to-the-boundary test functions,
over the full time interval or integrated up to every intermediate time, and
plainly or composed with a renormalizing nonlinearity.  The residual returned
is the signed value of left-minus-right of the defining identity; zero is the
continuum target.

Test functions are separable, phi(t, x) = psi(t) * eta(x), with analytic time
derivative and spatial gradient: only the PDE solution enters through grid
data, so the residual isolates solution error from test-function error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .exponents import Exponent
from .fields import Domain, Grid, ScalarField, Trajectory, lp_norm
from .velocity import VelocityField

__all__ = [
    "BoundaryCutoff",
    "CONTINUITY",
    "TRANSPORT",
    "HardyReport",
    "IncompatibleTestFunction",
    "NOTIONS",
    "RenormFunction",
    "TestFunction",
    "TimeProfile",
    "boundary_term_decay",
    "hardy_quotient",
    "make_renorm",
    "make_test_function",
    "make_time_profile",
    "residual",
]

CONTINUITY = "continuity"
TRANSPORT = "transport"

NOTIONS = (
    "distributional",
    "weak",
    "time_integrated_distributional",
    "time_integrated_weak",
    "renormalized_distributional",
    "renormalized_weak",
    "renormalized_time_integrated_distributional",
    "renormalized_time_integrated_weak",
)


class IncompatibleTestFunction(ValueError):
    pass


# ---------------------------------------------------------------------------
# time profiles

def _bump01(s2: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - s^2)) for s^2 < 1, 0 outside; peak value 1."""
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


@dataclass(frozen=True)
class TimeProfile:
    """Temporal part of a test function.

    Hat profiles ramp linearly over a width-h window at the interval ends;
    they are the device that turns full-interval identities into identities
    integrated up to a chosen time.
    """

    kind: str
    tau: float = 0.0
    h: float = 0.0
    center: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant_one", "smooth_bump", "hat_plus", "hat_minus"):
            raise ValueError(f"unknown time profile {self.kind!r}")
        if self.kind == "hat_plus" and not 0 < self.h <= self.tau:
            raise ValueError("hat_plus needs 0 < h <= tau")
        if self.kind == "hat_minus" and not 0 < 2 * self.h <= self.tau:
            raise ValueError("hat_minus needs 0 < 2h <= tau")
        if self.kind == "smooth_bump" and self.radius <= 0:
            raise ValueError("smooth_bump needs a positive radius")

    @property
    def piecewise_linear(self) -> bool:
        return self.kind in ("constant_one", "hat_plus", "hat_minus")

    def breakpoints(self) -> tuple:
        if self.kind == "hat_plus":
            return (0.0, self.h, self.tau, self.tau + self.h)
        if self.kind == "hat_minus":
            return (0.0, self.h, self.tau - self.h, self.tau)
        return ()

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "constant_one":
            return np.ones_like(t)
        if self.kind == "smooth_bump":
            return _bump01(((t - self.center) / self.radius) ** 2)
        h, tau = self.h, self.tau
        if self.kind == "hat_plus":
            up = np.clip(t / h, 0.0, 1.0)
            down = np.clip(1.0 - (t - tau) / h, 0.0, 1.0)
            return np.where(t <= tau, up, down) * (t <= tau + h)
        # hat_minus
        up = np.clip(t / h, 0.0, 1.0)
        down = np.clip(1.0 - (t - tau + h) / h, 0.0, 1.0)
        return np.where(t <= tau - h, up, down) * (t <= tau)

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "constant_one":
            return np.zeros_like(t)
        if self.kind == "smooth_bump":
            s = (t - self.center) / self.radius
            val = self.value(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(np.abs(s) < 1.0,
                             -2.0 * s / (1.0 - s**2) ** 2 / self.radius, 0.0)
            return val * np.nan_to_num(d)
        h, tau = self.h, self.tau
        if self.kind == "hat_plus":
            out = np.zeros_like(t)
            out = np.where((t >= 0) & (t < h), 1.0 / h, out)
            out = np.where((t >= tau) & (t < tau + h), -1.0 / h, out)
            return out
        out = np.zeros_like(t)
        out = np.where((t >= 0) & (t < h), 1.0 / h, out)
        out = np.where((t >= tau - h) & (t < tau), -1.0 / h, out)
        return out


def make_time_profile(kind: str, params: dict | None = None) -> TimeProfile:
    params = dict(params or {})
    return TimeProfile(kind=kind, **params)


# ---------------------------------------------------------------------------
# spatial parts / test functions

@dataclass(frozen=True)
class TestFunction:
    """Separable space-time test function psi(t) * eta(x)."""

    id: str
    d: int
    psi: TimeProfile
    eta: Callable
    grad_eta: Callable
    compact_in_space: bool


def _coerce_profile(spec) -> TimeProfile:
    if spec is None:
        return TimeProfile("constant_one")
    if isinstance(spec, TimeProfile):
        return spec
    if isinstance(spec, dict):
        spec = dict(spec)
        return make_time_profile(spec.pop("kind"), spec)
    raise TypeError(f"cannot build a time profile from {spec!r}")


def make_test_function(kind: str, params: dict | None = None) -> TestFunction:
    """Factory for the spatial kinds: "constant", "bump", "cosine".

    "bump": eta(x) = exp(-1/(1 - |x-c|^2/r^2)) inside the ball B(c, r), zero
    outside; compact in space.  If params carry a ``domain``, the ball must
    fit strictly inside it.  "constant" and "cosine" do not vanish at the
    boundary (the up-to-the-boundary test class).
    """
    params = dict(params or {})
    psi = _coerce_profile(params.pop("time", None))

    if kind == "constant":
        d = int(params.pop("d", 1))
        value = float(params.pop("value", 1.0))

        def eta(pts):
            return np.full(np.asarray(pts).shape[:-1], value)

        def grad_eta(pts):
            return np.zeros(np.asarray(pts).shape)

        return TestFunction(f"constant[{value}]", d, psi, eta, grad_eta,
                            compact_in_space=False)

    if kind == "bump":
        center = np.asarray(params.pop("center"), dtype=float)
        radius = float(params.pop("radius"))
        d = center.shape[0]
        domain = params.pop("domain", None)
        if radius <= 0:
            raise ValueError("bump radius must be positive")
        if domain is not None:
            for a, (lo, hi) in enumerate(domain.bounds):
                if center[a] - radius < lo or center[a] + radius > hi:
                    raise ValueError(
                        f"bump B({tuple(center)}, {radius}) overflows the domain"
                    )

        def eta(pts):
            pts = np.asarray(pts, dtype=float)
            rel = (pts - center) / radius
            s2 = np.sum(rel * rel, axis=-1)
            out = np.zeros_like(s2)
            inside = s2 < 1.0
            out[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
            return out

        def grad_eta(pts):
            pts = np.asarray(pts, dtype=float)
            rel = pts - center
            s2 = np.sum(rel * rel, axis=-1) / radius**2
            val = np.zeros_like(s2)
            inside = s2 < 1.0
            val[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
            coef = np.zeros_like(s2)
            coef[inside] = -2.0 / (radius**2 * (1.0 - s2[inside]) ** 2)
            return (val * coef)[..., None] * rel

        return TestFunction(f"bump[c={tuple(center)},r={radius}]", d, psi,
                            eta, grad_eta, compact_in_space=True)

    if kind == "cosine":
        lo = np.asarray(params.pop("lo"), dtype=float)
        length = np.asarray(params.pop("length"), dtype=float)
        m = int(params.pop("m", 1))
        d = lo.shape[0]
        ks = m * math.pi / length

        def eta(pts):
            pts = np.asarray(pts, dtype=float)
            return np.prod(np.cos(ks * (pts - lo)), axis=-1)

        def grad_eta(pts):
            pts = np.asarray(pts, dtype=float)
            phases = ks * (pts - lo)
            cos = np.cos(phases)
            out = np.empty_like(pts)
            for a in range(d):
                term = -ks[a] * np.sin(phases[..., a])
                others = np.prod(np.delete(cos, a, axis=-1), axis=-1)
                out[..., a] = term * others
            return out

        return TestFunction(f"cosine[m={m}]", d, psi, eta, grad_eta,
                            compact_in_space=False)

    raise ValueError(f"unknown test function kind {kind!r}")


# ---------------------------------------------------------------------------
# renormalizing functions

@dataclass(frozen=True)
class RenormFunction:
    """A nonlinearity b with derivative and declared growth metadata.

    growth_b / growth_zb_minus_b are the declared growth exponents of b(z)
    and z b'(z) - b(z) (0 = bounded); bprime_compact marks b' having compact
    support, the admission ticket to the basic renormalizer class.
    """

    kind: str
    label: str
    b: Callable
    bprime: Callable
    growth_b: Fraction
    growth_zb_minus_b: Fraction
    bprime_compact: bool
    params: dict = field(default_factory=dict)

    def extra_term(self, z: np.ndarray) -> np.ndarray:
        """z b'(z) - b(z), the zeroth-order coefficient of the companion
        identity for the mass equation."""
        return z * self.bprime(z) - self.b(z)


def make_renorm(kind: str, params: dict | None = None) -> RenormFunction:
    """Factory for renormalizers: "trunc", "bdelta", "power", "generic".

    trunc(k): identity below k, constant 2k above 3k, C^1 monotone cubic in
    between (the identity branch returns its argument bitwise, so the
    large-k renormalized residual collapses onto the plain one exactly).
    bdelta(delta): delta/(delta + z), the decreasing surrogate of the vacuum
    indicator; b' is not compactly supported, but z b'(z) - b(z) stays
    bounded by 1 uniformly in delta.
    power(theta): z^theta with theta >= 1.
    """
    params = dict(params or {})

    if kind == "trunc":
        k = float(params.pop("k"))
        if not k > 1:
            raise ValueError(f"trunc needs k > 1, got {k}")

        def b(z):
            z = np.asarray(z, dtype=float)
            t = np.clip((z / k - 1.0) / 2.0, 0.0, 1.0)
            middle = k * (1.0 + 2.0 * t - t * t)
            return np.where(z <= k, z, np.where(z >= 3.0 * k, 2.0 * k, middle))

        def bprime(z):
            z = np.asarray(z, dtype=float)
            t = np.clip((z / k - 1.0) / 2.0, 0.0, 1.0)
            return np.where(z <= k, 1.0, np.where(z >= 3.0 * k, 0.0, 1.0 - t))

        return RenormFunction("trunc", f"T_k[k={k:g}]", b, bprime,
                              Fraction(0), Fraction(0), True, {"k": k})

    if kind == "bdelta":
        delta = float(params.pop("delta"))
        if not delta > 0:
            raise ValueError(f"bdelta needs delta > 0, got {delta}")

        def b(z):
            return delta / (delta + np.asarray(z, dtype=float))

        def bprime(z):
            return -delta / (delta + np.asarray(z, dtype=float)) ** 2

        return RenormFunction("bdelta", f"b_delta[{delta:g}]", b, bprime,
                              Fraction(0), Fraction(0), False, {"delta": delta})

    if kind == "power":
        theta = params.pop("theta")
        theta_f = Fraction(theta) if not isinstance(theta, float) else Fraction(theta)
        tf = float(theta_f)
        if tf < 1:
            raise ValueError("power needs theta >= 1 for a C^1 nonlinearity")

        def b(z):
            return np.asarray(z, dtype=float) ** tf

        def bprime(z):
            return tf * np.asarray(z, dtype=float) ** (tf - 1.0)

        growth_extra = Fraction(0) if theta_f == 1 else theta_f
        return RenormFunction("power", f"power[{tf:g}]", b, bprime,
                              theta_f, growth_extra, False, {"theta": tf})

    if kind == "generic":
        return RenormFunction(
            "generic", params.pop("label", "generic"),
            params.pop("b"), params.pop("bprime"),
            Fraction(params.pop("growth_b", 0)),
            Fraction(params.pop("growth_zb_minus_b", 0)),
            bool(params.pop("bprime_compact", False)), params)

    raise ValueError(f"unknown renormalizer kind {kind!r}")


# ---------------------------------------------------------------------------
# residual evaluator

def _parse_notion(notion: str):
    if notion not in NOTIONS:
        raise ValueError(f"unknown notion {notion!r}; expected one of {NOTIONS}")
    renormalized = notion.startswith("renormalized")
    time_integrated = "time_integrated" in notion
    weak = notion.endswith("weak")
    return renormalized, time_integrated, weak


def _spatial_integral(values: np.ndarray, valid, cell_volume: float) -> float:
    if valid is not None:
        values = np.where(valid, values, 0.0)
    return math.fsum(values.ravel().tolist()) * cell_volume


def _integral_against_value(times, bvals, psi: TimeProfile) -> float:
    return float(np.trapezoid(bvals * psi.value(times), times))


def _integral_against_derivative(times, avals, psi: TimeProfile) -> float:
    """Integral of A(t) psi'(t) dt with A piecewise linear between snapshots.

    For piecewise-linear profiles the slope on each smooth piece is computed
    from the profile's values (exact, convention-free at the kinks); smooth
    profiles use pointwise derivatives under the trapezoid rule.
    """
    t0, t1 = float(times[0]), float(times[-1])
    if not psi.piecewise_linear:
        return float(np.trapezoid(avals * psi.derivative(times), times))
    edges = [t0] + [b for b in psi.breakpoints() if t0 < b < t1] + [t1]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        slope = (float(psi.value(b)) - float(psi.value(a))) / (b - a)
        if slope == 0.0:
            continue
        inner = times[(times > a) & (times < b)]
        ts = np.concatenate([[a], inner, [b]])
        avs = np.interp(ts, times, avals)
        total += slope * float(np.trapezoid(avs, ts))
    return total


def residual(problem: str, notion: str, traj: Trajectory, u: VelocityField,
             b: RenormFunction | None = None, phi: TestFunction | None = None,
             interval=None) -> float:
    """Signed left-minus-right of the defining identity of one notion.

    Midpoint quadrature in space, trapezoid in time between stored snapshots;
    the time derivative and gradient of the test function, and the velocity
    and its divergence, are analytic.  Incompatible notion/test-function
    pairings raise IncompatibleTestFunction.
    """
    if problem not in (CONTINUITY, TRANSPORT):
        raise ValueError(f"unknown problem {problem!r}")
    if phi is None:
        raise ValueError("a test function is required")
    renormalized, time_integrated, weak = _parse_notion(notion)
    if renormalized and b is None:
        raise ValueError(f"notion {notion!r} needs a renormalizing function")

    if not weak and not phi.compact_in_space:
        raise IncompatibleTestFunction(
            f"notion {notion!r} tests against space-compact functions; "
            f"{phi.id} does not vanish near the boundary"
        )
    t_end_traj = float(traj.times[-1])
    if not time_integrated:
        psi0 = float(phi.psi.value(0.0))
        psiT = float(phi.psi.value(t_end_traj))
        if psi0 != 0.0 or psiT != 0.0:
            raise IncompatibleTestFunction(
                f"notion {notion!r} integrates over the open time interval; "
                f"the profile must vanish at t=0 and t={t_end_traj}"
            )
        tau = t_end_traj
    else:
        tau = t_end_traj if interval is None else float(interval[1])
        if interval is not None and float(interval[0]) != 0.0:
            raise ValueError("identities are integrated from time 0")

    idx = traj.index_at(tau)
    times = traj.times[: idx + 1]
    grid = traj.grid
    vol = grid.cell_volume
    pts = grid.center_mesh()
    eta = phi.eta(pts)
    geta = phi.grad_eta(pts)

    vel_cache = divu_cache = None
    a_vals = np.empty(times.size)
    b_vals = np.empty(times.size)
    for i, t in enumerate(times):
        f = traj.fields[i]
        z = f.values
        if u.time_independent:
            if vel_cache is None:
                vel_cache = u.eval(0.0, pts)
                divu_cache = u.div(0.0, pts)
            vel, divu = vel_cache, divu_cache
        else:
            vel = u.eval(t, pts)
            divu = u.div(t, pts)

        g = b.b(z) if renormalized else z
        adv = g * np.einsum("...a,...a->...", vel, geta)
        if problem == CONTINUITY:
            extra = -(b.extra_term(z) * divu * eta) if renormalized else 0.0
        else:
            extra = g * divu * eta
        integrand = adv + extra if np.ndim(extra) else adv
        a_vals[i] = _spatial_integral(g * eta, f.valid, vol)
        b_vals[i] = _spatial_integral(integrand, f.valid, vol)

    rhs = (_integral_against_derivative(times, a_vals, phi.psi)
           + _integral_against_value(times, b_vals, phi.psi))
    if not time_integrated:
        return rhs
    boundary = (a_vals[-1] * float(phi.psi.value(times[-1]))
                - a_vals[0] * float(phi.psi.value(0.0)))
    return boundary - rhs


# ---------------------------------------------------------------------------
# boundary machinery

def _psi_exp(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _psi_exp_prime(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def _smoothstep(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    num = _psi_exp(t)
    den = num + _psi_exp(1.0 - t)
    return num / np.where(den > 0, den, 1.0)


def _smoothstep_prime(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    p, q = _psi_exp(t), _psi_exp(1.0 - t)
    dp, dq = _psi_exp_prime(t), _psi_exp_prime(1.0 - t)
    den = (p + q) ** 2
    return np.where(den > 0, (dp * q + p * dq) / np.where(den > 0, den, 1.0), 0.0)


# sup |chi'| for the smoothstep-based cutoff profile (sampled once, rounded up)
CHI_PRIME_BOUND = 8.1


@dataclass(frozen=True)
class BoundaryCutoff:
    """The cutoff vanishing on a 1/(4n) collar and equal to one past 1/(2n).

    xi_n(x) = chi(n * dist(x, boundary)) with chi a smoothstep that is 0 on
    [0, 1/4] and 1 on [1/2, inf); |grad xi_n| <= CHI_PRIME_BOUND * n.  The
    companion strip A_n = {dist <= 1/(2n)} carries all remainder terms.
    """

    n: int
    domain: Domain

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.domain.periodic:
            raise ValueError("boundary cutoffs need a boundary")

    @staticmethod
    def chi(s) -> np.ndarray:
        return _smoothstep(4.0 * np.asarray(s, dtype=float) - 1.0)

    @staticmethod
    def chi_prime(s) -> np.ndarray:
        return 4.0 * _smoothstep_prime(4.0 * np.asarray(s, dtype=float) - 1.0)

    def xi(self, pts) -> np.ndarray:
        return self.chi(self.n * self.domain.distance_to_boundary(pts))

    def grad_xi(self, pts) -> np.ndarray:
        dist = self.domain.distance_to_boundary(pts)
        coef = self.n * self.chi_prime(self.n * dist)
        return coef[..., None] * self.domain.boundary_direction(pts)

    @property
    def strip_width(self) -> float:
        return 1.0 / (2.0 * self.n)

    def strip_mask(self, pts) -> np.ndarray:
        return self.domain.distance_to_boundary(pts) <= self.strip_width


@dataclass(frozen=True)
class HardyReport:
    quotient_norm: float
    gradient_norm: float
    ratio: float
    divergent: bool
    growth: float


def _hardy_norms(u: VelocityField, domain: Domain, q, n: int):
    grid = Grid(domain, (n,) * domain.d, t_final=0.0)
    pts = grid.center_mesh()
    dist = domain.distance_to_boundary(pts)
    vel = u.eval(0.0, pts)
    speed = np.sqrt(np.sum(vel * vel, axis=-1))
    grad = u.grad(0.0, pts)
    gnorm = np.sqrt(np.sum(grad * grad, axis=(-2, -1)))
    quot = ScalarField(grid, speed / dist)
    gfield = ScalarField(grid, gnorm)
    return lp_norm(quot, q), lp_norm(gfield, q)


def hardy_quotient(u: VelocityField, grid: Grid, q, n: int) -> HardyReport:
    """Boundary-weighted norm of u against the norm of its gradient.

    For a zero-trace field the quotient |u|/dist is controlled by |grad u|
    and the ratio stays bounded under refinement; fields that do not vanish
    at the boundary make the quotient grow with resolution and are flagged
    divergent.  The flag comes from an internal resolution-doubling probe:
    measured growth above a quarter of the divergent rate trips it.
    """
    q = Exponent(q)
    if grid.domain.periodic:
        raise ValueError("the Hardy quotient needs a boundary")
    n = int(n)
    quot, gnorm = _hardy_norms(u, grid.domain, q, n)
    quot_half, _ = _hardy_norms(u, grid.domain, q, max(n // 2, 2))
    if quot == 0.0:
        return HardyReport(0.0, gnorm, 0.0, False, 0.0)
    growth = math.log2(quot / quot_half) if quot_half > 0 else math.inf
    divergent_rate = 1.0 - q.reciprocal  # quotient ~ h^-(1-1/q) when trace != 0
    threshold = max(0.02, 0.25 * float(divergent_rate))
    divergent = growth > threshold
    ratio = quot / gnorm if gnorm > 0 else math.inf
    return HardyReport(quot, gnorm, ratio, divergent, growth)


def boundary_term_decay(traj: Trajectory, u: VelocityField, phi: TestFunction,
                        n_list, refine: int = 4):
    """The four boundary-strip remainders of the cutoff identity.

    For each n: the two endpoint terms |int rho psi eta (1 - xi_n)| at the
    final and initial times, the time term with d/dt psi, and the advective
    term with grad(eta (1 - xi_n)).  All integrands are taken in absolute
    value (the remainders are magnitude bounds) and all must decay in n.
    Analytic factors are integrated on a refine^d sub-cell quadrature so the
    narrow cutoff ramp is resolved even when the strip is a few cells wide.

    Returns a list of dicts with keys n, endpoint_final, endpoint_initial,
    time_term, advective_term.
    """
    grid = traj.grid
    domain = grid.domain
    if domain.periodic:
        raise ValueError("boundary terms need a boundary")
    refine = max(1, int(refine))

    # sub-cell quadrature points and parent-cell indices
    sub_axes = []
    for a in range(grid.d):
        lo, _ = domain.bounds[a]
        hf = grid.h[a] / refine
        sub_axes.append(lo + (np.arange(grid.n[a] * refine) + 0.5) * hf)
    mesh = np.meshgrid(*sub_axes, indexing="ij")
    fine_pts = np.stack(mesh, axis=-1)
    fine_vol = grid.cell_volume / refine**grid.d
    parent = tuple(
        (np.arange(grid.n[a] * refine) // refine) for a in range(grid.d)
    )
    parent_ix = np.meshgrid(*parent, indexing="ij")

    eta = phi.eta(fine_pts)
    geta = phi.grad_eta(fine_pts)
    psi = phi.psi
    times = traj.times
    t_end = float(times[-1])

    rows = []
    for n in n_list:
        cut = BoundaryCutoff(int(n), domain)
        one_minus_xi = 1.0 - cut.xi(fine_pts)
        grad_xi = cut.grad_xi(fine_pts)
        # grad of eta (1 - xi_n)
        gprod = geta * one_minus_xi[..., None] - eta[..., None] * grad_xi

        def strip_integral(rho_vals, weight) -> float:
            w = np.abs(weight)
            if not np.any(w > 0):
                return 0.0
            rho_fine = rho_vals[tuple(parent_ix)]
            return float(np.sum(np.abs(rho_fine) * w)) * fine_vol

        rho_T = traj.fields[-1].values
        rho_0 = traj.fields[0].values
        t1 = strip_integral(rho_T, float(psi.value(t_end)) * eta * one_minus_xi)
        t2 = strip_integral(rho_0, float(psi.value(0.0)) * eta * one_minus_xi)

        t3_series = np.empty(times.size)
        t4_series = np.empty(times.size)
        for i, t in enumerate(times):
            rho = traj.fields[i].values
            dpsi = float(psi.derivative(np.array(t)))
            t3_series[i] = strip_integral(rho, dpsi * eta * one_minus_xi) if dpsi else 0.0
            vel = u.eval(t, fine_pts)
            advect = np.einsum("...a,...a->...", vel, gprod)
            t4_series[i] = strip_integral(rho, float(psi.value(t)) * advect)
        t3 = float(np.trapezoid(t3_series, times))
        t4 = float(np.trapezoid(t4_series, times))
        rows.append({
            "n": int(n),
            "endpoint_final": t1,
            "endpoint_initial": t2,
            "time_term": t3,
            "advective_term": t4,
        })
    return rows
