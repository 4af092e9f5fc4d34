"""Velocity catalog: derivative consistency, norms, boundary traces."""

import math

import numpy as np
import pytest

from vacuumflow.fields import Domain, Grid
from vacuumflow.velocity import make_velocity, sobolev_norm_estimate, trace_check

RNG = np.random.default_rng(7)


def box_1d(n=256, lo=-1.0, hi=1.0):
    return Grid(Domain("lipschitz_box", [(lo, hi)]), (n,), t_final=1.0)


def test_unknown_id_rejected():
    with pytest.raises(ValueError, match="nonsense"):
        make_velocity("nonsense", {})


def test_radial_power_parameter_gate():
    for bad in (0.0, 1.0, -0.3, 1.7):
        with pytest.raises(ValueError):
            make_velocity("radial_power", {"a": bad})
    make_velocity("radial_power", {"a": 0.5})


def test_uniform_field():
    u = make_velocity("uniform", {"v": [1.0, 0.0]})
    pts = RNG.uniform(-1, 1, (50, 2))
    assert np.array_equal(u.eval(0.0, pts), np.tile([1.0, 0.0], (50, 1)))
    assert np.all(u.grad(0.0, pts) == 0.0)
    assert np.all(u.div(0.0, pts) == 0.0)


def test_solid_rotation_divergence_free():
    u = make_velocity("solid_rotation", {})
    pts = RNG.uniform(-1, 1, (100, 2))
    vel = u.eval(0.0, pts)
    assert vel[:, 0] == pytest.approx(-pts[:, 1])
    assert vel[:, 1] == pytest.approx(pts[:, 0])
    assert np.all(u.div(0.0, pts) == 0.0)


def test_sine_zero_trace_closed_form():
    u = make_velocity("sine_zero_trace", {"d": 1})
    x = np.array([[-1.0], [0.0], [0.5], [1.0]])
    vel = u.eval(0.0, x)[:, 0]
    assert vel == pytest.approx([math.sin(-math.pi), 0.0, 1.0, math.sin(math.pi)], abs=1e-12)
    div = u.div(0.0, x)
    assert div == pytest.approx(math.pi * np.cos(math.pi * x[:, 0]), abs=1e-12)


@pytest.mark.parametrize("vid,params,dim,box", [
    ("uniform", {"v": [0.4, -0.2]}, 2, (-1, 1)),
    ("solid_rotation", {"omega": 0.7}, 2, (-1, 1)),
    ("shear", {"rate": 1.3}, 2, (-1, 1)),
    ("sine_zero_trace", {"d": 2}, 2, (-1, 1)),
    ("divfree_stream", {"lo": [0.0, 0.0], "length": [1.0, 1.0]}, 2, (0.05, 0.95)),
    ("radial_power", {"a": 0.5, "d": 2}, 2, (0.2, 0.9)),
])
def test_gradient_matches_finite_differences(vid, params, dim, box):
    u = make_velocity(vid, params)
    pts = RNG.uniform(box[0], box[1], (200, dim))
    g = u.grad(0.0, pts)
    h = 1e-4
    for j in range(dim):
        dp = pts.copy()
        dm = pts.copy()
        dp[:, j] += h
        dm[:, j] -= h
        fd = (u.eval(0.0, dp) - u.eval(0.0, dm)) / (2 * h)
        scale = np.abs(g[:, :, j]).max() + 1.0
        assert np.abs(g[:, :, j] - fd).max() / scale < 1e-6, (vid, j)


@pytest.mark.parametrize("vid,params,dim,box", [
    ("uniform", {"v": [0.4, -0.2]}, 2, (-1, 1)),
    ("solid_rotation", {}, 2, (-1, 1)),
    ("shear", {}, 2, (-1, 1)),
    ("sine_zero_trace", {"d": 2}, 2, (-1, 1)),
    ("divfree_stream", {}, 2, (0.01, 0.99)),
    ("radial_power", {"a": 0.3, "d": 2}, 2, (0.1, 1.0)),
])
def test_divergence_is_trace_of_gradient(vid, params, dim, box):
    u = make_velocity(vid, params)
    pts = RNG.uniform(box[0], box[1], (10_000, dim))
    div = u.div(0.0, pts)
    tr = np.trace(u.grad(0.0, pts), axis1=-2, axis2=-1)
    assert np.abs(div - tr).max() <= 1e-10


def test_radial_power_divergence_unbounded_near_origin():
    u = make_velocity("radial_power", {"a": 0.5, "d": 2})
    r = np.array([1e-1, 1e-3, 1e-6])
    pts = np.stack([r, np.zeros_like(r)], axis=-1)
    div = u.div(0.0, pts)
    assert np.all(np.diff(div) > 0)
    assert div[-1] > 1e2  # (d + a - 1) r^(a-1) = 1.5 / sqrt(r)


def test_sobolev_norm_uniform_and_zero():
    g = Grid(Domain("lipschitz_box", [(0.0, 1.0), (0.0, 1.0)]), (32, 32), t_final=1.0)
    u = make_velocity("uniform", {"v": [1.0, 0.0]})
    assert sobolev_norm_estimate(u, g, 2, 2) == pytest.approx(1.0, rel=1e-12)
    z = make_velocity("uniform", {"v": [0.0, 0.0]})
    assert sobolev_norm_estimate(z, g, 2, 2) == 0.0


def test_sobolev_norm_sine_closed_form():
    # int_{-1}^{1} sin^2(pi x) = 1 and int_{-1}^{1} pi^2 cos^2(pi x) = pi^2
    g = box_1d(256)
    u = make_velocity("sine_zero_trace", {"d": 1})
    assert sobolev_norm_estimate(u, g, 2, 2) == pytest.approx(
        math.sqrt(1 + math.pi**2), abs=1e-3)


def test_trace_check_catalog():
    g = box_1d(256)
    assert trace_check(make_velocity("sine_zero_trace", {"d": 1}), g)
    assert not trace_check(make_velocity("uniform", {"v": [1.0]}), g)
    assert trace_check(make_velocity("uniform", {"v": [0.0]}), g)
    torus = Grid(Domain("periodic_box", [(0.0, 1.0)]), (64,))
    assert trace_check(make_velocity("uniform", {"v": [1.0]}), torus)


def test_divfree_stream_normal_trace_vanishes():
    u = make_velocity("divfree_stream", {"lo": [0.0, 0.0], "length": [1.0, 1.0]})
    y = np.linspace(0, 1, 33)
    left = np.stack([np.zeros_like(y), y], axis=-1)
    right = np.stack([np.ones_like(y), y], axis=-1)
    assert np.abs(u.eval(0.0, left)[:, 0]).max() < 1e-12
    assert np.abs(u.eval(0.0, right)[:, 0]).max() < 1e-12
