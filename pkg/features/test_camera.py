#
# Copyright (c) 2026 The mof authors.
#
# This file is part of mof, the Markovian obstacle flight toolkit.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#
# pylint: disable=missing-docstring,redefined-outer-name
import io
import math

import numpy as np
import pytest
from pytest_bdd import given, parsers, scenarios, then, when

from mof import (BehindCamera, InvalidParameter, ProjectionSingularity,
                 UndefinedTau)
from mof.camera import (ApproachScenario, FeaturePoint, cluster_tau_spread,
                        image_size, image_size_rate, image_size_series,
                        project, speed_trend, tau_analytic, tau_from_track,
                        tau_series, time_to_contact, write_tau_csv,
                        write_track_csv)
from mof.control import VehicleState

scenarios('camera.feature')


@given(
    parsers.parse('an object of size {size:g} approached from {x0:g} at '
                  'speed {v:g}'))
def given_approach(world, size, x0, v):
    world.scn = ApproachScenario(size, x0, v)


@then(parsers.parse('its image size at {x:g} is {d_img:g}'))
def check_image_size(world, x, d_img):
    assert image_size(world.scn, x) == pytest.approx(d_img, rel=1e-12)


@then(parsers.parse('its image size at {x:g} is undefined'))
def check_behind(world, x):
    with pytest.raises(BehindCamera):
        image_size(world.scn, x)


@then(parsers.parse('its predicted growth rate at size {d_img:g} is '
                    '{rate:g}'))
def check_rate(world, d_img, rate):
    assert image_size_rate(world.scn, d_img) == pytest.approx(rate)


@when(parsers.parse('I record its image size for {steps:d} steps of '
                    '{dt:g}'))
def record_sizes(world, steps, dt):
    world.dt = dt
    world.t0 = 0.0
    world.sizes = image_size_series(world.scn, dt * np.arange(steps))


@then(
    parsers.parse('every time to contact plus its time is {total:g} within '
                  '{tol:g}'))
def check_tau_plus_t(world, total, tol):
    estimates = time_to_contact(world.sizes, world.dt, t0=world.t0)
    assert len(estimates) == len(world.sizes) - 2
    for estimate in estimates:
        assert abs(estimate.tau + estimate.t - total) <= tol


@when(
    parsers.parse('I record its image size from {t0:g} for {steps:d} steps '
                  'of {dt:g}'))
def record_sizes_from(world, t0, steps, dt):
    world.dt = dt
    world.t0 = t0
    world.sizes = image_size_series(world.scn, t0 + dt * np.arange(steps))


@then(
    parsers.parse('the time to contact at {t:g} is {tau:g} within {tol:g}'))
def check_tau_at(world, t, tau, tol):
    estimates = time_to_contact(world.sizes, world.dt, t0=world.t0)
    first = estimates[0]
    assert first.t == pytest.approx(t, abs=1e-12)
    assert abs(first.tau - tau) <= tol


@then(
    parsers.parse('central differences match the predicted growth rate '
                  'within {tol:g} relative'))
def check_growth_law(world, tol):
    sizes = world.sizes
    measured = (sizes[2:] - sizes[:-2]) / (2 * world.dt)
    predicted = image_size_rate(world.scn, sizes[1:-1])
    assert np.max(np.abs(measured - predicted) / predicted) < tol


@when('I estimate the time to contact of a constant image')
def constant_image(world):
    try:
        time_to_contact([0.3] * 5, 0.1)
    except UndefinedTau as exc:
        world.error = exc


@when(
    parsers.parse('I estimate the time to contact of {count:d} samples with '
                  'a window of {window:d}'))
def short_series(world, count, window):
    try:
        time_to_contact([0.1 * (k + 1) for k in range(count)], 0.1, window)
    except InvalidParameter as exc:
        world.error = exc


@then('an UndefinedTau error is raised')
def check_undefined(world):
    assert isinstance(world.error, UndefinedTau)


@then('an InvalidParameter error is raised')
def check_invalid(world):
    assert isinstance(world.error, InvalidParameter)


@given(parsers.parse('a vehicle at {x:g} {y:g} heading north'))
def given_vehicle(world, x, y):
    world.state = VehicleState(x, y, math.pi / 2)


@given(parsers.parse('a feature at {x:g} {y:g}'))
def given_feature(world, x, y):
    world.feature = FeaturePoint('f', x, y)


@then(parsers.parse('a feature at {x:g} {y:g} projects to {d_img:g}'))
def check_projection(world, x, y, d_img):
    seen = project(world.state, FeaturePoint('f', x, y))
    assert seen.d_img == pytest.approx(d_img, abs=1e-6)


@then(
    parsers.parse('a feature at {x:g} {y:g} projects to {d_img:g} with '
                  'focal length {f:g}'))
def check_focal(world, x, y, d_img, f):
    seen = project(world.state, FeaturePoint('f', x, y), f)
    assert seen.d_img == pytest.approx(d_img, abs=1e-6)


@then(parsers.parse('projecting a feature at {x:g} {y:g} is singular'))
def check_singular(world, x, y):
    with pytest.raises(ProjectionSingularity):
        project(world.state, FeaturePoint('f', x, y))


def _seen(state, feature):
    return (project(state, feature).d_img,
            tau_analytic(state, feature, 1.0).tau)


@then(
    parsers.parse('moving both by {dx:g} {dy:g} keeps the image coordinate '
                  'and the transit time'))
def check_translation(world, dx, dy):
    state = world.state._replace(x=world.state.x + dx,
                                 y=world.state.y + dy)
    feature = world.feature._replace(x=world.feature.x + dx,
                                     y=world.feature.y + dy)
    assert _seen(state, feature) == pytest.approx(
        _seen(world.state, world.feature), rel=1e-9)


@then(
    parsers.parse('turning both by {angle:g} about the origin keeps the '
                  'image coordinate and the transit time'))
def check_rotation(world, angle):
    cos, sin = math.cos(angle), math.sin(angle)

    def turned(x, y):
        return cos * x - sin * y, sin * x + cos * y

    x, y = turned(world.state.x, world.state.y)
    state = VehicleState(x, y, world.state.theta + angle)
    x, y = turned(world.feature.x, world.feature.y)
    feature = world.feature._replace(x=x, y=y)
    assert _seen(state, feature) == pytest.approx(
        _seen(world.state, world.feature), rel=1e-9)


@then('reversing the track in time flips the sign of the latest transit '
      'time')
def check_time_reversal(world):
    backwards = [p._replace(t=-p.t) for p in reversed(world.track)]
    forward = tau_series(world.track[:3])[0]
    latest = tau_from_track(backwards)
    assert latest.t == -forward.t
    assert latest.tau == pytest.approx(-forward.tau, rel=1e-12)
    assert forward.tau > 0


@when(
    parsers.parse('the vehicle flies at {v:g} accelerating by {accel:g} for '
                  '{steps:d} steps of {dt:g}'))
def fly_straight(world, v, accel, steps, dt):
    world.track, world.truth = [], []
    for k in range(steps):
        t = k * dt
        speed = v + accel * t
        state = world.state._replace(y=world.state.y + v * t +
                                     0.5 * accel * t * t)
        world.track.append(project(state, world.feature, t=t))
        world.truth.append(tau_analytic(state, world.feature, speed, t))


@then(
    parsers.parse('the estimated transit times match the true ones within '
                  '{tol:g}'))
def check_central(world, tol):
    estimates = tau_series(world.track)
    for estimate, truth in zip(estimates, world.truth[1:]):
        assert estimate.t == truth.t
        assert abs(estimate.tau - truth.tau) <= tol


@then(
    parsers.parse('the causal estimates match the true ones within {tol:g}'))
def check_backward(world, tol):
    estimates = tau_series(world.track, scheme='backward')
    for estimate, truth in zip(estimates, world.truth[1:]):
        assert abs(estimate.tau - truth.tau) <= tol


@then(parsers.parse('the speed is {trend}'))
def check_trend(world, trend):
    assert speed_trend(tau_series(world.track)) == trend


@when(
    parsers.parse('I measure the τ spread of a cluster of {count:d} '
                  'features'))
def measure_cluster(world, count):
    world.spread = cluster_tau_spread(n_features=count, seed=3)


@then('the spread falls as the window widens')
def check_spread(world):
    spreads = [s.rel_std for s in world.spread]
    assert [s.window for s in world.spread] == [10, 40, 160]
    assert spreads[0] > spreads[1] > spreads[2]


@then(
    parsers.parse('the mean τ at window {window:d} is {tau:g} within '
                  '{tol:g}'))
def check_mean_tau(world, window, tau, tol):
    spread = next(s for s in world.spread if s.window == window)
    assert abs(spread.mean_tau - tau) <= tol


def _csv_lines(writer, rows):
    buffer = io.StringIO()
    writer(rows, buffer)
    return buffer.getvalue().splitlines()


@then(
    parsers.parse('the track CSV has the columns {columns} and {count:d} '
                  'rows'))
def check_track_csv(world, columns, count):
    lines = _csv_lines(write_track_csv, world.track)
    assert lines[0] == columns
    assert len(lines) == count + 1


@then(
    parsers.parse('the τ CSV has the columns {columns} and {count:d} rows'))
def check_tau_csv(world, columns, count):
    lines = _csv_lines(write_tau_csv, tau_series(world.track))
    assert lines[0] == columns
    assert len(lines) == count + 1
