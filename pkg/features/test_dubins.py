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
import numpy as np
import pytest
from pytest_bdd import given, parsers, scenarios, then, when

from mof import ExtentExhausted
from mof.analytic import (SteeringModel, collision_free_prob, critical_theta,
                          transition_window)
from mof.config import parse_grid
from mof.dubins import (MCSummary, Mode, Side, mc_collision_free,
                        mc_free_path, mc_phase_sweep, steer_decision,
                        straight_transit, transit)
from mof.field import (FieldParams, ObstacleField, ObstacleRow, sample_field,
                       stationary_probs)

scenarios('dubins.feature')

ROW_GAP = 10.0


@given(parsers.parse('a row with the slat {lo:g} to {hi:g}'))
def row_with_slat(world, lo, hi):
    world.row = ObstacleRow(ROW_GAP, [(lo, hi)], (-50.0, 50.0))


@then(
    parsers.parse('arriving at {x:g} with theta {theta:g} over a row gap of '
                  '{gap:g} steers by {delta:g}'))
def steers_by(world, x, theta, gap, delta):
    assert steer_decision(x, world.row, theta, gap) == pytest.approx(delta,
                                                                      abs=1e-6)


@then(
    parsers.parse('arriving at {x:g} with theta {theta:g} over a row gap of '
                  '{gap:g} collides'))
def collides(world, x, theta, gap):
    assert steer_decision(x, world.row, theta, gap) is None


@then(
    parsers.parse('arriving at {x:g} on the {side} side with theta '
                  '{theta:g} steers by {delta:g}'))
def one_sided(world, x, side, theta, delta):
    change = steer_decision(x, world.row, theta, ROW_GAP, Side(side))
    assert change == pytest.approx(delta, abs=1e-5)


@given(parsers.parse('a field of {n:d} empty rows'))
def empty_field(world, n):
    extent = (-100.0, 100.0)
    world.field = ObstacleField(
        [ObstacleRow((k + 1) * ROW_GAP, [], extent) for k in range(n)],
        extent)


@when(parsers.parse('the vehicle transits from {x:g} with theta {theta:g}'))
def transit_from(world, x, theta):
    world.outcome = transit(world.field, x, theta)


@then(parsers.parse('it clears {n:d} rows without steering'))
def clears_straight(world, n):
    assert world.outcome.rows_cleared == n
    assert not world.outcome.collided
    assert all(h == 0.0 for h in world.outcome.headings)
    assert {x for x, _ in world.outcome.path} == {world.outcome.path[0][0]}


@given(
    parsers.parse('field parameters alpha {alpha:g} beta {beta:g} '
                  'gamma {gamma:g} seed {seed:d}'))
def given_params(world, alpha, beta, gamma, seed):
    world.params = FieldParams(alpha, beta, gamma, seed)


@given(parsers.parse('a sampled field of {n:d} rows over {lo:g} to {hi:g}'))
def sampled_field(world, n, lo, hi):
    world.field = sample_field(world.params, n, (lo, hi))


@then(
    parsers.parse('transits at theta 0 match straight transits for {count:d} '
                  'starts'))
def zero_theta_is_straight(world, count):
    rng = np.random.default_rng(world.params.seed)
    for x in rng.uniform(-30, 30, count):
        steered = transit(world.field, x, 0.0)
        straight = straight_transit(world.field, x)
        assert steered == straight


@then(
    parsers.parse('every heading of {mode} transits at theta {theta:g} stays '
                  'within {limit:g}'))
def headings_bounded(world, mode, theta, limit):
    rng = np.random.default_rng(17)
    world.outcomes = [
        transit(world.field, x, theta, mode=Mode(mode), side=Side.NEAREST)
        for x in rng.uniform(-50, 50, 300)
    ]
    for outcome in world.outcomes:
        assert all(abs(h) <= limit + 1e-15 for h in outcome.headings)
        assert all(abs(s.heading) <= limit + 1e-15 for s in outcome.states)


@then('every path has one vertex per cleared row plus the start')
def path_lengths(world):
    for outcome in world.outcomes:
        extra = 2 if outcome.collided else 1
        assert len(outcome.path) == outcome.rows_cleared + extra
        assert outcome.collided == (outcome.rows_cleared < len(world.field))


@given(
    parsers.parse('a field over {lo:g} to {hi:g} with a row slat {s_lo:g} '
                  'to {s_hi:g}'))
def narrow_field(world, lo, hi, s_lo, s_hi):
    world.field = ObstacleField(
        [ObstacleRow(ROW_GAP, [(s_lo, s_hi)], (lo, hi))], (lo, hi))


@then(
    parsers.parse('a right side transit from {x:g} with theta {theta:g} '
                  'exhausts the extent'))
def right_exhausts(world, x, theta):
    with pytest.raises(ExtentExhausted):
        transit(world.field, x, theta, side=Side.RIGHT)


@then(parsers.parse('a transit from {x:g} exhausts the extent'))
def start_exhausts(world, x):
    with pytest.raises(ExtentExhausted):
        transit(world.field, x, 0.1)


def _run(world, trials, n, theta, side=Side.RIGHT, mode=Mode.RESET,
         jitter=False, workers=1):
    world.n = n
    world.theta = theta
    world.side = side
    return mc_collision_free(world.params, n, theta, trials,
                             world.params.seed, side, mode, jitter,
                             workers=workers)


@when(
    parsers.parse('I run {trials:d} trials over {n:d} rows at theta '
                  '{theta:g}'))
def run_trials(world, trials, n, theta):
    world.trials = trials
    world.summary = _run(world, trials, n, theta)


@when(
    parsers.parse('I run {trials:d} nearest trials over {n:d} rows at theta '
                  '{theta:g}'))
def run_nearest(world, trials, n, theta):
    world.summary = _run(world, trials, n, theta, Side.NEAREST)


@when(
    parsers.parse('I run {trials:d} coin trials over {n:d} rows at theta '
                  '{theta:g}'))
def run_coin(world, trials, n, theta):
    world.summary = _run(world, trials, n, theta, Side.COIN)


@when(
    parsers.parse('I run {trials:d} persistent jittered trials over {n:d} '
                  'rows at theta {theta:g}'))
def run_persistent(world, trials, n, theta):
    world.summary = _run(world, trials, n, theta, Side.NEAREST,
                         Mode.PERSISTENT, True)


@then(
    parsers.parse('the estimate is within 3 standard errors of {p:g}'))
def within_value(world, p):
    assert world.summary.within(p, 3.0)


@then('the estimate is within 3 standard errors of the two sided law')
def within_two_sided(world):
    dist = stationary_probs(world.params.alpha, world.params.beta)
    steer = SteeringModel(world.theta, world.params.alpha_over_gamma)
    expected = collision_free_prob(dist, steer, world.n, sides=2)
    assert world.summary.within(expected, 3.0)
    one_sided = collision_free_prob(dist, steer, world.n)
    assert not world.summary.within(one_sided, 3.0)


@then('the estimate is 0 or 1 with no standard error')
def single_trial(world):
    assert world.summary.estimate in (0.0, 1.0)
    assert world.summary.stderr == 0.0


@then(
    parsers.parse('the same run on {workers:d} workers gives the same '
                  'successes'))
def same_on_workers(world, workers):
    again = _run(world, world.trials, world.n, world.theta, workers=workers)
    assert again == world.summary


@then('the same run again gives the same successes')
def same_again(world):
    assert _run(world, world.trials, world.n, world.theta) == world.summary


@then('the estimate lies between 0 and 1')
def estimate_bounded(world):
    assert 0.0 <= world.summary.estimate <= 1.0


def _sweep(world, n, grid, trials, side):
    world.n = n
    world.side = side
    world.sweep = mc_phase_sweep(world.params, n, parse_grid(grid), trials,
                                 world.params.seed, side)


@when(
    parsers.parse('I sweep {n:d} rows over the angles {grid} with '
                  '{trials:d} trials'))
def sweep(world, n, grid, trials):
    _sweep(world, n, grid, trials, Side.RIGHT)


@when(
    parsers.parse('I sweep {n:d} rows over the angles {grid} with '
                  '{trials:d} nearest trials'))
def sweep_nearest(world, n, grid, trials):
    _sweep(world, n, grid, trials, Side.NEAREST)


@then('the estimates never decrease in theta')
def sweep_monotone(world):
    estimates = [p.estimate for p in world.sweep.points]
    assert estimates == sorted(estimates)


@then(
    parsers.parse('every estimate is within {k:d} standard errors of the '
                  'closed form'))
def sweep_close(world, k):
    for p in world.sweep.points:
        summary = MCSummary(p.trials, p.successes, p.estimate, p.stderr)
        assert summary.within(p.analytic, float(k)), p


@then('the first estimate matches the at least n probability')
def sweep_first(world):
    first = world.sweep.points[0]
    dist = stationary_probs(world.params.alpha, world.params.beta)
    assert first.theta_cr == 0.0
    assert first.analytic == pytest.approx(dist.p1**world.n, rel=1e-12)


@then(
    parsers.parse('the empirical window matches the closed form window '
                  'within {tol:g}'))
def sweep_window(world, tol):
    dist = stationary_probs(world.params.alpha, world.params.beta)
    low, high = transition_window(dist, world.params.alpha_over_gamma,
                                  world.n)
    start, stop = world.sweep.window
    assert abs(start - low) <= tol
    assert abs(stop - high) <= tol


@then(
    parsers.parse('the empirical 0.99 crossing matches the critical angle '
                  'within {tol:g}'))
def sweep_crossing(world, tol):
    dist = stationary_probs(world.params.alpha, world.params.beta)
    root = critical_theta(dist, world.params.alpha_over_gamma, world.n, 0.99)
    assert world.sweep.crossing is not None
    assert abs(world.sweep.crossing - root) <= tol


@then(parsers.parse('the empirical window is narrower than {width:g}'))
def sweep_narrow(world, width):
    start, stop = world.sweep.window
    assert stop - start < width


@when(parsers.parse('I measure {trials:d} straight free paths'))
def measure_free_paths(world, trials):
    world.free = mc_free_path(world.params, trials, world.params.seed)


@then(
    parsers.parse('the mean free path is {mean:g} within 3 standard errors'))
def free_mean(world, mean):
    assert abs(world.free.mean - mean) <= 3 * world.free.stderr_mean


@then(
    parsers.parse('the free path variance is {variance:g} within 4 standard '
                  'errors'))
def free_variance(world, variance):
    assert abs(world.free.variance - variance) <= \
        4 * world.free.stderr_variance
