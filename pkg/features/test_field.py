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
import math

import numpy as np
import pytest
from pytest_bdd import given, parsers, scenarios, then, when
from scipy import stats

from mof import InvalidParameter, OutOfExtent
from mof.field import (FieldParams, ObstacleRow, dump_field, load_field,
                       occupancy, occupancy_stderr, sample_field, sample_row,
                       stationary_probs)

scenarios('field.feature')


@given(parsers.parse('the rates alpha {alpha:g} and beta {beta:g}'))
def given_rates(world, alpha, beta):
    world.rates = (alpha, beta)


@when('I compute the stationary distribution')
def compute_stationary(world):
    try:
        world.dist = stationary_probs(*world.rates)
    except InvalidParameter as exc:
        world.error = exc


@then(parsers.parse('p1 is {p1:g}'))
def check_p1(world, p1):
    assert world.dist.p1 == pytest.approx(p1, abs=1e-6)


@then('p1 and p2 sum to exactly one')
def check_sum(world):
    assert world.dist.p1 + world.dist.p2 == 1.0


@then('an InvalidParameter error is raised')
def check_invalid(world):
    assert isinstance(world.error, InvalidParameter)


@given(
    parsers.parse('field parameters alpha {alpha:g} beta {beta:g} '
                  'gamma {gamma:g} seed {seed:d}'))
def given_params(world, alpha, beta, gamma, seed):
    world.params = FieldParams(alpha, beta, gamma, seed)


@when(
    parsers.parse('I sample a row at ordinate {ordinate:g} over the extent '
                  '{lo:g} to {hi:g}'))
def sample_one_row(world, ordinate, lo, hi):
    world.extent = (lo, hi)
    world.ordinate = ordinate
    world.row = sample_row(world.params, ordinate, world.extent)


def _interior_widths(row):
    return (row.ends - row.starts)[1:-1]


def _interior_gaps(row):
    return np.array([hi - lo for lo, hi in row.gaps()])


@then(
    parsers.parse('the interior slat widths have mean {mean:g} within '
                  '{tol:g}'))
def check_slat_mean(world, mean, tol):
    assert abs(np.mean(_interior_widths(world.row)) - mean) < tol


@then(
    parsers.parse('the interior slat widths have variance {var:g} within '
                  '{tol:g}'))
def check_slat_variance(world, var, tol):
    assert abs(np.var(_interior_widths(world.row), ddof=1) - var) < tol


@then(
    parsers.parse('the interior slat widths pass a KS test against rate '
                  '{rate:g}'))
def check_slat_ks(world, rate):
    result = stats.kstest(_interior_widths(world.row), 'expon',
                          args=(0, 1.0 / rate))
    assert result.pvalue > 0.01


@then(
    parsers.parse('the interior gap widths pass a KS test against rate '
                  '{rate:g}'))
def check_gap_ks(world, rate):
    result = stats.kstest(_interior_gaps(world.row), 'expon',
                          args=(0, 1.0 / rate))
    assert result.pvalue > 0.01


@then(
    parsers.parse('the occupied fraction is p2 within {k:d} standard errors'))
def check_fraction(world, k):
    dist = stationary_probs(world.params.alpha, world.params.beta)
    length = world.extent[1] - world.extent[0]
    error = occupancy_stderr(world.params, length)
    assert abs(world.row.occupied_fraction() - dist.p2) < k * error


@then(parsers.parse('the occupied fraction is {fraction:g} within {tol:g}'))
def check_fraction_value(world, fraction, tol):
    assert world.row.occupied_fraction() == pytest.approx(fraction, abs=tol)


@then(parsers.parse('the occupied fraction exceeds {level:g}'))
def check_dense(world, level):
    assert world.row.occupied_fraction() > level


@when('I sample the same row again')
def sample_again(world):
    world.again = sample_row(world.params, world.ordinate, world.extent)


@then('both rows are identical')
def check_identical(world):
    assert world.row == world.again
    assert world.row.slats == world.again.slats


@then(parsers.parse('a row with seed {seed:d} differs'))
def check_other_seed(world, seed):
    params = world.params._replace(seed=seed)
    assert sample_row(params, world.ordinate, world.extent) != world.row


@given(
    parsers.parse('a row at ordinate {ordinate:g} with the slat {lo:g} to '
                  '{hi:g} on the extent {ext_lo:g} to {ext_hi:g}'))
def given_row(world, ordinate, lo, hi, ext_lo, ext_hi):
    world.row = ObstacleRow(ordinate, [(lo, hi)], (ext_lo, ext_hi))


@then(parsers.parse('the point {s:g} is occupied'))
def check_occupied(world, s):
    assert occupancy(world.row, s)
    assert world.row.occupied(np.array([s]))[0]


@then(parsers.parse('the point {s:g} is free'))
def check_free(world, s):
    assert not occupancy(world.row, s)


@then(parsers.parse('querying the point {s:g} raises OutOfExtent'))
def check_out_of_extent(world, s):
    with pytest.raises(OutOfExtent):
        occupancy(world.row, s)


@given(
    parsers.parse('the overlapping slats {a:g} to {b:g} and {c:g} to {d:g}'))
def given_overlap(world, a, b, c, d):
    world.slats = [(a, b), (c, d)]


@then('building the row raises InvalidParameter')
def check_overlap(world):
    with pytest.raises(InvalidParameter):
        ObstacleRow(0.0, world.slats, (0.0, 10.0))


@when(
    parsers.parse('I sample a field of {n:d} rows over the extent {lo:g} to '
                  '{hi:g}'))
def sample_flat_field(world, n, lo, hi):
    world.field = sample_field(world.params, n, (lo, hi))


@when(
    parsers.parse('I sample a jittered field of {n:d} rows over the extent '
                  '{lo:g} to {hi:g}'))
def sample_jittered_field(world, n, lo, hi):
    world.field = sample_field(world.params, n, (lo, hi), jitter=True)


@then(parsers.parse('row {k:d} lies at ordinate {ordinate:g}'))
def check_ordinate(world, k, ordinate):
    assert world.field[k - 1].ordinate == pytest.approx(ordinate)


@then('every row is clipped to the extent')
def check_clipped(world):
    lo, hi = world.field.extent
    for row in world.field:
        assert row.extent == (lo, hi)
        if len(row):
            assert row.starts[0] >= lo and row.ends[-1] <= hi


@then('the ordinates strictly increase')
def check_increasing(world):
    ordinates = np.array(world.field.ordinates)
    assert np.all(np.diff(ordinates) > 0)


@then('the mean displacement is the row gap within 4 standard errors')
def check_displacement(world):
    n = len(world.field)
    base = np.arange(1, n + 1) * world.params.row_gap
    shift = np.mean(np.array(world.field.ordinates) - base)
    assert abs(shift - world.params.row_gap) < \
        4 * world.params.row_gap / math.sqrt(n)


@when('I save and reload the field')
def save_and_reload(world, tmp_path):
    path = tmp_path / 'field.json'
    dump_field(world.field, str(path))
    world.reloaded = load_field(str(path))


@then('the reloaded field equals the original')
def check_reloaded(world):
    assert world.reloaded == world.field
    assert world.reloaded.params == world.field.params
