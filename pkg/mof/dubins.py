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
''' Quantized Dubins vehicle crossing a field row by row.

    The vehicle flies straight chords between rows. When the chord would
    end on a slat it may turn once, by at most θcr, to pass a slat edge
    instead. Headings are measured from the transit axis, positive towards
    increasing abscissa.
'''
import enum
import logging
import math
from collections import namedtuple
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from mof import ExtentExhausted, InvalidParameter
from mof.actors import run_sharded
from mof.analytic import SteeringModel, collision_free_prob
from mof.field import (FieldParams, LazyField, ObstacleRow, stationary_probs,
                       substream)

LOG = logging.getLogger('mof')

__all__ = [
    'MCSummary',
    'Mode',
    'PhaseSweep',
    'QuantizedState',
    'Side',
    'SweepPoint',
    'TransitOutcome',
    'mc_collision_free',
    'mc_free_path',
    'mc_phase_sweep',
    'steer_decision',
    'straight_transit',
    'transit',
]


class Side(enum.Enum):
    ''' Which slat edge the vehicle steers around. '''
    NEAREST = 'nearest'
    RIGHT = 'right'
    LEFT = 'left'
    COIN = 'coin'

    @property
    def sides(self) -> int:
        ''' Edges the policy can use, as counted by the analytic law. '''
        return 2 if self is Side.NEAREST else 1


class Mode(enum.Enum):
    ''' What happens to the heading after a row is cleared. '''
    RESET = 'reset'
    PERSISTENT = 'persistent'


QuantizedState = namedtuple('QuantizedState', ['x', 'row_index', 'heading'])


class TransitOutcome(
        namedtuple('TransitOutcome',
                   ['rows_cleared', 'collided', 'path', 'headings'],
                   defaults=[()])):
    ''' Result of one transit. `path` holds the start, one vertex per
        cleared row and, on collision, the point of impact.
    '''
    __slots__ = ()

    @property
    def states(self) -> List[QuantizedState]:
        ''' State after every cleared row. '''
        return [
            QuantizedState(x, k, h)
            for k, ((x, _), h) in enumerate(zip(self.path[1:], self.headings))
        ]


class MCSummary(
        namedtuple('MCSummary', ['trials', 'successes', 'estimate',
                                 'stderr'])):
    __slots__ = ()

    @classmethod
    def of(cls, trials: int, successes: int) -> 'MCSummary':
        trials, successes = int(trials), int(successes)
        if trials < 1 or not 0 <= successes <= trials:
            raise InvalidParameter('%d successes out of %d trials' %
                                   (successes, trials))
        estimate = successes / trials
        return cls(trials, successes, estimate,
                   math.sqrt(estimate * (1.0 - estimate) / trials))

    def within(self, expected: float, sigmas: float = 3.0) -> bool:
        ''' Whether `expected` lies within `sigmas` standard errors.

            The standard error of the expected value is used when it is
            larger, so a degenerate estimate of 0 or 1 is not trusted.
        '''
        floor = math.sqrt(expected * (1.0 - expected) / self.trials)
        return abs(self.estimate - expected) <= sigmas * max(
            self.stderr, floor)


SweepPoint = namedtuple('SweepPoint', [
    'theta_cr', 'n', 'trials', 'successes', 'estimate', 'stderr', 'analytic'
])

PhaseSweep = namedtuple('PhaseSweep', ['points', 'crossing', 'window'])

FreePathSummary = namedtuple(
    'FreePathSummary',
    ['trials', 'mean', 'variance', 'stderr_mean', 'stderr_variance'])

Coin = Callable[[], bool]


def _edge_choice(left: float, right: float, side: Side,
                 coin: Optional[Coin]) -> bool:
    ''' True for the left edge. '''
    if side is Side.LEFT:
        return True
    if side is Side.RIGHT:
        return False
    if side is Side.COIN:
        if coin is None:
            raise InvalidParameter('coin policy needs a coin')
        return coin()
    return left <= right


def _decide(x_arrival: float, row: ObstacleRow, theta_cr: float,
            row_gap: float, side: Side, margin: float,
            coin: Optional[Coin]) -> Optional[Tuple[float, float]]:
    ''' (heading change, crossing abscissa) or None on collision. '''
    if not row_gap > 0:
        raise InvalidParameter('row_gap must be positive, got %r' % row_gap)
    slat = row.slat_at(x_arrival)
    if slat is None:
        return 0.0, x_arrival
    reach = row_gap * math.tan(theta_cr)
    if reach <= 0.0:
        return None
    lo, hi = slat
    left = x_arrival - lo + margin
    right = hi - x_arrival + margin
    if _edge_choice(left, right, side, coin):
        if left > reach:
            return None
        return -min(math.atan(left / row_gap), theta_cr), lo - margin
    if right > reach:
        return None
    return min(math.atan(right / row_gap), theta_cr), hi + margin


def steer_decision(x_arrival: float,
                   row: ObstacleRow,
                   theta_cr: float,
                   row_gap: float,
                   side: Side = Side.NEAREST,
                   margin: float = 0.0,
                   coin: Optional[Coin] = None) -> Optional[float]:
    ''' Heading change that takes the vehicle past the slat at
        `x_arrival`, 0 in open space, None when the edge is out of reach.
    '''
    decision = _decide(x_arrival, row, theta_cr, row_gap, side, margin, coin)
    return None if decision is None else decision[0]


def _decide_persistent(x_prev: float, heading: float, row: ObstacleRow,
                       theta_cr: float, row_gap: float, side: Side,
                       margin: float, coin: Optional[Coin]
                       ) -> Optional[Tuple[float, float]]:
    ''' (new heading, crossing abscissa) keeping |heading| ≤ θcr. '''
    x_arrival = x_prev + row_gap * math.tan(heading)
    slat = row.slat_at(x_arrival)
    if slat is None:
        return heading, x_arrival
    lo, hi = slat
    reach = row_gap * math.tan(theta_cr)
    if reach <= 0.0:
        return None
    to_left = lo - margin - x_prev
    to_right = hi + margin - x_prev
    feasible_left = abs(to_left) <= reach
    feasible_right = abs(to_right) <= reach
    if side is Side.NEAREST:
        if feasible_left and feasible_right:
            go_left = (x_arrival - lo) <= (hi - x_arrival)
        elif feasible_left or feasible_right:
            go_left = feasible_left
        else:
            return None
    else:
        go_left = _edge_choice(x_arrival - lo, hi - x_arrival, side, coin)
    if go_left:
        if not feasible_left:
            return None
        new = math.copysign(min(abs(math.atan(to_left / row_gap)), theta_cr),
                            to_left)
        return new, lo - margin
    if not feasible_right:
        return None
    new = math.copysign(min(abs(math.atan(to_right / row_gap)), theta_cr),
                        to_right)
    return new, hi + margin


def _inside(row: ObstacleRow, x: float) -> bool:
    lo, hi = row.extent
    return lo < x < hi


def transit(field,
            x_start: float,
            theta_cr: float,
            side: Side = Side.RIGHT,
            mode: Mode = Mode.RESET,
            margin: float = 0.0,
            coin: Optional[Coin] = None,
            y_start: float = 0.0) -> TransitOutcome:
    ''' Fly the protocol through every row of `field`.

        `field` is an `ObstacleField` or a `LazyField`. Raises
        `ExtentExhausted` when the path needs obstacle data outside the
        sampled window.
    '''
    if not 0.0 <= theta_cr < math.pi / 2:
        raise InvalidParameter('theta_cr must lie in [0, pi/2), got %r' %
                               theta_cr)
    x_prev, y_prev = float(x_start), float(y_start)
    heading = 0.0
    path = [(x_prev, y_prev)]
    headings: List[float] = []
    for index in range(len(field)):
        ordinate = field.ordinate(index)
        row_gap = ordinate - y_prev
        if mode is Mode.RESET:
            heading = 0.0
        x_arrival = x_prev + row_gap * math.tan(heading)
        reach = row_gap * math.tan(theta_cr) + abs(x_arrival - x_prev)
        row = field.row_for(index, x_arrival, reach)
        if not _inside(row, x_arrival):
            raise ExtentExhausted('arrival %r outside %r at row %d' %
                                  (x_arrival, row.extent, index))
        if mode is Mode.RESET:
            decision = _decide(x_arrival, row, theta_cr, row_gap, side,
                               margin, coin)
        else:
            decision = _decide_persistent(x_prev, heading, row, theta_cr,
                                          row_gap, side, margin, coin)
        if decision is None:
            path.append((x_arrival, ordinate))
            LOG.debug('collision at row %d, x=%r', index, x_arrival)
            return TransitOutcome(index, True, path, headings)
        heading, x_cross = decision
        if x_cross != x_arrival and not _inside(row, x_cross):
            raise ExtentExhausted('steering to %r leaves %r at row %d' %
                                  (x_cross, row.extent, index))
        headings.append(heading)
        path.append((x_cross, ordinate))
        x_prev, y_prev = x_cross, ordinate
    return TransitOutcome(len(field), False, path, headings)


def straight_transit(field, x_start: float,
                     y_start: float = 0.0) -> TransitOutcome:
    ''' Uncontrolled transit: stop at the first row occupied at x_start. '''
    path = [(float(x_start), float(y_start))]
    for index in range(len(field)):
        row = field.row_for(index, x_start)
        path.append((float(x_start), row.ordinate))
        if row.occupancy(x_start):
            return TransitOutcome(index, True, path, [0.0] * index)
    return TransitOutcome(len(field), False, path, [0.0] * len(field))


TrialPlan = namedtuple('TrialPlan', [
    'params', 'n_rows', 'theta_cr', 'seed', 'side', 'mode', 'jitter',
    'margin', 'half_width'
])


def _start_span(params: FieldParams) -> float:
    return 0.5 * (1.0 / params.alpha + 1.0 / params.beta)


def _half_width(params: FieldParams, theta: float) -> float:
    return params.row_gap * math.tan(theta) + 1.0 / params.alpha


def _run_trial(plan: TrialPlan, trial: int) -> TransitOutcome:
    rng = substream(plan.seed, trial, 0)
    coin_rng = substream(plan.seed, trial, 1)
    span = _start_span(plan.params)
    x_start = rng.uniform(-span, span)
    field = LazyField(plan.params, plan.n_rows, plan.half_width, rng,
                      plan.jitter)
    try:
        return transit(field,
                       x_start,
                       plan.theta_cr,
                       side=plan.side,
                       mode=plan.mode,
                       margin=plan.margin,
                       coin=lambda: bool(coin_rng.random() < 0.5))
    except ExtentExhausted as exc:
        raise ExtentExhausted('%s (trial %d, seed %d)' % (exc, trial,
                                                          plan.seed),
                              trial=trial,
                              seed=plan.seed) from exc


def _plan(params: FieldParams, n_rows: int, theta_cr: float, seed: int,
          side: Side, mode: Mode, jitter: bool, margin: float,
          theta_max: Optional[float]) -> TrialPlan:
    n_rows = int(n_rows)
    if n_rows < 1:
        raise InvalidParameter('n_rows must be at least 1, got %d' % n_rows)
    SteeringModel(theta_cr, params.alpha_over_gamma)  # range check
    widest = theta_cr if theta_max is None else max(theta_max, theta_cr)
    return TrialPlan(params, n_rows, theta_cr, int(seed), Side(side),
                     Mode(mode), bool(jitter), float(margin),
                     _half_width(params, widest))


def mc_collision_free(params: FieldParams,
                      n_rows: int,
                      theta_cr: float,
                      trials: int,
                      master_seed: int,
                      side: Side = Side.RIGHT,
                      mode: Mode = Mode.RESET,
                      jitter: bool = False,
                      margin: float = 0.0,
                      workers: int = 1,
                      theta_max: Optional[float] = None) -> MCSummary:
    ''' Fraction of trials in which the protocol clears all rows.

        Trial i depends on (master_seed, i) only. `theta_max` fixes the
        sampling window of a sweep so that every angle sees the same rows.
    '''
    trials = int(trials)
    if trials < 1:
        raise InvalidParameter('trials must be at least 1, got %d' % trials)
    plan = _plan(params, n_rows, theta_cr, master_seed, side, mode, jitter,
                 margin, theta_max)

    def count(start: int, stop: int) -> int:
        return sum(not _run_trial(plan, trial).collided
                   for trial in range(start, stop))

    successes = sum(run_sharded(count, trials, workers))
    summary = MCSummary.of(trials, successes)
    LOG.info('theta=%r n=%d: %d/%d', theta_cr, plan.n_rows, successes, trials)
    return summary


def _required_angles(plan: TrialPlan, trials: int,
                     workers: int) -> np.ndarray:
    ''' Smallest θcr each trial needs, inf where the widest angle fails. '''

    def angles(start: int, stop: int) -> List[float]:
        result = []
        for trial in range(start, stop):
            outcome = _run_trial(plan, trial)
            if outcome.collided:
                result.append(math.inf)
            else:
                result.append(
                    max((abs(h) for h in outcome.headings), default=0.0))
        return result

    return np.array(
        [a for part in run_sharded(angles, trials, workers) for a in part])


def _empirical_window(points: Sequence[SweepPoint], low: float,
                      high: float) -> Optional[Tuple[float, float]]:
    below = [p.theta_cr for p in points if p.estimate < low]
    above = [p.theta_cr for p in points if p.estimate > high]
    if not above:
        return None
    start = below[-1] if below else points[0].theta_cr
    return start, above[0]


def mc_phase_sweep(params: FieldParams,
                   n_rows: int,
                   theta_grid: Sequence[float],
                   trials_per_point: int,
                   seed: int,
                   side: Side = Side.RIGHT,
                   mode: Mode = Mode.RESET,
                   jitter: bool = False,
                   workers: int = 1,
                   level: float = 0.99,
                   window: Tuple[float, float] = (0.1, 0.95)) -> PhaseSweep:
    ''' Success estimate at every θcr of an ascending grid.

        All grid points share the trial fields. In the reset mode a single
        transit at the widest angle tells the smallest angle each trial
        needs, and every grid point is read off that.
    '''
    grid = [float(t) for t in theta_grid]
    if not grid:
        raise InvalidParameter('empty theta grid')
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameter('theta grid must be sorted ascending')
    trials = int(trials_per_point)
    if trials < 1:
        raise InvalidParameter('trials must be at least 1, got %d' % trials)
    side, mode = Side(side), Mode(mode)
    dist = stationary_probs(params.alpha, params.beta)

    if mode is Mode.RESET and not jitter:
        plan = _plan(params, n_rows, grid[-1], seed, side, mode, jitter, 0.0,
                     None)
        needed = _required_angles(plan, trials, workers)
        counts = [int(np.count_nonzero(needed <= theta)) for theta in grid]
    else:
        counts = [
            mc_collision_free(params, n_rows, theta, trials, seed, side,
                              mode, jitter, 0.0, workers,
                              theta_max=grid[-1]).successes
            for theta in grid
        ]

    points = []
    for theta, successes in zip(grid, counts):
        summary = MCSummary.of(trials, successes)
        steer = SteeringModel(theta, params.alpha_over_gamma)
        points.append(
            SweepPoint(theta, int(n_rows), trials, successes,
                       summary.estimate, summary.stderr,
                       collision_free_prob(dist, steer, n_rows, side.sides)))
    crossing = next((p.theta_cr for p in points if p.estimate > level), None)
    LOG.info('sweep n=%d over %d angles, %r crossing at %r', n_rows,
             len(grid), level, crossing)
    return PhaseSweep(points, crossing,
                      _empirical_window(points, window[0], window[1]))


def mc_free_path(params: FieldParams, trials: int, seed: int,
                 max_rows: int = 10**6) -> FreePathSummary:
    ''' Rows cleared by straight transits through unbounded flat fields. '''
    trials = int(trials)
    if trials < 2:
        raise InvalidParameter('need at least two trials, got %d' % trials)
    half = 1.0 / params.alpha
    cleared = np.empty(trials)
    for trial in range(trials):
        rng = substream(seed, trial, 0)
        x_start = rng.uniform(-_start_span(params), _start_span(params))
        field = LazyField(params, max_rows, half, rng)
        cleared[trial] = straight_transit(field, x_start).rows_cleared
    mean = float(cleared.mean())
    centered = cleared - mean
    variance = float(np.mean(centered**2))
    fourth = float(np.mean(centered**4))
    return FreePathSummary(trials, mean, variance,
                           math.sqrt(variance / trials),
                           math.sqrt(max(fourth - variance**2, 0.0) / trials))
