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
''' Closed-form transit probabilities through Markovian rows.

    A straight transit clears each row independently with probability p1,
    a steered one with p1 + p2(1 - exp(-s(α/γ)tanθcr)), where s counts the
    slat edges the steering protocol may use: one for a protocol that
    commits to a side, two for the nearer-edge protocol.
'''
import logging
import math
from collections import namedtuple
from typing import Iterable, List, Tuple

from scipy import optimize

from mof import DivergentMean, InvalidParameter, NoRoot
from mof.field import StationaryDistribution

LOG = logging.getLogger('mof')

# n·|ln p1| above which powers are taken in log space
LOG_SPACE_THRESHOLD = 700.0

THETA_MAX = math.pi / 2 - 1e-12

TABLE_HEADER = ('n', 'theta_cr', 'p_analytic')

__all__ = [
    'FreePathStats',
    'SteeringModel',
    'TABLE_HEADER',
    'TransitLaw',
    'analytic_table',
    'collision_free_prob',
    'critical_theta',
    'free_path_stats',
    'p_exact_rows',
    'q_at_least',
    'q_by_partial_sum',
    'row_clear_prob',
    'transition_window',
]


def _count(n) -> int:
    if int(n) != n or n < 0:
        raise InvalidParameter('row count must be a non-negative integer, '
                               'got %r' % (n, ))
    return int(n)


def _power(base: float, n: int) -> float:
    if n == 0:
        return 1.0
    if base <= 0.0:
        return 0.0
    log_base = math.log(base)
    if n * abs(log_base) > LOG_SPACE_THRESHOLD:
        return math.exp(n * log_base)
    return base**n


def p_exact_rows(dist: StationaryDistribution, n: int) -> float:
    ''' Probability of a straight transit through exactly n rows. '''
    return _power(dist.p1, _count(n)) * dist.p2


def q_at_least(dist: StationaryDistribution, n: int) -> float:
    ''' Probability of a straight transit through at least n rows. '''
    return _power(dist.p1, _count(n))


def q_by_partial_sum(dist: StationaryDistribution, n: int) -> float:
    return 1.0 - math.fsum(p_exact_rows(dist, k) for k in range(_count(n)))


class TransitLaw(namedtuple('TransitLaw', ['p1', 'p2', 'n'])):
    __slots__ = ()

    def __new__(cls, p1: float, p2: float, n: int):
        return super().__new__(cls, p1, p2, _count(n))

    @classmethod
    def of(cls, dist: StationaryDistribution, n: int) -> 'TransitLaw':
        return cls(dist.p1, dist.p2, n)

    @property
    def stationary(self) -> StationaryDistribution:
        return StationaryDistribution(self.p1, self.p2)

    @property
    def p_exact(self) -> float:
        return p_exact_rows(self.stationary, self.n)

    @property
    def q_at_least(self) -> float:
        return q_at_least(self.stationary, self.n)

    def distribution(self, kmax: int) -> List[float]:
        ''' P_0 … P_kmax '''
        return [p_exact_rows(self.stationary, k) for k in range(kmax + 1)]


class FreePathStats(namedtuple('FreePathStats', ['mean', 'variance'])):
    ''' Mean and variance of the number of rows a straight transit clears.'''
    __slots__ = ()

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def free_path_stats(dist: StationaryDistribution) -> FreePathStats:
    if dist.p2 <= 0.0:
        raise DivergentMean('p2 = %r: every straight transit is unbounded' %
                            dist.p2)
    ratio = dist.p1 / dist.p2
    return FreePathStats(ratio, ratio * (1.0 + ratio))


class SteeringModel(
        namedtuple('SteeringModel', ['theta_cr', 'alpha_over_gamma'])):
    ''' Steering authority θcr of the quantized vehicle and the field's α/γ.
    '''
    __slots__ = ()

    def __new__(cls, theta_cr: float, alpha_over_gamma: float):
        theta_cr = float(theta_cr)
        alpha_over_gamma = float(alpha_over_gamma)
        if not 0.0 <= theta_cr < math.pi / 2:
            raise InvalidParameter('theta_cr must lie in [0, pi/2), got %r' %
                                   theta_cr)
        if not alpha_over_gamma > 0.0:
            raise InvalidParameter('alpha/gamma must be positive')
        return super().__new__(cls, theta_cr, alpha_over_gamma)

    @property
    def reach(self) -> float:
        ''' Lateral reach in units of the row gap. '''
        return math.tan(self.theta_cr)


def _sides(sides: int) -> int:
    if sides not in (1, 2):
        raise InvalidParameter('sides must be 1 or 2, got %r' % (sides, ))
    return sides


def row_clear_prob(dist: StationaryDistribution,
                   steer: SteeringModel,
                   sides: int = 1) -> float:
    miss = math.exp(-_sides(sides) * steer.alpha_over_gamma * steer.reach)
    return dist.p1 + dist.p2 * (1.0 - miss)


def collision_free_prob(dist: StationaryDistribution,
                        steer: SteeringModel,
                        n: int,
                        sides: int = 1) -> float:
    ''' Probability that the steering protocol clears n rows. '''
    n = _count(n)
    if steer.theta_cr == 0.0:
        return q_at_least(dist, n)
    miss = math.exp(-_sides(sides) * steer.alpha_over_gamma * steer.reach)
    log_clear = math.log1p(-dist.p2 * miss)
    return math.exp(n * log_clear)


def critical_theta(dist: StationaryDistribution,
                   alpha_over_gamma: float,
                   n: int,
                   target: float,
                   sides: int = 1) -> float:
    ''' Smallest θcr at which the collision free probability reaches
        `target`, by bisection.
    '''
    n = _count(n)
    floor = q_at_least(dist, n)
    if target == floor:
        return 0.0
    if not floor < target < 1.0:
        raise NoRoot('target %r outside (%r, 1)' % (target, floor))

    def excess(theta: float) -> float:
        steer = SteeringModel(theta, alpha_over_gamma)
        return collision_free_prob(dist, steer, n, sides) - target

    root = optimize.bisect(excess, 0.0, THETA_MAX, xtol=1e-12, maxiter=200)
    LOG.debug('critical theta for n=%d target=%r: %r', n, target, root)
    return root


def transition_window(dist: StationaryDistribution,
                      alpha_over_gamma: float,
                      n: int,
                      low: float = 0.1,
                      high: float = 0.95,
                      sides: int = 1) -> Tuple[float, float]:
    ''' θcr at which the probability passes `low` and then `high`. '''
    floor = q_at_least(dist, n)
    start = 0.0
    if low > floor:
        start = critical_theta(dist, alpha_over_gamma, n, low, sides)
    return start, critical_theta(dist, alpha_over_gamma, n, high, sides)


def analytic_table(
        dist: StationaryDistribution,
        alpha_over_gamma: float,
        n_grid: Iterable[int],
        theta_grid: Iterable[float],
        sides: int = 1) -> List[Tuple[int, float, float]]:
    ''' (n, θcr, probability) for every grid point, n-major. '''
    thetas = list(theta_grid)
    result = []
    for n in n_grid:
        for theta in thetas:
            steer = SteeringModel(theta, alpha_over_gamma)
            result.append(
                (int(n), theta, collision_free_prob(dist, steer, n, sides)))
    return result
