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
''' Pinhole projection onto the body-frame image axis and time-to-contact
    estimation from image measurements.

    The image plane sits one unit ahead of the body origin. A feature
    transits when its along-heading distance equals one; the time to that
    event is its time-to-transit τ. Only the numerator of the projection
    scales with the focal length f.
'''
import csv
import logging
import math
from collections import namedtuple
from typing import Iterable, List, Sequence, TextIO

import numpy as np

from mof import BehindCamera, InvalidParameter, ProjectionSingularity
from mof import UndefinedTau
from mof.field import substream

LOG = logging.getLogger('mof')

DERIVATIVE_FLOOR = 1e-12
SINGULARITY = 1e-12
SCHEMES = ('central', 'backward')

__all__ = [
    'ApproachScenario',
    'ClusterSpread',
    'FeaturePoint',
    'FeatureProjection',
    'TauEstimate',
    'cluster_tau_spread',
    'image_size',
    'image_size_rate',
    'image_size_series',
    'project',
    'speed_trend',
    'tau_analytic',
    'tau_from_track',
    'tau_series',
    'time_to_contact',
    'transit_drift',
    'write_tau_csv',
    'write_track_csv',
]


class FeaturePoint(namedtuple('FeaturePoint', ['id', 'x', 'y'])):
    __slots__ = ()

    @property
    def position(self):
        return self.x, self.y


FeatureProjection = namedtuple('FeatureProjection', ['id', 'd_img', 't'])

TauEstimate = namedtuple('TauEstimate', ['id', 'tau', 't'])

ClusterSpread = namedtuple('ClusterSpread',
                           ['window', 'mean_tau', 'rel_std'])


class ApproachScenario(
        namedtuple('ApproachScenario', ['d_obj', 'x0', 'v', 'f'],
                   defaults=[1.0])):
    ''' Object of diameter `d_obj` approached head on at constant speed. '''
    __slots__ = ()

    def __new__(cls, d_obj: float, x0: float, v: float, f: float = 1.0):
        for name, value in (('d_obj', d_obj), ('x0', x0), ('v', v), ('f', f)):
            if not value > 0:
                raise InvalidParameter('%s must be positive, got %r' %
                                       (name, value))
        return super().__new__(cls, float(d_obj), float(x0), float(v),
                               float(f))

    def distance(self, t):
        return self.x0 - self.v * np.asarray(t, dtype=float)


def image_size(scn: ApproachScenario, x: float) -> float:
    ''' Size on the image of the object at distance `x`. '''
    if not x > 0:
        raise BehindCamera('object at distance %r' % x)
    return scn.f * scn.d_obj / x


def image_size_series(scn: ApproachScenario, times) -> np.ndarray:
    distance = scn.distance(times)
    if np.any(distance <= 0):
        raise BehindCamera('the approach reaches the camera within the '
                           'requested times')
    return scn.f * scn.d_obj / distance


def image_size_rate(scn: ApproachScenario, d_img):
    ''' Growth rate of the image size predicted from the size alone. '''
    return scn.v / (scn.d_obj * scn.f) * np.square(d_img)


def _check_window(window: int, scheme: str) -> None:
    if scheme not in SCHEMES:
        raise InvalidParameter('unknown difference scheme %r' % scheme)
    if int(window) < 1:
        raise InvalidParameter('window must be at least one sample')


def _ratio(value: float, rate: float, floor: float) -> float:
    if abs(rate) < floor:
        raise UndefinedTau('image derivative %r below %r' % (rate, floor))
    return value / rate


def time_to_contact(d_series: Sequence[float],
                    dt: float,
                    window: int = 1,
                    t0: float = 0.0,
                    floor: float = DERIVATIVE_FLOOR,
                    feature_id: str = 'object') -> List[TauEstimate]:
    ''' τ = d/ḋ at every sample with `window` samples on both sides.

        `t0` is the time of the first sample. Assumes a constant closing
        speed, under which τ + t stays constant.
    '''
    _check_window(window, 'central')
    values = np.asarray(d_series, dtype=float)
    if values.size < 2 * window + 1:
        raise InvalidParameter('need %d samples, got %d' %
                               (2 * window + 1, values.size))
    if not dt > 0:
        raise InvalidParameter('dt must be positive')
    rates = (values[2 * window:] - values[:-2 * window]) / (2 * window * dt)
    result = []
    for offset, rate in enumerate(rates):
        index = offset + window
        result.append(
            TauEstimate(feature_id, _ratio(values[index], rate, floor),
                        t0 + index * dt))
    return result


def project(state, feat: FeaturePoint, f: float = 1.0,
            t: float = 0.0) -> FeatureProjection:
    ''' Image coordinate of `feat` seen from `state`.

        Positive to the right of the heading ray for features beyond the
        image plane.
    '''
    cos, sin = math.cos(state.theta), math.sin(state.theta)
    dx, dy = feat.x - state.x, feat.y - state.y
    denominator = 1.0 - cos * dx - sin * dy
    if abs(denominator) < SINGULARITY:
        raise ProjectionSingularity('feature %s on the image plane' %
                                    (feat.id, ))
    return FeatureProjection(feat.id, f * (-sin * dx + cos * dy) / denominator,
                             t)


def tau_analytic(state, feat: FeaturePoint, v: float,
                 t: float = 0.0) -> TauEstimate:
    ''' Time until `feat` transits the image plane at constant heading. '''
    if not v > 0:
        raise InvalidParameter('speed must be positive, got %r' % v)
    along = math.cos(state.theta) * (feat.x - state.x) + \
        math.sin(state.theta) * (feat.y - state.y)
    return TauEstimate(feat.id, (along - 1.0) / v, t)


def tau_series(track: Sequence[FeatureProjection],
               window: int = 1,
               scheme: str = 'central',
               floor: float = DERIVATIVE_FLOOR) -> List[TauEstimate]:
    ''' τ = d/ḋ along a track of one feature, from image data only.

        Samples may be unevenly spaced. The `backward` scheme is causal.
    '''
    _check_window(window, scheme)
    need = 2 * window + 1 if scheme == 'central' else window + 1
    if len(track) < need:
        raise InvalidParameter('need %d samples for a %s difference, got %d' %
                               (need, scheme, len(track)))
    result = []
    if scheme == 'central':
        indices = range(window, len(track) - window)
    else:
        indices = range(window, len(track))
    for index in indices:
        if scheme == 'central':
            before, after = track[index - window], track[index + window]
        else:
            before, after = track[index - window], track[index]
        rate = (after.d_img - before.d_img) / (after.t - before.t)
        sample = track[index]
        result.append(
            TauEstimate(sample.id, _ratio(sample.d_img, rate, floor),
                        sample.t))
    return result


def tau_from_track(track: Sequence[FeatureProjection],
                   window: int = 1,
                   scheme: str = 'central',
                   floor: float = DERIVATIVE_FLOOR) -> TauEstimate:
    ''' The most recent estimate the scheme can give. '''
    _check_window(window, scheme)
    need = 2 * window + 1 if scheme == 'central' else window + 1
    return tau_series(track[-need:], window, scheme, floor)[-1]


def transit_drift(estimates: Sequence[TauEstimate]) -> float:
    ''' Slope of τ + t over time, zero at constant speed. '''
    if len(estimates) < 2:
        raise InvalidParameter('need two estimates for a drift')
    times = np.array([e.t for e in estimates])
    totals = np.array([e.tau for e in estimates]) + times
    slope, _ = np.polyfit(times, totals, 1)
    return float(slope)


def speed_trend(estimates: Sequence[TauEstimate],
                tolerance: float = 1e-3) -> str:
    ''' 'accelerating', 'slowing' or 'constant'.

        τ + t falls while the vehicle speeds up and grows while it slows
        down.
    '''
    drift = transit_drift(estimates)
    if drift < -tolerance:
        return 'accelerating'
    if drift > tolerance:
        return 'slowing'
    return 'constant'


def cluster_tau_spread(windows: Iterable[int] = (10, 40, 160),
                       n_features: int = 20,
                       sigma: float = 0.005,
                       dt: float = 0.01,
                       t_eval: float = 1.0,
                       x0: float = 10.0,
                       v: float = 2.0,
                       repeats: int = 20,
                       seed: int = 0) -> List[ClusterSpread]:
    ''' Spread of τ over a cluster of features at one depth under
        multiplicative Gaussian image noise of relative size `sigma`.

        For every differencing window the relative standard deviation of
        the cluster's τ estimates is averaged over `repeats` noise draws.
    '''
    windows = [int(w) for w in windows]
    widest = max(windows)
    rng = substream(seed, 0)
    sizes = rng.uniform(0.5, 1.5, n_features)
    times = t_eval + dt * np.arange(-widest, widest + 1)
    centre = widest
    result = []
    spreads = {w: [] for w in windows}
    means = {w: [] for w in windows}
    for _ in range(repeats):
        clean = np.array([
            image_size_series(ApproachScenario(size, x0, v), times)
            for size in sizes
        ])
        noisy = clean * (1.0 + sigma * rng.standard_normal(clean.shape))
        for w in windows:
            rate = (noisy[:, centre + w] - noisy[:, centre - w]) / (2 * w * dt)
            taus = noisy[:, centre] / rate
            means[w].append(float(np.mean(taus)))
            spreads[w].append(float(np.std(taus) / abs(np.mean(taus))))
    for w in windows:
        result.append(
            ClusterSpread(w, float(np.mean(means[w])),
                          float(np.mean(spreads[w]))))
        LOG.debug('window %d: tau %.6f rel std %.6f', w, result[-1].mean_tau,
                  result[-1].rel_std)
    return result


def write_track_csv(projections: Iterable[FeatureProjection],
                    outfile: TextIO) -> None:
    writer = csv.writer(outfile)
    writer.writerow(['t', 'feature_id', 'd_img'])
    for sample in projections:
        writer.writerow([repr(float(sample.t)), sample.id,
                         repr(float(sample.d_img))])


def write_tau_csv(estimates: Iterable[TauEstimate], outfile: TextIO) -> None:
    writer = csv.writer(outfile)
    writer.writerow(['t', 'feature_id', 'tau'])
    for estimate in estimates:
        writer.writerow([repr(float(estimate.t)), estimate.id,
                         repr(float(estimate.tau))])
