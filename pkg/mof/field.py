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
''' Markovian obstacle fields.

    A row is a line partitioned into alternating obstacle slats and open
    gaps with exponential(α) and exponential(β) widths. Rows are stacked
    at a spacing of 1/γ. Slats are closed intervals.
'''
import json
import logging
import math
import struct
from collections import namedtuple
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from mof import InvalidParameter, OutOfExtent

LOG = logging.getLogger('mof')

Interval = Tuple[float, float]

# chunk of (slat, gap) pairs drawn per vectorised step
_MAX_CHUNK = 1 << 20

__all__ = [
    'FieldParams',
    'LazyField',
    'ObstacleField',
    'ObstacleRow',
    'StationaryDistribution',
    'dump_field',
    'field_from_json',
    'field_to_json',
    'load_field',
    'occupancy',
    'occupancy_stderr',
    'sample_field',
    'sample_row',
    'stationary_probs',
    'substream',
]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidParameter('%s must be a positive finite number, got %r' %
                               (name, value))
    return value


class FieldParams(
        namedtuple('FieldParams', ['alpha', 'beta', 'gamma', 'seed'],
                   defaults=[0])):
    ''' Rates of the slat law (α), the gap law (β) and the row law (γ). '''
    __slots__ = ()

    def __new__(cls, alpha: float, beta: float, gamma: float, seed: int = 0):
        alpha = _positive('alpha', alpha)
        beta = _positive('beta', beta)
        gamma = _positive('gamma', gamma)
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidParameter('seed must be an unsigned 64-bit integer')
        return super().__new__(cls, alpha, beta, gamma, seed)

    @property
    def row_gap(self) -> float:
        return 1.0 / self.gamma

    @property
    def alpha_over_gamma(self) -> float:
        return self.alpha / self.gamma


StationaryDistribution = namedtuple('StationaryDistribution', ['p1', 'p2'])
StationaryDistribution.__doc__ = ''' Probabilities of open space (p1) and of
lying on a slat (p2). '''


def stationary_probs(alpha: float, beta: float) -> StationaryDistribution:
    ''' Stationary law of the two state line, p2 is computed as 1 - p1 so
        the pair sums to one exactly.
    '''
    alpha = _positive('alpha', alpha)
    beta = _positive('beta', beta)
    p1 = alpha / (alpha + beta)
    return StationaryDistribution(p1, 1.0 - p1)


def occupancy_stderr(params: FieldParams, length: float) -> float:
    ''' Standard error of the occupied fraction of a window of `length`. '''
    dist = stationary_probs(params.alpha, params.beta)
    length = _positive('length', length)
    return math.sqrt(2.0 * dist.p1 * dist.p2 /
                     ((params.alpha + params.beta) * length))


def substream(seed: int, *key: int) -> np.random.Generator:
    ''' Independent generator for `key` under the master `seed`. '''
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(sequence))


def _ordinate_key(ordinate: float) -> int:
    return struct.unpack('<Q', struct.pack('<d', float(ordinate)))[0]


class ObstacleRow:
    ''' Slats of a single row, clipped to the sampled window `extent`. '''

    __slots__ = ('ordinate', 'starts', 'ends', 'extent')

    def __init__(self, ordinate: float, slats: Sequence[Interval],
                 extent: Interval) -> None:
        starts = np.array([float(s[0]) for s in slats], dtype=float)
        ends = np.array([float(s[1]) for s in slats], dtype=float)
        self._init(ordinate, starts, ends, extent)

    @classmethod
    def from_arrays(cls, ordinate: float, starts: np.ndarray, ends: np.ndarray,
                    extent: Interval) -> 'ObstacleRow':
        row = cls.__new__(cls)
        row._init(ordinate, np.asarray(starts, dtype=float),
                  np.asarray(ends, dtype=float), extent)
        return row

    def _init(self, ordinate, starts, ends, extent) -> None:
        lo, hi = float(extent[0]), float(extent[1])
        if not hi > lo:
            raise InvalidParameter('empty extent [%r, %r]' % (lo, hi))
        if np.any(ends <= starts):
            raise InvalidParameter('every slat needs s_hi > s_lo')
        if np.any(starts[1:] <= ends[:-1]):
            raise InvalidParameter('slats must be increasing and disjoint')
        if starts.size and (starts[0] < lo or ends[-1] > hi):
            raise InvalidParameter('slats must lie inside the extent')
        starts.setflags(write=False)
        ends.setflags(write=False)
        self.ordinate = float(ordinate)
        self.starts = starts
        self.ends = ends
        self.extent = (lo, hi)

    @property
    def slats(self) -> List[Interval]:
        return list(zip(self.starts.tolist(), self.ends.tolist()))

    def __len__(self) -> int:
        return int(self.starts.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObstacleRow):
            return NotImplemented
        return (self.ordinate == other.ordinate
                and self.extent == other.extent
                and np.array_equal(self.starts, other.starts)
                and np.array_equal(self.ends, other.ends))

    def __repr__(self) -> str:
        return 'ObstacleRow(ordinate=%r, slats=%d, extent=%r)' % (
            self.ordinate, len(self), self.extent)

    def _index(self, s):
        return np.searchsorted(self.starts, s, side='right') - 1

    def occupancy(self, s: float) -> bool:
        ''' True iff `s` lies on a slat, endpoints included. '''
        lo, hi = self.extent
        if not lo <= s <= hi:
            raise OutOfExtent('%r outside [%r, %r] of row at %r' %
                              (s, lo, hi, self.ordinate))
        idx = int(self._index(s))
        return idx >= 0 and s <= self.ends[idx]

    def occupied(self, points: np.ndarray) -> np.ndarray:
        ''' Vectorised `occupancy`. '''
        points = np.asarray(points, dtype=float)
        lo, hi = self.extent
        if np.any((points < lo) | (points > hi)):
            raise OutOfExtent('query outside [%r, %r]' % (lo, hi))
        if not self.starts.size:
            return np.zeros(points.shape, dtype=bool)
        idx = self._index(points)
        safe = np.clip(idx, 0, None)
        return (idx >= 0) & (points <= self.ends[safe])

    def slat_at(self, s: float) -> Optional[Interval]:
        ''' The slat containing `s` or None. '''
        if not self.occupancy(s):
            return None
        idx = int(self._index(s))
        return float(self.starts[idx]), float(self.ends[idx])

    def gaps(self) -> List[Interval]:
        ''' Open intervals bounded by a slat edge on both sides. '''
        return list(zip(self.ends[:-1].tolist(), self.starts[1:].tolist()))

    def occupied_fraction(self) -> float:
        lo, hi = self.extent
        return float(np.sum(self.ends - self.starts)) / (hi - lo)


def occupancy(row: ObstacleRow, s: float) -> bool:
    return row.occupancy(s)


def _draw_slats(params: FieldParams, lo: float, hi: float,
                rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    alpha, beta = params.alpha, params.beta
    p1 = alpha / (alpha + beta)
    starts: List[np.ndarray] = []
    ends: List[np.ndarray] = []

    # stationary phase at the left edge, residual redrawn by memorylessness
    if rng.random() < p1:
        cursor = lo + rng.exponential(1.0 / beta)
    else:
        first = lo + rng.exponential(1.0 / alpha)
        starts.append(np.array([lo]))
        ends.append(np.array([first]))
        cursor = first + rng.exponential(1.0 / beta)

    pair_rate = alpha * beta / (alpha + beta)
    while cursor < hi:
        size = min(_MAX_CHUNK,
                   16 + int(1.2 * (hi - cursor) * pair_rate))
        segments = np.empty(2 * size)
        segments[0::2] = rng.exponential(1.0 / alpha, size)
        segments[1::2] = rng.exponential(1.0 / beta, size)
        edges = cursor + np.cumsum(segments)
        starts.append(np.concatenate(([cursor], edges[1:-1:2])))
        ends.append(edges[0::2])
        cursor = float(edges[-1])

    if not starts:
        return np.empty(0), np.empty(0)
    s_lo = np.concatenate(starts)
    s_hi = np.concatenate(ends)
    keep = s_lo < hi
    s_lo, s_hi = s_lo[keep], np.minimum(s_hi[keep], hi)
    keep = s_hi > s_lo
    s_lo, s_hi = s_lo[keep], s_hi[keep]
    if s_lo.size > 1:
        # gaps lost to rounding merge their neighbours
        apart = s_lo[1:] > s_hi[:-1]
        s_lo = s_lo[np.concatenate(([True], apart))]
        s_hi = s_hi[np.concatenate((apart, [True]))]
    return s_lo, s_hi


def sample_row(params: FieldParams,
               ordinate: float,
               extent: Interval,
               rng: Optional[np.random.Generator] = None) -> ObstacleRow:
    ''' Sample one row on `extent`.

        Without `rng` the stream is derived from the params seed and the
        ordinate, which makes the row a pure function of (params,
        ordinate, extent).
    '''
    lo, hi = float(extent[0]), float(extent[1])
    if not hi > lo:
        raise InvalidParameter('empty extent [%r, %r]' % (lo, hi))
    if rng is None:
        rng = substream(params.seed, _ordinate_key(ordinate))
    s_lo, s_hi = _draw_slats(params, lo, hi, rng)
    return ObstacleRow.from_arrays(ordinate, s_lo, s_hi, (lo, hi))


class ObstacleField:
    ''' Rows with strictly increasing ordinates over a common extent. '''

    def __init__(self,
                 rows: Sequence[ObstacleRow],
                 extent: Interval,
                 params: Optional[FieldParams] = None,
                 jitter: bool = False) -> None:
        if not rows:
            raise InvalidParameter('a field needs at least one row')
        ordinates = [row.ordinate for row in rows]
        if any(b <= a for a, b in zip(ordinates, ordinates[1:])):
            raise InvalidParameter('row ordinates must strictly increase')
        extent = (float(extent[0]), float(extent[1]))
        for row in rows:
            if row.extent != extent:
                raise InvalidParameter('row at %r is clipped to %r not %r' %
                                       (row.ordinate, row.extent, extent))
        self.rows = list(rows)
        self.extent = extent
        self.params = params
        self.jitter = jitter

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ObstacleRow]:
        return iter(self.rows)

    def __getitem__(self, index: int) -> ObstacleRow:
        return self.rows[index]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObstacleField):
            return NotImplemented
        return self.extent == other.extent and self.rows == other.rows

    @property
    def ordinates(self) -> List[float]:
        return [row.ordinate for row in self.rows]

    def ordinate(self, index: int) -> float:
        return self.rows[index].ordinate

    def row_for(self, index: int, center: float, reach: float = 0.0):
        # pylint: disable=unused-argument
        return self.rows[index]


def sample_field(params: FieldParams,
                 n_rows: int,
                 extent: Interval,
                 jitter: bool = False,
                 rng: Optional[np.random.Generator] = None) -> ObstacleField:
    ''' Sample `n_rows` independent rows, row k at (k+1)/γ.

        With `jitter` each row is pushed up by an exponential(γ) draw and
        the rows are re-sorted. Every row has its own substream keyed by
        its index so the result does not depend on the generation order.
    '''
    n_rows = int(n_rows)
    if n_rows < 1:
        raise InvalidParameter('n_rows must be at least 1, got %d' % n_rows)
    seed = params.seed
    if rng is not None:
        seed = int(rng.integers(2**64, dtype=np.uint64))
    rows = []
    for k in range(n_rows):
        ordinate = (k + 1) / params.gamma
        if jitter:
            ordinate += substream(seed, k, 1).exponential(params.row_gap)
        rows.append(sample_row(params, ordinate, extent, substream(seed, k, 0)))
    if jitter:
        rows.sort(key=lambda row: row.ordinate)
    LOG.debug('sampled %d rows on %r (jitter=%s)', n_rows, extent, jitter)
    return ObstacleField(rows, extent, params, jitter)


class LazyField:
    ''' Rows sampled in order, on first use, in a window around the point
        where the vehicle arrives.

        Rows draw one after the other from the trial's generator. While the
        window width stays fixed row k consumes the same draws wherever the
        vehicle arrives, so its content seen from the arrival point is the
        same for every steering angle. Used by the Monte Carlo drivers,
        where a full-width field per trial would be wasted work.
    '''

    def __init__(self,
                 params: FieldParams,
                 n_rows: int,
                 half_width: float,
                 rng: np.random.Generator,
                 jitter: bool = False) -> None:
        n_rows = int(n_rows)
        if n_rows < 1:
            raise InvalidParameter('n_rows must be at least 1, got %d' %
                                   n_rows)
        self.params = params
        self.half_width = _positive('half_width', half_width)
        self.jitter = jitter
        self._n_rows = n_rows
        self._rng = rng
        self._rows: List[ObstacleRow] = []
        self._jittered: Optional[List[float]] = None
        if jitter:
            ordinates = np.arange(1, n_rows + 1) / params.gamma
            self._jittered = np.sort(
                ordinates +
                rng.exponential(params.row_gap, n_rows)).tolist()

    def __len__(self) -> int:
        return self._n_rows

    def ordinate(self, index: int) -> float:
        if self._jittered is not None:
            return self._jittered[index]
        return (index + 1) / self.params.gamma

    def row_for(self, index: int, center: float,
                reach: float = 0.0) -> ObstacleRow:
        if index < len(self._rows):
            return self._rows[index]
        if index != len(self._rows):
            raise InvalidParameter('rows are sampled in order, asked for %d '
                                   'after %d' % (index, len(self._rows)))
        half = max(self.half_width, reach + 1.0 / self.params.alpha)
        row = sample_row(self.params, self.ordinate(index),
                         (center - half, center + half), self._rng)
        self._rows.append(row)
        return row


def field_to_json(field: ObstacleField) -> dict:
    params = field.params
    return {
        'alpha': params.alpha if params else None,
        'beta': params.beta if params else None,
        'gamma': params.gamma if params else None,
        'seed': params.seed if params else None,
        'extent': list(field.extent),
        'jitter': field.jitter,
        'rows': [{
            'ordinate': row.ordinate,
            'slats': [list(s) for s in row.slats]
        } for row in field.rows],
    }


def field_from_json(document: dict) -> ObstacleField:
    try:
        extent = tuple(document['extent'])
        params = None
        if document.get('alpha') is not None:
            params = FieldParams(document['alpha'], document['beta'],
                                 document['gamma'], document.get('seed') or 0)
        rows = [
            ObstacleRow(row['ordinate'], row['slats'], extent)
            for row in document['rows']
        ]
    except (KeyError, TypeError) as exc:
        raise InvalidParameter('malformed field document: %s' % exc) from exc
    return ObstacleField(rows, extent, params, bool(document.get('jitter')))


def dump_field(field: ObstacleField, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as outfile:
        json.dump(field_to_json(field), outfile)


def load_field(path: str) -> ObstacleField:
    with open(path, encoding='utf-8') as infile:
        return field_from_json(json.load(infile))
