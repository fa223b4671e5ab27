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
''' Closed-loop runs: gate passage, circling a goal and flight through a
    field, plus collision detection and trajectory export.

    Sensing happens at the start of every step, the resulting command is
    held over the step. τ comes from a backward difference of the last two
    image samples, so the first step of a gate flies straight at `v_cap`.
'''
import bisect
import csv
import logging
import math
from collections import namedtuple
from importlib import metadata
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from mof import InvalidParameter, NoGapInView, OutOfExtent
from mof import ProjectionSingularity, UndefinedTau
from mof.camera import FeaturePoint, FeatureProjection, project
from mof.camera import tau_from_track
from mof.control import (CircleGains, ControlInput, GateGains, VehicleState,
                         bearing_law, gate_boundary, in_invariant_set,
                         measure_range_bearing, normalize_angle,
                         step_kinematics, step_kinematics_array, transit_law)
from mof.field import ObstacleField, ObstacleRow

LOG = logging.getLogger('mof')

SCHEMA = 1

CSV_COLUMNS = ('t', 'x', 'y', 'theta', 'v', 'omega', 'd_l', 'd_r', 'tau_l',
               'tau_r')

__all__ = [
    'BatchResult',
    'BearingSelector',
    'Event',
    'GateScenario',
    'GateSelector',
    'Sample',
    'Trajectory',
    'WidestSelector',
    'detect_collision',
    'run_circle',
    'run_circle_batch',
    'run_clutter_flight',
    'run_gate',
    'select_gate_features',
    'selectors',
]

Sample = namedtuple('Sample', ['t', 'state', 'control', 'projections', 'taus'],
                    defaults=[(), ()])

Event = namedtuple('Event', ['t', 'kind', 'detail'], defaults=[None])

TERMINAL = frozenset(('gate_crossing', 'collision', 'timeout', 'field_exit',
                      'no_gap', 'left_extent', 'converged'))


class Trajectory:
    ''' Samples of one closed-loop run and the events that happened.

        Event times are sample times. Interpolated instants go into the
        event detail.
    '''

    def __init__(self) -> None:
        self.samples: List[Sample] = []
        self.events: List[Event] = []

    def __len__(self) -> int:
        return len(self.samples)

    def append(self, sample: Sample) -> None:
        if self.samples and not sample.t > self.samples[-1].t:
            raise InvalidParameter('sample time %r after %r' %
                                   (sample.t, self.samples[-1].t))
        self.samples.append(sample)

    def record(self, sample: Sample) -> None:
        ''' `append`, replacing a last sample taken at the same time. '''
        if self.samples and self.samples[-1].t == sample.t:
            self.samples[-1] = sample
        else:
            self.append(sample)

    def event(self, kind: str, **detail) -> Event:
        if not self.samples:
            raise InvalidParameter('no sample to attach %s to' % kind)
        event = Event(self.samples[-1].t, kind, detail)
        self.events.append(event)
        LOG.debug('t=%.4f %s %s', event.t, kind, detail)
        return event

    def first(self, kind: str) -> Optional[Event]:
        return next((e for e in self.events if e.kind == kind), None)

    @property
    def outcome(self) -> Optional[str]:
        terminal = [e.kind for e in self.events if e.kind in TERMINAL]
        return terminal[-1] if terminal else None

    @property
    def crossing(self) -> Optional[dict]:
        event = self.first('gate_crossing')
        return event.detail if event else None

    @property
    def terminal(self) -> Sample:
        return self.samples[-1]

    def to_csv(self, outfile: TextIO, comment: Optional[str] = None) -> None:
        if comment is not None:
            outfile.write('# %s\n' % comment)
        writer = csv.writer(outfile, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for sample in self.samples:
            projections = list(sample.projections) or [None, None]
            taus = list(sample.taus) or [None, None]
            writer.writerow([
                _cell(sample.t),
                _cell(sample.state.x),
                _cell(sample.state.y),
                _cell(sample.state.theta),
                _cell(sample.control.v),
                _cell(sample.control.omega),
                _cell(projections[0] and projections[0].d_img),
                _cell(projections[1] and projections[1].d_img),
                _cell(taus[0] and taus[0].tau),
                _cell(taus[1] and taus[1].tau),
            ])

    def events_document(self, config: Optional[dict] = None) -> dict:
        return {
            'schema': SCHEMA,
            'config': config,
            'outcome': self.outcome,
            'events': [{
                't': e.t,
                'kind': e.kind,
                'detail': e.detail or {}
            } for e in self.events],
        }

    def to_document(self, config: Optional[dict] = None) -> dict:
        document = self.events_document(config)
        document['columns'] = list(CSV_COLUMNS)
        document['samples'] = [_row(s) for s in self.samples]
        return document


def _cell(value) -> str:
    return '' if value is None else repr(float(value))


def _row(sample: Sample) -> list:
    projections = list(sample.projections) or [None, None]
    taus = list(sample.taus) or [None, None]
    values = [
        sample.t, sample.state.x, sample.state.y, sample.state.theta,
        sample.control.v, sample.control.omega,
        projections[0] and projections[0].d_img,
        projections[1] and projections[1].d_img, taus[0] and taus[0].tau,
        taus[1] and taus[1].tau
    ]
    return [None if v is None else float(v) for v in values]


class GateScenario(
        namedtuple('GateScenario', [
            'left_feature', 'right_feature', 'start', 'gains', 'dt', 't_max',
            'f'
        ],
                   defaults=[GateGains(), 1e-3, 60.0, 1.0])):
    __slots__ = ()

    def __new__(cls,
                left_feature: FeaturePoint,
                right_feature: FeaturePoint,
                start: VehicleState,
                gains: GateGains = GateGains(),
                dt: float = 1e-3,
                t_max: float = 60.0,
                f: float = 1.0):
        if left_feature.y != right_feature.y:
            raise InvalidParameter('gate features need equal ordinates')
        if not left_feature.x < right_feature.x:
            raise InvalidParameter('left feature must lie left of the right')
        if not start.y < left_feature.y:
            raise InvalidParameter('start must lie below the gate')
        if not dt > 0 or not t_max > 0:
            raise InvalidParameter('dt and t_max must be positive')
        return super().__new__(cls, left_feature, right_feature, start, gains,
                               float(dt), float(t_max), float(f))


def _along(state: VehicleState, feat: FeaturePoint) -> float:
    return math.cos(state.theta) * (feat.x - state.x) + \
        math.sin(state.theta) * (feat.y - state.y)


def _ahead(state: VehicleState, *features: FeaturePoint) -> bool:
    ''' Whether every feature lies beyond the image plane. '''
    return all(_along(state, feat) > 1.0 for feat in features)


class _GatePilot:
    ''' Image-only pilot for one pair of features.

        Events raised while sensing wait in `pending` until the caller has
        recorded the sample they belong to.
    '''

    def __init__(self, left: FeaturePoint, right: FeaturePoint,
                 gains: GateGains, f: float, align_gain: Optional[float]):
        self.left = left
        self.right = right
        self.gains = gains
        self.f = f
        self.align_gain = align_gain
        self.tracks: Tuple[List[FeatureProjection],
                           List[FeatureProjection]] = ([], [])
        self.boundary: Optional[str] = None
        self.aligned = align_gain is None
        self.last = ControlInput(gains.v_cap, 0.0)
        self.pending: List[Tuple[str, dict]] = []

    def flush(self, traj: Trajectory) -> None:
        for kind, detail in self.pending:
            traj.event(kind, **detail)
        self.pending = []

    def _coast(self) -> ControlInput:
        self.last = ControlInput(self.last.v, 0.0)
        return self.last

    def _guard(self, state: VehicleState, u: ControlInput,
               dt: float) -> ControlInput:
        # hold the heading if the step would leave the invariant image set
        if u.omega == 0.0:
            return u
        nxt = step_kinematics(state, u, dt)
        if not _ahead(nxt, self.left, self.right):
            return u
        try:
            d_l = project(nxt, self.left, self.f).d_img
            d_r = project(nxt, self.right, self.f).d_img
        except ProjectionSingularity:
            return u
        if in_invariant_set(d_l, d_r, self.gains.epsilon):
            return u
        return ControlInput(u.v, 0.0)

    def command(self, state: VehicleState, t: float, dt: float):
        ''' (command, projections, taus) from the image at time t. '''
        try:
            p_l = project(state, self.left, self.f, t)
            p_r = project(state, self.right, self.f, t)
        except ProjectionSingularity:
            for track in self.tracks:
                track.clear()
            LOG.warning('feature on the image plane at t=%.4f, coasting', t)
            self.pending.append(('singularity', {}))
            return self._coast(), (), ()
        self.tracks[0].append(p_l)
        self.tracks[1].append(p_r)
        if len(self.tracks[0]) < 2:
            return self._coast(), (p_l, p_r), ()
        try:
            tau_l = tau_from_track(self.tracks[0][-2:], scheme='backward')
            tau_r = tau_from_track(self.tracks[1][-2:], scheme='backward')
        except UndefinedTau:
            return self._coast(), (p_l, p_r), ()
        eps = self.gains.epsilon
        inside = in_invariant_set(p_l.d_img, p_r.d_img, eps)
        u = transit_law(p_l.d_img, p_r.d_img, tau_l, tau_r, self.gains)
        if not self.aligned:
            if not (inside and _ahead(state, self.left, self.right)):
                middle = 0.5 * (p_l.d_img + p_r.d_img)
                self.last = ControlInput(u.v,
                                         -self.align_gain * math.atan(middle))
                return self.last, (p_l, p_r), (tau_l, tau_r)
            self.aligned = True
            self.pending.append(('aligned', {}))
        boundary = gate_boundary(p_l.d_img, p_r.d_img, eps)
        if boundary is None and _ahead(state, self.left, self.right):
            guarded = self._guard(state, u, dt)
            if guarded is not u:
                boundary = 'guard'
                u = guarded
        if boundary != self.boundary:
            if boundary is not None:
                self.pending.append(('boundary', {'side': boundary}))
            self.boundary = boundary
        self.last = u
        return u, (p_l, p_r), (tau_l, tau_r)


def _crossing(before: VehicleState, after: VehicleState,
              ordinate: float) -> Optional[Tuple[float, float]]:
    ''' (fraction of the step, abscissa) where the step crosses `ordinate`.
    '''
    if not before.y < ordinate <= after.y:
        return None
    frac = (ordinate - before.y) / (after.y - before.y)
    return frac, before.x + frac * (after.x - before.x)


def run_gate(s: GateScenario) -> Trajectory:
    ''' Fly the time-to-transit law through the gate of `s`. '''
    traj = Trajectory()
    pilot = _GatePilot(s.left_feature, s.right_feature, s.gains, s.f, None)
    state = s.start
    gate_y = s.left_feature.y
    steps = int(math.ceil(s.t_max / s.dt))
    for i in range(steps + 1):
        t = i * s.dt
        u, projections, taus = pilot.command(state, t, s.dt)
        traj.append(Sample(t, state, u, projections, taus))
        pilot.flush(traj)
        if i == steps:
            traj.event('timeout')
            break
        nxt = step_kinematics(state, u, s.dt)
        hit = _crossing(state, nxt, gate_y)
        if hit is not None:
            frac, x_cross = hit
            traj.append(Sample((i + 1) * s.dt, nxt, u))
            traj.event('gate_crossing',
                       x=x_cross,
                       heading=nxt.theta,
                       t_cross=t + frac * s.dt,
                       inside=s.left_feature.x < x_cross < s.right_feature.x)
            break
        state = nxt
    LOG.info('gate run: %s after %d samples', traj.outcome, len(traj))
    return traj


def run_circle(goal: FeaturePoint,
               gains: CircleGains,
               start: VehicleState,
               dt: float = 1e-3,
               t_max: float = 100.0,
               orientation: str = 'ccw',
               tol: Optional[float] = None,
               record_every: int = 1) -> Trajectory:
    ''' Fly the range/bearing law around `goal`.

        With `tol` the run stops once both |ρ - d| and the bearing error
        drop below it. The terminal (ρ, φ) is recorded in the last event.
    '''
    if not dt > 0 or not t_max > 0:
        raise InvalidParameter('dt and t_max must be positive')
    traj = Trajectory()
    target = math.pi / 2 if orientation == 'ccw' else -math.pi / 2
    state = start
    steps = int(math.ceil(t_max / dt))
    for i in range(steps + 1):
        t = i * dt
        m = measure_range_bearing(state, goal)
        u = bearing_law(m, gains, orientation)
        converged = tol is not None and abs(m.rho - gains.d_standoff) < tol \
            and abs(normalize_angle(m.phi - target)) < tol
        if i % record_every == 0 or converged or i == steps:
            traj.append(Sample(t, state, u))
        if converged:
            traj.event('converged', rho=m.rho, phi=m.phi)
            return traj
        if i == steps:
            traj.event('timeout', rho=m.rho, phi=m.phi)
            return traj
        state = step_kinematics(state, u, dt)
    return traj


BatchResult = namedtuple(
    'BatchResult', ['rho', 'phi', 'x', 'y', 'theta', 'converged_at'])


def run_circle_batch(goal: FeaturePoint,
                     gains: CircleGains,
                     starts: Sequence[VehicleState],
                     dt: float = 0.02,
                     t_max: float = 8000.0,
                     orientation: str = 'ccw',
                     tol: float = 9e-4) -> BatchResult:
    ''' Many independent `run_circle`s at once. A vehicle stops moving
        when it is within `tol` of the circle and its tangent heading;
        `converged_at` is nan for the ones that never do.
    '''
    if orientation not in ('ccw', 'cw'):
        raise InvalidParameter('orientation must be ccw or cw')
    x = np.array([s.x for s in starts], dtype=float)
    y = np.array([s.y for s in starts], dtype=float)
    theta = np.array([s.theta for s in starts], dtype=float)
    sign = 1.0 if orientation == 'ccw' else -1.0
    target = sign * math.pi / 2
    done = np.full(x.shape, np.nan)
    steps = int(math.ceil(t_max / dt))

    def measure():
        dx, dy = goal.x - x, goal.y - y
        rho = np.hypot(dx, dy)
        phi = np.remainder(np.arctan2(dy, dx) - theta + np.pi,
                           2 * np.pi) - np.pi
        return rho, phi

    for i in range(steps):
        rho, phi = measure()
        settled = (np.abs(rho - gains.d_standoff) < tol) & (np.abs(
            np.remainder(phi - target + np.pi, 2 * np.pi) - np.pi) < tol)
        done = np.where(settled & np.isnan(done), i * dt, done)
        moving = np.isnan(done)
        if not moving.any():
            break
        v = gains.lam * (rho - gains.d_standoff)
        omega = rho * np.sin(phi) - sign * gains.d_standoff
        v = np.where(moving, v, 0.0)
        omega = np.where(moving, omega, 0.0)
        x, y, theta = step_kinematics_array(x, y, theta, v, omega, dt)
    rho, phi = measure()
    LOG.info('circle batch: %d of %d converged',
             np.count_nonzero(~np.isnan(done)), done.size)
    theta = np.remainder(theta + np.pi, 2 * np.pi) - np.pi
    return BatchResult(rho, phi, x, y, theta, done)


class GateSelector:
    ''' Picks the gap of a row to fly through. '''

    def __init__(self, half_angle: float = math.pi / 3) -> None:
        if not 0 < half_angle < math.pi / 2:
            raise InvalidParameter('half_angle must lie in (0, pi/2)')
        self.half_angle = half_angle

    def candidates(self, state: VehicleState,
                   row: ObstacleRow) -> List[Tuple[float, float, float]]:
        ''' (bearing, lo, hi) of every gap in the view cone whose edges lie
            beyond the image plane.
        '''
        result = []
        for lo, hi in row.gaps():
            edges = (FeaturePoint('lo', lo, row.ordinate),
                     FeaturePoint('hi', hi, row.ordinate))
            if not _ahead(state, *edges):
                continue
            middle = 0.5 * (lo + hi)
            bearing = normalize_angle(
                math.atan2(row.ordinate - state.y, middle - state.x) -
                state.theta)
            if abs(bearing) <= self.half_angle:
                result.append((bearing, lo, hi))
        return result

    def select(self, state: VehicleState,
               row: ObstacleRow) -> Tuple[float, float]:
        raise NotImplementedError


class BearingSelector(GateSelector):
    ''' The gap angularly nearest the heading, then the wider, then the one
        further left.
    '''

    def select(self, state, row):
        found = self.candidates(state, row)
        if not found:
            raise NoGapInView('no gap within %.3f rad at row %r' %
                              (self.half_angle, row.ordinate))
        best = min(found,
                   key=lambda c: (round(abs(c[0]), 12), -(c[2] - c[1]), -c[0]))
        return best[1], best[2]


class WidestSelector(GateSelector):
    ''' The widest gap in view, then the angularly nearest. '''

    def select(self, state, row):
        found = self.candidates(state, row)
        if not found:
            raise NoGapInView('no gap within %.3f rad at row %r' %
                              (self.half_angle, row.ordinate))
        best = min(found, key=lambda c: (-(c[2] - c[1]), abs(c[0])))
        return best[1], best[2]


def selectors() -> Dict[str, type]:
    named = {'bearing': BearingSelector, 'widest': WidestSelector}
    for entry_point in metadata.entry_points(group='mof_gate_selectors'):
        named[entry_point.name] = entry_point.load()
    return named


def select_gate_features(
        state: VehicleState,
        next_row: ObstacleRow,
        selector: Optional[GateSelector] = None,
        inset: float = 0.0) -> Tuple[FeaturePoint, FeaturePoint]:
    ''' The slat edges bounding the gap `selector` picks, as (left, right)
        seen from the vehicle, moved `inset` into the gap (at most a
        quarter of its width).
    '''
    selector = selector or BearingSelector()
    lo, hi = selector.select(state, next_row)
    shift = min(inset, 0.25 * (hi - lo))
    first = FeaturePoint('left', lo + shift, next_row.ordinate)
    second = FeaturePoint('right', hi - shift, next_row.ordinate)
    bearing_first = normalize_angle(
        math.atan2(first.y - state.y, first.x - state.x) - state.theta)
    bearing_second = normalize_angle(
        math.atan2(second.y - state.y, second.x - state.x) - state.theta)
    if bearing_first >= bearing_second:
        return first, second
    return (FeaturePoint('left', second.x, second.y),
            FeaturePoint('right', first.x, first.y))


def run_clutter_flight(field: ObstacleField,
                       gains: GateGains,
                       start: VehicleState,
                       dt: float = 1e-2,
                       t_max: float = 600.0,
                       selector: Optional[GateSelector] = None,
                       inset: float = 0.1,
                       align_gain: float = 1.0,
                       f: float = 1.0) -> Trajectory:
    ''' Fly gate after gate through `field`.

        Before each row the selector picks a gap, the vehicle turns until
        the gap edges sit on both sides of the heading and then follows
        the time-to-transit law. Crossing a row on a slat ends the run.
    '''
    if not start.y < field.ordinate(0):
        raise InvalidParameter('start must lie below the first row')
    if not dt > 0 or not t_max > 0:
        raise InvalidParameter('dt and t_max must be positive')
    traj = Trajectory()
    state = start
    row_index = 0
    pilot = None
    steps = int(math.ceil(t_max / dt))
    for i in range(steps + 1):
        t = i * dt
        row = field.row_for(row_index, state.x)
        if pilot is None:
            try:
                left, right = select_gate_features(state, row, selector, inset)
            except NoGapInView as exc:
                traj.record(Sample(t, state, ControlInput(0.0, 0.0)))
                traj.event('no_gap', row=row_index, reason=str(exc))
                return traj
            pilot = _GatePilot(left, right, gains, f, align_gain)
            LOG.debug('row %d gate (%r, %r)', row_index, left.x, right.x)
        u, projections, taus = pilot.command(state, t, dt)
        traj.record(Sample(t, state, u, projections, taus))
        pilot.flush(traj)
        if i == steps:
            traj.event('timeout', row=row_index)
            return traj
        nxt = step_kinematics(state, u, dt)
        hit = _crossing(state, nxt, row.ordinate)
        state = nxt
        if hit is None:
            continue
        frac, x_cross = hit
        # replaced by the sensed sample on the next pass
        traj.append(Sample((i + 1) * dt, nxt, u))
        try:
            blocked = row.occupancy(x_cross)
        except OutOfExtent:
            traj.event('left_extent', row=row_index, x=x_cross)
            return traj
        detail = {'row': row_index, 'x': x_cross, 't_cross': t + frac * dt}
        if blocked:
            traj.event('collision', **detail)
            return traj
        traj.event('row_crossing', **detail)
        row_index += 1
        pilot = None
        if row_index == len(field):
            traj.event('field_exit')
            return traj
    return traj


def detect_collision(traj: Trajectory, field: ObstacleField) -> Optional[Event]:
    ''' First crossing of a slat by the polyline of `traj`, or None.

        A segment lying on a row hits when its part inside the row's
        extent overlaps a slat. Crossings outside the extent are not hits.
    '''
    ordinates = field.ordinates
    for before, after in zip(traj.samples, traj.samples[1:]):
        y0, y1 = before.state.y, after.state.y
        x0, x1 = before.state.x, after.state.x
        low, high = min(y0, y1), max(y0, y1)
        first = bisect.bisect_left(ordinates, low)
        last = bisect.bisect_right(ordinates, high)
        indices = range(first, last)
        if y1 < y0:
            indices = reversed(indices)
        for index in indices:
            row = field[index]
            ext_lo, ext_hi = row.extent
            if y0 == y1:
                lo, hi = max(min(x0, x1), ext_lo), min(max(x0, x1), ext_hi)
                if lo > hi:
                    continue
                where = bisect.bisect_right(row.starts, hi) - 1
                if where >= 0 and row.ends[where] >= lo:
                    return Event(before.t, 'collision', {
                        'row': index,
                        'x': max(lo, float(row.starts[where]))
                    })
                continue
            frac = (row.ordinate - y0) / (y1 - y0)
            x = x0 + frac * (x1 - x0)
            if not ext_lo <= x <= ext_hi:
                continue
            if row.occupancy(x):
                return Event(before.t + frac * (after.t - before.t),
                             'collision', {
                                 'row': index,
                                 'x': x
                             })
    return None
