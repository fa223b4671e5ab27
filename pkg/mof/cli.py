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
''' The sub-commands and the validated configuration they run from. '''
import configparser
import contextlib
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Iterator, List, Optional, TextIO

import numpy as np

from mof import ConfigError, InvalidParameter, __version__
from mof.analytic import analytic_table
from mof.camera import FeaturePoint
from mof.config import parse_grid, sections
from mof.control import CircleGains, GateGains, VehicleState
from mof.dubins import MCSummary, Mode, Side, mc_phase_sweep
from mof.field import FieldParams, field_to_json, sample_field
from mof.field import stationary_probs
from mof.sim import (GateScenario, Trajectory, run_circle, run_clutter_flight,
                     run_gate, selectors)

LOG = logging.getLogger('mof')

COMMANDS = ('generate-field', 'analytic-table', 'mc-sweep', 'fly')
SCENARIOS = ('gate', 'circle', 'clutter')
FORMATS = ('csv', 'json')

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CHECK = 3

__all__ = [
    'ExperimentConfig',
    'cmd_analytic_table',
    'cmd_fly',
    'cmd_generate_field',
    'cmd_mc_sweep',
    'run',
]


def _entropy_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def _sig(value: float) -> str:
    return '%.12g' % value


class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    ''' Everything one command needs, checked before any computation. '''

    def __init__(self,
                 command: str,
                 conf: configparser.ConfigParser,
                 scenario: Optional[str] = None,
                 check: bool = False,
                 out: Optional[str] = None) -> None:
        if command not in COMMANDS:
            raise ConfigError('unknown command %r' % command)
        if command == 'fly' and scenario not in SCENARIOS:
            raise ConfigError('scenario must be one of %s, got %r' %
                              (', '.join(SCENARIOS), scenario))
        self.command = command
        self.scenario = scenario
        self.check = check
        self.out = out
        self.conf = conf
        self.seed = self._seed()
        self.format = self._choice('run', 'format', FORMATS)
        self.workers = self._int('run', 'workers', 1)
        self._validate()

    def _get(self, section: str, key: str) -> str:
        try:
            return self.conf[section][key]
        except KeyError as exc:
            raise ConfigError('missing %s.%s' % (section, key)) from exc

    def _float(self, section: str, key: str) -> float:
        text = self._get(section, key)
        try:
            value = float(text)
        except ValueError as exc:
            raise ConfigError('%s.%s=%r is not a number' %
                              (section, key, text)) from exc
        if not math.isfinite(value):
            raise InvalidParameter('%s.%s must be finite' % (section, key))
        return value

    def _int(self, section: str, key: str, minimum: int) -> int:
        text = self._get(section, key)
        try:
            value = int(text)
        except ValueError as exc:
            raise ConfigError('%s.%s=%r is not an integer' %
                              (section, key, text)) from exc
        if value < minimum:
            raise InvalidParameter('%s.%s must be at least %d, got %d' %
                                   (section, key, minimum, value))
        return value

    def _bool(self, section: str, key: str) -> bool:
        try:
            return self.conf.getboolean(section, key)
        except ValueError as exc:
            raise ConfigError('%s.%s is not a boolean' %
                              (section, key)) from exc

    def _choice(self, section: str, key: str, choices) -> str:
        value = self._get(section, key).strip().lower()
        if value not in choices:
            raise ConfigError('%s.%s must be one of %s, got %r' %
                              (section, key, ', '.join(choices), value))
        return value

    def _seed(self) -> int:
        text = self._get('run', 'seed').strip()
        if not text:
            seed = _entropy_seed()
            LOG.info('no seed given, drew %d', seed)
        else:
            try:
                seed = int(text)
            except ValueError as exc:
                raise ConfigError('seed %r is not an integer' % text) from exc
            if not 0 <= seed < 2**64:
                raise InvalidParameter('seed must be an unsigned 64 bit '
                                       'integer, got %d' % seed)
        self.conf['run']['seed'] = str(seed)
        return seed

    def _validate(self) -> None:
        if self.command in ('generate-field', 'analytic-table', 'mc-sweep') \
                or self.scenario == 'clutter':
            self.params = self.field_params()
        if self.command == 'generate-field' or self.scenario == 'clutter':
            self.rows = self._int('field', 'rows', 1)
            self.extent = self._extent()
            self.jitter = self._bool('field', 'jitter')
        if self.command == 'analytic-table':
            self.n_grid = self._n_grid('analytic')
            self.theta_grid = self._theta_grid('analytic')
            self.sides = self._int('analytic', 'sides', 1)
            if self.sides > 2:
                raise InvalidParameter('analytic.sides must be 1 or 2')
        if self.command == 'mc-sweep':
            self.n_grid = self._n_grid('mc')
            self.theta_grid = self._theta_grid('mc')
            if any(b <= a for a, b in zip(self.theta_grid,
                                          self.theta_grid[1:])):
                raise InvalidParameter('mc.theta_grid must be ascending')
            self.trials = self._int('mc', 'trials', 1)
            self.side = Side(self._choice('mc', 'side',
                                          [s.value for s in Side]))
            self.mode = Mode(self._choice('mc', 'mode',
                                          [m.value for m in Mode]))
            self.jitter = self._bool('mc', 'jitter')
            self.level = self._float('mc', 'level')
            if not 0 < self.level < 1:
                raise InvalidParameter('mc.level must lie in (0, 1)')
        if self.scenario in ('gate', 'clutter'):
            self.gains = GateGains(self._float('gate', 'epsilon'),
                                   self._float('gate', 'v_cap'),
                                   self._float('gate', 'v_floor'))
        if self.scenario == 'gate':
            y_gate = self._float('gate', 'y_gate')
            self.gate = GateScenario(
                FeaturePoint('left', self._float('gate', 'x_left'), y_gate),
                FeaturePoint('right', self._float('gate', 'x_right'), y_gate),
                self._start('gate'), self.gains, self._float('gate', 'dt'),
                self._float('gate', 't_max'), self._float('gate', 'f'))
        if self.scenario == 'circle':
            self._validate_circle()
        if self.scenario == 'clutter':
            self._validate_clutter()

    def _validate_circle(self) -> None:
        self.goal = FeaturePoint('goal', self._float('circle', 'goal_x'),
                                 self._float('circle', 'goal_y'))
        self.circle_gains = CircleGains(self._float('circle', 'lam'),
                                        self._float('circle', 'd'))
        self.start = self._start('circle')
        self.orientation = self._choice('circle', 'orientation',
                                        ('ccw', 'cw'))
        self.dt = self._positive('circle', 'dt')
        self.t_max = self._positive('circle', 't_max')
        self.tol = None
        if self._get('circle', 'tol').strip():
            self.tol = self._positive('circle', 'tol')
        self.record_every = self._int('circle', 'record_every', 1)

    def _validate_clutter(self) -> None:
        self.start = self._start('clutter')
        name = self._get('clutter', 'selector').strip()
        known = selectors()
        if name not in known:
            raise ConfigError('unknown selector %r, have %s' %
                              (name, ', '.join(sorted(known))))
        self.selector = known[name](self._float('clutter', 'half_angle'))
        self.inset = self._float('clutter', 'inset')
        if self.inset < 0:
            raise InvalidParameter('clutter.inset must not be negative')
        self.align_gain = self._positive('clutter', 'align_gain')
        self.dt = self._positive('clutter', 'dt')
        self.t_max = self._positive('clutter', 't_max')

    def _positive(self, section: str, key: str) -> float:
        value = self._float(section, key)
        if not value > 0:
            raise InvalidParameter('%s.%s must be positive, got %r' %
                                   (section, key, value))
        return value

    def _start(self, section: str) -> VehicleState:
        return VehicleState(self._float(section, 'x0'),
                            self._float(section, 'y0'),
                            self._float(section, 'theta0'))

    def _extent(self):
        lo, hi = self._float('field', 'x_min'), self._float('field', 'x_max')
        if not hi > lo:
            raise InvalidParameter('field.x_max must exceed field.x_min')
        return lo, hi

    def _n_grid(self, section: str) -> List[int]:
        values = parse_grid(self._get(section, 'n_grid'))
        if any(v != int(v) or v < 1 for v in values):
            raise InvalidParameter('%s.n_grid needs positive integers' %
                                   section)
        return [int(v) for v in values]

    def _theta_grid(self, section: str) -> List[float]:
        values = parse_grid(self._get(section, 'theta_grid'))
        if any(not 0 <= v < math.pi / 2 for v in values):
            raise InvalidParameter('%s.theta_grid must lie in [0, pi/2)' %
                                   section)
        return values

    def field_params(self) -> FieldParams:
        return FieldParams(self._float('field', 'alpha'),
                           self._float('field', 'beta'),
                           self._float('field', 'gamma'), self.seed)

    def echo(self) -> dict:
        ''' The resolved configuration, enough to rerun the command. '''
        return {
            'mof': __version__,
            'command': self.command,
            'scenario': self.scenario,
            'config': sections(self.conf),
        }

    def comment(self) -> str:
        return 'mof %s config=%s' % (__version__,
                                     json.dumps(self.echo(), sort_keys=True))


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == '-':
        yield sys.stdout
        return
    with open(path, 'w', encoding='utf-8', newline='') as outfile:
        yield outfile


def _write_json(cfg: ExperimentConfig, document: dict) -> None:
    ''' `document` with the config echo under an extra `config` key. '''
    document = dict(document, config=cfg.echo())
    with _output(cfg.out) as outfile:
        json.dump(document, outfile, indent=2, sort_keys=True)
        outfile.write('\n')


def _write_csv(cfg: ExperimentConfig, header, rows) -> None:
    with _output(cfg.out) as outfile:
        outfile.write('# %s\n' % cfg.comment())
        writer = csv.writer(outfile, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def cmd_generate_field(cfg: ExperimentConfig) -> int:
    field = sample_field(cfg.params, cfg.rows, cfg.extent, cfg.jitter)
    LOG.info('generated %d rows with seed %d', len(field), cfg.seed)
    if cfg.format == 'json':
        _write_json(cfg, field_to_json(field))
    else:
        _write_csv(cfg, ('row', 'ordinate', 's_lo', 's_hi'),
                   ((k, repr(row.ordinate), repr(lo), repr(hi))
                    for k, row in enumerate(field) for lo, hi in row.slats))
    return EXIT_OK


def cmd_analytic_table(cfg: ExperimentConfig) -> int:
    dist = stationary_probs(cfg.params.alpha, cfg.params.beta)
    table = analytic_table(dist, cfg.params.alpha_over_gamma, cfg.n_grid,
                           cfg.theta_grid, cfg.sides)
    header = ('n', 'theta_cr', 'p_analytic')
    if cfg.format == 'json':
        _write_json(cfg, {
            'columns': list(header),
            'rows': [[n, theta, p] for n, theta, p in table]
        })
    else:
        _write_csv(cfg, header,
                   ((n, _sig(theta), _sig(p)) for n, theta, p in table))
    return EXIT_OK


def cmd_mc_sweep(cfg: ExperimentConfig) -> int:
    points = []
    for n in cfg.n_grid:
        sweep = mc_phase_sweep(cfg.params, n, cfg.theta_grid, cfg.trials,
                               cfg.seed, cfg.side, cfg.mode, cfg.jitter,
                               cfg.workers, cfg.level)
        points.extend(sweep.points)
    header = ('theta_cr', 'n', 'trials', 'successes', 'estimate', 'stderr',
              'analytic')
    if cfg.format == 'json':
        _write_json(cfg, {
            'columns': list(header),
            'rows': [list(p) for p in points]
        })
    else:
        _write_csv(cfg, header,
                   ((_sig(p.theta_cr), p.n, p.trials, p.successes,
                     _sig(p.estimate), _sig(p.stderr), _sig(p.analytic))
                    for p in points))
    if not cfg.check:
        return EXIT_OK
    failed = [
        p for p in points
        if not MCSummary(p.trials, p.successes, p.estimate, p.stderr).within(
            p.analytic, 3.0)
    ]
    for p in failed:
        LOG.warning('n=%d theta=%.4f: %.6f vs analytic %.6f', p.n, p.theta_cr,
                    p.estimate, p.analytic)
    return EXIT_CHECK if failed else EXIT_OK


def _fly(cfg: ExperimentConfig) -> Trajectory:
    if cfg.scenario == 'gate':
        return run_gate(cfg.gate)
    if cfg.scenario == 'circle':
        return run_circle(cfg.goal, cfg.circle_gains, cfg.start, cfg.dt,
                          cfg.t_max, cfg.orientation, cfg.tol,
                          cfg.record_every)
    field = sample_field(cfg.params, cfg.rows, cfg.extent, cfg.jitter)
    return run_clutter_flight(field, cfg.gains, cfg.start, cfg.dt, cfg.t_max,
                              cfg.selector, cfg.inset, cfg.align_gain)


def events_path(out: str) -> Path:
    path = Path(out)
    return path.with_name(path.stem + '.events.json')


def cmd_fly(cfg: ExperimentConfig) -> int:
    traj = _fly(cfg)
    LOG.info('%s flight: %s at t=%.4f', cfg.scenario, traj.outcome,
             traj.terminal.t)
    if cfg.format == 'json':
        with _output(cfg.out) as outfile:
            json.dump(traj.to_document(cfg.echo()),
                      outfile,
                      indent=2,
                      sort_keys=True)
            outfile.write('\n')
        return EXIT_OK
    with _output(cfg.out) as outfile:
        traj.to_csv(outfile, cfg.comment())
    if cfg.out and cfg.out != '-':
        with open(events_path(cfg.out), 'w', encoding='utf-8') as outfile:
            json.dump(traj.events_document(cfg.echo()),
                      outfile,
                      indent=2,
                      sort_keys=True)
            outfile.write('\n')
    return EXIT_OK


HANDLERS = {
    'generate-field': cmd_generate_field,
    'analytic-table': cmd_analytic_table,
    'mc-sweep': cmd_mc_sweep,
    'fly': cmd_fly,
}


def run(cfg: ExperimentConfig) -> int:
    print('mof: %s with seed %d' % (cfg.command, cfg.seed), file=sys.stderr)
    return HANDLERS[cfg.command](cfg)
