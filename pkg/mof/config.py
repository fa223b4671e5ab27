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
''' Experiment configuration.

    Sources are layered, later ones winning: the built-in defaults,
    `$XDG_CONFIG_HOME/mof/config`, the file given with `--config` and the
    command line overrides. A `--config` file is either an ini document or
    the config echo embedded in an earlier output, JSON or CSV.
'''
import configparser
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import xdg

from mof import ConfigError

LOG = logging.getLogger('mof')

__all__ = [
    'DEFAULTS',
    'config_path',
    'load',
    'parse_grid',
    'parse_override',
    'sections',
]

DEFAULTS: Dict[str, Dict[str, str]] = {
    'run': {
        'seed': '',
        'workers': '1',
        'format': 'csv',
    },
    'field': {
        'alpha': '1.0',
        'beta': '0.1',
        'gamma': '0.1',
        'rows': '10',
        'x_min': '-100.0',
        'x_max': '100.0',
        'jitter': 'no',
    },
    'analytic': {
        'n_grid': '1,2,5,10,20,50,100',
        'theta_grid': '0:1.5:0.05',
        'sides': '1',
    },
    'mc': {
        'n_grid': '10',
        'theta_grid': '0:1:0.05',
        'trials': '5000',
        'side': 'right',
        'mode': 'reset',
        'jitter': 'no',
        'level': '0.99',
    },
    'gate': {
        'x_left': '-1.0',
        'x_right': '1.0',
        'y_gate': '10.0',
        'x0': '0.0',
        'y0': '0.0',
        'theta0': '1.5707963267948966',
        'epsilon': '0.001',
        'v_cap': '1.0',
        'v_floor': '0.2',
        'dt': '0.001',
        't_max': '60.0',
        'f': '1.0',
    },
    'circle': {
        'goal_x': '0.0',
        'goal_y': '0.0',
        'lam': '0.5',
        'd': '1.0',
        'x0': '3.0',
        'y0': '0.0',
        'theta0': '1.5707963267948966',
        'orientation': 'ccw',
        'dt': '0.01',
        't_max': '200.0',
        'tol': '',
        'record_every': '1',
    },
    'clutter': {
        'x0': '0.0',
        'y0': '0.0',
        'theta0': '1.5707963267948966',
        'selector': 'bearing',
        'half_angle': '1.0471975511965976',
        'inset': '0.1',
        'align_gain': '1.0',
        'dt': '0.01',
        't_max': '600.0',
    },
}


def config_path() -> Path:
    return xdg.xdg_config_home().joinpath('mof', 'config')


def parse_override(text: str) -> Tuple[str, str, str]:
    ''' Split `section.key=value`. '''
    name, sep, value = text.partition('=')
    section, dot, key = name.strip().partition('.')
    if not sep or not dot or not section or not key:
        raise ConfigError('override %r is not section.key=value' % text)
    return section, key, value.strip()


def parse_grid(text: str) -> List[float]:
    ''' `a,b,c` or the inclusive range `start:stop:step`. '''
    text = text.strip()
    try:
        if ':' in text:
            start, stop, step = (float(v) for v in text.split(':'))
            if not step > 0 or stop < start:
                raise ConfigError('empty range %r' % text)
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError as exc:
        raise ConfigError('can not parse grid %r: %s' % (text, exc)) from exc
    if not values:
        raise ConfigError('empty grid %r' % text)
    return values


def _echoed(text: str) -> dict:
    ''' Sections of a JSON document or of the comment line of a CSV output,
        unwrapping the nested config echoes of outputs.
    '''
    if text.startswith('#'):
        text = text.splitlines()[0].partition('config=')[2]
    document = json.loads(text)
    while isinstance(document.get('config'), dict):
        document = document['config']
    return document


def _read_file(conf: configparser.ConfigParser, path: str) -> None:
    try:
        with open(path, encoding='utf-8') as infile:
            text = infile.read().lstrip()
    except OSError as exc:
        raise ConfigError('can not read %s: %s' % (path, exc)) from exc
    try:
        if text.startswith(('{', '# mof ')):
            conf.read_dict(_echoed(text))
        else:
            conf.read_string(text, source=path)
    except (configparser.Error, ValueError, AttributeError) as exc:
        raise ConfigError('can not parse %s: %s' % (path, exc)) from exc


def load(path: Optional[str] = None,
         overrides: Iterable[Tuple[str, str, str]] = ()
         ) -> configparser.ConfigParser:
    conf = configparser.ConfigParser(interpolation=None)
    conf.read_dict(DEFAULTS)
    user = config_path()
    if user.exists():
        LOG.debug('reading %s', user)
        _read_file(conf, str(user))
    if path:
        LOG.debug('reading %s', path)
        _read_file(conf, path)
    for section, key, value in overrides:
        if not conf.has_section(section):
            raise ConfigError('unknown section %r' % section)
        conf[section][key] = value
    unknown = set(conf.sections()) - set(DEFAULTS)
    if unknown:
        raise ConfigError('unknown sections: %s' % ', '.join(sorted(unknown)))
    return conf


def sections(conf: configparser.ConfigParser) -> Dict[str, Dict[str, str]]:
    ''' Plain nested dict, the form echoed into outputs. '''
    return {name: dict(conf[name]) for name in conf.sections()}
