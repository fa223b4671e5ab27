#!/usr/bin/env python3
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
"""mof - Markovian obstacle fields and optical-flow flight

Usage:
    mof generate-field [options] [--define=SETTING]...
    mof analytic-table [options] [--define=SETTING]...
    mof mc-sweep [--check] [options] [--define=SETTING]...
    mof fly (gate|circle|clutter) [options] [--define=SETTING]...
    mof --version

Options:
    --seed=SEED             Master seed, an unsigned 64 bit integer; drawn
                            from the OS when missing
    -o FILE, --out=FILE     Write the result to FILE instead of stdout; a
                            .csv or .json suffix picks the format
    -c FILE, --config=FILE  Read parameters from an ini FILE or from the
                            JSON config echo of an earlier output
    -f FMT, --format=FMT    csv or json
    -t N, --threads=N       Worker threads for Monte Carlo trials
    --workers=N             Same as --threads
    --alpha=RATE            Rate of the slat widths
    --beta=RATE             Rate of the gap widths
    --gamma=RATE            Rate of the row spacing
    --rows=N                Rows of a generated field
    --trials=N              Monte Carlo trials per grid point
    --side=SIDE             Edge to steer around: right, left, nearest, coin
    --mode=MODE             Heading after a row: reset or persistent
    -D SETTING, --define=SETTING
                            Set section.key=value, may be repeated
    --check                 Exit with 3 unless every point lies within three
                            standard errors of the analytic probability
    -d --debug              Enable sending debugging output to journalctl
                            (journalctl --user -f)
    --version               Show the version
"""  # pylint: disable=missing-docstring
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from docopt import docopt

from mof import ExtentExhausted, MofError, __version__
from mof.cli import (COMMANDS, EXIT_INVALID, FORMATS, SCENARIOS,
                     ExperimentConfig, run)
from mof.config import load, parse_override

LOG = logging.getLogger('mof')

FLAGS = {
    '--seed': ('run', 'seed'),
    '--format': ('run', 'format'),
    '--threads': ('run', 'workers'),
    '--workers': ('run', 'workers'),
    '--alpha': ('field', 'alpha'),
    '--beta': ('field', 'beta'),
    '--gamma': ('field', 'gamma'),
    '--rows': ('field', 'rows'),
    '--trials': ('mc', 'trials'),
    '--side': ('mc', 'side'),
    '--mode': ('mc', 'mode'),
}


def setup_logging(debug: bool) -> None:
    for handler in list(LOG.handlers):
        LOG.removeHandler(handler)
    stderr = logging.StreamHandler()
    stderr.setFormatter(logging.Formatter('mof: %(message)s'))
    LOG.setLevel(logging.WARNING)
    LOG.addHandler(stderr)
    if not debug:
        return
    LOG.setLevel(logging.DEBUG)
    try:
        from systemd.journal import \
            JournalHandler  # pylint: disable=import-outside-toplevel
    except ImportError:
        LOG.warning('No systemd journal bindings, debugging to stderr')
        return
    journald_handler = JournalHandler()
    # set a formatter to include the level name
    journald_handler.setFormatter(
        logging.Formatter('[%(levelname)s] %(message)s'))
    LOG.removeHandler(stderr)
    LOG.addHandler(journald_handler)


def overrides(arguments: dict) -> List[Tuple[str, str, str]]:
    ''' Command line settings in the order they apply. '''
    result = []
    if arguments.get('--out'):
        suffix = Path(arguments['--out']).suffix.lstrip('.').lower()
        if suffix in FORMATS:
            result.append(('run', 'format', suffix))
    for flag, (section, key) in FLAGS.items():
        if arguments.get(flag) is not None:
            result.append((section, key, arguments[flag]))
    for setting in arguments.get('--define') or []:
        result.append(parse_override(setting))
    return result


def command(arguments: dict) -> Tuple[str, Optional[str]]:
    name = next(c for c in COMMANDS if arguments.get(c))
    scenario = next((s for s in SCENARIOS if arguments.get(s)), None)
    return name, scenario


def main(argv: Optional[List[str]] = None) -> int:
    arguments = docopt(__doc__, argv=argv, version='mof ' + __version__)
    setup_logging(arguments['--debug'])
    name, scenario = command(arguments)
    try:
        conf = load(arguments['--config'], overrides(arguments))
        cfg = ExperimentConfig(name, conf, scenario, arguments['--check'],
                               arguments['--out'])
        return run(cfg)
    except ExtentExhausted as exc:
        print('mof: %s (trial %s, seed %s)' % (exc, exc.trial, exc.seed),
              file=sys.stderr)
        return EXIT_INVALID
    except MofError as exc:
        print('mof: %s' % exc, file=sys.stderr)
        return EXIT_INVALID


def cli() -> None:
    sys.exit(main())


if __name__ == '__main__':
    cli()
