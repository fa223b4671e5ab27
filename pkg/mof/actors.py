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
''' Actors running batches of independent trials. '''
import logging
from typing import Any, Callable, List, Tuple

import pykka

LOG = logging.getLogger('mof')

Work = Callable[[int, int], Any]


class TrialActor(pykka.ThreadingActor):
    ''' Runs `work(start, stop)` for every (start, stop) it receives. '''

    def __init__(self, work: Work):
        super().__init__()
        self._work = work
        self.use_daemon_thread = True

    def on_receive(self, message: Tuple[int, int]) -> Any:
        start, stop = message
        LOG.debug('trials %d..%d on %s', start, stop, self.actor_urn)
        return self._work(start, stop)


def shards(count: int, workers: int) -> List[Tuple[int, int]]:
    ''' Split range(count) into at most `workers` contiguous pieces. '''
    workers = max(1, min(int(workers), count))
    step, extra = divmod(count, workers)
    result = []
    start = 0
    for i in range(workers):
        stop = start + step + (1 if i < extra else 0)
        result.append((start, stop))
        start = stop
    return result


def run_sharded(work: Work, count: int, workers: int = 1) -> List[Any]:
    ''' Results of `work` per shard, in trial order.

        A failing shard re-raises its exception here after every actor is
        stopped.
    '''
    pieces = shards(count, workers)
    if len(pieces) <= 1:
        return [work(0, count)]
    refs = [TrialActor.start(work) for _ in pieces]
    try:
        futures = [
            ref.ask(piece, block=False) for ref, piece in zip(refs, pieces)
        ]
        return [future.get() for future in futures]
    finally:
        for ref in refs:
            ref.stop()
