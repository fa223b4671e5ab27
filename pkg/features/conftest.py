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
''' State shared between the steps of one scenario. '''
from types import SimpleNamespace

import pytest


@pytest.fixture
def world():
    return SimpleNamespace(error=None)
