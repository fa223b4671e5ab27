# pylint: disable=missing-docstring
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
''' Markovian obstacle fields, quantized Dubins transit and optical-flow
    feedback flight.
'''
import logging

__version__ = '0.3.0'

LOG = logging.getLogger('mof')


class MofError(Exception):
    ''' Base class of every error raised by this package. '''


class InvalidParameter(MofError, ValueError):
    ''' Thrown when a parameter violates its documented range. '''


class ConfigError(MofError):
    ''' Thrown when a configuration document can not be parsed. '''


class OutOfExtent(MofError):
    ''' Thrown when a row is queried outside the window it was sampled on.'''


class ExtentExhausted(MofError):
    ''' Thrown when a transit leaves the sampled window of a row.

        Carries the trial index and the seed so the trial can be replayed.
    '''

    def __init__(self, message: str, trial: int = None, seed: int = None):
        super().__init__(message)
        self.trial = trial
        self.seed = seed


class DivergentMean(MofError):
    ''' Thrown when the free path length has no finite mean (p2 = 0). '''


class NoRoot(MofError):
    ''' Thrown when a target probability is out of the achievable range. '''


class BehindCamera(MofError):
    ''' Thrown when an object lies at or behind the optical center. '''


class ProjectionSingularity(MofError):
    ''' Thrown when a feature lies on the image plane itself. '''


class UndefinedTau(MofError):
    ''' Thrown when an image derivative is too small to divide by. '''


class CoincidentPoint(MofError):
    ''' Thrown when the goal coincides with the vehicle position. '''


class UndefinedTangent(MofError):
    ''' Thrown when the vehicle is inside the standoff circle. '''


class NoGapInView(MofError):
    ''' Thrown when no gap of a row lies inside the view cone. '''


__all__ = [
    'BehindCamera',
    'CoincidentPoint',
    'ConfigError',
    'DivergentMean',
    'ExtentExhausted',
    'InvalidParameter',
    'LOG',
    'MofError',
    'NoGapInView',
    'NoRoot',
    'OutOfExtent',
    'ProjectionSingularity',
    'UndefinedTangent',
    'UndefinedTau',
]
