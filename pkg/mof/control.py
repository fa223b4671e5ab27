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
''' Unicycle kinematics and the two sensor feedback laws.

    The range/bearing law steers onto a circle of radius d around a goal.
    The time-to-transit law steers between two features using image
    coordinates and their τ only.
'''
import logging
import math
from collections import namedtuple
from typing import Optional, Union

import numpy as np

from mof import CoincidentPoint, InvalidParameter, UndefinedTangent
from mof.camera import FeaturePoint, TauEstimate

LOG = logging.getLogger('mof')

# |ω dt| below which a step is integrated as a straight segment
STRAIGHT_TOLERANCE = 1e-8

ORIENTATIONS = ('ccw', 'cw')

__all__ = [
    'BearingMeasurement',
    'CircleGains',
    'ControlInput',
    'GateGains',
    'SingularVariety',
    'VarietyRay',
    'VehicleState',
    'bearing_law',
    'gate_boundary',
    'in_invariant_set',
    'measure_range_bearing',
    'normalize_angle',
    'singular_variety',
    'step_kinematics',
    'step_kinematics_array',
    'transit_law',
]


def normalize_angle(angle: float) -> float:
    ''' Wrap into (-π, π]. '''
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


class VehicleState(namedtuple('VehicleState', ['x', 'y', 'theta'])):
    __slots__ = ()

    def __new__(cls, x: float, y: float, theta: float):
        return super().__new__(cls, float(x), float(y),
                               normalize_angle(float(theta)))


ControlInput = namedtuple('ControlInput', ['v', 'omega'])

BearingMeasurement = namedtuple('BearingMeasurement', ['rho', 'phi'])


class GateGains(
        namedtuple('GateGains', ['epsilon', 'v_cap', 'v_floor'],
                   defaults=[1e-3, 1.0, 0.2])):
    ''' ε margin of the invariant image set and the speed limits.

        `v_floor` keeps the vehicle moving once the features reach the
        image plane, where τℓ + τr goes to zero.
    '''
    __slots__ = ()

    def __new__(cls, epsilon: float = 1e-3, v_cap: float = 1.0,
                v_floor: float = 0.2):
        if not epsilon > 0:
            raise InvalidParameter('epsilon must be positive, got %r' %
                                   epsilon)
        if not v_cap > 0:
            raise InvalidParameter('v_cap must be positive, got %r' % v_cap)
        if not 0 <= v_floor <= v_cap:
            raise InvalidParameter('v_floor must lie in [0, v_cap], got %r' %
                                   v_floor)
        return super().__new__(cls, float(epsilon), float(v_cap),
                               float(v_floor))


class CircleGains(namedtuple('CircleGains', ['lam', 'd_standoff'])):
    ''' Gain λ and circle radius d of the range/bearing law. '''
    __slots__ = ()

    def __new__(cls, lam: float, d_standoff: float):
        if not 0 < lam < d_standoff:
            raise InvalidParameter('need 0 < lambda < d, got lambda=%r d=%r' %
                                   (lam, d_standoff))
        return super().__new__(cls, float(lam), float(d_standoff))


VarietyRay = namedtuple('VarietyRay', ['x', 'y', 'heading'])

SingularVariety = namedtuple('SingularVariety', ['stable', 'unstable'])


def step_kinematics(state: VehicleState,
                    u: ControlInput,
                    dt: float,
                    tolerance: float = STRAIGHT_TOLERANCE) -> VehicleState:
    ''' Exact unicycle update over `dt` with constant inputs. '''
    if not dt > 0:
        raise InvalidParameter('dt must be positive, got %r' % dt)
    turn = u.omega * dt
    if abs(turn) < tolerance:
        mid = state.theta + 0.5 * turn
        return VehicleState(state.x + u.v * dt * math.cos(mid),
                            state.y + u.v * dt * math.sin(mid),
                            state.theta + turn)
    radius = u.v / u.omega
    end = state.theta + turn
    x = state.x + radius * (math.sin(end) - math.sin(state.theta))
    y = state.y - radius * (math.cos(end) - math.cos(state.theta))
    return VehicleState(x, y, end)


def step_kinematics_array(x: np.ndarray,
                          y: np.ndarray,
                          theta: np.ndarray,
                          v: np.ndarray,
                          omega: np.ndarray,
                          dt: float,
                          tolerance: float = STRAIGHT_TOLERANCE):
    ''' `step_kinematics` over arrays of vehicles, angles left unwrapped. '''
    turn = omega * dt
    straight = np.abs(turn) < tolerance
    end = theta + turn
    safe = np.where(straight, 1.0, omega)
    radius = v / safe
    mid = theta + 0.5 * turn
    new_x = np.where(straight, x + v * dt * np.cos(mid),
                     x + radius * (np.sin(end) - np.sin(theta)))
    new_y = np.where(straight, y + v * dt * np.sin(mid),
                     y - radius * (np.cos(end) - np.cos(theta)))
    return new_x, new_y, end


def measure_range_bearing(state: VehicleState,
                          goal: FeaturePoint) -> BearingMeasurement:
    dx, dy = goal.x - state.x, goal.y - state.y
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        raise CoincidentPoint('goal %s at the vehicle position' % (goal.id, ))
    return BearingMeasurement(rho,
                              normalize_angle(math.atan2(dy, dx) - state.theta))


def bearing_law(m: BearingMeasurement,
                g: CircleGains,
                orientation: str = 'ccw') -> ControlInput:
    ''' v = λ(ρ - d), ω = ρ sinφ ∓ d, the sign picking the direction of
        circulation.
    '''
    if orientation not in ORIENTATIONS:
        raise InvalidParameter('orientation must be ccw or cw, got %r' %
                               (orientation, ))
    if not isinstance(g, CircleGains):
        g = CircleGains(*g)
    lateral = m.rho * math.sin(m.phi)
    omega = lateral - g.d_standoff if orientation == 'ccw' \
        else lateral + g.d_standoff
    return ControlInput(g.lam * (m.rho - g.d_standoff), omega)


def singular_variety(state: VehicleState, goal: FeaturePoint,
                     d_standoff: float) -> SingularVariety:
    ''' Headings from the vehicle position along which ρ sinφ = d.

        On both rays the law commands ω = 0 and the vehicle flies straight,
        which keeps ρ sinφ constant. The stable ray runs to the tangent
        point of the circle. The unstable one runs away from the goal.
    '''
    m = measure_range_bearing(state, goal)
    if m.rho <= d_standoff:
        raise UndefinedTangent('range %r within the circle of radius %r' %
                               (m.rho, d_standoff))
    sight = math.atan2(goal.y - state.y, goal.x - state.x)
    offset = math.asin(d_standoff / m.rho)
    return SingularVariety(
        VarietyRay(state.x, state.y, normalize_angle(sight - offset)),
        VarietyRay(state.x, state.y,
                   normalize_angle(sight - math.pi + offset)))


def _tau(value: Union[TauEstimate, float]) -> float:
    return float(getattr(value, 'tau', value))


def in_invariant_set(d_l: float, d_r: float, epsilon: float) -> bool:
    return d_l <= -epsilon and d_r >= epsilon


def gate_boundary(d_l: float, d_r: float, epsilon: float) -> Optional[str]:
    ''' 'left', 'right', 'both' or None, the boundary conditions in force.
    '''
    right = d_r <= epsilon
    left = d_l >= -epsilon
    if left and right:
        return 'both'
    if left:
        return 'left'
    if right:
        return 'right'
    return None


def transit_law(d_l: float, d_r: float, tau_l: Union[TauEstimate, float],
                tau_r: Union[TauEstimate, float], g: GateGains) -> ControlInput:
    ''' Turn to equalize the transit times of the two features, hold the
        heading on the boundary of the invariant set.
    '''
    tau_l, tau_r = _tau(tau_l), _tau(tau_r)
    speed = max(g.v_floor, min(g.v_cap, tau_l + tau_r))
    if gate_boundary(d_l, d_r, g.epsilon) is not None:
        return ControlInput(speed, 0.0)
    return ControlInput(speed, tau_r - tau_l)
