"""Antenna correlation matrices from array geometry and angular spread.

Signals leave or reach an array from horizontal directions
``u(theta) = (cos theta, sin theta, 0)`` spread uniformly over an arc.
Entry ``(a, b)`` is the arc average of

    exp(2j*pi/wavelength * (x_b - x_a) . u(theta))

For antennas on a line along the x axis with ``a < b`` this is exactly the
arc average of ``exp(2j*pi/wavelength * |x_a - x_b| * cos(theta))``. For
planar and cubic arrays the horizontal projection keeps the matrix a Gram
matrix, and therefore nonnegative definite.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureError
from .linalg import clamp_psd, hermitian

__all__ = ['AntennaArray', 'AngularSpread', 'Side', 'CorrelationMatrix',
           'jakes_correlation', 'grid_array', 'scenario_two_user',
           'TWO_USER_SPREADS']

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class AntennaArray:
    positions: np.ndarray  # (count, 3), meters
    wavelength: float

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.size == 0 or pos.shape[1] != 3:
            raise ValueError("positions must be a nonempty list of 3-vectors")
        if not np.all(np.isfinite(pos)):
            raise ValueError("antenna coordinates must be finite")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        object.__setattr__(self, 'positions', pos)

    def __len__(self):
        return self.positions.shape[0]


@dataclass(frozen=True)
class AngularSpread:
    """Arc of horizontal directions, traversed counterclockwise.

    When ``theta_max <= theta_min`` the arc wraps through 2*pi, so
    ``(2*pi/3, -2*pi/3)`` is the sector of width 2*pi/3 centred on pi.
    """
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_min) and math.isfinite(self.theta_max)):
            raise ValueError("angles must be finite")
        if not 0 < self.length <= 2 * math.pi + 1e-12:
            raise ValueError(f"arc length {self.length} not in (0, 2*pi]")

    @property
    def end(self):
        end = self.theta_max
        if end <= self.theta_min:
            end += 2 * math.pi * math.ceil((self.theta_min - end) / (2 * math.pi) + 1e-15)
        return end

    @property
    def length(self):
        if self.theta_max == self.theta_min:
            return 0.0
        return self.end - self.theta_min


class Side(str, Enum):
    TRANSMIT = 'transmit'
    RECEIVE = 'receive'


@dataclass(frozen=True)
class CorrelationMatrix:
    matrix: np.ndarray
    side: Side

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@lru_cache(maxsize=65536)
def _arc_average(kx, ky, start, stop):
    """Mean of exp(i(kx cos t + ky sin t)) over [start, stop]."""
    length = stop - start
    if kx == 0.0 and ky == 0.0:
        return 1.0 + 0.0j
    # one Gauss-Kronrod subinterval per half wavelength of phase, at least 50
    limit = max(50, int(4 * math.hypot(kx, ky) * length / math.pi) + 50)
    tol = QUAD_TOL * length / 2

    def part(fn):
        value, abserr, info = quad(lambda t: fn(kx * math.cos(t) + ky * math.sin(t)),
                                   start, stop, epsabs=tol, epsrel=0.0,
                                   limit=limit, full_output=1)[:3]
        if abserr > tol:
            raise QuadratureError("correlation quadrature did not reach tolerance",
                                  value / length, abserr / length)
        return value

    return complex(part(math.cos), part(math.sin)) / length


def jakes_correlation(array, spread, side=Side.TRANSMIT):
    """Correlation matrix of `array` for signals spread over `spread`.

    Entries are arc averages evaluated by adaptive Gauss-Kronrod quadrature
    to absolute accuracy 1e-10; the diagonal is exactly 1.
    """
    pos = array.positions
    n = len(array)
    k = 2 * math.pi / array.wavelength
    start, stop = spread.theta_min, spread.end
    out = np.eye(n, dtype=complex)
    for a in range(n):
        for b in range(a + 1, n):
            dx, dy = pos[b, :2] - pos[a, :2]
            out[a, b] = _arc_average(round(k * dx, 12), round(k * dy, 12), start, stop)
    mat = hermitian(out)
    clamp_psd(np.linalg.eigvalsh(mat), scale=n)
    return CorrelationMatrix(mat, Side(side))


def grid_array(dims, spacing, wavelength):
    """Regular lattice of ``nx * ny * nz`` antennas with the given spacing."""
    nx, ny, nz = (int(d) for d in dims)
    if min(nx, ny, nz) < 1:
        raise ValueError("every lattice dimension must be at least 1")
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    pts = [(i * spacing, j * spacing, l * spacing)
           for i, j, l in product(range(nx), range(ny), range(nz))]
    return AntennaArray(np.array(pts, dtype=float), wavelength)


TWO_USER_SPREADS = {
    'T1': AngularSpread(0.0, math.pi),
    'T2': AngularSpread(math.pi / 3, 4 * math.pi / 3),
    'R1': AngularSpread(2 * math.pi / 3, -2 * math.pi / 3),
    'R2': AngularSpread(math.pi, 0.0),
}


def _geometry_dims(n, geometry):
    if geometry == 'linear':
        return (n, 1, 1)
    if geometry == 'cubic':
        side = round(n ** (1 / 3))
        if side ** 3 != n:
            raise ValueError(f"cubic geometry needs a perfect cube, got {n}")
        return (side, side, side)
    raise ValueError(f"unknown geometry {geometry!r}")


def scenario_two_user(n, spacing, wavelength=1.0, geometry='linear',
                      snr_db=20.0, budgets=(1.0, 1.0)):
    """Two-user MAC with `n` antennas at the base station and at each user.

    All three devices share the same array geometry. Per-user budgets are 1
    and the noise power is ``10**(-snr_db/10)`` unless overridden.
    """
    from .deteq import SystemConfig

    if n < 1:
        raise ValueError("n must be at least 1")
    array = grid_array(_geometry_dims(n, geometry), spacing, wavelength)
    sp = TWO_USER_SPREADS
    T = [jakes_correlation(array, sp['T1'], Side.TRANSMIT),
         jakes_correlation(array, sp['T2'], Side.TRANSMIT)]
    R = [jakes_correlation(array, sp['R1'], Side.RECEIVE),
         jakes_correlation(array, sp['R2'], Side.RECEIVE)]
    return SystemConfig(
        N=n, n=(n, n), R=[r.matrix for r in R], T=[t.matrix for t in T],
        sigma2=10 ** (-snr_db / 10), budgets=tuple(budgets))
