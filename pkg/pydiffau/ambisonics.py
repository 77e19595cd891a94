"""
The MIT License (MIT)

Copyright (c) 2025-present pydiffau developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import ClassVar, List, Sequence

import numpy as np
from scipy import special

from .constants import SAMPLE_RATE
from .errors import ArgumentError, DomainError
from .utils import acn_index, channel_count, order_from_channels

__all__ = (
    "Direction",
    "PlaneWaveSource",
    "PlaneWaveScene",
    "AmbisonicsSignal",
    "SHMatrix",
    "EnergyMap",
    "real_sh",
    "sh_matrix",
    "sh_matrix_angles",
    "encode_scene",
    "truncate",
    "directional_energy_map",
    "sample_doa",
)

_log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Direction:
    """A direction of arrival on the unit sphere.

    Parameters
    ------------
    azimuth: :class:`float`
        Radians in ``[0, 2π)``, counter-clockwise from the x axis.
    colatitude: :class:`float`
        Radians in ``[0, π]``, measured from the z axis.


    .. versionadded:: 0.1.0
    """

    azimuth: float
    colatitude: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.azimuth < TWO_PI:
            raise DomainError(f"azimuth must lie in [0, 2π), got {self.azimuth}")
        if not 0.0 <= self.colatitude <= math.pi:
            raise DomainError(f"colatitude must lie in [0, π], got {self.colatitude}")

    @classmethod
    def wrapped(cls, azimuth: float, colatitude: float) -> Direction:
        """Build a direction from any azimuth, folding it into ``[0, 2π)``."""
        azimuth = math.fmod(azimuth, TWO_PI)
        if azimuth < 0:
            azimuth += TWO_PI
        if azimuth >= TWO_PI:
            azimuth = 0.0
        return cls(azimuth, colatitude)

    @classmethod
    def from_degrees(cls, azimuth: float, colatitude: float) -> Direction:
        return cls.wrapped(math.radians(azimuth), math.radians(colatitude))

    @property
    def elevation(self) -> float:
        return math.pi / 2 - self.colatitude

    def unit_vector(self) -> np.ndarray:
        sin_col = math.sin(self.colatitude)
        return np.array([sin_col * math.cos(self.azimuth), sin_col * math.sin(self.azimuth), math.cos(self.colatitude)])

    def angle_to(self, other: Direction) -> float:
        """Great-circle angle between two directions, in radians."""
        cos = float(np.clip(self.unit_vector() @ other.unit_vector(), -1.0, 1.0))
        return math.acos(cos)


@dataclass
class PlaneWaveSource:
    """A mono waveform arriving as a plane wave from ``direction``, scaled by ``gain``.

    .. versionadded:: 0.1.0
    """

    direction: Direction
    waveform: np.ndarray
    gain: float = 1.0

    def __post_init__(self) -> None:
        self.waveform = np.asarray(self.waveform, dtype=np.float64)
        if self.waveform.ndim != 1:
            raise ArgumentError(f"Source waveforms must be one dimensional, got shape {self.waveform.shape}")


@dataclass
class PlaneWaveScene:
    """A free-field scene of plane waves sharing one sample rate and length.

    .. versionadded:: 0.1.0
    """

    sources: List[PlaneWaveSource]
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        if not self.sources:
            raise ArgumentError("A scene needs at least one source")
        lengths = {len(s.waveform) for s in self.sources}
        if len(lengths) != 1:
            raise ArgumentError(f"All source waveforms must share one length, got {sorted(lengths)}")
        if self.sample_rate <= 0:
            raise ArgumentError("sample_rate must be positive")

    @property
    def length(self) -> int:
        return len(self.sources[0].waveform)

    @property
    def directions(self) -> List[Direction]:
        return [s.direction for s in self.sources]

    def signals(self) -> np.ndarray:
        """The gain-scaled source waveforms, shape ``(Q, samples)``."""
        return np.stack([s.gain * s.waveform for s in self.sources])


@dataclass
class AmbisonicsSignal:
    """Time-domain real Ambisonics of order ``N``: ``(N + 1) ** 2`` channels in ACN order with N3D normalization.

    Attributes
    ------------
    order: :class:`int`
        The Ambisonics order.
    channels: :class:`numpy.ndarray`
        ``float64`` array of shape ``((N + 1) ** 2, samples)``.
    sample_rate: :class:`int`
        Samples per second.


    .. versionadded:: 0.1.0
    """

    order: int
    channels: np.ndarray
    sample_rate: int = SAMPLE_RATE
    channel_ordering: ClassVar[str] = "ACN"
    normalization: ClassVar[str] = "N3D"

    def __post_init__(self) -> None:
        self.channels = np.asarray(self.channels, dtype=np.float64)
        if self.channels.ndim != 2 or self.channels.shape[0] != channel_count(self.order):
            raise ArgumentError(
                f"Order {self.order} needs {channel_count(self.order)} channels, got array of shape {self.channels.shape}"
            )
        if self.sample_rate <= 0:
            raise ArgumentError("sample_rate must be positive")
        if not np.all(np.isfinite(self.channels)):
            raise ArgumentError("Ambisonics samples must be finite")

    @classmethod
    def from_channels(cls, channels: np.ndarray, sample_rate: int = SAMPLE_RATE) -> AmbisonicsSignal:
        channels = np.asarray(channels, dtype=np.float64)
        return cls(order_from_channels(channels.shape[0]), channels, sample_rate)

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def length(self) -> int:
        return self.channels.shape[1]

    def __repr__(self) -> str:
        return f"AmbisonicsSignal(order={self.order}, samples={self.length}, sample_rate={self.sample_rate})"


@dataclass
class SHMatrix:
    """Real spherical harmonics sampled at a set of directions: one row per direction, one ACN column per ``(n, m)``.

    .. versionadded:: 0.1.0
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        order_from_channels(self.values.shape[1])

    @property
    def order(self) -> int:
        return order_from_channels(self.values.shape[1])

    @property
    def T(self) -> np.ndarray:
        return self.values.T


@dataclass
class EnergyMap:
    """Directional energy on a regular grid, indexed ``values[azimuth_index, colatitude_index]``.

    ``azimuths`` run from ``0`` upwards in steps of ``az_step`` (``2π`` excluded), ``colatitudes`` from ``0`` (top)
    to ``π`` (bottom) inclusive.

    .. versionadded:: 0.1.0
    """

    azimuths: np.ndarray
    colatitudes: np.ndarray
    values: np.ndarray = field(repr=False)

    def argmax_direction(self) -> Direction:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return Direction(float(self.azimuths[i]), float(self.colatitudes[j]))


def _legendre_norm(degree: int, index: int) -> float:
    m = abs(index)
    factor = 1.0 if m == 0 else 2.0
    return math.sqrt((2 * degree + 1) * factor * math.factorial(degree - m) / math.factorial(degree + m))


def _real_sh_values(degree: int, index: int, azimuth: np.ndarray, colatitude: np.ndarray) -> np.ndarray:
    m = abs(index)
    # lpmv carries the Condon-Shortley phase; Ambisonics conventions drop it.
    legendre = (-1.0) ** m * special.lpmv(m, degree, np.cos(colatitude))
    if index > 0:
        angular = np.cos(m * azimuth)
    elif index < 0:
        angular = np.sin(m * azimuth)
    else:
        angular = np.ones_like(azimuth)
    return _legendre_norm(degree, index) * legendre * angular


def real_sh(degree: int, index: int, direction: Direction) -> float:
    """Evaluate the real, N3D normalized spherical harmonic ``Y_n^m`` at ``direction``.

    N3D normalization makes ``Y_0^0 = 1`` and ``(1/4π) ∮ Y_n^m Y_n'^m' dΩ = δ_nn' δ_mm'``. Positive ``m`` selects
    the cosine harmonics, negative ``m`` the sine harmonics, and no Condon-Shortley phase is applied.

    Parameters
    ------------
    degree: :class:`int`
        ``n >= 0``.
    index: :class:`int`
        ``-n <= m <= n``.
    direction: :class:`Direction`
        Where to evaluate.

    Raises
    --------
    :class:`DomainError`
        For an invalid ``(n, m)`` pair.


    .. versionadded:: 0.1.0
    """
    if degree < 0 or abs(index) > degree:
        raise DomainError(f"Invalid spherical harmonic (n={degree}, m={index})")
    value = _real_sh_values(
        degree, index, np.array([direction.azimuth]), np.array([direction.colatitude])
    )
    return float(value[0])


def sh_matrix_angles(order: int, azimuth: np.ndarray, colatitude: np.ndarray) -> SHMatrix:
    """Vectorised :func:`sh_matrix` for arrays of azimuths and colatitudes in radians."""
    if order < 0:
        raise ArgumentError(f"order must be nonnegative, got {order}")
    azimuth = np.atleast_1d(np.asarray(azimuth, dtype=np.float64))
    colatitude = np.atleast_1d(np.asarray(colatitude, dtype=np.float64))
    if azimuth.shape != colatitude.shape or azimuth.ndim != 1 or azimuth.size == 0:
        raise ArgumentError("azimuth and colatitude must be nonempty 1-D arrays of equal length")
    values = np.empty((azimuth.size, channel_count(order)))
    for n in range(order + 1):
        for m in range(-n, n + 1):
            values[:, acn_index(n, m)] = _real_sh_values(n, m, azimuth, colatitude)
    return SHMatrix(values)


def sh_matrix(order: int, directions: Sequence[Direction]) -> SHMatrix:
    """Real spherical harmonics up to ``order`` at each of ``directions``.

    Row ``q`` and column ``n * n + n + m`` hold ``real_sh(n, m, directions[q])``.

    Raises
    --------
    :class:`ArgumentError`
        When ``directions`` is empty or ``order`` is negative.


    .. versionadded:: 0.1.0
    """
    if not directions:
        raise ArgumentError("sh_matrix needs at least one direction")
    return sh_matrix_angles(
        order,
        np.array([d.azimuth for d in directions]),
        np.array([d.colatitude for d in directions]),
    )


def encode_scene(scene: PlaneWaveScene, order: int) -> AmbisonicsSignal:
    """Encode a free-field plane-wave scene into Ambisonics of ``order``.

    The plane-wave amplitude at the origin does not depend on frequency, so encoding is one matrix product in the
    time domain: ``channels = Y.T @ s`` with ``Y`` the :class:`SHMatrix` of the source directions. Capturing the
    same field with a spherical array of ``M`` microphones would need ``(N + 1) ** 2 <= M``; no array is simulated
    here, so that bound is not checked.

    .. versionadded:: 0.1.0
    """
    if order < 0:
        raise ArgumentError(f"order must be nonnegative, got {order}")
    lengths = {len(s.waveform) for s in scene.sources}
    if len(lengths) != 1:
        raise ArgumentError(f"All source waveforms must share one length, got {sorted(lengths)}")
    y = sh_matrix(order, scene.directions)
    return AmbisonicsSignal(order, y.T @ scene.signals(), scene.sample_rate)


def truncate(sig: AmbisonicsSignal, target_order: int) -> AmbisonicsSignal:
    """Keep the first ``(target_order + 1) ** 2`` channels of ``sig``.

    Raises
    --------
    :class:`ArgumentError`
        When ``target_order`` exceeds the order of ``sig`` or is negative.


    .. versionadded:: 0.1.0
    """
    if not 0 <= target_order <= sig.order:
        raise ArgumentError(f"Cannot truncate an order {sig.order} signal to order {target_order}")
    return AmbisonicsSignal(target_order, sig.channels[: channel_count(target_order)].copy(), sig.sample_rate)


def _grid_count(span: float, step: float, name: str) -> int:
    if not step > 0:
        raise ArgumentError(f"{name} must be positive")
    count = int(round(span / step))
    if count < 1 or not math.isclose(count * step, span, rel_tol=1e-9, abs_tol=1e-12):
        raise ArgumentError(f"{name} {step} does not divide {span}")
    return count


def directional_energy_map(
    sig: AmbisonicsSignal,
    az_step: float = math.radians(2.0),
    col_step: float = math.radians(2.0),
) -> EnergyMap:
    """Steered-beam energy of ``sig`` over a regular azimuth / colatitude grid.

    ``E(Ω) = Σ_τ (Y_N(Ω) · a(τ)) ** 2``, computed through the channel covariance and scaled so the largest cell is
    ``1``. A silent signal gives an all-zero map.

    Parameters
    ------------
    sig: :class:`AmbisonicsSignal`
        The signal to analyse, of any order.
    az_step: :class:`float`
        Azimuth spacing in radians; must divide ``2π``.
    col_step: :class:`float`
        Colatitude spacing in radians; must divide ``π``.

    Returns
    ---------
    :class:`EnergyMap`


    .. versionadded:: 0.1.0
    """
    n_az = _grid_count(TWO_PI, az_step, "az_step")
    n_col = _grid_count(math.pi, col_step, "col_step")
    azimuths = np.arange(n_az) * az_step
    colatitudes = np.arange(n_col + 1) * col_step
    az_grid, col_grid = np.meshgrid(azimuths, colatitudes, indexing="ij")
    y = sh_matrix_angles(sig.order, az_grid.ravel(), col_grid.ravel()).values
    covariance = sig.channels @ sig.channels.T
    energy = np.einsum("gi,ij,gj->g", y, covariance, y).reshape(n_az, n_col + 1)
    energy = np.maximum(energy, 0.0)
    peak = energy.max()
    if peak > 0:
        energy = energy / peak
    return EnergyMap(azimuths, colatitudes, energy)


def sample_doa(rng: np.random.Generator) -> Direction:
    """Draw a direction uniformly distributed on the sphere from a seeded ``numpy`` generator.

    .. versionadded:: 0.1.0
    """
    azimuth = float(rng.uniform(0.0, TWO_PI))
    colatitude = float(np.arccos(rng.uniform(-1.0, 1.0)))
    return Direction.wrapped(azimuth, colatitude)
