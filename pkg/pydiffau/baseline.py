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
from functools import cached_property
from typing import List, Optional, Tuple, Union

import numpy as np
import torch
from scipy.spatial import cKDTree

from .ambisonics import AmbisonicsSignal, Direction, SHMatrix, sh_matrix_angles
from .constants import FOA_ORDER, HOA_ORDER
from .dataclass import CSConfig, STFTConfig
from .errors import ArgumentError
from .threads import ThreadManager
from .transform import TFSignal, istft, stft
from .utils import channel_count

__all__ = (
    "DirectionGrid",
    "SparseSolution",
    "sparse_objective",
    "solve_sparse_bins",
    "solve_sparse_bin",
    "cs_upscale",
    "least_norm_upscale",
)

_log = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_PAIR_BATCH = 256


@dataclass
class DirectionGrid:
    """Dictionary of plane-wave directions with their spherical harmonics.

    Attributes
    ------------
    azimuths: :class:`numpy.ndarray`
        ``L`` azimuths in radians.
    colatitudes: :class:`numpy.ndarray`
        ``L`` colatitudes in radians.
    sh_low: :class:`SHMatrix`
        ``L x 4`` first-order harmonics.
    sh_high: :class:`SHMatrix`
        ``L x 16`` third-order harmonics.


    .. versionadded:: 0.1.0
    """

    azimuths: np.ndarray
    colatitudes: np.ndarray
    sh_low: SHMatrix = field(repr=False)
    sh_high: SHMatrix = field(repr=False)

    def __post_init__(self) -> None:
        size = self.azimuths.shape[0]
        if size < 16:
            raise ArgumentError(f"A direction grid needs at least 16 directions, got {size}")
        if self.sh_low.values.shape != (size, channel_count(FOA_ORDER)) or self.sh_high.values.shape != (
            size,
            channel_count(HOA_ORDER),
        ):
            raise ArgumentError("Spherical harmonic matrices do not match the grid directions")

    @classmethod
    def from_angles(cls, azimuths: np.ndarray, colatitudes: np.ndarray) -> DirectionGrid:
        azimuths = np.asarray(azimuths, dtype=np.float64)
        colatitudes = np.asarray(colatitudes, dtype=np.float64)
        return cls(
            azimuths,
            colatitudes,
            sh_matrix_angles(FOA_ORDER, azimuths, colatitudes),
            sh_matrix_angles(HOA_ORDER, azimuths, colatitudes),
        )

    @classmethod
    def fibonacci(cls, size: int = 400) -> DirectionGrid:
        """Nearly uniform grid of ``size`` points on a Fibonacci spiral."""
        if size < 16:
            raise ArgumentError(f"A direction grid needs at least 16 directions, got {size}")
        index = np.arange(size)
        colatitudes = np.arccos(1.0 - (2.0 * index + 1.0) / size)
        azimuths = np.mod(index * GOLDEN_ANGLE, 2.0 * math.pi)
        return cls.from_angles(azimuths, colatitudes)

    @property
    def size(self) -> int:
        return self.azimuths.shape[0]

    @property
    def directions(self) -> List[Direction]:
        return [Direction(float(a), float(c)) for a, c in zip(self.azimuths, self.colatitudes)]

    @cached_property
    def points(self) -> np.ndarray:
        """``L x 3`` unit vectors of the grid directions."""
        col = np.sin(self.colatitudes)
        return np.stack([col * np.cos(self.azimuths), col * np.sin(self.azimuths), np.cos(self.colatitudes)], axis=1)

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.points)

    @cached_property
    def _unlift(self) -> np.ndarray:
        # First-order harmonics are (omni, M u); this maps M u back to u.
        lift = np.linalg.lstsq(self.points, self.sh_low.values[:, 1:], rcond=None)[0]
        return np.linalg.inv(lift)

    @cached_property
    def _atom_gram(self) -> np.ndarray:
        return self.sh_low.values @ self.sh_low.values.T

    def nearest(self, direction: Direction) -> int:
        """Index of the grid direction closest to ``direction``."""
        return int(np.argmax(self.points @ direction.unit_vector()))

    def nearest_points(self, points: np.ndarray) -> np.ndarray:
        """Indices of the grid directions closest to each row of ``points``."""
        return self._tree.query(points)[1]


@dataclass
class SparseSolution:
    """Plane-wave amplitudes found for one bin, or for a batch of bins along the first axis.

    Attributes
    ------------
    coefficients: :class:`numpy.ndarray`
        Complex amplitudes per grid direction.
    residual: :class:`numpy.ndarray`
        ``||D s - a|| / ||a||``, zero for silent bins.
    iterations: :class:`numpy.ndarray`
        Reweighting iterations used, zero for bins fit by one or two directions.
    converged: :class:`numpy.ndarray`
        Whether iterations settled before ``max_iterations`` and the residual met the tolerance.
    objective: Optional[:class:`numpy.ndarray`]
        Penalised objective at the start and after every iteration, ``nan`` once a bin stopped. Only kept when
        requested.


    .. versionadded:: 0.1.0
    """

    coefficients: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    objective: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def l1(self) -> Union[float, np.ndarray]:
        return np.abs(self.coefficients).sum(axis=-1)

    @property
    def support(self) -> np.ndarray:
        return np.abs(self.coefficients) > 0


def _penalty_weight(norms: np.ndarray, cfg: CSConfig) -> np.ndarray:
    # Scales with ||a|| ** (2 - p) so the solution scales with the input.
    return cfg.sparsity_weight * norms ** (2.0 - cfg.norm_exponent)


def sparse_objective(
    coefficients: np.ndarray, bins: np.ndarray, grid: DirectionGrid, cfg: CSConfig
) -> Union[float, np.ndarray]:
    """``1/2 ||D s - a||^2 + lam ||a||^(2-p) sum (|s|^2 + delta^2)^(p/2)`` with ``delta = smoothing * ||a||``.

    .. versionadded:: 0.1.0
    """
    s = np.atleast_2d(coefficients)
    a = np.atleast_2d(bins)
    norms = np.linalg.norm(a, axis=1)
    delta2 = (cfg.smoothing * norms) ** 2
    value = _objective(s, a, grid.sh_low.T, norms, delta2, cfg)
    return float(value[0]) if np.ndim(bins) == 1 else value


def _objective(s, a, basis, norms, delta2, cfg) -> np.ndarray:
    misfit = 0.5 * np.sum(np.abs(s @ basis.T - a) ** 2, axis=1)
    penalty = np.sum((np.abs(s) ** 2 + delta2[:, None]) ** (cfg.norm_exponent / 2.0), axis=1)
    return misfit + _penalty_weight(norms, cfg) * penalty


def _gram(weights: np.ndarray, products: np.ndarray, channels: int) -> np.ndarray:
    # D diag(w) D^T for every row of weights.
    return (weights @ products.T).reshape(-1, channels, channels)


def _best_pairs(
    a: np.ndarray, c: np.ndarray, grid: DirectionGrid
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    # If a lies in span(d_l, d_m), the direction part of a with d_l projected out points along u_m - u_l, so
    # u_m is u_l reflected across the plane normal to it. The nearest grid atom stands in for u_m.
    basis = grid.sh_low.T
    atom_energy = np.sum(basis**2, axis=0)
    atoms = np.arange(basis.shape[1])
    left_over = a[:, None, :] - (c / atom_energy)[..., None] * basis.T
    turn = np.exp(-0.5j * np.angle(np.sum(left_over * left_over, axis=-1)))
    rho = np.real(left_over * turn[..., None])
    w = rho[..., 1:] @ grid._unlift - (rho[..., 0] / basis[0])[..., None] * grid.points
    size = np.sum(w * w, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(size > 0, 2.0 * np.sum(w * grid.points, axis=-1) / size, 0.0)
    partner = grid.nearest_points((grid.points - step[..., None] * w).reshape(-1, 3)).reshape(size.shape)

    cross = grid._atom_gram[atoms, partner]
    energy_m = atom_energy[partner]
    det = atom_energy * energy_m - cross**2
    c_m = np.take_along_axis(c, partner, axis=1)
    valid = (partner != atoms) & (det > 1e-9 * atom_energy * energy_m)
    det = np.where(valid, det, 1.0)
    x_l = np.where(valid, (energy_m * c - cross * c_m) / det, 0.0)
    x_m = np.where(valid, (atom_energy * c_m - cross * c) / det, 0.0)
    fitted = np.real(np.conj(c) * x_l + np.conj(c_m) * x_m)
    left = np.where(valid, np.sum(np.abs(a) ** 2, axis=1, keepdims=True) - fitted, np.inf)

    best = np.argmin(left, axis=1)
    rows = np.arange(a.shape[0])
    return best, partner[rows, best], left[rows, best], x_l[rows, best], x_m[rows, best]


def _sparse_supports(a: np.ndarray, grid: DirectionGrid, cfg: CSConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Exact fits on one or two atoms, kept where the relative residual is within ``cfg.tolerance``."""
    basis = grid.sh_low.T
    atom_energy = np.sum(basis**2, axis=0)
    energy = np.sum(np.abs(a) ** 2, axis=1)
    limit = cfg.tolerance**2 * energy
    rows = np.arange(a.shape[0])
    s = np.zeros((a.shape[0], basis.shape[1]), dtype=np.complex128)

    c = a @ basis
    single = np.argmax(np.abs(c) ** 2 / atom_energy, axis=1)
    found = energy - np.abs(c[rows, single]) ** 2 / atom_energy[single] <= limit
    s[rows[found], single[found]] = c[rows[found], single[found]] / atom_energy[single[found]]

    rest = rows[~found]
    for start in range(0, rest.size, _PAIR_BATCH):
        part = rest[start : start + _PAIR_BATCH]
        first, second, left, x_first, x_second = _best_pairs(a[part], c[part], grid)
        fits = left <= limit[part]
        s[part[fits], first[fits]] = x_first[fits]
        s[part[fits], second[fits]] = x_second[fits]
        found[part[fits]] = True
    return s, found


def _reweighted(
    a: np.ndarray, norms: np.ndarray, basis: np.ndarray, cfg: CSConfig, objective: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    channels = basis.shape[0]
    products = np.einsum("il,jl->ijl", basis, basis).reshape(channels * channels, -1)
    p = cfg.norm_exponent
    delta2 = (cfg.smoothing * norms) ** 2
    ridge = p * _penalty_weight(norms, cfg)
    iterations = np.zeros(a.shape[0], dtype=np.int64)

    # Minimum-norm start.
    s = np.linalg.solve(basis @ basis.T, a.T).T @ basis
    if objective is not None:
        objective[:, 0] = _objective(s, a, basis, norms, delta2, cfg)

    active = np.arange(a.shape[0])
    settled = np.zeros(a.shape[0], dtype=bool)
    eye = np.eye(channels)
    for k in range(cfg.max_iterations):
        if active.size == 0:
            break
        s_act = s[active]
        weights = (np.abs(s_act) ** 2 + delta2[active, None]) ** (1.0 - p / 2.0)
        gram = _gram(weights, products, channels) + ridge[active, None, None] * eye
        u = np.linalg.solve(gram, a[active][..., None])[..., 0]
        s_new = weights * (u @ basis)
        change = np.linalg.norm(s_new - s_act, axis=1) / np.maximum(np.linalg.norm(s_act, axis=1), 1e-300)
        s[active] = s_new
        iterations[active] = k + 1
        if objective is not None:
            objective[active, k + 1] = _objective(s_new, a[active], basis, norms[active], delta2[active], cfg)
        done = change < cfg.tolerance
        settled[active[done]] = True
        active = active[~done]

    # Debias on the support: weighted minimum-norm exact fit.
    magnitude = np.abs(s)
    mask = magnitude >= cfg.support_threshold * magnitude.max(axis=1, keepdims=True)
    weights = np.where(mask, (magnitude**2 + delta2[:, None]) ** (1.0 - p / 2.0), 0.0)
    u = (np.linalg.pinv(_gram(weights, products, channels), hermitian=True) @ a[..., None])[..., 0]
    return weights * (u @ basis), iterations, settled


def _solve_chunk(a: np.ndarray, grid: DirectionGrid, cfg: CSConfig, record: bool) -> SparseSolution:
    basis = grid.sh_low.T
    batch, size = a.shape[0], basis.shape[1]

    coefficients = np.zeros((batch, size), dtype=np.complex128)
    residual = np.zeros(batch)
    iterations = np.zeros(batch, dtype=np.int64)
    converged = np.ones(batch, dtype=bool)
    objective = np.full((batch, cfg.max_iterations + 1), np.nan) if record else None

    norms = np.linalg.norm(a, axis=1)
    live = np.flatnonzero(norms > 0)
    if live.size == 0:
        return SparseSolution(coefficients, residual, iterations, converged, objective)
    a_live, n_live = a[live], norms[live]

    s, found = _sparse_supports(a_live, grid, cfg)
    if record and found.any():
        delta2 = (cfg.smoothing * n_live[found]) ** 2
        objective[live[found], 0] = _objective(s[found], a_live[found], basis, n_live[found], delta2, cfg)

    settled = np.ones(live.size, dtype=bool)
    rest = np.flatnonzero(~found)
    if rest.size:
        history = np.full((rest.size, cfg.max_iterations + 1), np.nan) if record else None
        s[rest], iterations[live[rest]], settled[rest] = _reweighted(a_live[rest], n_live[rest], basis, cfg, history)
        if record:
            objective[live[rest]] = history

    res = np.linalg.norm(s @ basis.T - a_live, axis=1) / n_live
    coefficients[live] = s
    residual[live] = res
    converged[live] = settled & (res <= cfg.tolerance)
    return SparseSolution(coefficients, residual, iterations, converged, objective)


def solve_sparse_bins(
    bins: np.ndarray,
    grid: DirectionGrid,
    cfg: CSConfig,
    *,
    jobs: Optional[int] = 1,
    record_objective: bool = False,
) -> SparseSolution:
    """Sparse plane-wave decomposition of many first-order bins at once.

    A bin ``a`` that one or two grid directions reproduce within ``cfg.tolerance`` gets exactly those directions,
    with least-squares amplitudes. One direction is tried before two. The partner of every direction is found in
    closed form, so no pair search is needed. Each remaining bin is decomposed by iteratively reweighted least
    squares from the minimum-norm solution. This is a majorize-minimize scheme for the smoothed penalty of
    :func:`sparse_objective`, so its objective never increases. Iteration stops per bin once the relative
    coefficient change drops below ``cfg.tolerance``. The amplitudes are then refit on their support so that
    ``D s`` reproduces ``a``. Bins that run out of iterations keep their last iterate and are reported as not
    converged.

    Parameters
    ------------
    bins: :class:`numpy.ndarray`
        ``(B, 4)`` complex first-order bins.
    grid: :class:`DirectionGrid`
        The dictionary.
    cfg: :class:`CSConfig`
        Solver settings.
    jobs: Optional[:class:`int`]
        Workers for chunks of ``cfg.chunk_size`` bins; ``None`` or ``0`` uses every CPU.
    record_objective: :class:`bool`
        Keep the objective after every iteration.


    .. versionadded:: 0.1.0
    """
    cfg.validate()
    bins = np.asarray(bins, dtype=np.complex128)
    if bins.ndim != 2 or bins.shape[1] != grid.sh_low.values.shape[1]:
        raise ArgumentError(f"Expected (bins, {grid.sh_low.values.shape[1]}) input, got {bins.shape}")
    if not np.all(np.isfinite(bins)):
        raise ArgumentError("Bins must be finite")

    starts = list(range(0, bins.shape[0], cfg.chunk_size)) or [0]

    def _run(start: int) -> SparseSolution:
        return _solve_chunk(bins[start : start + cfg.chunk_size], grid, cfg, record_objective)

    if jobs == 1 or len(starts) == 1:
        parts = [_run(start) for start in starts]
    else:
        with ThreadManager().create_new_executor(max_workers=jobs, thread_name="pydiffau.cs") as executor:
            parts = executor.map_ordered(_run, starts)

    return SparseSolution(
        np.concatenate([part.coefficients for part in parts]),
        np.concatenate([part.residual for part in parts]),
        np.concatenate([part.iterations for part in parts]),
        np.concatenate([part.converged for part in parts]),
        np.concatenate([part.objective for part in parts]) if record_objective else None,
    )


def solve_sparse_bin(
    a1_bin: np.ndarray, grid: DirectionGrid, cfg: CSConfig, *, record_objective: bool = True
) -> SparseSolution:
    """Decompose a single first-order bin, see :func:`solve_sparse_bins`.

    A zero bin gives zero amplitudes. Non-convergence is logged as a warning.

    .. versionadded:: 0.1.0
    """
    a1_bin = np.asarray(a1_bin, dtype=np.complex128)
    if a1_bin.shape != (grid.sh_low.values.shape[1],):
        raise ArgumentError(f"Expected a vector of {grid.sh_low.values.shape[1]} coefficients, got {a1_bin.shape}")
    batch = solve_sparse_bins(a1_bin[None, :], grid, cfg, record_objective=record_objective)
    if not batch.converged[0]:
        _log.warning(
            "Sparse decomposition did not converge in %d iterations (residual %.3g)",
            cfg.max_iterations,
            batch.residual[0],
        )
    objective = batch.objective[0] if record_objective else None
    if objective is not None:
        objective = objective[~np.isnan(objective)]
    return SparseSolution(
        batch.coefficients[0], batch.residual[0], batch.iterations[0], batch.converged[0], objective
    )


def _replace_low_channels(foa: AmbisonicsSignal, high: np.ndarray) -> AmbisonicsSignal:
    low = channel_count(FOA_ORDER)
    return AmbisonicsSignal(HOA_ORDER, np.concatenate([foa.channels, high[low:]]), foa.sample_rate)


def cs_upscale(
    foa: AmbisonicsSignal,
    grid: DirectionGrid,
    cfg: CSConfig,
    stft_cfg: STFTConfig,
    *,
    jobs: Optional[int] = 1,
) -> AmbisonicsSignal:
    """Upscale first-order Ambisonics to third order by sparse plane-wave decomposition in the STFT domain.

    Every bin is decomposed with :func:`solve_sparse_bins` and re-encoded with ``sh_high``. Bins quieter than
    ``cfg.energy_floor`` times the loudest bin are left silent. The first four output channels are the input
    channels.

    Raises
    --------
    :class:`ArgumentError`
        When ``foa`` is not first order.


    .. versionadded:: 0.1.0
    """
    if foa.order != FOA_ORDER:
        raise ArgumentError(f"Expected first-order input, got order {foa.order}")
    tf = stft(foa, stft_cfg)
    channels, freq, frames = tf.data.shape
    bins = tf.data.numpy().reshape(channels, -1).T
    energy = np.sum(np.abs(bins) ** 2, axis=1)
    peak = energy.max()
    loud = np.flatnonzero(energy > cfg.energy_floor * peak) if peak > 0 else np.array([], dtype=np.int64)

    high = np.zeros((bins.shape[0], channel_count(HOA_ORDER)), dtype=np.complex128)
    if loud.size:
        solution = solve_sparse_bins(bins[loud], grid, cfg, jobs=jobs)
        high[loud] = solution.coefficients @ grid.sh_high.values
        failed = int(np.count_nonzero(~solution.converged))
        if failed:
            _log.warning("%d of %d bins did not converge", failed, loud.size)
        _log.debug("Solved %d of %d bins, mean residual %.3g", loud.size, bins.shape[0], solution.residual.mean())

    missing = high[:, channel_count(FOA_ORDER) :].T.reshape(-1, freq, frames)
    waveform = istft(TFSignal(torch.from_numpy(np.ascontiguousarray(missing)), stft_cfg, tf.original_length))
    return AmbisonicsSignal(HOA_ORDER, np.concatenate([foa.channels, waveform]), foa.sample_rate)


def least_norm_upscale(foa: AmbisonicsSignal, grid: DirectionGrid) -> AmbisonicsSignal:
    """Linear upscaling through the minimum-norm plane-wave decomposition on ``grid``.

    The map is frequency independent, so it is applied to the waveform directly.

    .. versionadded:: 0.1.0
    """
    if foa.order != FOA_ORDER:
        raise ArgumentError(f"Expected first-order input, got order {foa.order}")
    low = grid.sh_low.T
    mapping = grid.sh_high.T @ np.linalg.pinv(low)
    return _replace_low_channels(foa, mapping @ foa.channels)
