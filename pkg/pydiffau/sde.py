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
from typing import NamedTuple, Optional, Tuple, Union

import torch
from tqdm import tqdm

from .dataclass import NoiseSchedule, PCSamplerConfig
from .errors import ArgumentError, ConfigurationError
from .type import ConditionalScoreFn, ScoreFn

__all__ = (
    "SigmaGrid",
    "sigma",
    "diffusion_coeff",
    "perturb",
    "dsm_loss",
    "sigma_grid",
    "prior_sample",
    "predictor_step",
    "langevin_step_size",
    "corrector_step",
    "pc_sample",
)

_log = logging.getLogger(__name__)

Time = Union[float, torch.Tensor]


class SigmaGrid(NamedTuple):
    """Diffusion times ``t_0 < ... < t_K`` and their noise levels. Samplers walk it from ``K`` down to ``0``.

    .. versionadded:: 0.1.0
    """

    times: torch.Tensor
    sigmas: torch.Tensor

    @property
    def steps(self) -> int:
        return self.sigmas.shape[0] - 1

    def check(self) -> None:
        if self.sigmas.ndim != 1 or self.times.shape != self.sigmas.shape or self.sigmas.shape[0] < 2:
            raise ConfigurationError("A sigma grid needs matching 1-d times and sigmas with at least two entries")
        if not bool(torch.all(self.sigmas[1:] > self.sigmas[:-1])) or not bool(torch.all(self.sigmas > 0)):
            raise ConfigurationError("Sigma grid must be positive and strictly increasing in its index")


def _check_time(t: Time) -> None:
    if isinstance(t, torch.Tensor):
        if bool(((t < 0) | (t > 1) | ~torch.isfinite(t)).any()):
            raise ArgumentError("Diffusion times must lie in [0, 1]")
    elif not 0.0 <= t <= 1.0:
        raise ArgumentError(f"Diffusion time must lie in [0, 1], got {t}")


def _expand(value: Time, like: torch.Tensor) -> Time:
    # (B,) -> (B, 1, ..., 1) so per-item values broadcast over an item.
    if isinstance(value, torch.Tensor) and value.ndim == 1 and like.ndim > 1:
        return value.reshape(-1, *([1] * (like.ndim - 1))).to(like.dtype)
    return value


def _normal(like: torch.Tensor, generator: Optional[torch.Generator]) -> torch.Tensor:
    z = torch.randn(like.shape, generator=generator, dtype=like.dtype)
    return z.to(like.device)


def sigma(sched: NoiseSchedule, t: Time) -> Time:
    """Noise standard deviation ``sigma_min * (sigma_max / sigma_min) ** t``.

    Parameters
    ------------
    sched: :class:`NoiseSchedule`
        The schedule.
    t: Union[:class:`float`, :class:`torch.Tensor`]
        Diffusion time(s) in ``[0, 1]``.

    Raises
    --------
    :class:`ArgumentError`
        When a time lies outside ``[0, 1]``.


    .. versionadded:: 0.1.0
    """
    _check_time(t)
    return sched.sigma_min * (sched.sigma_max / sched.sigma_min) ** t


def diffusion_coeff(sched: NoiseSchedule, t: Time) -> Time:
    """Diffusion coefficient ``g(t) = sigma(t) * sqrt(2 ln(sigma_max / sigma_min))`` of the drift-free forward SDE.

    Raises
    --------
    :class:`ConfigurationError`
        When ``sigma_max <= sigma_min``.


    .. versionadded:: 0.1.0
    """
    sched.validate()
    return sigma(sched, t) * math.sqrt(2.0 * math.log(sched.sigma_max / sched.sigma_min))


def perturb(x0: torch.Tensor, t: Time, z: torch.Tensor, sched: NoiseSchedule) -> torch.Tensor:
    """Sample the forward process in one step: ``x0 + sigma(t) * z``.

    ``t`` is a scalar or holds one time per item along the first axis.

    .. versionadded:: 0.1.0
    """
    if x0.shape != z.shape:
        raise ArgumentError(f"Shapes of x0 {tuple(x0.shape)} and z {tuple(z.shape)} differ")
    return x0 + _expand(sigma(sched, t), x0) * z


def dsm_loss(
    score_fn: ConditionalScoreFn,
    x0: torch.Tensor,
    y: Optional[torch.Tensor],
    generator: Optional[torch.Generator],
    sched: NoiseSchedule,
    *,
    t: Optional[torch.Tensor] = None,
    z: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Denoising score matching loss of a batch.

    For each item a time ``t_i`` is drawn uniformly from ``[t_eps, 1]`` and noise ``z_i`` from a standard normal.
    The loss is the batch mean of ``|| score_fn(x_t, y, t) * sigma(t_i) + z_i ||^2`` summed over all elements of an
    item.

    Parameters
    ------------
    score_fn: Callable[[:class:`torch.Tensor`, :class:`torch.Tensor`, :class:`torch.Tensor`], :class:`torch.Tensor`]
        Called as ``score_fn(x_t, y, t)`` with batched tensors and one time per item.
    x0: :class:`torch.Tensor`
        Clean targets, batch first.
    y: Optional[:class:`torch.Tensor`]
        Conditioning, passed through to ``score_fn``.
    generator: Optional[:class:`torch.Generator`]
        Source of the times and the noise.
    sched: :class:`NoiseSchedule`
        The noise schedule.
    t: Optional[:class:`torch.Tensor`]
        Fixed times, drawn from ``generator`` when omitted.
    z: Optional[:class:`torch.Tensor`]
        Fixed noise, drawn from ``generator`` when omitted.

    Returns
    ---------
    :class:`torch.Tensor`
        A differentiable scalar.

    Raises
    --------
    :class:`ArgumentError`
        For an empty batch.


    .. versionadded:: 0.1.0
    """
    if x0.ndim == 0 or x0.shape[0] == 0:
        raise ArgumentError("dsm_loss needs a nonempty batch")
    batch = x0.shape[0]
    if t is None:
        u = torch.rand(batch, generator=generator, dtype=x0.dtype).to(x0.device)
        t = sched.t_eps + (1.0 - sched.t_eps) * u
    if z is None:
        z = _normal(x0, generator)
    x_t = perturb(x0, t, z, sched)
    residual = score_fn(x_t, y, t) * _expand(sigma(sched, t), x0) + z
    return residual.pow(2).reshape(batch, -1).sum(dim=1).mean()


def sigma_grid(sched: NoiseSchedule, steps: int) -> SigmaGrid:
    """Geometric noise grid ``sigma(k / steps)`` for ``k = 0 .. steps``, in float64.

    .. versionadded:: 0.1.0
    """
    if steps < 1:
        raise ConfigurationError("A sampler needs at least one predictor step", section="sampler")
    times = torch.arange(steps + 1, dtype=torch.float64) / steps
    return SigmaGrid(times, sigma(sched, times))


def prior_sample(
    shape: Tuple[int, ...],
    sched: NoiseSchedule,
    generator: Optional[torch.Generator],
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Draw the starting point of reverse sampling, normal with standard deviation ``sigma_max``.

    .. versionadded:: 0.1.0
    """
    return sched.sigma_max * torch.randn(shape, generator=generator, dtype=dtype)


def predictor_step(
    x: torch.Tensor,
    i: int,
    score_fn: ScoreFn,
    grid: SigmaGrid,
    generator: Optional[torch.Generator],
    *,
    z: Optional[torch.Tensor] = None,
    return_mean: bool = False,
) -> Union[torch.Tensor, Tuple[torch.Tensor, torch.Tensor]]:
    """One reverse diffusion step from grid index ``i`` to ``i - 1``.

    ``x' = x + (sigma_i^2 - sigma_{i-1}^2) * s + sqrt(sigma_i^2 - sigma_{i-1}^2) * z`` with ``s = score_fn(x, t_i)``.

    Parameters
    ------------
    return_mean: :class:`bool`
        Also return the step without its noise term.

    Raises
    --------
    :class:`ConfigurationError`
        When the grid is not strictly increasing.
    :class:`ArgumentError`
        When ``i`` is not in ``[1, steps]``.


    .. versionadded:: 0.1.0
    """
    grid.check()
    if not 1 <= i <= grid.steps:
        raise ArgumentError(f"Predictor index must lie in [1, {grid.steps}], got {i}")
    variance = float(grid.sigmas[i] ** 2 - grid.sigmas[i - 1] ** 2)
    if z is None:
        z = _normal(x, generator)
    mean = x + variance * score_fn(x, float(grid.times[i]))
    out = mean + math.sqrt(variance) * z
    return (out, mean) if return_mean else out


def langevin_step_size(score: torch.Tensor, z: torch.Tensor, snr: float) -> torch.Tensor:
    """``2 * (snr * ||z|| / ||score||) ** 2`` with norms taken over the whole tensor.

    .. versionadded:: 0.1.0
    """
    return 2.0 * (snr * torch.linalg.vector_norm(z) / torch.linalg.vector_norm(score)) ** 2


def corrector_step(
    x: torch.Tensor,
    t: float,
    score_fn: ScoreFn,
    snr: float,
    generator: Optional[torch.Generator],
    *,
    z: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """One annealed Langevin step at time ``t``: ``x' = x + eps * s + sqrt(2 eps) * z``.

    A zero score leaves ``x`` unchanged. The noise is drawn either way so the random stream does not depend on the
    score.

    .. versionadded:: 0.1.0
    """
    if not snr > 0:
        raise ArgumentError(f"snr must be positive, got {snr}")
    if z is None:
        z = _normal(x, generator)
    score = score_fn(x, t)
    if not bool(torch.any(score != 0)):
        return x
    eps = langevin_step_size(score, z, snr)
    return x + eps * score + torch.sqrt(2.0 * eps) * z


def pc_sample(
    x_T: torch.Tensor,
    score_fn: ScoreFn,
    cfg: PCSamplerConfig,
    sched: NoiseSchedule,
    generator: Optional[torch.Generator],
    *,
    progress: bool = False,
) -> torch.Tensor:
    """Predictor-corrector sampling from ``sigma_max`` down to ``sigma_min``.

    Every grid index ``i = steps .. 1`` runs ``corrector_steps`` Langevin steps at ``t_i`` and then one predictor
    step to ``i - 1``, so the score is evaluated ``steps * (corrector_steps + 1)`` times. With
    ``cfg.noise_removal`` the noise-free mean of the last predictor step is returned.

    Parameters
    ------------
    x_T: :class:`torch.Tensor`
        Starting point, see :func:`prior_sample`.
    score_fn: Callable[[:class:`torch.Tensor`, :class:`float`], :class:`torch.Tensor`]
        The (conditioned) score.
    cfg: :class:`PCSamplerConfig`
        Step counts and the corrector signal-to-noise ratio.
    sched: :class:`NoiseSchedule`
        The noise schedule.
    generator: Optional[:class:`torch.Generator`]
        The only source of randomness; a fixed seed gives identical output.
    progress: :class:`bool`
        Show a progress bar.


    .. versionadded:: 0.1.0
    """
    cfg.validate()
    grid = sigma_grid(sched, cfg.predictor_steps)
    x = mean = x_T
    with torch.no_grad():
        for i in tqdm(range(grid.steps, 0, -1), desc="sampling", leave=False, disable=not progress):
            t_i = float(grid.times[i])
            for _ in range(cfg.corrector_steps):
                x = corrector_step(x, t_i, score_fn, cfg.snr, generator)
            x, mean = predictor_step(x, i, score_fn, grid, generator, return_mean=True)
    _log.debug("Finished %d predictor steps, final sigma %.4g", grid.steps, float(grid.sigmas[0]))
    return mean if cfg.noise_removal else x
