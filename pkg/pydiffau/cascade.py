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
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch
from tqdm import tqdm

from .ambisonics import AmbisonicsSignal, truncate
from .dataclass import (
    AmplitudeTransformParams,
    NoiseSchedule,
    PCSamplerConfig,
    ScoreModelConfig,
    STFTConfig,
    TrainConfig,
)
from .errors import ArgumentError, ConfigurationError, TrainingDiverged
from .model import ScoreModelParams, init_params, save_checkpoint, score_eval
from .sde import dsm_loss, pc_sample, prior_sample
from .threads import ThreadManager
from .transform import TFSignal, amp_compress, amp_expand, complex_merge, istft, real_stack, stft
from .type import PathLike, ScoreFn
from .utils import channel_count

__all__ = (
    "TrainingPair",
    "LazyPairs",
    "make_pair",
    "make_pairs",
    "train_block",
    "validation_loss",
    "upscale_block",
    "diffau",
    "diffau_many",
)

_log = logging.getLogger(__name__)


@dataclass
class TrainingPair:
    """One training example of block ``N``.

    Attributes
    ------------
    condition: :class:`torch.Tensor`
        Compressed, real-stacked spectrogram of the first ``(N + 1) ** 2`` channels: ``2 (N + 1) ** 2`` real
        channels.
    target: :class:`torch.Tensor`
        The same for the ``2N + 3`` channels of order ``N + 1``: ``2 (2N + 3)`` real channels.
    block_order: :class:`int`
        ``N``.


    .. versionadded:: 0.1.0
    """

    condition: torch.Tensor
    target: torch.Tensor
    block_order: int

    def __post_init__(self) -> None:
        n = self.block_order
        if self.condition.shape[0] != 2 * channel_count(n) or self.target.shape[0] != 2 * (2 * n + 3):
            raise ArgumentError(f"Channel counts {self.condition.shape[0]}/{self.target.shape[0]} do not fit block {n}")
        if self.condition.shape[1:] != self.target.shape[1:]:
            raise ArgumentError("Condition and target spectrograms differ in shape")

    @property
    def frames(self) -> int:
        return self.target.shape[-1]


def make_pair(
    clip: AmbisonicsSignal,
    block_order: int,
    stft_cfg: STFTConfig,
    amplitude: AmplitudeTransformParams,
    dtype: torch.dtype = torch.float32,
) -> TrainingPair:
    """Build the training pair of block ``block_order`` from one clip of order at least ``block_order + 1``.

    .. versionadded:: 0.1.0
    """
    if clip.order < block_order + 1:
        raise ArgumentError(f"Block {block_order} needs clips of order {block_order + 1}, got order {clip.order}")
    observed = channel_count(block_order)
    tf = stft(truncate(clip, block_order + 1), stft_cfg)
    compressed = amp_compress(tf.data, amplitude)
    return TrainingPair(
        condition=real_stack(compressed[:observed]).to(dtype),
        target=real_stack(compressed[observed:]).to(dtype),
        block_order=block_order,
    )


def make_pairs(
    clips: Sequence[AmbisonicsSignal],
    block_order: int,
    stft_cfg: STFTConfig,
    amplitude: AmplitudeTransformParams,
    dtype: torch.dtype = torch.float32,
) -> List[TrainingPair]:
    """Build the training pairs of block ``block_order``.

    ``condition = R(H(STFT(first (N + 1) ** 2 channels)))`` and ``target = R(H(STFT(channels (N + 1) ** 2 .. (N + 2)
    ** 2 - 1)))``, where ``H`` is :func:`amp_compress` and ``R`` is :func:`real_stack`.

    Raises
    --------
    :class:`ArgumentError`
        When a clip is of order lower than ``block_order + 1``.


    .. versionadded:: 0.1.0
    """
    return [make_pair(clip, block_order, stft_cfg, amplitude, dtype) for clip in clips]


class LazyPairs(Sequence):
    """Training pairs computed on access from a clip loader, for corpora too large to hold as spectrograms.

    Parameters
    ------------
    load: Callable[[:class:`int`], :class:`AmbisonicsSignal`]
        Returns clip ``i``.
    count: :class:`int`
        Number of clips.


    .. versionadded:: 0.1.0
    """

    def __init__(
        self,
        load: Callable[[int], AmbisonicsSignal],
        count: int,
        block_order: int,
        stft_cfg: STFTConfig,
        amplitude: AmplitudeTransformParams,
    ) -> None:
        self._load = load
        self._count = count
        self.block_order = block_order
        self.stft_cfg = stft_cfg
        self.amplitude = amplitude

    def __len__(self) -> int:
        return self._count

    def __getitem__(self, index: int) -> TrainingPair:
        if not -self._count <= index < self._count:
            raise IndexError(index)
        return make_pair(self._load(index % self._count), self.block_order, self.stft_cfg, self.amplitude)


def _crop(pair: TrainingPair, frames: Optional[int], generator: torch.Generator) -> Tuple[torch.Tensor, torch.Tensor]:
    if frames is None or frames >= pair.frames:
        return pair.target, pair.condition
    start = int(torch.randint(pair.frames - frames + 1, (1,), generator=generator))
    return pair.target[..., start : start + frames], pair.condition[..., start : start + frames]


def _batch(
    pairs: Sequence[TrainingPair], indices: Sequence[int], frames: Optional[int], generator: torch.Generator
) -> Tuple[torch.Tensor, torch.Tensor]:
    cropped = [_crop(pairs[int(i)], frames, generator) for i in indices]
    return torch.stack([c[0] for c in cropped]), torch.stack([c[1] for c in cropped])


def _conditional_score(params: ScoreModelParams):
    def _score(x_t: torch.Tensor, y: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return score_eval(params, x_t, y, t)

    return _score


def validation_loss(
    params: ScoreModelParams,
    pairs: Sequence[TrainingPair],
    cfg: TrainConfig,
    sched: NoiseSchedule,
) -> float:
    """Mean denoising score matching loss over ``pairs`` with a fixed random stream, so successive evaluations are
    comparable. Each pair is cropped to ``cfg.crop_frames`` frames like a training batch, the window also drawn from
    that stream.

    .. versionadded:: 0.1.0
    """
    if not len(pairs):
        raise ArgumentError("No validation pairs")
    generator = torch.Generator().manual_seed(cfg.seed + 1)
    device = next(params.network.parameters()).device
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(pairs), cfg.batch_size):
            indices = range(start, min(start + cfg.batch_size, len(pairs)))
            x0, y = _batch(pairs, indices, cfg.crop_frames, generator)
            loss = dsm_loss(_conditional_score(params), x0.to(device), y.to(device), generator, sched)
            total += float(loss) * len(indices)
            count += len(indices)
    return total / count


def train_block(
    pairs: Sequence[TrainingPair],
    cfg: TrainConfig,
    sched: NoiseSchedule,
    *,
    model: Optional[ScoreModelConfig] = None,
    stft_cfg: Optional[STFTConfig] = None,
    amplitude: Optional[AmplitudeTransformParams] = None,
    validation_pairs: Optional[Sequence[TrainingPair]] = None,
    resume: Optional[ScoreModelParams] = None,
    checkpoint_path: Optional[PathLike] = None,
    checkpoint_every: Optional[int] = None,
    progress: bool = False,
) -> ScoreModelParams:
    """Train the score model of one block by minimising :func:`dsm_loss` with Adam.

    Each step draws ``batch_size`` pairs (with replacement) and, when ``cfg.crop_frames`` is set, a random window of
    frames from each. Every draw comes from one generator seeded with ``cfg.seed``, so a fixed seed gives an
    identical loss history. The loss per step is kept in :attr:`ScoreModelParams.history`, the validation loss
    every ``cfg.validation_every`` steps in :attr:`ScoreModelParams.validation`.

    Parameters
    ------------
    pairs: Sequence[:class:`TrainingPair`]
        Training pairs of block ``cfg.block_order``.
    cfg: :class:`TrainConfig`
        Optimisation settings.
    sched: :class:`NoiseSchedule`
        Noise schedule, stored with the model.
    model: Optional[:class:`ScoreModelConfig`]
        Network shape, the default one of the block when omitted.
    stft_cfg: Optional[:class:`STFTConfig`]
        Transform the pairs were made with, stored with the model.
    amplitude: Optional[:class:`AmplitudeTransformParams`]
        Compression the pairs were made with, stored with the model.
    validation_pairs: Optional[Sequence[:class:`TrainingPair`]]
        Pairs for the periodic validation loss.
    resume: Optional[:class:`ScoreModelParams`]
        Continue from these parameters, their optimizer state and their random stream.
    checkpoint_path: Optional[Union[:class:`str`, :class:`os.PathLike`]]
        Where to write checkpoints during and after training.
    checkpoint_every: Optional[:class:`int`]
        Steps between intermediate checkpoints.
    progress: :class:`bool`
        Show a progress bar.

    Raises
    --------
    :class:`ArgumentError`
        For an empty set of pairs or pairs of another block.
    :class:`TrainingDiverged`
        When the loss becomes non-finite.


    .. versionadded:: 0.1.0
    """
    cfg.validate()
    sched.validate()
    if not len(pairs):
        raise ArgumentError("train_block needs at least one training pair")
    if pairs[0].block_order != cfg.block_order:
        raise ArgumentError(f"Pairs of block {pairs[0].block_order} cannot train block {cfg.block_order}")

    if resume is not None:
        params = resume
        if params.block_order != cfg.block_order:
            raise ConfigurationError(
                f"Cannot resume block {cfg.block_order} from a block {params.block_order} model", section="training"
            )
    else:
        model = model or ScoreModelConfig(block_order=cfg.block_order)
        if model.block_order != cfg.block_order:
            raise ConfigurationError(
                f"Model for block {model.block_order} cannot be trained as block {cfg.block_order}", section="model"
            )
        params = init_params(model, cfg.seed, stft=stft_cfg, amplitude=amplitude, schedule=sched)

    network = params.network.to(torch.device(cfg.device))
    network.train()
    optimizer = torch.optim.Adam(network.parameters(), lr=cfg.learning_rate)
    generator = torch.Generator().manual_seed(cfg.seed)
    if params.training_state:
        optimizer.load_state_dict(params.training_state["optimizer"])
        generator.set_state(params.training_state["generator"])
    score = _conditional_score(params)

    _log.info(
        "Training block %d: %d pairs, steps %d to %d, %d parameters",
        cfg.block_order,
        len(pairs),
        params.step,
        cfg.total_steps,
        params.parameter_count,
    )
    for step in tqdm(range(params.step, cfg.total_steps), desc=f"block {cfg.block_order}", disable=not progress):
        indices = torch.randint(len(pairs), (cfg.batch_size,), generator=generator)
        x0, y = _batch(pairs, indices.tolist(), cfg.crop_frames, generator)
        loss = dsm_loss(score, x0.to(cfg.device), y.to(cfg.device), generator, sched)
        value = float(loss)
        if not math.isfinite(value):
            raise TrainingDiverged(step, value)

        optimizer.zero_grad()
        loss.backward()
        if cfg.grad_clip is not None:
            torch.nn.utils.clip_grad_norm_(network.parameters(), cfg.grad_clip)
        optimizer.step()

        params.history.append(value)
        params.step = step + 1
        if validation_pairs and params.step % cfg.validation_every == 0:
            network.eval()
            val = validation_loss(params, validation_pairs, cfg, sched)
            network.train()
            params.validation.append([params.step, val])
            _log.info("Block %d step %d: loss %.4f, validation loss %.4f", cfg.block_order, params.step, value, val)
        elif params.step % cfg.validation_every == 0:
            _log.info("Block %d step %d: loss %.4f", cfg.block_order, params.step, value)

        if checkpoint_path is not None and checkpoint_every and params.step % checkpoint_every == 0:
            params.training_state = {"optimizer": optimizer.state_dict(), "generator": generator.get_state()}
            save_checkpoint(params, checkpoint_path)

    network.eval()
    params.training_state = {"optimizer": optimizer.state_dict(), "generator": generator.get_state()}
    if checkpoint_path is not None:
        save_checkpoint(params, checkpoint_path)
    return params


def upscale_block(
    a_n: AmbisonicsSignal,
    params: ScoreModelParams,
    sampler: PCSamplerConfig,
    generator: Optional[torch.Generator],
    *,
    score_fn: Optional[Callable[[torch.Tensor], ScoreFn]] = None,
    progress: bool = False,
) -> AmbisonicsSignal:
    """Raise the order of ``a_n`` by one with the score model of block ``N``.

    The observed channels are transformed, compressed and stacked into the conditioning; the ``2N + 3`` missing
    channels are sampled with :func:`pc_sample` from ``N(0, sigma_max ** 2)``, merged back to complex values,
    expanded and inverted. The observed channels are copied to the output unchanged.

    Parameters
    ------------
    a_n: :class:`AmbisonicsSignal`
        Order ``N`` input.
    params: :class:`ScoreModelParams`
        Block ``N`` model and the transform settings it was trained with.
    sampler: :class:`PCSamplerConfig`
        Sampler settings.
    generator: Optional[:class:`torch.Generator`]
        Source of all randomness.
    score_fn: Optional[Callable[[:class:`torch.Tensor`], Callable]]
        Builds the conditioned score from the conditioning tensor instead of ``params``' network.

    Returns
    ---------
    :class:`AmbisonicsSignal`
        Order ``N + 1``.

    Raises
    --------
    :class:`ArgumentError`
        When the order of ``a_n`` differs from the block of ``params``.


    .. versionadded:: 0.1.0
    """
    n = a_n.order
    if n != params.block_order:
        raise ArgumentError(f"Block {params.block_order} model cannot upscale an order {n} signal")
    dtype = next(params.network.parameters()).dtype
    tf = stft(a_n, params.stft)
    condition = real_stack(amp_compress(tf.data, params.amplitude)).to(dtype)
    shape = (params.config.out_channels,) + tuple(condition.shape[1:])

    x_t = prior_sample(shape, params.schedule, generator, dtype=dtype)
    score = score_fn(condition) if score_fn is not None else params.score_fn(condition)
    x0 = pc_sample(x_t, score, sampler, params.schedule, generator, progress=progress)

    missing = amp_expand(complex_merge(x0.to(torch.float64)), params.amplitude)
    waveform = istft(TFSignal(missing, params.stft, tf.original_length, a_n.sample_rate))
    return AmbisonicsSignal(n + 1, np.concatenate([a_n.channels, waveform]), a_n.sample_rate)


def diffau(
    foa: AmbisonicsSignal,
    params_1: ScoreModelParams,
    params_2: ScoreModelParams,
    sampler: PCSamplerConfig,
    generator: Optional[torch.Generator],
    *,
    progress: bool = False,
) -> AmbisonicsSignal:
    """Upscale first-order Ambisonics to third order with two cascaded blocks.

    Raises
    --------
    :class:`ArgumentError`
        When ``foa`` is not of order 1 or the models are in the wrong slots.


    .. versionadded:: 0.1.0
    """
    if foa.order != 1:
        raise ArgumentError(f"Expected first-order input, got order {foa.order}")
    second = upscale_block(foa, params_1, sampler, generator, progress=progress)
    return upscale_block(second, params_2, sampler, generator, progress=progress)


def diffau_many(
    clips: Sequence[AmbisonicsSignal],
    params_1: ScoreModelParams,
    params_2: ScoreModelParams,
    sampler: PCSamplerConfig,
    seeds: Sequence[int],
    *,
    jobs: Optional[int] = 1,
) -> List[AmbisonicsSignal]:
    """Run :func:`diffau` over clips on a worker pool. Clip ``i`` uses its own generator seeded with ``seeds[i]``,
    so results do not depend on ``jobs``.

    .. versionadded:: 0.1.0
    """
    if len(clips) != len(seeds):
        raise ArgumentError("Need one seed per clip")

    def _run(item: Tuple[AmbisonicsSignal, int]) -> AmbisonicsSignal:
        clip, seed = item
        return diffau(clip, params_1, params_2, sampler, torch.Generator().manual_seed(int(seed)))

    if jobs == 1:
        return [_run(item) for item in zip(clips, seeds)]
    with ThreadManager().create_new_executor(max_workers=jobs, thread_name="pydiffau.upscale") as executor:
        return executor.map_ordered(_run, list(zip(clips, seeds)))
