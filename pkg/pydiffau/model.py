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
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

import torch
from torch import nn
from torch.nn import functional as F

from .constants import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC
from .dataclass import AmplitudeTransformParams, NoiseSchedule, ScoreModelConfig, STFTConfig
from .errors import (
    ArgumentError,
    CheckpointConfigMismatch,
    CheckpointError,
    CheckpointVersionMismatch,
    ConfigurationError,
    CorruptCheckpoint,
)
from .sde import sigma
from .type import PathLike, ScoreFn
from .utils import atomic_write, time_parse_todt, utc_now_iso

__all__ = (
    "ScoreNet",
    "ScoreModelParams",
    "init_params",
    "score_eval",
    "save_checkpoint",
    "load_checkpoint",
)

_log = logging.getLogger(__name__)


def _groups(channels: int, groups: int) -> int:
    g = math.gcd(channels, groups)
    return max(g, 1)


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=t.dtype, device=t.device) / half)
    args = 1000.0 * t[:, None] * freqs[None, :]
    return torch.cat([torch.sin(args), torch.cos(args)], dim=1)


class ResidualUnit(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, embed_dim: int, groups: int) -> None:
        super().__init__()
        self.norm1 = nn.GroupNorm(_groups(in_channels, groups), in_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.embed = nn.Linear(embed_dim, out_channels)
        self.norm2 = nn.GroupNorm(_groups(out_channels, groups), out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.skip = nn.Conv2d(in_channels, out_channels, 1) if in_channels != out_channels else nn.Identity()

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.embed(emb)[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return self.skip(x) + h


class Level(nn.Module):
    def __init__(self, channels: List[int], embed_dim: int, groups: int) -> None:
        super().__init__()
        self.units = nn.ModuleList(
            ResidualUnit(c_in, c_out, embed_dim, groups) for c_in, c_out in zip(channels[:-1], channels[1:])
        )

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        for unit in self.units:
            x = unit(x, emb)
        return x


class ScoreNet(nn.Module):
    """Time-conditioned U-Net over stacked spectrogram channels.

    The network reads the noisy target channels concatenated with the conditioning channels and predicts a
    noise-like tensor of the target shape; :func:`score_eval` divides it by ``sigma(t)``. Each resolution level has
    ``res_units`` residual units with group normalization, and the time embedding is added inside every unit. The
    output convolution starts at zero so an untrained network returns zero.

    Parameters
    ------------
    config: :class:`ScoreModelConfig`
        Channel counts and widths.


    .. versionadded:: 0.1.0
    """

    def __init__(self, config: ScoreModelConfig) -> None:
        super().__init__()
        self.config = config
        widths = [config.base_width * 2**level for level in range(config.depth)]
        embed_dim = config.time_embed_dim
        self.embed = nn.Sequential(nn.Linear(embed_dim, embed_dim), nn.SiLU(), nn.Linear(embed_dim, embed_dim))
        self.stem = nn.Conv2d(config.in_channels, widths[0], 3, padding=1)

        self.down = nn.ModuleList()
        self.downsample = nn.ModuleList()
        previous = widths[0]
        for level, width in enumerate(widths):
            self.down.append(Level([previous] + [width] * config.res_units, embed_dim, config.groups))
            previous = width
            if level < config.depth - 1:
                self.downsample.append(nn.Conv2d(width, width, 3, stride=2, padding=1))

        self.middle = Level([widths[-1]] * 3, embed_dim, config.groups)

        self.up = nn.ModuleList()
        self.upsample = nn.ModuleList()
        for level in reversed(range(config.depth)):
            width = widths[level]
            if level < config.depth - 1:
                self.upsample.append(nn.Conv2d(widths[level + 1], width, 3, padding=1))
            self.up.append(Level([2 * width] + [width] * config.res_units, embed_dim, config.groups))

        self.out_norm = nn.GroupNorm(_groups(widths[0], config.groups), widths[0])
        self.out = nn.Conv2d(widths[0], config.out_channels, 3, padding=1)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    @property
    def multiple(self) -> int:
        return 2**self.config.depth

    def forward(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        freq, frames = x.shape[-2:]
        pad_f = -freq % self.multiple
        pad_t = -frames % self.multiple
        h = F.pad(x, (0, pad_t, 0, pad_f))

        emb = self.embed(timestep_embedding(t, self.config.time_embed_dim))
        h = self.stem(h)
        skips = []
        for level, block in enumerate(self.down):
            h = block(h, emb)
            skips.append(h)
            if level < len(self.downsample):
                h = self.downsample[level](h)
        h = self.middle(h, emb)
        for level, block in enumerate(self.up):
            if level > 0:
                h = F.interpolate(h, scale_factor=2.0, mode="nearest")
                h = self.upsample[level - 1](h)
            h = block(torch.cat([h, skips.pop()], dim=1), emb)
        h = self.out(F.silu(self.out_norm(h)))
        return h[..., :freq, :frames]


@dataclass
class ScoreModelParams:
    """A trained (or freshly initialised) score model of one upscaling block, with everything needed to run it.

    Attributes
    ------------
    network: :class:`ScoreNet`
        The parameters.
    config: :class:`ScoreModelConfig`
        Network shape.
    stft: :class:`STFTConfig`
        Transform the model was trained on.
    amplitude: :class:`AmplitudeTransformParams`
        Compression the model was trained on.
    schedule: :class:`NoiseSchedule`
        Noise schedule the model was trained on.
    step: :class:`int`
        Optimizer steps taken so far.
    history: List[:class:`float`]
        Training loss per step.
    validation: List[List[:class:`float`]]
        ``[step, loss]`` rows of the validation loss.
    created_at: :class:`datetime.datetime`
        When training of these parameters started.
    training_state: Optional[Dict]
        Optimizer and random generator state, kept to resume training.


    .. versionadded:: 0.1.0
    """

    network: ScoreNet
    config: ScoreModelConfig
    stft: STFTConfig = field(default_factory=STFTConfig)
    amplitude: AmplitudeTransformParams = field(default_factory=AmplitudeTransformParams)
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    step: int = 0
    history: List[float] = field(default_factory=list)
    validation: List[List[float]] = field(default_factory=list)
    created_at: datetime = field(default_factory=lambda: time_parse_todt(utc_now_iso()))
    training_state: Optional[Dict[str, Any]] = field(default=None, repr=False)

    @property
    def block_order(self) -> int:
        return self.config.block_order

    @property
    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.network.parameters())

    def score_fn(self, y: torch.Tensor) -> ScoreFn:
        """The score conditioned on ``y``, in the form the samplers call it."""

        def _score(x: torch.Tensor, t: float) -> torch.Tensor:
            return score_eval(self, x, y, t)

        return _score


def init_params(
    cfg: ScoreModelConfig,
    seed: int = 0,
    *,
    stft: Optional[STFTConfig] = None,
    amplitude: Optional[AmplitudeTransformParams] = None,
    schedule: Optional[NoiseSchedule] = None,
) -> ScoreModelParams:
    """Create a freshly initialised score model. The same seed gives the same parameters.

    The global torch random state is left untouched.

    Raises
    --------
    :class:`ConfigurationError`
        When ``cfg`` violates its channel formulas.


    .. versionadded:: 0.1.0
    """
    cfg.validate()
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        network = ScoreNet(cfg)
    params = ScoreModelParams(
        network=network,
        config=cfg,
        stft=stft or STFTConfig(),
        amplitude=amplitude or AmplitudeTransformParams(),
        schedule=schedule or NoiseSchedule(),
    )
    _log.debug("Initialised block %d score model with %d parameters", cfg.block_order, params.parameter_count)
    return params


def score_eval(
    params: ScoreModelParams,
    x_t: torch.Tensor,
    y: torch.Tensor,
    t: Union[float, torch.Tensor],
) -> torch.Tensor:
    """Evaluate the conditional score.

    Parameters
    ------------
    params: :class:`ScoreModelParams`
        The model.
    x_t: :class:`torch.Tensor`
        Noisy target channels, ``(out_channels, F, T)`` or batched ``(B, out_channels, F, T)``.
    y: :class:`torch.Tensor`
        Conditioning channels, ``(2 (N + 1) ** 2, F, T)`` or batched.
    t: Union[:class:`float`, :class:`torch.Tensor`]
        Diffusion time, one per item when batched.

    Returns
    ---------
    :class:`torch.Tensor`
        Score estimate shaped like ``x_t``, in ``x_t``'s dtype.

    Raises
    --------
    :class:`ArgumentError`
        On shape mismatches.


    .. versionadded:: 0.1.0
    """
    cfg = params.config
    single = x_t.ndim == 3
    x = x_t.unsqueeze(0) if single else x_t
    cond = y.unsqueeze(0) if y.ndim == 3 else y
    if x.ndim != 4 or x.shape[1] != cfg.out_channels:
        raise ArgumentError(f"Block {cfg.block_order} expects {cfg.out_channels} target channels, got {tuple(x_t.shape)}")
    if cond.ndim != 4 or cond.shape[1] != cfg.condition_channels:
        raise ArgumentError(
            f"Block {cfg.block_order} expects {cfg.condition_channels} conditioning channels, got {tuple(y.shape)}"
        )
    if cond.shape[0] != x.shape[0] or cond.shape[2:] != x.shape[2:]:
        raise ArgumentError(f"Target {tuple(x_t.shape)} and conditioning {tuple(y.shape)} do not line up")

    weight = next(params.network.parameters())
    t = torch.as_tensor(t, dtype=weight.dtype, device=weight.device)
    if t.ndim == 0:
        t = t.expand(x.shape[0])
    std = sigma(params.schedule, t)
    raw = params.network(torch.cat([x, cond], dim=1).to(weight.dtype), t)
    out = (raw / std[:, None, None, None]).to(x_t.dtype)
    return out[0] if single else out


def save_checkpoint(params: ScoreModelParams, path: PathLike) -> None:
    """Write ``params`` to a single file.

    The file is a :func:`torch.save` dictionary with these entries:

    - ``magic``: the string ``"pydiffau-checkpoint"``
    - ``format_version``: :class:`int`
    - ``created_at``: ISO 8601 timestamp
    - ``model``, ``stft``, ``amplitude``, ``schedule``: configuration sections as plain dicts
    - ``state_dict``: named parameter tensors
    - ``step``, ``history``, ``validation``: training progress
    - ``training_state``: optimizer and generator state, or ``None``

    The file is replaced atomically.

    .. versionadded:: 0.1.0
    """
    payload = {
        "magic": CHECKPOINT_MAGIC,
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "created_at": params.created_at.isoformat(),
        "model": params.config.to_dict(),
        "stft": params.stft.to_dict(),
        "amplitude": params.amplitude.to_dict(),
        "schedule": params.schedule.to_dict(),
        "state_dict": params.network.state_dict(),
        "step": params.step,
        "history": list(params.history),
        "validation": [list(row) for row in params.validation],
        "training_state": params.training_state,
    }
    with atomic_write(path, "wb") as fh:
        torch.save(payload, fh)
    _log.info("Saved block %d checkpoint at step %d to %s", params.block_order, params.step, path)


def load_checkpoint(path: PathLike, *, block_order: Optional[int] = None) -> ScoreModelParams:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Parameters
    ------------
    path: Union[:class:`str`, :class:`os.PathLike`]
        The file.
    block_order: Optional[:class:`int`]
        The block slot the model is loaded into. A checkpoint of another block is refused.

    Raises
    --------
    :class:`CorruptCheckpoint`
        When the file is unreadable, truncated or lacks entries.
    :class:`CheckpointVersionMismatch`
        When the format version differs from this release.
    :class:`CheckpointConfigMismatch`
        When the checkpoint belongs to another block.


    .. versionadded:: 0.1.0
    """
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as e:
        raise CheckpointError(path, "no such file") from e
    except Exception as e:
        raise CorruptCheckpoint(path, f"{type(e).__name__}: {e}") from e
    if not isinstance(payload, dict) or payload.get("magic") != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint(path, "not a pydiffau checkpoint")
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionMismatch(path, payload.get("format_version"), CHECKPOINT_FORMAT_VERSION)
    try:
        config = ScoreModelConfig.from_dict(payload["model"])
        stft = STFTConfig.from_dict(payload["stft"])
        amplitude = AmplitudeTransformParams.from_dict(payload["amplitude"])
        schedule = NoiseSchedule.from_dict(payload["schedule"])
        state = payload["state_dict"]
    except KeyError as e:
        raise CorruptCheckpoint(path, f"missing entry {e}") from e
    except ConfigurationError as e:
        raise CorruptCheckpoint(path, str(e)) from e
    if block_order is not None and config.block_order != block_order:
        raise CheckpointConfigMismatch(
            path, f"trained for block {config.block_order}, cannot be used as block {block_order}"
        )

    network = ScoreNet(config)
    try:
        network.load_state_dict(state)
    except (RuntimeError, TypeError) as e:
        raise CorruptCheckpoint(path, f"parameters do not match the model configuration: {e}") from e
    network.eval()
    return ScoreModelParams(
        network=network,
        config=config,
        stft=stft,
        amplitude=amplitude,
        schedule=schedule,
        step=int(payload.get("step", 0)),
        history=[float(v) for v in payload.get("history", [])],
        validation=[list(row) for row in payload.get("validation", [])],
        created_at=time_parse_todt(payload.get("created_at")),
        training_state=payload.get("training_state"),
    )
