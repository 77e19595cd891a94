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

from dataclasses import dataclass
from typing import Optional

from .base import ConfigSection

__all__ = ("ScoreModelConfig", "TrainConfig")


@dataclass
class ScoreModelConfig(ConfigSection):
    """Shape of the conditional score network of one upscaling block.

    Block ``N`` reads the noisy ``2N + 3`` missing channels and the ``(N + 1) ** 2`` observed channels, each stacked
    as real and imaginary parts, and returns a score for the missing channels.

    Attributes
    ------------
    block_order: :class:`int`
        The order ``N`` the block upscales from (1 or 2).
    base_width: :class:`int`
        Feature count of the first resolution level; doubled at every level below.
    depth: :class:`int`
        Number of resolution levels.
    res_units: :class:`int`
        Residual units per level on the way down and on the way up.
    time_embed_dim: :class:`int`
        Width of the sinusoidal time embedding.
    groups: :class:`int`
        Group count of the group normalization layers.


    .. versionadded:: 0.1.0
    """

    section = "model"

    block_order: int = 1
    base_width: int = 32
    depth: int = 3
    res_units: int = 2
    time_embed_dim: int = 128
    groups: int = 8
    in_channels: Optional[int] = None
    out_channels: Optional[int] = None

    def __post_init__(self) -> None:
        if self.in_channels is None:
            self.in_channels = self.expected_in_channels
        if self.out_channels is None:
            self.out_channels = self.expected_out_channels

    @property
    def expected_out_channels(self) -> int:
        return 2 * (2 * self.block_order + 3)

    @property
    def condition_channels(self) -> int:
        return 2 * (self.block_order + 1) ** 2

    @property
    def expected_in_channels(self) -> int:
        return self.condition_channels + self.expected_out_channels

    def validate(self) -> None:
        if self.block_order not in (1, 2):
            self._fail(f"block_order must be 1 or 2, got {self.block_order}")
        if self.in_channels != self.expected_in_channels or self.out_channels != self.expected_out_channels:
            self._fail(
                f"Block {self.block_order} needs {self.expected_in_channels} input and {self.expected_out_channels} "
                f"output channels, got {self.in_channels} and {self.out_channels}"
            )
        if self.depth < 1 or self.res_units < 1:
            self._fail("depth and res_units must be at least 1")
        if self.base_width < 1 or self.base_width % self.groups:
            self._fail(f"base_width {self.base_width} must be a positive multiple of groups {self.groups}")
        if self.time_embed_dim < 2 or self.time_embed_dim % 2:
            self._fail("time_embed_dim must be an even number >= 2")


@dataclass
class TrainConfig(ConfigSection):
    """Optimisation settings of one block.

    Attributes
    ------------
    block_order: :class:`int`
        The block being trained.
    batch_size: :class:`int`
        Pairs per optimizer step.
    learning_rate: :class:`float`
        Adam step size. ``0`` leaves the parameters untouched.
    total_steps: :class:`int`
        Number of optimizer steps.
    seed: :class:`int`
        Seeds parameter initialisation, batch order, crops, diffusion times and noise.
    validation_every: :class:`int`
        Steps between validation loss evaluations.
    crop_frames: Optional[:class:`int`]
        Train on random windows of this many STFT frames. ``None`` uses whole clips.
    grad_clip: Optional[:class:`float`]
        Global gradient norm limit, ``None`` disables clipping.


    .. versionadded:: 0.1.0
    """

    section = "training"

    block_order: int = 1
    batch_size: int = 8
    learning_rate: float = 1e-4
    total_steps: int = 5000
    seed: int = 0
    validation_every: int = 250
    crop_frames: Optional[int] = 64
    grad_clip: Optional[float] = 1.0
    device: str = "cpu"

    def validate(self) -> None:
        if self.block_order not in (1, 2):
            self._fail(f"block_order must be 1 or 2, got {self.block_order}")
        if self.batch_size < 1 or self.total_steps < 0 or self.validation_every < 1:
            self._fail("batch_size and validation_every must be positive, total_steps nonnegative")
        if self.learning_rate < 0:
            self._fail("learning_rate must be nonnegative")
        if self.crop_frames is not None and self.crop_frames < 1:
            self._fail("crop_frames must be positive")
        if self.grad_clip is not None and self.grad_clip <= 0:
            self._fail("grad_clip must be positive")
