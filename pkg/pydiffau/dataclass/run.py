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

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from ..errors import ConfigurationError
from .base import ConfigSection
from .baseline import CSConfig
from .dataset import DatasetSpec
from .diffusion import NoiseSchedule, PCSamplerConfig
from .model import ScoreModelConfig, TrainConfig
from .stft import AmplitudeTransformParams, STFTConfig

__all__ = ("PathsConfig", "RunConfig")


@dataclass
class PathsConfig(ConfigSection):
    """Default locations used by the command line when a flag does not name one.

    .. versionadded:: 0.1.0
    """

    section = "paths"

    corpus: Optional[str] = None
    dataset: Optional[str] = None
    checkpoints: Optional[str] = None
    outputs: Optional[str] = None


@dataclass
class RunConfig:
    """Every setting of a run, one attribute per section of the configuration file.

    ``model`` and ``training`` are keyed by block order (``1`` and ``2``).

    .. versionadded:: 0.1.0
    """

    stft: STFTConfig = field(default_factory=STFTConfig)
    amplitude: AmplitudeTransformParams = field(default_factory=AmplitudeTransformParams)
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    sampler: PCSamplerConfig = field(default_factory=PCSamplerConfig)
    model: Dict[int, ScoreModelConfig] = field(
        default_factory=lambda: {1: ScoreModelConfig(block_order=1), 2: ScoreModelConfig(block_order=2)}
    )
    training: Dict[int, TrainConfig] = field(
        default_factory=lambda: {1: TrainConfig(block_order=1), 2: TrainConfig(block_order=2)}
    )
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    baseline: CSConfig = field(default_factory=CSConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        for section in (self.stft, self.amplitude, self.schedule, self.sampler, self.dataset, self.baseline, self.paths):
            section.validate()
        for block in (1, 2):
            if block not in self.model or block not in self.training:
                raise ConfigurationError(f"No settings for block {block}", section="model")
            for cfg in (self.model[block], self.training[block]):
                cfg.validate()
                if cfg.block_order != block:
                    raise ConfigurationError(
                        f"Settings listed under block {block} declare block_order {cfg.block_order}",
                        section=cfg.section,
                    )
        if self.jobs < 0:
            raise ConfigurationError("jobs must be nonnegative")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stft": self.stft.to_dict(),
            "amplitude": self.amplitude.to_dict(),
            "schedule": self.schedule.to_dict(),
            "sampler": self.sampler.to_dict(),
            "model": {k: v.to_dict() for k, v in self.model.items()},
            "training": {k: v.to_dict() for k, v in self.training.items()},
            "dataset": self.dataset.to_dict(),
            "baseline": self.baseline.to_dict(),
            "paths": self.paths.to_dict(),
            "seed": self.seed,
            "jobs": self.jobs,
        }
