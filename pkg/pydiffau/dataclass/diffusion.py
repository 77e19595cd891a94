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

from .base import ConfigSection

__all__ = ("NoiseSchedule", "PCSamplerConfig")


@dataclass
class NoiseSchedule(ConfigSection):
    """Geometry of the variance exploding SDE: noise grows geometrically from ``sigma_min`` at ``t = 0`` to
    ``sigma_max`` at ``t = 1``. Training times are drawn from ``[t_eps, 1]``.

    .. versionadded:: 0.1.0
    """

    section = "schedule"

    sigma_min: float = 0.05
    sigma_max: float = 0.5
    t_eps: float = 1e-3

    def validate(self) -> None:
        if not 0.0 < self.sigma_min < self.sigma_max:
            self._fail(f"Expected 0 < sigma_min < sigma_max, got {self.sigma_min}, {self.sigma_max}")
        if not 0.0 < self.t_eps < 1.0:
            self._fail(f"t_eps must lie in (0, 1), got {self.t_eps}")


@dataclass
class PCSamplerConfig(ConfigSection):
    """Predictor-corrector sampler settings.

    ``noise_removal`` returns the noise-free mean of the last predictor step instead of the final noisy iterate.

    .. versionadded:: 0.1.0
    """

    section = "sampler"

    predictor_steps: int = 30
    corrector_steps: int = 1
    snr: float = 0.5
    noise_removal: bool = False

    def validate(self) -> None:
        if self.predictor_steps < 1:
            self._fail("predictor_steps must be at least 1")
        if self.corrector_steps < 0:
            self._fail("corrector_steps must be nonnegative")
        if not self.snr > 0.0:
            self._fail(f"snr must be positive, got {self.snr}")
