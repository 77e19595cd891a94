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

import numpy as np
from scipy import signal

from ..enums import TaperWindow
from .base import ConfigSection

__all__ = ("STFTConfig", "AmplitudeTransformParams")


@dataclass
class STFTConfig(ConfigSection):
    """Short-time Fourier transform settings.

    The same taper is used for analysis and synthesis. With the periodic square-root Hann window and a hop of a
    quarter window the squared windows overlap-add to a constant, so the inverse reconstructs exactly.

    .. versionadded:: 0.1.0
    """

    section = "stft"

    window_length: int = 512
    hop: int = 128
    fft_size: int = 512
    window: TaperWindow = TaperWindow.sqrt_hann

    def __post_init__(self) -> None:
        if not isinstance(self.window, TaperWindow):
            try:
                self.window = TaperWindow(self.window)
            except ValueError:
                self._fail(f"Unknown window {self.window!r}")

    @property
    def frequency_bins(self) -> int:
        return self.fft_size // 2 + 1

    def taper(self) -> np.ndarray:
        hann = signal.get_window("hann", self.window_length, fftbins=True)
        if self.window is TaperWindow.sqrt_hann:
            return np.sqrt(hann)
        return hann

    def frames(self, length: int) -> int:
        """Number of frames produced for a signal of ``length`` samples (after tail padding to a whole hop)."""
        padded = -(-length // self.hop) * self.hop
        return padded // self.hop + 1

    def validate(self) -> None:
        if self.hop <= 0:
            self._fail("hop must be positive")
        if not self.hop <= self.window_length <= self.fft_size:
            self._fail(
                f"Expected hop <= window_length <= fft_size, got {self.hop}, {self.window_length}, {self.fft_size}"
            )
        if not signal.check_NOLA(self.taper() ** 2, self.window_length, self.window_length - self.hop):
            self._fail("Window and hop do not overlap-add to a nonzero envelope; the STFT cannot be inverted")


@dataclass
class AmplitudeTransformParams(ConfigSection):
    """Exponent ``alpha`` and scale ``beta`` of the magnitude compression applied to spectrogram bins.

    .. versionadded:: 0.1.0
    """

    section = "amplitude"

    alpha: float = 0.5
    beta: float = 0.15

    def validate(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            self._fail(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.beta > 0.0:
            self._fail(f"beta must be positive, got {self.beta}")
