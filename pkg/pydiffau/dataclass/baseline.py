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

__all__ = ("CSConfig",)


@dataclass
class CSConfig(ConfigSection):
    """Settings of the sparse plane-wave decomposition baseline.

    Attributes
    ------------
    tolerance: :class:`float`
        Relative residual ``||D s - a|| / ||a||`` a solution must reach to count as converged, and that a fit on one
        or two directions must reach to be kept. Also the relative coefficient change under which iterations stop
        early.
    max_iterations: :class:`int`
        Reweighting iterations per bin.
    sparsity_weight: :class:`float`
        Weight of the sparsity penalty relative to the data term, scaled by the bin energy.
    norm_exponent: :class:`float`
        Exponent ``p`` of the penalty ``sum (|s|^2 + delta^2) ** (p / 2)``. The default ``1`` is the smoothed l1
        norm. Values below ``1`` give a non-convex penalty that favours sparser reweighted solutions.
    smoothing: :class:`float`
        ``delta`` relative to ``||a||``.
    support_threshold: :class:`float`
        Coefficients below this fraction of the largest one are dropped before the least-squares refit.
    grid_size: :class:`int`
        Number of Fibonacci-sphere directions in the dictionary.
    energy_floor: :class:`float`
        Bins whose energy is below this fraction of the loudest bin of the clip are left at zero.
    chunk_size: :class:`int`
        Bins solved together in one vectorised batch.


    .. versionadded:: 0.1.0
    """

    section = "baseline"

    tolerance: float = 1e-4
    max_iterations: int = 100
    sparsity_weight: float = 1e-3
    norm_exponent: float = 1.0
    smoothing: float = 1e-8
    support_threshold: float = 1e-3
    grid_size: int = 400
    energy_floor: float = 1e-10
    chunk_size: int = 4096

    def validate(self) -> None:
        if not self.tolerance > 0:
            self._fail("tolerance must be positive")
        if self.max_iterations < 1:
            self._fail("max_iterations must be at least 1")
        if not self.sparsity_weight > 0:
            self._fail("sparsity_weight must be positive")
        if not 0 < self.norm_exponent <= 1:
            self._fail("norm_exponent must lie in (0, 1]")
        if not self.smoothing > 0:
            self._fail("smoothing must be positive")
        if self.grid_size < 16:
            self._fail("grid_size must be at least 16")
        if not 0 <= self.support_threshold < 1:
            self._fail("support_threshold must lie in [0, 1)")
        if self.chunk_size < 1:
            self._fail("chunk_size must be positive")
