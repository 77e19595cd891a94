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
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import torch

from .ambisonics import AmbisonicsSignal
from .constants import SAMPLE_RATE
from .dataclass import AmplitudeTransformParams, STFTConfig
from .errors import ArgumentError

__all__ = (
    "TFSignal",
    "stft",
    "istft",
    "amp_compress",
    "amp_expand",
    "real_stack",
    "complex_merge",
)

_log = logging.getLogger(__name__)

Complex = Union[torch.Tensor, np.ndarray]


@dataclass
class TFSignal:
    """A multichannel complex spectrogram.

    Attributes
    ------------
    data: :class:`torch.Tensor`
        ``complex128`` tensor of shape ``(channels, fft_size // 2 + 1, frames)``.
    config: :class:`STFTConfig`
        The transform settings that produced ``data``.
    original_length: :class:`int`
        Length in samples of the waveform before tail padding.
    sample_rate: :class:`int`
        Sample rate of that waveform.


    .. versionadded:: 0.1.0
    """

    data: torch.Tensor
    config: STFTConfig
    original_length: int
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[1] != self.config.frequency_bins:
            raise ArgumentError(
                f"Expected (channels, {self.config.frequency_bins}, frames) spectrogram, got {tuple(self.data.shape)}"
            )

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[2]

    def select(self, start: int, stop: Optional[int] = None) -> TFSignal:
        """Channels ``start:stop`` as a new :class:`TFSignal`."""
        return TFSignal(self.data[start:stop], self.config, self.original_length, self.sample_rate)

    def concat(self, other: TFSignal) -> TFSignal:
        if other.config != self.config or other.original_length != self.original_length:
            raise ArgumentError("Cannot concatenate spectrograms with different settings or lengths")
        return TFSignal(torch.cat([self.data, other.data.to(self.data.dtype)]), self.config, self.original_length,
                        self.sample_rate)


def _window(cfg: STFTConfig) -> torch.Tensor:
    return torch.from_numpy(cfg.taper())


def stft(sig: Union[AmbisonicsSignal, np.ndarray], cfg: STFTConfig, sample_rate: int = SAMPLE_RATE) -> TFSignal:
    """Per-channel short-time Fourier transform.

    The waveform is zero padded at the tail to a whole number of hops, frames are centred (the first frame sits on
    sample 0 with zero padding before it), and the result keeps ``fft_size // 2 + 1`` bins. A 2.048 s clip at
    16 kHz with the default settings gives 257 bins by 257 frames.

    Parameters
    ------------
    sig: Union[:class:`AmbisonicsSignal`, :class:`numpy.ndarray`]
        The waveform, or a ``(channels, samples)`` array.
    cfg: :class:`STFTConfig`
        Transform settings.
    sample_rate: :class:`int`
        Used when ``sig`` is a plain array.

    Raises
    --------
    :class:`ArgumentError`
        When the signal is shorter than one window.


    .. versionadded:: 0.1.0
    """
    if isinstance(sig, AmbisonicsSignal):
        channels, sample_rate = sig.channels, sig.sample_rate
    else:
        channels = np.atleast_2d(np.asarray(sig, dtype=np.float64))
    length = channels.shape[-1]
    if length < cfg.window_length:
        raise ArgumentError(f"Signal of {length} samples is shorter than one window ({cfg.window_length})")
    padded = -(-length // cfg.hop) * cfg.hop
    x = torch.from_numpy(np.ascontiguousarray(channels, dtype=np.float64))
    x = torch.nn.functional.pad(x, (0, padded - length))
    spec = torch.stft(
        x,
        n_fft=cfg.fft_size,
        hop_length=cfg.hop,
        win_length=cfg.window_length,
        window=_window(cfg),
        center=True,
        pad_mode="constant",
        normalized=False,
        onesided=True,
        return_complex=True,
    )
    return TFSignal(spec, cfg, length, sample_rate)


def istft(tf: TFSignal) -> np.ndarray:
    """Inverse of :func:`stft`, returning a ``(channels, original_length)`` float64 array.

    Raises
    --------
    :class:`ArgumentError`
        When the frame count does not match ``config`` and ``original_length``.


    .. versionadded:: 0.1.0
    """
    cfg = tf.config
    expected = cfg.frames(tf.original_length)
    if tf.frames != expected:
        raise ArgumentError(f"Spectrogram has {tf.frames} frames, expected {expected} for {tf.original_length} samples")
    padded = -(-tf.original_length // cfg.hop) * cfg.hop
    x = torch.istft(
        tf.data.to(torch.complex128),
        n_fft=cfg.fft_size,
        hop_length=cfg.hop,
        win_length=cfg.window_length,
        window=_window(cfg),
        center=True,
        normalized=False,
        onesided=True,
        length=padded,
    )
    return x[..., : tf.original_length].numpy()


def _magnitude_scale(x: Complex, exponent: float, scale: float) -> Complex:
    # Multiplies by a positive real factor, so the phase of x is kept.
    if isinstance(x, np.ndarray):
        mag = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(mag > 0, scale * np.power(mag, exponent - 1.0, where=mag > 0, out=np.ones_like(mag)), 0.0)
        return x * factor
    x = torch.as_tensor(x)
    mag = x.abs()
    safe = torch.where(mag > 0, mag, torch.ones_like(mag))
    factor = torch.where(mag > 0, scale * safe.pow(exponent - 1.0), torch.zeros_like(mag))
    return x * factor


def amp_compress(x: Complex, p: AmplitudeTransformParams) -> Complex:
    """Compress magnitudes: ``H(x) = |x| ** alpha / beta * exp(i arg x)``, with ``H(0) = 0``.

    .. versionadded:: 0.1.0
    """
    return _magnitude_scale(x, p.alpha, 1.0 / p.beta)


def amp_expand(x: Complex, p: AmplitudeTransformParams) -> Complex:
    """Inverse of :func:`amp_compress`: ``(beta * |x|) ** (1 / alpha) * exp(i arg x)``.

    .. versionadded:: 0.1.0
    """
    return _magnitude_scale(x, 1.0 / p.alpha, p.beta ** (1.0 / p.alpha))


def real_stack(x: torch.Tensor) -> torch.Tensor:
    """Stack real parts over imaginary parts along the channel axis: ``(..., c, f, t)`` complex to
    ``(..., 2c, f, t)`` real.

    .. versionadded:: 0.1.0
    """
    x = torch.as_tensor(x)
    if x.ndim < 3:
        raise ArgumentError("Expected a (..., channels, freq, frames) tensor")
    if not x.is_complex():
        x = torch.complex(x, torch.zeros_like(x))
    return torch.cat([x.real, x.imag], dim=-3)


def complex_merge(x: torch.Tensor) -> torch.Tensor:
    """Inverse of :func:`real_stack`.

    Raises
    --------
    :class:`ArgumentError`
        For an odd channel count.


    .. versionadded:: 0.1.0
    """
    x = torch.as_tensor(x)
    if x.ndim < 3 or x.shape[-3] % 2:
        raise ArgumentError(f"Expected an even channel count, got shape {tuple(x.shape)}")
    half = x.shape[-3] // 2
    return torch.complex(x[..., :half, :, :], x[..., half:, :, :])
