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

import contextlib
import datetime
import math
import os
import tempfile
from typing import TYPE_CHECKING, Any, Iterator, Optional

from dateutil import parser

from .errors import ArgumentError

if TYPE_CHECKING:
    from .type import PathLike

__all__ = (
    "channel_count",
    "order_from_channels",
    "acn_index",
    "time_parse_todt",
    "utc_now_iso",
    "atomic_write",
)


def channel_count(order: int) -> int:
    """Number of Ambisonics channels of an order ``N``, i.e. ``(N + 1) ** 2``.

    .. versionadded:: 0.1.0
    """
    if order < 0:
        raise ArgumentError(f"Ambisonics order must be nonnegative, got {order}")
    return (order + 1) ** 2


def order_from_channels(channels: int) -> int:
    """Inverse of :func:`channel_count`. Raises :class:`ArgumentError` when ``channels`` is not a perfect square.

    .. versionadded:: 0.1.0
    """
    root = math.isqrt(channels) if channels >= 0 else -1
    if channels < 1 or root * root != channels:
        raise ArgumentError(f"{channels} is not a valid Ambisonics channel count")
    return root - 1


def acn_index(degree: int, index: int) -> int:
    """Ambisonic Channel Number of the spherical harmonic ``(n, m)``: ``n * n + n + m``."""
    return degree * degree + degree + index


def time_parse_todt(date: Optional[Any]) -> datetime.datetime:
    """Parse a timestamp stored in checkpoint or manifest metadata to a timezone aware datetime object.

    Returns
    ---------
    :class:`datetime.datetime`


    .. versionadded:: 0.1.0
    """
    parsed = parser.parse(str(date))
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=datetime.timezone.utc)
    return parsed


def utc_now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


@contextlib.contextmanager
def atomic_write(path: PathLike, mode: str = "wb") -> Iterator[Any]:
    """Open a temporary file next to ``path`` and move it over ``path`` once the block exits without error.

    Interrupted writes leave the previous file (or nothing) in place.

    Parameters
    ------------
    path: Union[:class:`str`, :class:`os.PathLike`]
        The final destination.
    mode: :class:`str`
        ``"wb"`` or ``"w"``. Text mode writes utf-8.


    .. versionadded:: 0.1.0
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", suffix=os.path.splitext(path)[1], dir=directory)
    try:
        if "b" in mode:
            fh = os.fdopen(fd, mode)
        else:
            fh = os.fdopen(fd, mode, encoding="utf-8", newline="")
        with fh:
            yield fh
        os.replace(tmp_path, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp_path)
        raise
