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

from typing import Iterable, Optional

__all__ = (
    "pydiffauException",
    "ArgumentError",
    "DomainError",
    "ConfigurationError",
    "CheckpointError",
    "CorruptCheckpoint",
    "CheckpointVersionMismatch",
    "CheckpointConfigMismatch",
    "TrainingDiverged",
    "DatasetError",
    "EmptyCorpus",
    "InsufficientSpeakers",
    "SplitLeakage",
    "MissingScores",
    "UndefinedMetric",
)


class pydiffauException(Exception):
    """This is the base class of all exceptions raised by pydiffau. This inherits :class:`Exception`.

    .. versionadded:: 0.1.0
    """

    def __init__(
        self,
        message: str = None,
    ) -> None:
        self.message = message
        super().__init__(self.message)


class ArgumentError(pydiffauException, ValueError):
    """Raised when an operation receives arguments it cannot work with: wrong shapes, wrong Ambisonics orders, empty
    inputs. This inherits :class:`pydiffauException` and :class:`ValueError`.

    .. versionadded:: 0.1.0
    """

    pass


class DomainError(ArgumentError):
    """Raised when a mathematical function is evaluated outside of its domain, for example a spherical harmonic with
    ``|m| > n``. This inherits :class:`ArgumentError`.

    .. versionadded:: 0.1.0
    """

    pass


class ConfigurationError(pydiffauException):
    """Raised when a configuration section violates its invariants, e.g. ``sigma_min >= sigma_max`` or a hop larger than
    the window. This inherits :class:`pydiffauException`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, message: str, *, section: Optional[str] = None) -> None:
        self.section = section
        super().__init__(f"[{section}] {message}" if section else message)


class CheckpointError(pydiffauException):
    """The base class for checkpoint loading failures. This inherits :class:`pydiffauException`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, path, message: str) -> None:
        self.path = path
        super().__init__(f"Cannot load checkpoint {path}: {message}")


class CorruptCheckpoint(CheckpointError):
    """Raised when a checkpoint file is truncated, unreadable or lacks required entries. This inherits
    :class:`CheckpointError`.

    .. versionadded:: 0.1.0
    """

    pass


class CheckpointVersionMismatch(CheckpointError):
    """Raised when a checkpoint was written with a different format version. This inherits :class:`CheckpointError`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, path, found, expected) -> None:
        self.found = found
        self.expected = expected
        super().__init__(path, f"format version {found!r}, expected {expected!r}")


class CheckpointConfigMismatch(CheckpointError):
    """Raised when a checkpoint is used in a slot it was not trained for, e.g. a block-1 model loaded as block 2. This
    inherits :class:`CheckpointError`.

    .. versionadded:: 0.1.0
    """

    pass


class TrainingDiverged(pydiffauException):
    """Raised when the training loss becomes non-finite. This inherits :class:`pydiffauException`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, step: int, loss: float) -> None:
        self.step = step
        self.loss = loss
        super().__init__(f"Training diverged at step {step}: loss = {loss}")


class DatasetError(pydiffauException):
    """The base class of corpus and dataset errors. This inherits :class:`pydiffauException`.

    .. versionadded:: 0.1.0
    """

    pass


class EmptyCorpus(DatasetError):
    """Raised when a corpus directory holds no readable mono audio file. This inherits :class:`DatasetError`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, path) -> None:
        self.path = path
        super().__init__(f"No usable mono audio files found in {path}")


class InsufficientSpeakers(DatasetError):
    """Raised when a split does not hold enough distinct speakers to draw a mixture from. This inherits
    :class:`DatasetError`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, split: str, needed: int, available: int) -> None:
        self.split = split
        self.needed = needed
        self.available = available
        super().__init__(f"Split {split!r} needs {needed} distinct speakers but only {available} are available")


class SplitLeakage(DatasetError):
    """Raised when a source file appears in more than one dataset split. This inherits :class:`DatasetError`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, source_ids: Iterable[str]) -> None:
        self.source_ids = sorted(source_ids)
        super().__init__(f"Sources shared between splits: {', '.join(self.source_ids)}")


class MissingScores(DatasetError):
    """Raised when an evaluation does not cover every clip it is supposed to. This inherits :class:`DatasetError`.

    .. versionadded:: 0.1.0
    """

    def __init__(self, clip_ids: Iterable[str], message: str = "Missing scores for clips") -> None:
        self.clip_ids = sorted(clip_ids)
        super().__init__(f"{message}: {', '.join(self.clip_ids)}")


class UndefinedMetric(pydiffauException):
    """Raised when a metric is undefined for its inputs, e.g. STFT-SDR against a silent reference. This inherits
    :class:`pydiffauException`.

    .. versionadded:: 0.1.0
    """

    pass
