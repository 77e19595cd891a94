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

import json
from dataclasses import dataclass, field
from typing import Dict, List

__all__ = ("GroupStats", "EvalReport")


@dataclass
class GroupStats:
    """Mean and (population) standard deviation of STFT-SDR values in dB over ``count`` clips.

    .. versionadded:: 0.1.0
    """

    mean: float
    std: float
    count: int

    def format(self) -> str:
        return f"{self.mean:.1f} ± {self.std:.1f}"


@dataclass
class EvalReport:
    """STFT-SDR scores of one or more methods on a test set, grouped by the number of active speakers.

    Attributes
    ------------
    methods: List[:class:`str`]
        Method names in column order.
    per_clip: Dict[:class:`str`, Dict[:class:`str`, :class:`float`]]
        ``per_clip[method][clip_id]`` in dB.
    speaker_counts: Dict[:class:`str`, :class:`int`]
        Number of speakers of every scored clip.
    groups: Dict[:class:`str`, Dict[:class:`int`, :class:`GroupStats`]]
        Per method and speaker count.
    overall: Dict[:class:`str`, :class:`GroupStats`]
        Per method over all clips.


    .. versionadded:: 0.1.0
    """

    methods: List[str]
    per_clip: Dict[str, Dict[str, float]]
    speaker_counts: Dict[str, int]
    groups: Dict[str, Dict[int, GroupStats]] = field(default_factory=dict)
    overall: Dict[str, GroupStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "per_clip": self.per_clip,
            "speaker_counts": self.speaker_counts,
            "groups": {
                m: {str(k): vars(v) for k, v in sorted(groups.items())} for m, groups in self.groups.items()
            },
            "overall": {m: vars(v) for m, v in self.overall.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> EvalReport:
        return cls(
            methods=list(data["methods"]),
            per_clip=data["per_clip"],
            speaker_counts={k: int(v) for k, v in data["speaker_counts"].items()},
            groups={
                m: {int(k): GroupStats(**v) for k, v in groups.items()} for m, groups in data["groups"].items()
            },
            overall={m: GroupStats(**v) for m, v in data["overall"].items()},
        )
