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
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from ..constants import CLIP_SAMPLES, HOA_ORDER, MAX_SPEAKERS, SAMPLE_RATE
from ..enums import Split
from ..errors import ArgumentError, SplitLeakage
from .base import ConfigSection

__all__ = ("DatasetSpec", "SourceEntry", "ManifestEntry", "DatasetManifest")


@dataclass
class DatasetSpec(ConfigSection):
    """How many clips to synthesize and how to split speakers and clips.

    ``split_fractions`` applies twice: to the speakers (each speaker lands in exactly one split) and to the clip
    count.

    .. versionadded:: 0.1.0
    """

    section = "dataset"

    n_clips: int = 1000
    split_fractions: Dict[str, float] = field(default_factory=lambda: {"train": 0.8, "val": 0.1, "test": 0.1})
    clip_samples: int = CLIP_SAMPLES
    sample_rate: int = SAMPLE_RATE
    order: int = HOA_ORDER
    max_speakers: int = MAX_SPEAKERS
    seed: int = 0

    def validate(self) -> None:
        if self.n_clips < 1:
            self._fail("n_clips must be at least 1")
        unknown = set(self.split_fractions) - {s.value for s in Split}
        if unknown:
            self._fail(f"Unknown splits: {', '.join(sorted(unknown))}")
        if any(v < 0 for v in self.split_fractions.values()) or sum(self.split_fractions.values()) <= 0:
            self._fail("split_fractions must be nonnegative and not all zero")
        if self.clip_samples < 1 or self.sample_rate < 1:
            self._fail("clip_samples and sample_rate must be positive")
        if self.order < 0 or not 1 <= self.max_speakers <= MAX_SPEAKERS:
            self._fail(f"max_speakers must lie in [1, {MAX_SPEAKERS}]")


@dataclass
class SourceEntry:
    """One plane-wave source of a synthesized clip.

    .. versionadded:: 0.1.0
    """

    source_id: str
    speaker: str
    azimuth: float
    colatitude: float
    gain: float = 1.0
    offset: int = 0


@dataclass
class ManifestEntry:
    """One clip of a synthesized dataset. Together with the corpus it names, it is enough to regenerate the clip.

    .. versionadded:: 0.1.0
    """

    clip_id: str
    split: Split
    seed: int
    speaker_count: int
    sources: List[SourceEntry]
    path: str = ""
    clip_samples: int = CLIP_SAMPLES
    sample_rate: int = SAMPLE_RATE
    order: int = HOA_ORDER

    def __post_init__(self) -> None:
        if not isinstance(self.split, Split):
            self.split = Split(self.split)
        self.sources = [s if isinstance(s, SourceEntry) else SourceEntry(**s) for s in self.sources]
        if not 1 <= self.speaker_count <= MAX_SPEAKERS or self.speaker_count != len(self.sources):
            raise ArgumentError(f"Clip {self.clip_id}: speaker count {self.speaker_count} is invalid")

    def to_json(self) -> str:
        data = asdict(self)
        data["split"] = self.split.value
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> ManifestEntry:
        return cls(**json.loads(line))


@dataclass
class DatasetManifest:
    """The list of clips of a dataset, stored as JSON lines.

    .. versionadded:: 0.1.0
    """

    entries: List[ManifestEntry]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def by_id(self) -> Dict[str, ManifestEntry]:
        return {e.clip_id: e for e in self.entries}

    def split(self, split: Split) -> List[ManifestEntry]:
        split = Split(split)
        return [e for e in self.entries if e.split is split]

    def check_disjoint(self) -> None:
        """Raise :class:`SplitLeakage` when a source file or speaker is used by clips of different splits."""
        seen: Dict[str, set] = defaultdict(set)
        for entry in self.entries:
            for source in entry.sources:
                seen[f"file:{source.source_id}"].add(entry.split)
                seen[f"speaker:{source.speaker}"].add(entry.split)
        leaked = [key for key, splits in seen.items() if len(splits) > 1]
        if leaked:
            raise SplitLeakage(leaked)

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.entries)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> DatasetManifest:
        return cls([ManifestEntry.from_json(line) for line in lines if line.strip()])

    def speaker_histogram(self, split: Optional[Split] = None) -> Dict[int, int]:
        counts: Dict[int, int] = defaultdict(int)
        for entry in self.entries if split is None else self.split(split):
            counts[entry.speaker_count] += 1
        return dict(counts)

    def summary(self) -> Dict[str, Any]:
        return {
            "clips": len(self.entries),
            "splits": {s.value: len(self.split(s)) for s in Split},
            "speaker_counts": dict(sorted(self.speaker_histogram().items())),
        }
