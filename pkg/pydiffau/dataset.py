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
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import soundfile as sf
from scipy import signal
from tqdm import tqdm

from .ambisonics import AmbisonicsSignal, Direction, PlaneWaveScene, PlaneWaveSource, encode_scene, sample_doa
from .constants import AUDIO_EXTENSIONS, CROSSFADE_SECONDS, MANIFEST_NAME, PEAK_LEVEL, SAMPLE_RATE
from .dataclass import DatasetManifest, DatasetSpec, ManifestEntry, SourceEntry
from .enums import Split
from .errors import ArgumentError, DatasetError, EmptyCorpus, InsufficientSpeakers
from .threads import ThreadManager
from .type import PathLike
from .utils import atomic_write, channel_count

__all__ = (
    "CorpusFile",
    "ingest_corpus",
    "plan_dataset",
    "render_clip",
    "regenerate_clip",
    "synth_dataset",
    "save_clip",
    "load_clip",
    "write_manifest",
    "read_manifest",
)

_log = logging.getLogger(__name__)


@dataclass
class CorpusFile:
    """A mono source recording.

    Attributes
    ------------
    source_id: :class:`str`
        Path relative to the corpus root, without extension. Stable across runs.
    speaker: :class:`str`
        Name of the directory holding the file, or the ``source_id`` for files at the corpus root.
    waveform: :class:`numpy.ndarray`
        Samples at :attr:`sample_rate`, peak normalised.


    .. versionadded:: 0.1.0
    """

    source_id: str
    speaker: str
    waveform: np.ndarray = field(repr=False)
    sample_rate: int = SAMPLE_RATE

    @property
    def length(self) -> int:
        return self.waveform.shape[0]


def _resample(x: np.ndarray, rate: int, target: int) -> np.ndarray:
    if rate == target:
        return x
    g = math.gcd(rate, target)
    return signal.resample_poly(x, target // g, rate // g)


def ingest_corpus(
    path: PathLike,
    sample_rate: int = SAMPLE_RATE,
    peak: float = PEAK_LEVEL,
) -> List[CorpusFile]:
    """Read every mono audio file below ``path``.

    Files are resampled to ``sample_rate`` and scaled to a peak of ``peak``. Unreadable, multichannel and silent
    files are skipped with a warning. Files are returned sorted by ``source_id``.

    Raises
    --------
    :class:`EmptyCorpus`
        When no usable file is found.


    .. versionadded:: 0.1.0
    """
    root = Path(path)
    if not root.is_dir():
        raise EmptyCorpus(path)
    files: List[CorpusFile] = []
    for file in sorted(p for p in root.rglob("*") if p.suffix.lower() in AUDIO_EXTENSIONS and p.is_file()):
        relative = file.relative_to(root)
        try:
            data, rate = sf.read(os.fspath(file), dtype="float64", always_2d=True)
        except (RuntimeError, sf.SoundFileError) as e:
            _log.warning("Skipping unreadable file %s: %s", relative, e)
            continue
        if data.shape[1] != 1:
            _log.warning("Skipping %s: %d channels, expected mono", relative, data.shape[1])
            continue
        waveform = _resample(data[:, 0], rate, sample_rate)
        top = np.max(np.abs(waveform)) if waveform.size else 0.0
        if not top > 0:
            _log.warning("Skipping silent file %s", relative)
            continue
        source_id = relative.with_suffix("").as_posix()
        speaker = relative.parent.as_posix() if relative.parent != Path(".") else source_id
        files.append(CorpusFile(source_id, speaker, waveform * (peak / top), sample_rate))
    if not files:
        raise EmptyCorpus(path)
    _log.info("Ingested %d files from %d speakers in %s", len(files), len({f.speaker for f in files}), root)
    return files


def _allocate(total: int, fractions: Mapping[str, float], minimum: int = 0) -> Dict[str, int]:
    # Largest remainder, in Split order, with an optional floor for splits of nonzero weight.
    names = [s.value for s in Split if fractions.get(s.value, 0) > 0]
    weight = sum(fractions[n] for n in names)
    exact = {n: total * fractions[n] / weight for n in names}
    counts = {n: max(int(math.floor(exact[n])), minimum) for n in names}
    remaining = total - sum(counts.values())
    for n in sorted(names, key=lambda n: exact[n] - math.floor(exact[n]), reverse=True):
        if remaining <= 0:
            break
        counts[n] += 1
        remaining -= 1
    while remaining < 0:
        largest = max(names, key=lambda n: counts[n])
        counts[largest] -= 1
        remaining += 1
    return counts


def _loop(x: np.ndarray, length: int, fade: int) -> np.ndarray:
    """Repeat ``x`` with linear crossfades until it holds ``length`` samples."""
    fade = min(fade, x.shape[0] // 2)
    if fade == 0:
        return np.resize(x, length)
    ramp = np.linspace(0.0, 1.0, fade + 2)[1:-1]
    out = x.copy()
    while out.shape[0] < length:
        joint = out[-fade:] * ramp[::-1] + x[:fade] * ramp
        out = np.concatenate([out[:-fade], joint, x[fade:]])
    return out[:length]


def _segment(source: CorpusFile, offset: int, length: int) -> np.ndarray:
    x = source.waveform
    if x.shape[0] < length:
        return _loop(x, length, int(round(CROSSFADE_SECONDS * source.sample_rate)))
    return x[offset : offset + length]


def plan_dataset(corpus: Sequence[CorpusFile], spec: DatasetSpec) -> DatasetManifest:
    """Draw the manifest of a dataset without rendering audio.

    Speakers are shuffled and split by ``spec.split_fractions`` so that every speaker belongs to exactly one split;
    clip counts are split the same way. Within a split the speaker counts ``1 .. max_speakers`` are used equally
    often, in shuffled order. Every clip draws its distinct speakers from its own seed, which the manifest records,
    then one utterance per speaker with its offset and direction.

    Raises
    --------
    :class:`InsufficientSpeakers`
        When there are fewer speakers than splits, or a split has fewer distinct speakers than ``max_speakers``.


    .. versionadded:: 0.1.0
    """
    spec.validate()
    if not corpus:
        raise EmptyCorpus("<in-memory corpus>")
    rng = np.random.default_rng(spec.seed)
    speakers = sorted({f.speaker for f in corpus})
    by_speaker: Dict[str, List[CorpusFile]] = {speaker: [] for speaker in speakers}
    for file in corpus:
        by_speaker[file.speaker].append(file)
    shares = _allocate(len(speakers), spec.split_fractions)
    active = [name for name in shares if _allocate(spec.n_clips, spec.split_fractions)[name] > 0]
    if len(speakers) < len(active):
        raise InsufficientSpeakers(active[-1], len(active), len(speakers))
    shares = _allocate(len(speakers), {n: spec.split_fractions[n] for n in active}, minimum=1)
    order = [speakers[i] for i in rng.permutation(len(speakers))]
    split_of: Dict[str, str] = {}
    start = 0
    for name in active:
        for speaker in order[start : start + shares[name]]:
            split_of[speaker] = name
        start += shares[name]

    clip_counts = _allocate(spec.n_clips, {n: spec.split_fractions[n] for n in active})
    entries: List[ManifestEntry] = []
    index = 0
    for name in active:
        talkers = [speaker for speaker in speakers if split_of[speaker] == name]
        if len(talkers) < spec.max_speakers:
            raise InsufficientSpeakers(name, spec.max_speakers, len(talkers))
        n = clip_counts[name]
        counts = rng.permutation(np.arange(n) % spec.max_speakers + 1)
        for count in counts:
            seed = int(np.random.SeedSequence([spec.seed, index]).generate_state(1)[0])
            clip_rng = np.random.default_rng(seed)
            picks = clip_rng.choice(len(talkers), size=int(count), replace=False)
            sources = []
            for pick in picks:
                utterances = by_speaker[talkers[int(pick)]]
                file = utterances[int(clip_rng.integers(len(utterances)))]
                offset = int(clip_rng.integers(0, max(file.length - spec.clip_samples, 0) + 1))
                doa = sample_doa(clip_rng)
                sources.append(SourceEntry(file.source_id, file.speaker, doa.azimuth, doa.colatitude, 1.0, offset))
            clip_id = f"clip{index:05d}"
            entries.append(
                ManifestEntry(
                    clip_id=clip_id,
                    split=Split(name),
                    seed=seed,
                    speaker_count=int(count),
                    sources=sources,
                    path=f"clips/{clip_id}.wav",
                    clip_samples=spec.clip_samples,
                    sample_rate=spec.sample_rate,
                    order=spec.order,
                )
            )
            index += 1
    manifest = DatasetManifest(entries)
    manifest.check_disjoint()
    return manifest


def render_clip(entry: ManifestEntry, corpus: Mapping[str, CorpusFile]) -> AmbisonicsSignal:
    """Encode the plane-wave scene described by ``entry`` from the corpus files it names.

    .. versionadded:: 0.1.0
    """
    sources = []
    for source in entry.sources:
        try:
            file = corpus[source.source_id]
        except KeyError:
            raise DatasetError(f"Clip {entry.clip_id} needs source {source.source_id!r}, which is not in the corpus")
        if file.sample_rate != entry.sample_rate:
            raise DatasetError(f"Source {source.source_id} is at {file.sample_rate} Hz, clip needs {entry.sample_rate}")
        waveform = _segment(file, source.offset, entry.clip_samples)
        sources.append(PlaneWaveSource(Direction(source.azimuth, source.colatitude), waveform, source.gain))
    return encode_scene(PlaneWaveScene(sources, entry.sample_rate), entry.order)


def regenerate_clip(entry: ManifestEntry, corpus: Sequence[CorpusFile]) -> AmbisonicsSignal:
    """Rebuild one clip of a dataset from its manifest entry and the ingested corpus.

    .. versionadded:: 0.1.0
    """
    return render_clip(entry, {f.source_id: f for f in corpus})


def save_clip(sig: AmbisonicsSignal, path: PathLike) -> None:
    """Write a clip as a float32 WAV file, one channel per Ambisonics channel."""
    with atomic_write(path, "wb") as fh:
        sf.write(fh, sig.channels.T.astype(np.float32), sig.sample_rate, subtype="FLOAT", format="WAV")


def load_clip(path: PathLike, *, order: Optional[int] = None, sample_rate: Optional[int] = None) -> AmbisonicsSignal:
    """Read a multichannel WAV file as Ambisonics.

    Raises
    --------
    :class:`ArgumentError`
        When the channel count is not ``(N + 1) ** 2`` (or not that of ``order``), or the sample rate differs from
        ``sample_rate``.


    .. versionadded:: 0.1.0
    """
    data, rate = sf.read(os.fspath(path), dtype="float64", always_2d=True)
    if order is not None and data.shape[1] != channel_count(order):
        raise ArgumentError(f"{path} has {data.shape[1]} channels, expected {channel_count(order)}")
    if sample_rate is not None and rate != sample_rate:
        raise ArgumentError(f"{path} is sampled at {rate} Hz, expected {sample_rate}")
    return AmbisonicsSignal.from_channels(data.T, rate)


def write_manifest(manifest: DatasetManifest, directory: PathLike) -> Path:
    path = Path(directory) / MANIFEST_NAME
    with atomic_write(path, "w") as fh:
        fh.write(manifest.to_jsonl())
    return path


def read_manifest(directory: PathLike) -> DatasetManifest:
    """Read ``manifest.jsonl`` from a dataset directory (or the file itself)."""
    path = Path(directory)
    if path.is_dir():
        path = path / MANIFEST_NAME
    with open(path, encoding="utf-8") as fh:
        return DatasetManifest.from_lines(fh)


def synth_dataset(
    corpus: Sequence[CorpusFile],
    spec: DatasetSpec,
    out_dir: PathLike,
    *,
    jobs: Optional[int] = 1,
    progress: bool = False,
) -> DatasetManifest:
    """Synthesize a free-field multi-speaker Ambisonics dataset.

    Plans the manifest with :func:`plan_dataset`, renders every clip to ``out_dir/clips/<clip_id>.wav`` (float32,
    ``(order + 1) ** 2`` channels) and writes ``out_dir/manifest.jsonl``. Sources shorter than a clip are looped
    with a short crossfade.

    .. versionadded:: 0.1.0
    """
    manifest = plan_dataset(corpus, spec)
    out = Path(out_dir)
    (out / "clips").mkdir(parents=True, exist_ok=True)
    by_id = {f.source_id: f for f in corpus}

    def _write(entry: ManifestEntry) -> None:
        save_clip(render_clip(entry, by_id), out / entry.path)

    bar = tqdm(total=len(manifest), desc="clips", disable=not progress)
    try:
        if jobs == 1:
            for entry in manifest:
                _write(entry)
                bar.update()
        else:
            with ThreadManager().create_new_executor(max_workers=jobs, thread_name="pydiffau.synth") as executor:
                for entry in manifest:
                    executor.submit(_write, entry).add_done_callback(lambda _: bar.update())
                done, _ = executor.wait_for_futures()
                for future in done:
                    future.result()
    finally:
        bar.close()

    write_manifest(manifest, out)
    _log.info("Wrote %d clips to %s: %s", len(manifest), out, manifest.summary())
    return manifest
