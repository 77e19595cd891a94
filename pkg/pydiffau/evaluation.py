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
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from matplotlib.figure import Figure

from .ambisonics import AmbisonicsSignal, EnergyMap, directional_energy_map, truncate
from .constants import FOA_ORDER, MAX_SPEAKERS, REFERENCE_CLIP_COUNTS, REFERENCE_RESULTS, SDR_CAP_DB
from .dataclass import DatasetManifest, EvalReport, GroupStats, STFTConfig
from .dataset import load_clip
from .enums import Split
from .errors import ArgumentError, MissingScores, UndefinedMetric
from .threads import ThreadManager
from .transform import stft
from .type import PathLike
from .utils import atomic_write, channel_count

__all__ = (
    "stft_sdr",
    "score_directory",
    "aggregate",
    "format_report",
    "write_report",
    "emit_energy_plot",
    "load_energy_table",
    "emit_energy_grid",
)

_log = logging.getLogger(__name__)

Scores = Mapping[str, float]


def stft_sdr(est: AmbisonicsSignal, ref: AmbisonicsSignal, stft_cfg: STFTConfig) -> float:
    """Signal-to-distortion ratio in dB of the higher-order channels, on raw STFT coefficients.

    ``10 log10(||REF||^2 / ||REF - EST||^2)`` over every channel above first order, capped at +100 dB.

    Raises
    --------
    :class:`ArgumentError`
        When orders, lengths or sample rates differ, or the signals are first order or lower.
    :class:`UndefinedMetric`
        When the reference has no energy in those channels.


    .. versionadded:: 0.1.0
    """
    if est.order != ref.order or est.length != ref.length or est.sample_rate != ref.sample_rate:
        raise ArgumentError(
            f"Cannot compare order {est.order} / {est.length} samples / {est.sample_rate} Hz with order {ref.order} / "
            f"{ref.length} samples / {ref.sample_rate} Hz"
        )
    if ref.order <= FOA_ORDER:
        raise ArgumentError("STFT-SDR needs channels above first order")
    low = channel_count(FOA_ORDER)
    ref_tf = stft(ref.channels[low:], stft_cfg, ref.sample_rate).data
    est_tf = stft(est.channels[low:], stft_cfg, est.sample_rate).data
    signal_energy = float(ref_tf.abs().pow(2).sum())
    if signal_energy == 0.0:
        raise UndefinedMetric("STFT-SDR is undefined for a reference without higher-order energy")
    error_energy = float((ref_tf - est_tf).abs().pow(2).sum())
    if error_energy == 0.0:
        return SDR_CAP_DB
    return min(10.0 * math.log10(signal_energy / error_energy), SDR_CAP_DB)


def score_directory(
    estimates: PathLike,
    dataset: PathLike,
    manifest: DatasetManifest,
    stft_cfg: STFTConfig,
    *,
    split: Split = Split.test,
    jobs: Optional[int] = 1,
) -> Dict[str, float]:
    """STFT-SDR of every clip of ``split``, reading ``<estimates>/<clip_id>.wav`` against the dataset clip.

    Raises
    --------
    :class:`MissingScores`
        When estimates are missing for some clips, or present for clips outside ``split``.


    .. versionadded:: 0.1.0
    """
    est_dir, ref_dir = Path(estimates), Path(dataset)
    entries = manifest.split(split)
    expected = {e.clip_id for e in entries}
    found = {p.stem for p in est_dir.glob("*.wav")}
    if expected - found:
        raise MissingScores(expected - found, f"No estimate in {est_dir} for clips")
    if found - expected:
        raise MissingScores(found - expected, f"Estimates for clips outside the {split.value} split")

    def _score(entry) -> Tuple[str, float]:
        est = load_clip(est_dir / f"{entry.clip_id}.wav", order=entry.order, sample_rate=entry.sample_rate)
        ref = load_clip(ref_dir / entry.path, order=entry.order, sample_rate=entry.sample_rate)
        return entry.clip_id, stft_sdr(est, ref, stft_cfg)

    if jobs == 1:
        results = [_score(e) for e in entries]
    else:
        with ThreadManager().create_new_executor(max_workers=jobs, thread_name="pydiffau.eval") as executor:
            results = executor.map_ordered(_score, entries)
    return dict(results)


def _stats(values: Sequence[float]) -> GroupStats:
    arr = np.asarray(values, dtype=np.float64)
    return GroupStats(float(arr.mean()), float(arr.std()), int(arr.size))


def aggregate(
    scores: Union[Scores, Mapping[str, Scores]],
    manifest: DatasetManifest,
    *,
    split: Split = Split.test,
    method: str = "estimate",
) -> EvalReport:
    """Group per-clip scores by speaker count.

    Parameters
    ------------
    scores: Union[Dict[:class:`str`, :class:`float`], Dict[:class:`str`, Dict[:class:`str`, :class:`float`]]]
        Scores by clip id, or by method name and clip id.
    manifest: :class:`DatasetManifest`
        Supplies the clips of ``split`` and their speaker counts.
    method: :class:`str`
        Name used when ``scores`` holds a single method.

    Returns
    ---------
    :class:`EvalReport`
        Means and population standard deviations per speaker count and overall.

    Raises
    --------
    :class:`MissingScores`
        When a method misses clips of ``split`` or scores clips outside it.


    .. versionadded:: 0.1.0
    """
    if scores and all(isinstance(v, (int, float)) for v in scores.values()):
        scores = {method: scores}
    if not scores:
        raise ArgumentError("No scores to aggregate")
    entries = manifest.split(split)
    counts = {e.clip_id: e.speaker_count for e in entries}
    report = EvalReport(methods=list(scores), per_clip={}, speaker_counts=counts)
    for name, per_clip in scores.items():
        missing = set(counts) - set(per_clip)
        if missing:
            raise MissingScores(missing, f"Method {name!r} has no score for clips")
        extra = set(per_clip) - set(counts)
        if extra:
            raise MissingScores(extra, f"Method {name!r} scores clips outside the {split.value} split")
        report.per_clip[name] = {clip: float(per_clip[clip]) for clip in counts}
        grouped: Dict[int, List[float]] = {}
        for clip, count in counts.items():
            grouped.setdefault(count, []).append(float(per_clip[clip]))
        report.groups[name] = {k: _stats(v) for k, v in sorted(grouped.items())}
        report.overall[name] = _stats(list(report.per_clip[name].values()))
    return report


def format_report(report: EvalReport, *, references: bool = True) -> str:
    """Plain-text table: one row per speaker count and an overall row, one column per method.

    With ``references`` the published figures follow in a separate block, marked as not reproducible at desk scale.

    .. versionadded:: 0.1.0
    """
    width = max([14] + [len(m) + 2 for m in report.methods])
    header = f"{'# Speakers':<12}{'# Clips':>9}" + "".join(f"{m:>{width}}" for m in report.methods)
    lines = ["STFT-SDR (dB) on the higher-order channels, mean ± std", header, "-" * len(header)]
    speaker_rows = sorted({k for groups in report.groups.values() for k in groups})
    for count in speaker_rows:
        clips = sum(1 for c in report.speaker_counts.values() if c == count)
        cells = "".join(
            f"{report.groups[m][count].format() if count in report.groups[m] else '-':>{width}}" for m in report.methods
        )
        lines.append(f"{count:<12}{clips:>9}{cells}")
    cells = "".join(f"{report.overall[m].format():>{width}}" for m in report.methods)
    lines.append(f"{'Overall':<12}{len(report.speaker_counts):>9}{cells}")

    if references:
        names = list(REFERENCE_RESULTS)
        lines += ["", "Published figures (full-scale training, not reproducible at desk scale)"]
        lines.append(f"{'# Speakers':<12}{'# Clips':>9}" + "".join(f"{n:>{width}}" for n in names))
        for key in list(range(1, MAX_SPEAKERS + 1)) + ["overall"]:
            cells = "".join(f"{'%.1f ± %.1f' % REFERENCE_RESULTS[n][key]:>{width}}" for n in names)
            label = "Overall" if key == "overall" else str(key)
            lines.append(f"{label:<12}{REFERENCE_CLIP_COUNTS[key]:>9}{cells}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir: PathLike, *, references: bool = True) -> Tuple[Path, Path]:
    """Write ``report.txt`` and ``report.json`` into ``out_dir``."""
    out = Path(out_dir)
    text_path, json_path = out / "report.txt", out / "report.json"
    with atomic_write(text_path, "w") as fh:
        fh.write(format_report(report, references=references))
    with atomic_write(json_path, "w") as fh:
        fh.write(report.to_json() + "\n")
    _log.info("Wrote evaluation report of %d clips to %s", len(report.speaker_counts), out)
    return text_path, json_path


def _draw_map(ax, energy: EnergyMap, title: Optional[str] = None) -> None:
    az = np.degrees(energy.azimuths)
    step = float(az[1] - az[0]) if az.size > 1 else 360.0
    ax.imshow(
        energy.values.T,
        origin="upper",
        extent=(0.0, float(az[-1]) + step, -90.0, 90.0),
        aspect="auto",
        cmap="inferno",
        vmin=0.0,
        vmax=1.0,
        interpolation="nearest",
    )
    if title:
        ax.set_title(title, fontsize=8)


def _table_path(path: Path) -> Path:
    return path.with_suffix(".txt") if path.suffix != ".txt" else path.with_suffix(".grid.txt")


def emit_energy_plot(
    sig: AmbisonicsSignal,
    out_path: PathLike,
    *,
    az_step: float = math.radians(2.0),
    col_step: float = math.radians(2.0),
    title: Optional[str] = None,
) -> Tuple[Path, Path]:
    """Write the directional energy map of ``sig`` as an image and as a text table.

    The image (format from the suffix of ``out_path``, e.g. ``.png``) has azimuth in degrees on the x axis and
    elevation on the y axis, brightest where the energy is largest. The table, written next to it with a ``.txt``
    suffix, has the colatitudes (radians) in its first row, the azimuths (radians) in its first column and the map
    values in between; :func:`load_energy_table` reads it back exactly.

    Returns
    ---------
    Tuple[:class:`pathlib.Path`, :class:`pathlib.Path`]
        The image and table paths.


    .. versionadded:: 0.1.0
    """
    image_path = Path(out_path)
    table_path = _table_path(image_path)
    energy = directional_energy_map(sig, az_step, col_step)

    fig = Figure(figsize=(6.0, 3.2))
    ax = fig.add_subplot()
    _draw_map(ax, energy, title)
    ax.set_xlabel("azimuth (deg)")
    ax.set_ylabel("elevation (deg)")
    fig.tight_layout()
    with atomic_write(image_path, "wb") as fh:
        fig.savefig(fh, format=image_path.suffix.lstrip(".") or "png")

    rows = ["\\ " + " ".join(repr(float(c)) for c in energy.colatitudes)]
    for azimuth, values in zip(energy.azimuths, energy.values):
        rows.append(repr(float(azimuth)) + " " + " ".join(repr(float(v)) for v in values))
    with atomic_write(table_path, "w") as fh:
        fh.write("# directional energy: rows azimuth (rad), columns colatitude (rad)\n")
        fh.write("\n".join(rows) + "\n")
    return image_path, table_path


def load_energy_table(path: PathLike) -> EnergyMap:
    """Read a table written by :func:`emit_energy_plot`.

    .. versionadded:: 0.1.0
    """
    with open(path, encoding="utf-8") as fh:
        lines = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    colatitudes = np.array([float(v) for v in lines[0][1:]])
    azimuths = np.array([float(row[0]) for row in lines[1:]])
    values = np.array([[float(v) for v in row[1:]] for row in lines[1:]])
    return EnergyMap(azimuths, colatitudes, values)


def emit_energy_grid(
    references: Sequence[Tuple[str, AmbisonicsSignal]],
    estimates: Sequence[AmbisonicsSignal],
    out_path: PathLike,
    *,
    az_step: float = math.radians(4.0),
    col_step: float = math.radians(4.0),
) -> Path:
    """Compare directional energy across orders, one row per clip.

    Columns show the first-, second- and third-order reference and the second- and third-order estimate.

    Parameters
    ------------
    references: Sequence[Tuple[:class:`str`, :class:`AmbisonicsSignal`]]
        Row labels and third-order references.
    estimates: Sequence[:class:`AmbisonicsSignal`]
        Third-order estimates, one per reference.


    .. versionadded:: 0.1.0
    """
    if len(references) != len(estimates) or not references:
        raise ArgumentError("Need one estimate per reference and at least one row")
    columns = ["FOA", "2nd order", "3rd order", "2nd order estimate", "3rd order estimate"]
    fig = Figure(figsize=(2.4 * len(columns), 1.6 * len(references) + 0.6))
    axes = fig.subplots(len(references), len(columns), squeeze=False)
    for row, ((label, ref), est) in enumerate(zip(references, estimates)):
        if ref.order < 3 or est.order < 3:
            raise ArgumentError("The comparison grid needs third-order signals")
        panels = [truncate(ref, 1), truncate(ref, 2), truncate(ref, 3), truncate(est, 2), truncate(est, 3)]
        for col, panel in enumerate(panels):
            ax = axes[row][col]
            _draw_map(ax, directional_energy_map(panel, az_step, col_step), columns[col] if row == 0 else None)
            ax.set_xticks([])
            ax.set_yticks([])
        axes[row][0].set_ylabel(label, fontsize=8)
    fig.tight_layout()
    path = Path(out_path)
    with atomic_write(path, "wb") as fh:
        fig.savefig(fh, format=path.suffix.lstrip(".") or "png")
    return path
