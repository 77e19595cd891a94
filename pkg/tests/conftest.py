from pathlib import Path
from typing import List, Sequence

import numpy as np
import pytest
import soundfile as sf
import torch

from pydiffau import (
    AmbisonicsSignal,
    Direction,
    PlaneWaveScene,
    PlaneWaveSource,
    encode_scene,
)


def make_scene(
    rng: np.random.Generator,
    directions: Sequence[Direction],
    length: int = 4096,
    sample_rate: int = 16000,
) -> PlaneWaveScene:
    sources = [PlaneWaveSource(d, rng.standard_normal(length)) for d in directions]
    return PlaneWaveScene(sources, sample_rate)


def make_hoa(
    rng: np.random.Generator,
    directions: Sequence[Direction],
    order: int = 3,
    length: int = 4096,
) -> AmbisonicsSignal:
    return encode_scene(make_scene(rng, directions, length), order)


def write_corpus(root: Path, speakers: int = 10, files_per_speaker: int = 2, seconds: float = 0.5) -> List[Path]:
    rng = np.random.default_rng(1234)
    paths = []
    for s in range(speakers):
        folder = root / f"spk{s:02d}"
        folder.mkdir(parents=True, exist_ok=True)
        for f in range(files_per_speaker):
            n = int(seconds * 16000)
            tone = np.sin(2 * np.pi * (200 + 40 * s + 15 * f) * np.arange(n) / 16000)
            x = 0.3 * tone + 0.05 * rng.standard_normal(n)
            path = folder / f"utt{f}.wav"
            sf.write(str(path), x.astype(np.float32), 16000, subtype="FLOAT")
            paths.append(path)
    return paths


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def generator() -> torch.Generator:
    return torch.Generator().manual_seed(0)


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    root = tmp_path / "corpus"
    write_corpus(root)
    return root
