import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_hoa, make_scene
from pydiffau import (
    AmbisonicsSignal,
    ArgumentError,
    Direction,
    DomainError,
    PlaneWaveScene,
    PlaneWaveSource,
    acn_index,
    channel_count,
    directional_energy_map,
    encode_scene,
    order_from_channels,
    real_sh,
    sample_doa,
    sh_matrix,
    sh_matrix_angles,
    truncate,
)

SQRT3 = math.sqrt(3.0)

directions = st.builds(
    Direction,
    st.floats(min_value=0.0, max_value=2 * math.pi, exclude_max=True),
    st.floats(min_value=0.0, max_value=math.pi),
)


@given(directions)
def test_omni_harmonic_is_one(direction):
    assert real_sh(0, 0, direction) == pytest.approx(1.0, abs=1e-12)


def test_closed_form_values():
    assert real_sh(1, 0, Direction(0.0, 0.0)) == pytest.approx(SQRT3, abs=1e-12)
    assert real_sh(1, 1, Direction(0.0, math.pi / 2)) == pytest.approx(SQRT3, abs=1e-12)
    assert real_sh(1, -1, Direction(math.pi / 2, math.pi / 2)) == pytest.approx(SQRT3, abs=1e-12)


@given(directions)
def test_first_order_matches_cartesian_form(direction):
    x, y, z = direction.unit_vector()
    assert real_sh(1, -1, direction) == pytest.approx(SQRT3 * y, abs=1e-12)
    assert real_sh(1, 0, direction) == pytest.approx(SQRT3 * z, abs=1e-12)
    assert real_sh(1, 1, direction) == pytest.approx(SQRT3 * x, abs=1e-12)


@pytest.mark.parametrize("degree,index", [(-1, 0), (1, 2), (2, -3), (0, 1)])
def test_invalid_harmonic(degree, index):
    with pytest.raises(DomainError):
        real_sh(degree, index, Direction(0.0, 0.0))


def test_orthonormality_on_quadrature_grid():
    # Gauss-Legendre in cos(colatitude) times a uniform azimuth grid integrates degree 6 products exactly.
    nodes, weights = np.polynomial.legendre.leggauss(8)
    azimuths = np.arange(16) * 2 * np.pi / 16
    az, mu = np.meshgrid(azimuths, nodes, indexing="ij")
    w = np.broadcast_to(weights, az.shape).ravel() * (2 * np.pi / 16)
    y = sh_matrix_angles(3, az.ravel(), np.arccos(mu.ravel())).values
    gram = (y * w[:, None]).T @ y / (4 * np.pi)
    assert np.allclose(gram, np.eye(16), atol=1e-6)


def test_sh_matrix_rows_and_shape():
    assert sh_matrix(0, [Direction(1.0, 1.0)]).values.tolist() == [[1.0]]
    row = sh_matrix(1, [Direction(0.0, math.pi / 2)]).values[0]
    assert np.allclose(row, [1.0, 0.0, 0.0, SQRT3], atol=1e-12)
    assert sh_matrix(3, [Direction(0.3, 1.1)]).values.shape == (1, 16)
    with pytest.raises(ArgumentError):
        sh_matrix(2, [])


@given(directions, st.integers(min_value=0, max_value=3))
@settings(max_examples=25)
def test_sh_matrix_entries_match_real_sh(direction, order):
    row = sh_matrix(order, [direction]).values[0]
    for n in range(order + 1):
        for m in range(-n, n + 1):
            assert row[acn_index(n, m)] == pytest.approx(real_sh(n, m, direction), abs=1e-12)


def test_channel_helpers():
    assert [channel_count(n) for n in range(4)] == [1, 4, 9, 16]
    assert order_from_channels(16) == 3
    with pytest.raises(ArgumentError):
        order_from_channels(5)


def test_encode_impulse():
    waveform = np.zeros(8)
    waveform[3] = 1.0
    scene = PlaneWaveScene([PlaneWaveSource(Direction(0.0, math.pi / 2), waveform)])
    sig = encode_scene(scene, 1)
    assert np.allclose(sig.channels[:, 3], [1.0, 0.0, 0.0, SQRT3], atol=1e-12)
    assert np.all(sig.channels[:, :3] == 0)


def test_encode_zero_and_linearity(rng):
    a, b = Direction(0.4, 1.0), Direction(4.0, 2.5)
    silent = PlaneWaveScene([PlaneWaveSource(a, np.zeros(64))])
    assert np.all(encode_scene(silent, 3).channels == 0)

    scene = make_scene(rng, [a, b], length=256)
    single = [encode_scene(PlaneWaveScene([s]), 3).channels for s in scene.sources]
    assert np.allclose(encode_scene(scene, 3).channels, single[0] + single[1], atol=1e-12)

    s1, s2 = scene.sources
    mixed = PlaneWaveScene([PlaneWaveSource(a, 2.0 * s1.waveform - 0.5 * s2.waveform)])
    parts = [encode_scene(PlaneWaveScene([PlaneWaveSource(a, s.waveform)]), 3).channels for s in (s1, s2)]
    assert np.allclose(encode_scene(mixed, 3).channels, 2.0 * parts[0] - 0.5 * parts[1], atol=1e-12)


def test_scene_rejects_mismatched_lengths():
    with pytest.raises(ArgumentError):
        PlaneWaveScene([PlaneWaveSource(Direction(0, 0), np.zeros(4)), PlaneWaveSource(Direction(0, 0), np.zeros(5))])


def test_signal_validates_channels():
    with pytest.raises(ArgumentError):
        AmbisonicsSignal(1, np.zeros((5, 10)))
    with pytest.raises(ArgumentError):
        AmbisonicsSignal(0, np.full((1, 3), np.nan))


def test_truncate(rng):
    scene = make_scene(rng, [Direction(1.0, 0.7), Direction(5.0, 2.0)], length=128)
    hoa = encode_scene(scene, 3)
    foa = truncate(hoa, 1)
    assert np.array_equal(foa.channels, hoa.channels[:4])
    assert np.array_equal(truncate(hoa, 3).channels, hoa.channels)
    assert np.allclose(foa.channels, encode_scene(scene, 1).channels, atol=1e-12)
    with pytest.raises(ArgumentError):
        truncate(foa, 2)


def test_energy_map_of_silence_is_zero():
    emap = directional_energy_map(AmbisonicsSignal(3, np.zeros((16, 32))), math.radians(10), math.radians(10))
    assert emap.values.shape == (36, 19)
    assert np.all(emap.values == 0)


def test_energy_map_rejects_steps_that_do_not_divide():
    with pytest.raises(ArgumentError):
        directional_energy_map(AmbisonicsSignal(1, np.ones((4, 8))), math.radians(7), math.radians(10))


def test_energy_map_peaks_at_source(rng):
    step = math.radians(10)
    for _ in range(50):
        direction = Direction(rng.integers(0, 36) * step, rng.integers(1, 18) * step)
        emap = directional_energy_map(make_hoa(rng, [direction], length=256), step, step)
        assert emap.values.max() == pytest.approx(1.0)
        assert emap.argmax_direction().angle_to(direction) <= step + 1e-9


def test_energy_map_rotates_with_scene(rng):
    step = math.radians(10)
    waveforms = rng.standard_normal((2, 512))
    doas = [(3, 6), (20, 13)]

    def scene(shift):
        return PlaneWaveScene(
            [PlaneWaveSource(Direction.wrapped((a + shift) * step, c * step), w) for (a, c), w in zip(doas, waveforms)]
        )

    base = directional_energy_map(encode_scene(scene(0), 3), step, step).values
    rotated = directional_energy_map(encode_scene(scene(1), 3), step, step).values
    assert np.allclose(rotated, np.roll(base, 1, axis=0), atol=1e-9)


def test_sample_doa_is_reproducible_and_uniform():
    first = sample_doa(np.random.default_rng(7))
    assert first == sample_doa(np.random.default_rng(7))

    rng = np.random.default_rng(0)
    draws = [sample_doa(rng) for _ in range(100_000)]
    cos_col = np.cos([d.colatitude for d in draws])
    assert abs(cos_col.mean()) < 0.02
    counts, _ = np.histogram([d.azimuth for d in draws], bins=8, range=(0, 2 * np.pi))
    assert np.all(np.abs(counts / 12_500 - 1) < 0.03)


def test_direction_wrapping_and_domain():
    assert Direction.wrapped(-math.pi / 2, 1.0).azimuth == pytest.approx(1.5 * math.pi)
    assert Direction.from_degrees(90, 90).unit_vector() == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)
    with pytest.raises(DomainError):
        Direction(2 * math.pi, 0.0)
    with pytest.raises(DomainError):
        Direction(0.0, 4.0)
