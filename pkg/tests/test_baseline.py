import math

import numpy as np
import pytest

from conftest import make_hoa
from pydiffau import (
    AmbisonicsSignal,
    ArgumentError,
    CSConfig,
    Direction,
    DirectionGrid,
    PlaneWaveScene,
    PlaneWaveSource,
    STFTConfig,
    cs_upscale,
    encode_scene,
    least_norm_upscale,
    solve_sparse_bin,
    solve_sparse_bins,
    sparse_objective,
    stft_sdr,
    truncate,
)

GRID = DirectionGrid.fibonacci()
CS = CSConfig()
STFT = STFTConfig()


def test_fibonacci_grid():
    assert GRID.size == 400
    assert GRID.sh_low.values.shape == (400, 4) and GRID.sh_high.values.shape == (400, 16)
    assert np.all((GRID.azimuths >= 0) & (GRID.azimuths < 2 * math.pi))
    for index in (0, 57, 399):
        assert GRID.nearest(GRID.directions[index]) == index
    with pytest.raises(ArgumentError):
        DirectionGrid.fibonacci(8)


def test_one_source_on_grid_is_recovered():
    index = 123
    a = (0.7 + 0.2j) * GRID.sh_low.values[index]
    solution = solve_sparse_bin(a, GRID, CS)
    magnitude = np.abs(solution.coefficients)
    assert magnitude[index] >= 0.99 * solution.l1
    assert solution.residual <= 1e-3


def test_zero_bin():
    solution = solve_sparse_bin(np.zeros(4), GRID, CS)
    assert np.all(solution.coefficients == 0)
    assert solution.residual == 0 and solution.converged
    assert not solution.support.any()


def test_objective_never_increases(rng):
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    solution = solve_sparse_bin(a, GRID, CSConfig(max_iterations=50))
    objective = solution.objective
    assert objective.size >= 2
    assert np.all(np.diff(objective) <= 1e-9 * objective[0])
    assert sparse_objective(np.zeros(400), a, GRID, CS) == pytest.approx(0.5 * np.sum(np.abs(a) ** 2), rel=1e-3)


@pytest.mark.parametrize("exponent", [1.0, 0.5])
def test_two_separated_sources_are_recovered(exponent):
    i, j = GRID.nearest(Direction(0.5, 1.0)), GRID.nearest(Direction(3.5, 2.0))
    a = 1.0 * GRID.sh_low.values[i] + 0.6 * GRID.sh_low.values[j]
    solution = solve_sparse_bin(a, GRID, CSConfig(norm_exponent=exponent))
    s = solution.coefficients
    assert abs(s[i] - 1.0) <= 0.05 * 1.0
    assert abs(s[j] - 0.6) <= 0.05 * 0.6
    assert np.sum(np.abs(np.delete(s, [i, j]))) <= 0.05
    assert solution.residual <= 1e-3 and solution.converged


def test_two_sources_with_different_phases():
    amplitudes = {40: 0.8 - 0.3j, 310: -0.2 + 0.5j}
    a = sum(amplitude * GRID.sh_low.values[index] for index, amplitude in amplitudes.items())
    solution = solve_sparse_bin(a, GRID, CS)
    assert set(np.flatnonzero(solution.support)) == set(amplitudes)
    for index, amplitude in amplitudes.items():
        assert solution.coefficients[index] == pytest.approx(amplitude, abs=1e-6)
    assert solution.iterations == 0


def test_batched_solver_does_not_depend_on_chunks(rng):
    bins = rng.standard_normal((40, 4)) + 1j * rng.standard_normal((40, 4))
    bins[5] = 0
    whole = solve_sparse_bins(bins, GRID, CS)
    chunked = solve_sparse_bins(bins, GRID, CSConfig(chunk_size=7), jobs=3)
    assert np.allclose(whole.coefficients, chunked.coefficients, atol=1e-8)
    assert whole.residual[5] == 0
    with pytest.raises(ArgumentError):
        solve_sparse_bins(bins[:, :3], GRID, CS)
    with pytest.raises(ArgumentError):
        solve_sparse_bin(np.zeros(9), GRID, CS)


def test_cs_upscale_recovers_an_on_grid_source(rng):
    hoa = make_hoa(rng, [GRID.directions[200]], length=2048)
    foa = truncate(hoa, 1)
    out = cs_upscale(foa, GRID, CS, STFT)
    assert out.order == 3
    assert np.array_equal(out.channels[:4], foa.channels)
    assert stft_sdr(out, hoa, STFT) >= 40.0


def test_cs_upscale_scales_with_its_input(rng):
    foa = truncate(make_hoa(rng, [Direction(1.0, 1.2), Direction(4.0, 2.0)], length=1024), 1)
    base = cs_upscale(foa, GRID, CS, STFT, jobs=2)
    scaled = cs_upscale(AmbisonicsSignal(1, 3.0 * foa.channels), GRID, CS, STFT, jobs=2)
    err = np.linalg.norm(scaled.channels[4:] - 3.0 * base.channels[4:]) / np.linalg.norm(3.0 * base.channels[4:])
    assert err <= 1e-4


def test_cs_upscale_silence_and_order(rng):
    silent = truncate(make_hoa(rng, [Direction(0.0, 1.0)], length=1024), 1)
    silent.channels[:] = 0
    assert np.all(cs_upscale(silent, GRID, CS, STFT).channels == 0)
    with pytest.raises(ArgumentError):
        cs_upscale(make_hoa(rng, [Direction(0.0, 1.0)], length=1024), GRID, CS, STFT)


def test_least_norm_upscale(rng):
    foa = truncate(make_hoa(rng, [Direction(2.0, 0.8)], length=512), 1)
    out = least_norm_upscale(foa, GRID)
    assert out.order == 3
    assert np.array_equal(out.channels[:4], foa.channels)
    doubled = least_norm_upscale(AmbisonicsSignal(1, 2.0 * foa.channels), GRID)
    assert np.allclose(doubled.channels, 2.0 * out.channels, atol=1e-12)
    with pytest.raises(ArgumentError):
        least_norm_upscale(make_hoa(rng, [Direction(2.0, 0.8)], order=2, length=512), GRID)


def test_cs_upscale_recovers_two_on_grid_sources(rng):
    hoa = make_hoa(rng, [GRID.directions[50], GRID.directions[300]], length=2048)
    assert stft_sdr(cs_upscale(truncate(hoa, 1), GRID, CS, STFT), hoa, STFT) >= 40.0


@pytest.mark.slow
def test_more_sources_degrade_the_upscaling():
    rng = np.random.default_rng(11)
    length, block = 8192, 256
    means = {}
    for count in range(1, 5):
        scores = []
        for _ in range(10):
            sources = []
            for index in rng.choice(GRID.size, size=count, replace=False):
                # Talkers switch on and off in 256-sample blocks, so frames hold varying subsets of them.
                active = rng.random(length // block) < 0.25
                active[rng.integers(active.size)] = True
                gate = np.repeat(active, block).astype(np.float64)
                sources.append(PlaneWaveSource(GRID.directions[index], gate * rng.standard_normal(length)))
            hoa = encode_scene(PlaneWaveScene(sources, 16000), 3)
            scores.append(stft_sdr(cs_upscale(truncate(hoa, 1), GRID, CS, STFT, jobs=0), hoa, STFT))
        means[count] = float(np.mean(scores))

    assert means[1] >= 40.0
    assert means[1] >= means[2] > means[3] > means[4]
