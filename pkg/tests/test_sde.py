import math

import numpy as np
import pytest
import torch

from pydiffau import (
    ArgumentError,
    ConfigurationError,
    NoiseSchedule,
    PCSamplerConfig,
    SigmaGrid,
    corrector_step,
    diffusion_coeff,
    dsm_loss,
    langevin_step_size,
    pc_sample,
    perturb,
    predictor_step,
    prior_sample,
    sigma,
    sigma_grid,
)

SCHED = NoiseSchedule()


def gaussian_score(mean, var):
    """Score of N(mean, var) perturbed by the schedule's noise at time ``t``."""

    def score(x, t):
        return -(x - mean) / (var + sigma(SCHED, t) ** 2)

    return score


def test_sigma_endpoints():
    assert sigma(SCHED, 0.0) == pytest.approx(0.05, rel=1e-12)
    assert sigma(SCHED, 1.0) == pytest.approx(0.5, rel=1e-12)
    assert sigma(SCHED, 0.5) == pytest.approx(math.sqrt(0.05 * 0.5), rel=1e-12)
    with pytest.raises(ArgumentError):
        sigma(SCHED, 1.5)
    with pytest.raises(ArgumentError):
        sigma(SCHED, torch.tensor([0.2, -0.1]))


def test_diffusion_coefficient():
    assert diffusion_coeff(SCHED, 0.0) == pytest.approx(0.05 * math.sqrt(2 * math.log(10)), rel=1e-12)
    assert diffusion_coeff(SCHED, 1.0) / diffusion_coeff(SCHED, 0.0) == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        diffusion_coeff(NoiseSchedule(sigma_min=0.5, sigma_max=0.5), 0.3)


def test_diffusion_coefficient_matches_variance_growth():
    t = torch.linspace(0.01, 0.99, 100, dtype=torch.float64)
    h = 1e-5
    derivative = (sigma(SCHED, t + h) ** 2 - sigma(SCHED, t - h) ** 2) / (2 * h)
    g2 = diffusion_coeff(SCHED, t) ** 2
    assert torch.all(((g2 - derivative) / derivative).abs() <= 1e-6)
    assert torch.all(sigma(SCHED, t)[1:] > sigma(SCHED, t)[:-1])


def test_perturb(generator):
    x0 = torch.randn(3, 4, generator=generator, dtype=torch.float64)
    z = torch.randn(3, 4, generator=generator, dtype=torch.float64)
    assert torch.equal(perturb(x0, 0.7, torch.zeros_like(x0), SCHED), x0)
    assert torch.allclose(perturb(torch.zeros_like(x0), 1.0, z, SCHED), 0.5 * z)
    per_item = perturb(x0, torch.tensor([0.0, 0.5, 1.0], dtype=torch.float64), z, SCHED)
    assert torch.allclose(per_item[2], x0[2] + 0.5 * z[2])
    with pytest.raises(ArgumentError):
        perturb(x0, 0.5, torch.zeros(4, 3, dtype=torch.float64), SCHED)

    draws = perturb(torch.zeros(100_000, dtype=torch.float64), 0.3, torch.randn(100_000, generator=generator,
                                                                               dtype=torch.float64), SCHED)
    assert float(draws.std()) == pytest.approx(sigma(SCHED, 0.3), rel=0.02)


def test_dsm_loss_with_zero_score(generator):
    x0 = torch.randn(64, 100, generator=generator, dtype=torch.float64)
    loss = dsm_loss(lambda x, y, t: torch.zeros_like(x), x0, None, generator, SCHED)
    # Mean of 64 chi-square variables with 100 degrees of freedom.
    assert abs(float(loss) - 100) <= 3 * math.sqrt(200 / 64)


def test_dsm_loss_with_oracle_score(generator):
    x0 = torch.randn(8, 2, 5, 5, generator=generator, dtype=torch.float64)
    z = torch.randn(x0.shape, generator=generator, dtype=torch.float64)
    t = SCHED.t_eps + (1 - SCHED.t_eps) * torch.rand(8, generator=generator, dtype=torch.float64)

    def oracle(x_t, y, times):
        return -(x_t - x0) / sigma(SCHED, times).reshape(-1, 1, 1, 1) ** 2

    assert float(dsm_loss(oracle, x0, None, generator, SCHED, t=t, z=z)) <= 1e-20


def test_dsm_loss_prefers_the_analytic_gaussian_score(generator):
    s2 = 0.1 ** 2
    x0 = 0.1 * torch.randn(4096, 8, generator=generator, dtype=torch.float64)
    z = torch.randn(x0.shape, generator=generator, dtype=torch.float64)
    t = SCHED.t_eps + (1 - SCHED.t_eps) * torch.rand(4096, generator=generator, dtype=torch.float64)

    def scaled(c):
        return lambda x, y, times: -c * x / (s2 + sigma(SCHED, times).reshape(-1, 1) ** 2)

    losses = {c: float(dsm_loss(scaled(c), x0, None, None, SCHED, t=t, z=z)) for c in (0.7, 1.0, 1.3)}
    assert losses[1.0] < losses[0.7]
    assert losses[1.0] < losses[1.3]


def test_dsm_loss_rejects_empty_batch():
    with pytest.raises(ArgumentError):
        dsm_loss(lambda x, y, t: x, torch.zeros(0, 3), None, None, SCHED)


def test_sigma_grid():
    grid = sigma_grid(SCHED, 30)
    assert grid.steps == 30
    assert float(grid.sigmas[0]) == pytest.approx(0.05)
    assert float(grid.sigmas[-1]) == pytest.approx(0.5)
    grid.check()
    with pytest.raises(ConfigurationError):
        sigma_grid(SCHED, 0)


def test_predictor_identity_and_contraction(generator):
    grid = sigma_grid(SCHED, 10)
    x = torch.randn(50, generator=generator, dtype=torch.float64)
    z = torch.zeros_like(x)
    assert torch.equal(predictor_step(x, 5, lambda x, t: torch.zeros_like(x), grid, generator, z=z), x)

    score = gaussian_score(0.0, 0.01)
    for i in range(10, 0, -1):
        moved = predictor_step(x, i, score, grid, generator, z=z)
        assert torch.linalg.vector_norm(moved) < torch.linalg.vector_norm(x)


def test_predictor_rejects_bad_grid_and_index():
    times = torch.tensor([0.0, 0.5, 1.0], dtype=torch.float64)
    bad = SigmaGrid(times, torch.tensor([0.5, 0.2, 0.05], dtype=torch.float64))
    with pytest.raises(ConfigurationError):
        predictor_step(torch.zeros(3), 1, lambda x, t: x, bad, None)
    with pytest.raises(ArgumentError):
        predictor_step(torch.zeros(3), 0, lambda x, t: x, sigma_grid(SCHED, 2), None)


def test_corrector_zero_score_guard(generator):
    x = torch.randn(20, generator=generator)
    assert torch.equal(corrector_step(x, 0.5, lambda x, t: torch.zeros_like(x), 0.5, generator), x)
    with pytest.raises(ArgumentError):
        corrector_step(x, 0.5, lambda x, t: x, 0.0, generator)


def test_step_size_scales_with_snr_squared(generator):
    score = torch.randn(30, generator=generator, dtype=torch.float64)
    z = torch.randn(30, generator=generator, dtype=torch.float64)
    ratio = langevin_step_size(score, z, 1.0) / langevin_step_size(score, z, 0.5)
    assert float(ratio) == pytest.approx(4.0, rel=1e-12)


def test_corrector_keeps_the_perturbed_marginal(generator):
    s2, t = 0.1 ** 2, 0.6
    var = s2 + sigma(SCHED, t) ** 2
    x = math.sqrt(var) * torch.randn(10_000, generator=generator, dtype=torch.float64)
    score = gaussian_score(0.0, s2)
    for _ in range(20):
        x = corrector_step(x, t, score, 0.15, generator)
    assert float(x.var()) == pytest.approx(var, rel=0.1)


@pytest.mark.parametrize("seed", range(10))
def test_pc_sample_matches_gaussian_target(seed):
    mu = 0.3
    generator = torch.Generator().manual_seed(seed)
    cfg = PCSamplerConfig(predictor_steps=30, corrector_steps=1, snr=0.5)
    x_T = prior_sample((10_000,), SCHED, generator, dtype=torch.float64)
    x = pc_sample(x_T, gaussian_score(mu, 0.01), cfg, SCHED, generator)
    assert abs(float(x.mean()) - mu) <= 0.02
    assert float(x.std()) == pytest.approx(math.sqrt(0.01 + 0.05 ** 2), rel=0.15)


def test_pc_sample_evaluation_count_and_determinism():
    calls = []

    def score(x, t):
        calls.append(t)
        return -x

    cfg = PCSamplerConfig(predictor_steps=30, corrector_steps=1)
    runs = []
    for _ in range(2):
        g = torch.Generator().manual_seed(3)
        runs.append(pc_sample(prior_sample((2, 4, 4), SCHED, g), score, cfg, SCHED, g))
    assert len(calls) == 120
    assert torch.equal(runs[0], runs[1])
    # Times descend from 1, each visited by the corrector then the predictor.
    assert calls[:2] == [1.0, 1.0]
    assert np.all(np.diff(calls[:60:2]) < 0)


def test_noise_removal_returns_the_predictor_mean():
    cfg = PCSamplerConfig(predictor_steps=3, corrector_steps=0, noise_removal=True)
    x = torch.ones(5, dtype=torch.float64)
    out = pc_sample(x, lambda x, t: torch.zeros_like(x), cfg, SCHED, torch.Generator().manual_seed(0))
    assert torch.equal(out, x)
