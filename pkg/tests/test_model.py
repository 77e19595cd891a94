import numpy as np
import pytest
import torch

from pydiffau import (
    ArgumentError,
    CheckpointConfigMismatch,
    CheckpointError,
    CheckpointVersionMismatch,
    ConfigurationError,
    CorruptCheckpoint,
    NoiseSchedule,
    ScoreModelConfig,
    dsm_loss,
    init_params,
    load_checkpoint,
    save_checkpoint,
    score_eval,
)

TINY = dict(base_width=8, depth=2, res_units=1, time_embed_dim=16, groups=4)


def tiny(block_order=1, seed=0):
    return init_params(ScoreModelConfig(block_order=block_order, **TINY), seed)


def inputs(block_order, generator, batch=None, freq=8, frames=8, dtype=torch.float32):
    cfg = ScoreModelConfig(block_order=block_order)
    lead = () if batch is None else (batch,)
    x = torch.randn(*lead, cfg.out_channels, freq, frames, generator=generator, dtype=dtype)
    y = torch.randn(*lead, cfg.condition_channels, freq, frames, generator=generator, dtype=dtype)
    return x, y


def test_channel_formulas():
    one, two = ScoreModelConfig(block_order=1), ScoreModelConfig(block_order=2)
    assert (one.out_channels, one.condition_channels, one.in_channels) == (10, 8, 18)
    assert (two.out_channels, two.condition_channels, two.in_channels) == (14, 18, 32)
    with pytest.raises(ConfigurationError):
        ScoreModelConfig(block_order=3).validate()
    with pytest.raises(ConfigurationError):
        init_params(ScoreModelConfig(block_order=1, in_channels=12))


def test_init_is_seeded_and_leaves_global_state():
    torch.manual_seed(5)
    expected = torch.rand(3)
    torch.manual_seed(5)
    a, b, c = tiny(seed=1), tiny(seed=1), tiny(seed=2)
    assert torch.equal(torch.rand(3), expected)

    sa, sb, sc = (p.network.state_dict() for p in (a, b, c))
    assert all(torch.equal(sa[k], sb[k]) for k in sa)
    assert any(not torch.equal(sa[k], sc[k]) for k in sa)
    assert a.parameter_count == b.parameter_count > 0


def test_untrained_score_is_zero(generator):
    params = tiny(2)
    x, y = inputs(2, generator)
    assert torch.all(score_eval(params, x, y, 0.4) == 0)


def test_score_shapes(generator):
    params = tiny(1)
    torch.nn.init.normal_(params.network.out.weight, std=0.1)
    x, y = inputs(1, generator, freq=9, frames=7)
    out = score_eval(params, x, y, 0.5)
    assert out.shape == x.shape

    xb, yb = inputs(1, generator, batch=3, freq=9, frames=7)
    batched = score_eval(params, xb, yb, torch.tensor([0.1, 0.5, 0.9]))
    assert batched.shape == xb.shape
    single = score_eval(params, xb[1], yb[1], 0.5)
    assert torch.allclose(batched[1], single, rtol=1e-4, atol=1e-5)

    with pytest.raises(ArgumentError):
        score_eval(params, xb[:, :4], yb, 0.5)
    with pytest.raises(ArgumentError):
        score_eval(params, xb, yb[:, :2], 0.5)
    with pytest.raises(ArgumentError):
        score_eval(params, xb, yb[:2], 0.5)
    with pytest.raises(ArgumentError):
        score_eval(params, x, y, 1.5)


def test_score_fn_closure(generator):
    params = tiny(1)
    torch.nn.init.normal_(params.network.out.weight, std=0.1)
    x, y = inputs(1, generator)
    assert torch.equal(params.score_fn(y)(x, 0.3), score_eval(params, x, y, 0.3))


def test_gradients_match_finite_differences(generator):
    params = tiny(1)
    network = params.network.double()
    torch.nn.init.normal_(network.out.weight, std=0.1)
    x0, y = inputs(1, generator, batch=2, dtype=torch.float64)
    z = torch.randn(x0.shape, generator=generator, dtype=torch.float64)
    t = torch.tensor([0.2, 0.7], dtype=torch.float64)

    def loss():
        return dsm_loss(lambda x, c, times: score_eval(params, x, c, times), x0, y, None, params.schedule, t=t, z=z)

    network.zero_grad()
    loss().backward()

    named = [(p, i) for p in network.parameters() for i in range(p.numel())]
    picks = np.random.default_rng(0).choice(len(named), size=20, replace=False)
    h = 1e-6
    with torch.no_grad():
        for pick in picks:
            p, i = named[pick]
            flat = p.view(-1)
            grad = float(p.grad.view(-1)[i])
            original = float(flat[i])
            flat[i] = original + h
            up = float(loss())
            flat[i] = original - h
            down = float(loss())
            flat[i] = original
            numeric = (up - down) / (2 * h)
            assert abs(numeric - grad) <= 1e-3 * max(abs(grad), abs(numeric)) + 1e-6


def test_checkpoint_round_trip(tmp_path, generator):
    params = init_params(
        ScoreModelConfig(block_order=2, **TINY), 3, schedule=NoiseSchedule(sigma_min=0.01, sigma_max=1.0)
    )
    torch.nn.init.normal_(params.network.out.weight, std=0.1)
    params.step = 7
    params.history = [3.0, 2.5, 2.25]
    params.validation = [[5, 2.0]]
    path = tmp_path / "block2.pt"
    save_checkpoint(params, path)

    loaded = load_checkpoint(path, block_order=2)
    original, restored = params.network.state_dict(), loaded.network.state_dict()
    assert original.keys() == restored.keys()
    assert all(torch.equal(original[k], restored[k]) for k in original)
    assert loaded.config == params.config
    assert loaded.schedule == params.schedule
    assert (loaded.step, loaded.history, loaded.validation) == (7, [3.0, 2.5, 2.25], [[5, 2.0]])
    assert loaded.created_at == params.created_at.replace(microsecond=0)

    x, y = inputs(2, generator)
    assert torch.equal(score_eval(loaded, x, y, 0.5), score_eval(params, x, y, 0.5))


def test_checkpoint_errors(tmp_path):
    path = tmp_path / "block1.pt"
    save_checkpoint(tiny(1), path)

    with pytest.raises(CheckpointConfigMismatch):
        load_checkpoint(path, block_order=2)

    truncated = tmp_path / "truncated.pt"
    truncated.write_bytes(path.read_bytes()[:200])
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(truncated)

    junk = tmp_path / "junk.pt"
    junk.write_bytes(b"not a checkpoint")
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(junk)

    other = tmp_path / "other.pt"
    torch.save({"hello": 1}, other)
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(other)

    future = tmp_path / "future.pt"
    payload = torch.load(path, weights_only=True)
    payload["format_version"] = 99
    torch.save(payload, future)
    with pytest.raises(CheckpointVersionMismatch):
        load_checkpoint(future)

    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.pt")
