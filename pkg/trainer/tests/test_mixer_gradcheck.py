"""Analytic gradients against central finite differences.

Double precision, tiny single-channel network, smooth quadratic loss.
Twenty parameters are drawn at random across every module family
(encoders, fusion, offset head, deformable weight, attention, norms,
reconstruction) and each analytic derivative is compared against
(L(p+e) - L(p-e)) / 2e.
"""

import numpy as np
import pytest
import torch

from viewmix import MixerConfig, build_model

EPS = 1e-5
REL_TOL = 1e-3


def micro_model(mode="hybrid"):
    torch.manual_seed(7)
    cfg = MixerConfig(channels=1, recon_blocks=1, encoder_blocks=2,
                      fusion_blocks=2, recurrent_iters=1,
                      aggregation=mode, window_size=4, attn_heads=1)
    return build_model(cfg).double()


def quadratic_loss(model, inputs, target):
    out = model(*inputs)
    return ((out - target) ** 2).mean()


def central_difference_check(model, inputs, target, picks, rng_seed):
    """Backprop one loss, then FD-check `picks` random parameters.

    Returns the worst relative error seen. Raises AssertionError with the
    offending parameter on any mismatch.
    """
    loss = quadratic_loss(model, inputs, target)
    loss.backward()
    params = dict(model.named_parameters())
    names = sorted(params)
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for _ in range(picks):
        name = names[rng.integers(len(names))]
        p = params[name]
        flat = rng.integers(p.numel())
        analytic = p.grad.reshape(-1)[flat].item()
        with torch.no_grad():
            orig = p.reshape(-1)[flat].item()
            p.reshape(-1)[flat] = orig + EPS
            hi = quadratic_loss(model, inputs, target).item()
            p.reshape(-1)[flat] = orig - EPS
            lo = quadratic_loss(model, inputs, target).item()
            p.reshape(-1)[flat] = orig
        fd = (hi - lo) / (2 * EPS)
        rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8)
        assert rel < REL_TOL, f"{name}[{flat}]: analytic {analytic}, fd {fd}, rel {rel}"
        worst = max(worst, rel)
    return worst


def micro_inputs(seed):
    gen = torch.Generator().manual_seed(seed)
    inputs = [torch.rand(1, 3, 16, 16, generator=gen, dtype=torch.float64)
              for _ in range(3)]
    target = torch.rand(1, 3, 16, 16, generator=gen, dtype=torch.float64)
    return inputs, target


def test_central_differences_match_backprop():
    model = micro_model()
    inputs, target = micro_inputs(11)
    worst = central_difference_check(model, inputs, target, picks=20, rng_seed=23)
    assert worst < REL_TOL


@pytest.mark.parametrize("mode", ["pixel", "patch"])
def test_single_mode_micro_configs_also_pass(mode):
    model = micro_model(mode)
    inputs, target = micro_inputs(13)
    central_difference_check(model, inputs, target, picks=8, rng_seed=3)
