"""Training loop and scoring for the toy mixer.

Mean-absolute-error objective, Adam, cosine-annealed learning rate from
5e-4 down to 0 across the run. Single process; with a fixed seed two runs
produce identical loss histories. A non-finite loss aborts immediately
with the step and recent history in the message.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time

import torch

from .data import PairSet
from .model import MixerConfig, ViewMixer, build_model

BASE_LR = 5e-4


class TrainingDiverged(RuntimeError):
    pass


@dataclasses.dataclass
class TrainState:
    model: ViewMixer
    step: int
    loss_history: list[float]
    lr_history: list[float]
    wall_seconds: float


def l1_loss(output: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return (output - target).abs().mean()


def train_loop(
    pairs: PairSet,
    cfg: MixerConfig,
    steps: int,
    batch_size: int = 4,
    seed: int = 0,
    out_dir: str | None = None,
) -> TrainState:
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    torch.manual_seed(seed)
    model = build_model(cfg)
    optimizer = torch.optim.Adam(model.parameters(), lr=BASE_LR)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=steps, eta_min=0.0)
    sampler = torch.Generator().manual_seed(seed)

    losses: list[float] = []
    lrs: list[float] = []
    started = time.perf_counter()
    model.train()
    for step in range(steps):
        idx = torch.randint(len(pairs), (batch_size,), generator=sampler)
        degraded, ref1, ref2, gt = pairs.batch(idx)
        loss = l1_loss(model(degraded, ref1, ref2), gt)
        if not torch.isfinite(loss):
            raise TrainingDiverged(
                f"non-finite loss {loss.item()} at step {step}; "
                f"last losses: {[round(v, 6) for v in losses[-5:]]}")
        lrs.append(optimizer.param_groups[0]["lr"])
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        scheduler.step()
        losses.append(loss.item())
    elapsed = time.perf_counter() - started

    state = TrainState(model=model, step=steps, loss_history=losses,
                       lr_history=lrs, wall_seconds=elapsed)
    if out_dir is not None:
        save_run(out_dir, cfg, state)
    return state


def loss_trend(losses: list[float]) -> tuple[float, float]:
    """Mean loss over the first and last tenth of the run (at least one step each)."""
    n = max(1, len(losses) // 10)
    head = sum(losses[:n]) / n
    tail = sum(losses[-n:]) / n
    return head, tail


def save_run(out_dir: str, cfg: MixerConfig, state: TrainState) -> None:
    os.makedirs(out_dir, exist_ok=True)
    torch.save(
        {"model_state": state.model.state_dict(),
         "config": dataclasses.asdict(cfg),
         "step": state.step},
        os.path.join(out_dir, "checkpoint.pt"))
    head, tail = loss_trend(state.loss_history)
    report = {
        "config": dataclasses.asdict(cfg),
        "steps": state.step,
        "wall_seconds": state.wall_seconds,
        "loss": state.loss_history,
        "lr": state.lr_history,
        "loss_first_tenth": head,
        "loss_last_tenth": tail,
    }
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)


def load_checkpoint(path: str) -> ViewMixer:
    payload = torch.load(path, weights_only=True)
    model = build_model(MixerConfig(**payload["config"]))
    model.load_state_dict(payload["model_state"])
    return model.eval()


def psnr_db(a: torch.Tensor, b: torch.Tensor, cap: float = 99.0) -> float:
    mse = float(((a - b) ** 2).mean())
    if mse <= 0.0:
        return cap
    return min(cap, 10.0 * math.log10(1.0 / mse))


def filter_degraded(root: str, entries: list[dict], max_psnr_db: float = 40.0) -> list[dict]:
    """Keep rows whose degraded plane measurably differs from ground truth.

    Region-adaptive recipes leave much of a frame untouched, so small crops
    are often identical to their target. Training on those teaches nothing;
    this selects rows below the given degraded-vs-gt PSNR.
    """
    from .data import load_entry

    kept = []
    for entry in entries:
        degraded, _, _, gt = load_entry(root, entry)
        if psnr_db(degraded, gt) < max_psnr_db:
            kept.append(entry)
    return kept


def enhance_and_score(model: ViewMixer, pairs: PairSet) -> dict:
    """Mean held-out PSNR of enhanced vs degraded outputs against ground truth.

    The delta may be negative for an untrained model; it is reported either
    way.
    """
    model.eval()
    before = []
    after = []
    with torch.no_grad():
        for i in range(len(pairs)):
            idx = torch.tensor([i])
            degraded, ref1, ref2, gt = pairs.batch(idx)
            enhanced = model(degraded, ref1, ref2).clamp(0.0, 1.0)
            before.append(psnr_db(degraded, gt))
            after.append(psnr_db(enhanced, gt))
    mean_before = sum(before) / len(before)
    mean_after = sum(after) / len(after)
    return {
        "count": len(pairs),
        "psnr_degraded_db": mean_before,
        "psnr_enhanced_db": mean_after,
        "delta_db": mean_after - mean_before,
    }
