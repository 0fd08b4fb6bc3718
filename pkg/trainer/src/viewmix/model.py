"""Inter-viewpoint mixing network, toy scale.

Fuses a degraded view with two high-quality reference views. Three parts:
two convolutional encoders (one for the degraded view, one shared by both
references), a recurrent hybrid aggregation block applied R times with a
single shared set of weights, and a residual reconstruction tail with a
global skip from the degraded input.

The aggregation block has a pixel-wise stage (per reference: concatenate
with the target feature, reduce, five residual blocks, then a deformable
convolution whose offsets are predicted from the fused feature) and a
patch-wise stage (the two features are stacked along a view axis, cut into
windows, linearly embedded, mixed by one windowed multi-head attention
block spanning both views, and regrouped). Either stage can be switched
off; "hybrid" runs both in order.
"""

from __future__ import annotations

import dataclasses

import torch
from torch import nn
from torchvision.ops import deform_conv2d

AGGREGATION_MODES = ("pixel", "patch", "hybrid")


class ConfigError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class MixerConfig:
    channels: int = 32
    recon_blocks: int = 8
    encoder_blocks: int = 5
    fusion_blocks: int = 5
    recurrent_iters: int = 3
    aggregation: str = "hybrid"
    window_size: int = 4
    attn_heads: int = 4

    def __post_init__(self):
        if self.aggregation not in AGGREGATION_MODES:
            raise ConfigError(
                f"aggregation must be one of {AGGREGATION_MODES}, got {self.aggregation!r}")
        if self.recurrent_iters < 1:
            raise ConfigError(f"recurrent_iters must be >= 1, got {self.recurrent_iters}")
        if self.channels < 1 or self.channels % self.attn_heads != 0:
            raise ConfigError(
                f"channels must be a positive multiple of attn_heads, "
                f"got channels={self.channels} attn_heads={self.attn_heads}")
        for field in ("recon_blocks", "encoder_blocks", "fusion_blocks"):
            if getattr(self, field) < 1:
                raise ConfigError(f"{field} must be >= 1")
        if self.window_size < 1:
            raise ConfigError(f"window_size must be >= 1, got {self.window_size}")

    @classmethod
    def full_scale(cls, **overrides) -> "MixerConfig":
        """Reference-size network (128 channels, 40 reconstruction blocks).

        Outside the toy test envelope; provided for completeness.
        """
        merged = {"channels": 128, "recon_blocks": 40, "attn_heads": 8, **overrides}
        return cls(**merged)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


def _block_stack(channels: int, count: int) -> nn.Sequential:
    return nn.Sequential(*[ResidualBlock(channels) for _ in range(count)])


class Encoder(nn.Module):
    """RGB frame to deep feature: lift, residual stack, project."""

    def __init__(self, channels: int, blocks: int):
        super().__init__()
        self.head = nn.Conv2d(3, channels, 3, padding=1)
        self.body = _block_stack(channels, blocks)
        self.tail = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        return self.tail(self.body(self.head(x)))


class PixelAggregation(nn.Module):
    """Align one reference feature against the target feature.

    Concat, channel reduce, residual stack, project gives the fused
    feature; a small head predicts deformable-convolution offsets from it
    and the reference is resampled accordingly. The aligned reference and
    the fused feature are summed. Both references pass through this same
    module, so its weights are shared between them.
    """

    KERNEL = 3

    def __init__(self, channels: int, fusion_blocks: int):
        super().__init__()
        k = self.KERNEL
        self.reduce = nn.Conv2d(2 * channels, channels, 3, padding=1)
        self.body = _block_stack(channels, fusion_blocks)
        self.project = nn.Conv2d(channels, channels, 3, padding=1)
        self.offset_head = nn.Conv2d(channels, 2 * k * k, 3, padding=1)
        self.weight = nn.Parameter(torch.empty(channels, channels, k, k))
        self.bias = nn.Parameter(torch.zeros(channels))
        # identity start: the deformable kernel is a center tap, offsets
        # and the fused branch begin near zero, so the reference passes
        # through unchanged at step 0 while every path keeps gradient
        nn.init.dirac_(self.weight)
        nn.init.normal_(self.offset_head.weight, std=1e-3)
        nn.init.zeros_(self.offset_head.bias)
        nn.init.normal_(self.project.weight, std=1e-3)
        nn.init.zeros_(self.project.bias)

    def forward(self, target, ref):
        fused = self.project(self.body(self.reduce(torch.cat([target, ref], dim=1))))
        offsets = self.offset_head(fused)
        aligned = deform_conv2d(ref, offsets, self.weight, self.bias, padding=(1, 1))
        return aligned + fused


class WindowAttention(nn.Module):
    """One windowed attention block over a two-view feature stack.

    Input (B, 2, C, H, W). Spatial windows of side `window` are flattened
    together with the view axis into token groups of length 2*window**2,
    linearly embedded, passed through pre-norm multi-head self-attention
    and a feed-forward layer, then written back in place.
    """

    def __init__(self, channels: int, heads: int, window: int):
        super().__init__()
        self.window = window
        self.embed = nn.Linear(channels, channels)
        self.norm1 = nn.LayerNorm(channels)
        self.attn = nn.MultiheadAttention(channels, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(channels)
        self.ffn = nn.Sequential(
            nn.Linear(channels, 2 * channels),
            nn.GELU(),
            nn.Linear(2 * channels, channels),
        )
        # start as an identity map with live gradients everywhere: the
        # embedding begins at eye and the two residual branches begin near
        # zero, so upstream features pass through untouched at step 0
        nn.init.eye_(self.embed.weight)
        nn.init.zeros_(self.embed.bias)
        nn.init.normal_(self.attn.out_proj.weight, std=1e-3)
        nn.init.zeros_(self.attn.out_proj.bias)
        nn.init.normal_(self.ffn[-1].weight, std=1e-3)
        nn.init.zeros_(self.ffn[-1].bias)

    def forward(self, stack):
        b, v, c, h, w = stack.shape
        ws = self.window
        # (B, V, C, H, W) -> (B*windows, V*ws*ws, C)
        t = stack.reshape(b, v, c, h // ws, ws, w // ws, ws)
        t = t.permute(0, 3, 5, 1, 4, 6, 2)
        t = t.reshape(b * (h // ws) * (w // ws), v * ws * ws, c)
        t = self.embed(t)
        attn_out, _ = self.attn(*[self.norm1(t)] * 3, need_weights=False)
        t = t + attn_out
        t = t + self.ffn(self.norm2(t))
        t = t.reshape(b, h // ws, w // ws, v, ws, ws, c)
        t = t.permute(0, 3, 6, 1, 4, 2, 5)
        return t.reshape(b, v, c, h, w)


class HybridBlock(nn.Module):
    """One aggregation iteration: pixel-wise then patch-wise, per mode.

    Maps (target feature, ref feature 1, ref feature 2) to two updated
    reference features. After the patch stage the stacked map is merged
    view-into-channels and split back down the channel axis, which is the
    handoff between iterations.
    """

    def __init__(self, cfg: MixerConfig):
        super().__init__()
        self.use_pixel = cfg.aggregation in ("pixel", "hybrid")
        self.use_patch = cfg.aggregation in ("patch", "hybrid")
        if self.use_pixel:
            self.pixel = PixelAggregation(cfg.channels, cfg.fusion_blocks)
        if self.use_patch:
            self.patch = WindowAttention(cfg.channels, cfg.attn_heads, cfg.window_size)

    def forward(self, target, ref1, ref2):
        if self.use_pixel:
            ref1 = self.pixel(target, ref1)
            ref2 = self.pixel(target, ref2)
        if self.use_patch:
            c = target.shape[1]
            stack = torch.stack([ref1, ref2], dim=1)
            merged = self.patch(stack).reshape(stack.shape[0], 2 * c, *stack.shape[3:])
            ref1, ref2 = merged[:, :c], merged[:, c:]
        return ref1, ref2


class ViewMixer(nn.Module):
    def __init__(self, cfg: MixerConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.channels
        self.encode_target = Encoder(c, cfg.encoder_blocks)
        self.encode_ref = Encoder(c, cfg.encoder_blocks)
        self.block = HybridBlock(cfg)
        self.recon_head = nn.Conv2d(3 * c, c, 3, padding=1)
        self.recon_body = _block_stack(c, cfg.recon_blocks)
        self.recon_tail = nn.Conv2d(c, 3, 3, padding=1)
        # small but nonzero: output starts near the identity skip while
        # every upstream parameter keeps a live gradient path
        nn.init.normal_(self.recon_tail.weight, std=1e-3)
        nn.init.zeros_(self.recon_tail.bias)

    def forward(self, degraded, ref1, ref2):
        self._check_inputs(degraded, ref1, ref2)
        f = self.encode_target(degraded)
        r1 = self.encode_ref(ref1)
        r2 = self.encode_ref(ref2)
        for _ in range(self.cfg.recurrent_iters):
            r1, r2 = self.block(f, r1, r2)
        fused = self.recon_head(torch.cat([f, r1, r2], dim=1))
        return self.recon_tail(self.recon_body(fused)) + degraded

    def _check_inputs(self, degraded, ref1, ref2):
        if not (degraded.shape == ref1.shape == ref2.shape):
            raise ShapeError(
                f"all three views must share one shape, got {tuple(degraded.shape)} "
                f"{tuple(ref1.shape)} {tuple(ref2.shape)}")
        if degraded.dim() != 4 or degraded.shape[1] != 3:
            raise ShapeError(f"expected (B, 3, H, W) input, got {tuple(degraded.shape)}")
        if self.block.use_patch:
            h, w = degraded.shape[2:]
            ws = self.cfg.window_size
            if h % ws or w % ws:
                raise ShapeError(
                    f"spatial dims ({h}, {w}) must be divisible by window size {ws}")


def build_model(cfg: MixerConfig) -> ViewMixer:
    return ViewMixer(cfg)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
