"""Toy ESPCN-style network: three convs and a sub-pixel shuffle."""

from __future__ import annotations

import torch
import torch.nn as nn


class EspcnTiny(nn.Module):
    def __init__(self, channels: int, scale: int):
        super().__init__()
        self.scale = scale
        self.body = nn.Sequential(
            nn.Conv2d(channels, 64, kernel_size=5, padding=2),
            nn.Tanh(),
            nn.Conv2d(64, 32, kernel_size=3, padding=1),
            nn.Tanh(),
            nn.Conv2d(32, channels * scale * scale, kernel_size=3, padding=1),
        )
        self.shuffle = nn.PixelShuffle(scale)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.shuffle(self.body(x))


def build_model(channels: int, scale: int, seed: int) -> EspcnTiny:
    """Seeded construction so two builds share bit-identical weights."""
    torch.manual_seed(seed)
    return EspcnTiny(channels, scale)
