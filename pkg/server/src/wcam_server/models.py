"""Classifier backends.

Weights are initialized from a fixed seed so scores are reproducible
without downloading anything; a state-dict file can be supplied for real
trained weights.  Inference runs in eval mode under ``no_grad`` and is
deterministic on CPU.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]


@dataclass
class Preprocessing:
    """Declared input handling, echoed by /info for client manifests."""

    resize: int | None
    mean: list[float]
    std: list[float]

    def to_dict(self) -> dict:
        return {"resize": self.resize, "mean": self.mean, "std": self.std}


@dataclass
class LoadedModel:
    name: str
    module: nn.Module
    classes: int
    in_channels: int
    preprocessing: Preprocessing
    device: str = "cpu"
    seed: int = 0

    def apply(self, tensor: np.ndarray) -> np.ndarray:
        """Logits for a float32 (B, C, H, W) tensor in [0, 1]."""
        # Parsed tensors come from frombuffer and are read-only: copy.
        x = torch.from_numpy(np.array(tensor, dtype=np.float32, copy=True))
        if self.preprocessing.resize:
            side = self.preprocessing.resize
            if x.shape[-2:] != (side, side):
                x = torch.nn.functional.interpolate(
                    x, size=(side, side), mode="bilinear", align_corners=False
                )
        mean = torch.tensor(self.preprocessing.mean).view(1, -1, 1, 1)
        std = torch.tensor(self.preprocessing.std).view(1, -1, 1, 1)
        x = (x - mean) / std
        with torch.no_grad():
            logits = self.module(x.to(self.device))
        return logits.cpu().numpy().astype(np.float64)


class TinyConvNet(nn.Module):
    """Small deterministic CNN accepting any input size via adaptive pooling."""

    def __init__(self, in_channels: int = 3, classes: int = 10):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(in_channels, 16, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(16, 32, 3, padding=1),
            nn.ReLU(),
            nn.AdaptiveAvgPool2d(4),
        )
        self.classifier = nn.Linear(32 * 16, classes)

    def forward(self, x):
        feats = self.features(x)
        return self.classifier(torch.flatten(feats, 1))


def load_model(name: str, device: str = "cpu", seed: int = 0,
               weights: str | None = None, classes: int = 10) -> LoadedModel:
    """Build a classifier by name.

    ``tiny`` is the built-in seeded CNN; ``torchvision:<arch>`` loads any
    torchvision classifier architecture (random init unless ``weights``
    points at a state-dict file).
    """
    torch.manual_seed(seed)
    if name == "tiny":
        module = TinyConvNet(in_channels=3, classes=classes)
        prep = Preprocessing(resize=None, mean=[0.5, 0.5, 0.5], std=[0.5, 0.5, 0.5])
        loaded = LoadedModel(name, module, classes, 3, prep, device, seed)
    elif name.startswith("torchvision:"):
        import torchvision.models as tvm

        arch = name.split(":", 1)[1]
        factory = getattr(tvm, arch, None)
        if factory is None:
            raise ValueError(f"unknown torchvision architecture {arch!r}")
        module = factory(weights=None)
        prep = Preprocessing(resize=224, mean=IMAGENET_MEAN, std=IMAGENET_STD)
        loaded = LoadedModel(name, module, 1000, 3, prep, device, seed)
    else:
        raise ValueError(f"unknown model {name!r} (use tiny or torchvision:<arch>)")
    if weights:
        state = torch.load(weights, map_location=device)
        loaded.module.load_state_dict(state)
    loaded.module.to(device)
    loaded.module.eval()
    return loaded
