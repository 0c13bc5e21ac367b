"""Model loading for the exporter.

Ships the small two-conv digit CNN used as the reference architecture
(16/32 filters, 128/10 fully connected, log-softmax head). Other
architectures load through torchvision or a TorchScript file.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F


class SmallDigitCnn(nn.Module):
    """Two conv layers (16, 32 filters, 3x3, pad 1) with ReLU + 2x2
    max-pool, then FC 128 -> num_classes, log-softmax output."""

    output_kind = "log-probs"

    def __init__(self, num_classes=10):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 16, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(16, 32, kernel_size=3, padding=1)
        self.fc1 = nn.Linear(32 * 7 * 7, 128)
        self.fc2 = nn.Linear(128, num_classes)

    def forward(self, x):
        x = F.max_pool2d(F.relu(self.conv1(x)), 2)
        x = F.max_pool2d(F.relu(self.conv2(x)), 2)
        x = torch.flatten(x, 1)
        x = F.relu(self.fc1(x))
        return F.log_softmax(self.fc2(x), dim=1)


def load_model(architecture, weights_path=None, num_classes=10, device="cpu"):
    """Instantiate a model by architecture tag, optionally with weights.

    Tags: "small-digit-cnn" (built in), "torchscript" (weights_path is a
    scripted module), or any torchvision.models attribute name.
    """
    if architecture == "small-digit-cnn":
        model = SmallDigitCnn(num_classes=num_classes)
        if weights_path:
            model.load_state_dict(torch.load(weights_path, map_location=device))
    elif architecture == "torchscript":
        if not weights_path:
            raise ValueError("torchscript architecture needs a weights path")
        model = torch.jit.load(weights_path, map_location=device)
    else:
        import torchvision.models as tvm

        if not hasattr(tvm, architecture):
            raise ValueError(f"unknown architecture tag {architecture!r}")
        model = getattr(tvm, architecture)(num_classes=num_classes)
        if weights_path:
            model.load_state_dict(torch.load(weights_path, map_location=device))
    model.to(device)
    model.eval()
    return model
