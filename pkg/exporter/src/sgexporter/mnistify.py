"""Dataset preprocessing: convert arbitrary images to 28x28 normalized
grayscale so a digit model can run inference on them as
out-of-distribution probes.

Transform (documented because the exact pipeline is a choice of this
tool): luminance grayscale for RGB sources, bilinear resize with
antialiasing to 28x28, then normalization to mean 0.5 / std 0.5.
Character datasets use the 62-class label convention: 0-9 digits,
10-35 uppercase, 36-61 lowercase.
"""

import warnings

import torch
from torch.utils.data import Dataset
from torchvision import transforms

TRANSFORM_VERSION = "mnistify-v1"

MODES = ("digits", "alphabetic", "rgb-natural")

DIGIT_LABELS = frozenset(range(10))
ALPHA_LABELS = frozenset(range(10, 62))

_pipeline = transforms.Compose(
    [
        transforms.Grayscale(num_output_channels=1),  # ITU-R 601-2 luminance
        transforms.Resize((28, 28), antialias=True),
        transforms.ToTensor(),
        transforms.Normalize((0.5,), (0.5,)),
    ]
)


class MnistifiedDataset(Dataset):
    """Eagerly transformed dataset of (1x28x28 tensor, label) pairs."""

    def __init__(self, items, skipped):
        self.items = items
        self.skipped = skipped

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def labels(self):
        return [label for _, label in self.items]


def _keep(label, mode):
    if mode == "digits":
        return label in DIGIT_LABELS
    if mode == "alphabetic":
        return label in ALPHA_LABELS
    return True


def mnistify(source, mode):
    """Transform a (image, label) dataset into its 28x28 grayscale form.

    ``digits`` keeps only the 10 digit classes of a character dataset,
    ``alphabetic`` the 52 letter classes, ``rgb-natural`` everything.
    Images that cannot be decoded or transformed are skipped with a
    warning; the count is available as ``result.skipped``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    items = []
    skipped = 0
    for i in range(len(source)):
        try:
            image, label = source[i]
            label = int(label)
            if not _keep(label, mode):
                continue
            if isinstance(image, torch.Tensor):
                if image.ndim == 2:
                    image = image.unsqueeze(0)
                image = transforms.functional.to_pil_image(image)
            tensor = _pipeline(image)
        except Exception as exc:
            skipped += 1
            warnings.warn(f"skipping undecodable example {i}: {exc}", stacklevel=2)
            continue
        items.append((tensor, label))
    return MnistifiedDataset(items, skipped)
