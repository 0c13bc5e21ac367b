import warnings

import pytest
import torch
from torch.utils.data import Dataset

from sgexporter.mnistify import ALPHA_LABELS, DIGIT_LABELS, MnistifiedDataset, mnistify


class CharDataset(Dataset):
    """Synthetic 62-class character dataset: 2 examples per class."""

    def __init__(self, per_class=2, size=(32, 32), channels=3, seed=0):
        g = torch.Generator().manual_seed(seed)
        self.examples = []
        for label in range(62):
            for _ in range(per_class):
                img = torch.rand(channels, *size, generator=g)
                self.examples.append((img, label))

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, i):
        return self.examples[i]


@pytest.fixture(scope="module")
def chars():
    return CharDataset()


def test_digits_mode_keeps_exactly_ten_classes(chars):
    result = mnistify(chars, "digits")
    labels = set(result.labels)
    assert labels == set(DIGIT_LABELS)
    assert len(labels) == 10
    assert len(result) == 20


def test_alphabetic_mode_keeps_exactly_fiftytwo_classes(chars):
    result = mnistify(chars, "alphabetic")
    labels = set(result.labels)
    assert labels == set(ALPHA_LABELS)
    assert len(labels) == 52
    assert len(result) == 104


def test_rgb_natural_keeps_everything(chars):
    result = mnistify(chars, "rgb-natural")
    assert len(result) == len(chars)
    assert set(result.labels) == set(range(62))


def test_output_shape_and_range(chars):
    result = mnistify(chars, "digits")
    img, label = result[0]
    assert img.shape == (1, 28, 28)
    assert img.dtype == torch.float32
    # normalized to mean 0.5 / std 0.5: values land in [-1, 1]
    assert float(img.min()) >= -1.0 - 1e-6
    assert float(img.max()) <= 1.0 + 1e-6


def test_grayscale_images_pass_through(chars):
    gray = [(torch.rand(28, 28), 3), (torch.rand(1, 20, 20), 4)]
    result = mnistify(gray, "digits")
    assert len(result) == 2
    assert all(img.shape == (1, 28, 28) for img, _ in result.items)


def test_undecodable_example_skipped_with_warning():
    bad = [(torch.rand(3, 16, 16), 1), (object(), 2), (torch.rand(3, 16, 16), 3)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = mnistify(bad, "digits")
    assert result.skipped == 1
    assert len(result) == 2
    assert any("skipping undecodable" in str(w.message) for w in caught)


def test_unknown_mode_rejected(chars):
    with pytest.raises(ValueError, match="mode must be one of"):
        mnistify(chars, "letters")


def test_dataset_protocol():
    ds = MnistifiedDataset([(torch.zeros(1, 28, 28), 7)], skipped=0)
    assert len(ds) == 1
    img, label = ds[0]
    assert label == 7
