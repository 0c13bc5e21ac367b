#!/usr/bin/env python3
"""Optional reference training for the small digit CNN.

SGD lr 0.01 (with a simple decay), batch 64, cross-entropy (on the
log-softmax head, NLL), 10 epochs. Requires the MNIST files to be
available locally; this script does not ship data.

Usage:
    python3 train_small_cnn.py --root ./data --out cnn_weights.pt
"""

import argparse

import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader
from torchvision import datasets, transforms

from sgexporter.models import SmallDigitCnn


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--root", default="./data")
    parser.add_argument("--out", default="cnn_weights.pt")
    parser.add_argument("--epochs", type=int, default=10)
    args = parser.parse_args()

    transform = transforms.Compose(
        [transforms.ToTensor(), transforms.Normalize((0.5,), (0.5,))]
    )
    train = datasets.MNIST(args.root, train=True, download=True, transform=transform)
    loader = DataLoader(train, batch_size=64, shuffle=True)

    model = SmallDigitCnn()
    for epoch in range(args.epochs):
        lr = 0.01 * (0.95**epoch)
        optimizer = torch.optim.SGD(model.parameters(), lr=lr)
        model.train()
        total = 0.0
        for images, labels in loader:
            optimizer.zero_grad()
            loss = F.nll_loss(model(images), labels)
            loss.backward()
            optimizer.step()
            total += float(loss)
        print(f"epoch {epoch + 1}: lr={lr:.5f} mean_loss={total / len(loader):.4f}")

    torch.save(model.state_dict(), args.out)
    print(f"saved weights to {args.out}")


if __name__ == "__main__":
    main()
