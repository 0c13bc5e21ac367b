"""Exporter command line: `softgate-exporter export` and
`softgate-exporter mnistify`."""

import argparse
import sys

import torch


def build_parser():
    parser = argparse.ArgumentParser(prog="softgate-exporter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="run a model over a dataset, write prediction CSV")
    p.add_argument("--arch", default="small-digit-cnn")
    p.add_argument("--weights", default=None)
    p.add_argument("--dataset", required=True,
                   help="torchvision dataset name (mnist, cifar10) or a saved "
                        "tensor dataset .pt file of (images, labels)")
    p.add_argument("--root", default="./data", help="dataset root for torchvision")
    p.add_argument("--split", default="test", choices=("train", "test"))
    p.add_argument("--mnistify-mode", default=None,
                   choices=("digits", "alphabetic", "rgb-natural"),
                   help="preprocess the dataset before inference")
    p.add_argument("--limit", type=int, default=None, help="export at most N examples")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mnistify", help="preprocess a dataset to 28x28 grayscale tensors")
    p.add_argument("--dataset", required=True, help="a saved tensor dataset .pt file")
    p.add_argument("--mode", required=True, choices=("digits", "alphabetic", "rgb-natural"))
    p.add_argument("--out", required=True, help="output .pt file of (images, labels)")

    return parser


def _load_dataset(name, root, split):
    from torch.utils.data import TensorDataset

    if name.endswith(".pt"):
        images, labels = torch.load(name)
        return TensorDataset(images, labels)
    import torchvision.datasets as tvd

    train = split == "train"
    from torchvision import transforms

    normalize = transforms.Compose(
        [transforms.ToTensor(), transforms.Normalize((0.5,), (0.5,))]
    )
    if name.lower() == "mnist":
        return tvd.MNIST(root, train=train, download=True, transform=normalize)
    if name.lower() == "cifar10":
        return tvd.CIFAR10(root, train=train, download=True, transform=normalize)
    raise ValueError(f"unknown dataset {name!r}")


def cmd_export(args):
    from torch.utils.data import Subset

    from sgexporter.export import ExportJob, export_predictions
    from sgexporter.mnistify import mnistify
    from sgexporter.models import load_model

    dataset = _load_dataset(args.dataset, args.root, args.split)
    if args.mnistify_mode:
        dataset = mnistify(dataset, args.mnistify_mode)
    if args.limit is not None:
        dataset = Subset(dataset, range(min(args.limit, len(dataset))))
    model = load_model(args.arch, weights_path=args.weights,
                       num_classes=args.k, device=args.device)
    job = ExportJob(
        architecture=args.arch,
        weights_path=args.weights,
        dataset_name=args.dataset,
        output_path=args.out,
        num_classes=args.k,
        batch_size=args.batch_size,
        device=args.device,
        seed=args.seed,
    )
    rows = export_predictions(job, model=model, dataset=dataset)
    print(f"wrote {rows} rows to {args.out}", file=sys.stderr)
    return 0


def cmd_mnistify(args):
    from sgexporter.mnistify import mnistify

    dataset = _load_dataset(args.dataset, None, "test")
    result = mnistify(dataset, args.mode)
    images = torch.stack([img for img, _ in result.items])
    labels = torch.tensor([label for _, label in result.items])
    torch.save((images, labels), args.out)
    print(f"kept {len(result)} examples ({result.skipped} skipped) -> {args.out}",
          file=sys.stderr)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            return cmd_export(args)
        return cmd_mnistify(args)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
