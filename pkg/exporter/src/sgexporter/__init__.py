"""Prediction exporter: run trained image classifiers over datasets and
emit their softmax outputs in the softgate prediction CSV schema, plus
the 28x28 grayscale preprocessing that lets an MNIST-shaped model probe
arbitrary image datasets."""

__version__ = "0.1.0"

from sgexporter.export import ExportJob, export_predictions
from sgexporter.mnistify import MnistifiedDataset, mnistify
from sgexporter.models import SmallDigitCnn, load_model

__all__ = [
    "ExportJob",
    "export_predictions",
    "MnistifiedDataset",
    "mnistify",
    "SmallDigitCnn",
    "load_model",
]
