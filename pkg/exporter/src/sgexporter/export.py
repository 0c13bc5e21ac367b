"""Run a model over a dataset and emit the prediction-matrix CSV.

The output follows the softgate ingest schema exactly: a comment line
stamping the exporter version and job, then the mandatory header
``p_0,...,p_{K-1},true_label,predicted_label``, then one row per
example with post-normalization softmax outputs, the dataset label, and
the argmax prediction.
"""

import os
from dataclasses import dataclass, field

import numpy as np
import torch
from torch.utils.data import DataLoader

OUTPUT_KINDS = ("logits", "log-probs", "probs")


@dataclass
class ExportJob:
    """One export run: which model, which data, where the CSV goes."""

    architecture: str = "small-digit-cnn"
    weights_path: str | None = None
    dataset_name: str = ""
    output_path: str = ""
    num_classes: int = 10
    batch_size: int = 64
    device: str = "cpu"
    seed: int = 0
    output_kind: str | None = None  # None: take the model's word for it
    extra: dict = field(default_factory=dict)


def _to_probs(outputs, kind):
    if kind == "probs":
        return outputs
    if kind == "log-probs":
        return torch.exp(outputs)
    return torch.softmax(outputs, dim=1)


def export_predictions(job, model=None, dataset=None):
    """Export one row per dataset example; returns the row count.

    ``model`` and ``dataset`` default to loading from the job spec;
    passing them directly supports in-memory use. Aborts before writing
    anything if the model's output width does not match the job's class
    count, and removes partial output on any failure.
    """
    if model is None:
        from sgexporter.models import load_model

        model = load_model(
            job.architecture,
            weights_path=job.weights_path,
            num_classes=job.num_classes,
            device=job.device,
        )
    if dataset is None:
        raise ValueError(f"no dataset resolved for job {job.dataset_name!r}")
    if not job.output_path:
        raise ValueError("job has no output path")

    kind = job.output_kind or getattr(model, "output_kind", "logits")
    if kind not in OUTPUT_KINDS:
        raise ValueError(f"output_kind must be one of {OUTPUT_KINDS}")

    torch.manual_seed(job.seed)
    loader = DataLoader(dataset, batch_size=job.batch_size, shuffle=False)
    model.eval()

    tmp_path = job.output_path + ".partial"
    rows = 0
    header_written = False
    try:
        with torch.no_grad(), open(tmp_path, "w", encoding="utf-8", newline="") as f:
            for images, labels in loader:
                outputs = model(images.to(job.device))
                if outputs.shape[1] != job.num_classes:
                    raise ValueError(
                        f"model emits {outputs.shape[1]} classes, "
                        f"job expects {job.num_classes}"
                    )
                if not header_written:
                    f.write(
                        f"# softgate-exporter v0.1.0 arch={job.architecture} "
                        f"dataset={job.dataset_name} seed={job.seed} "
                        f"output_kind={kind}\n"
                    )
                    cols = [f"p_{i}" for i in range(job.num_classes)]
                    f.write(",".join(cols + ["true_label", "predicted_label"]) + "\n")
                    header_written = True
                probs = _to_probs(outputs, kind).cpu().numpy().astype(np.float64)
                probs = probs / probs.sum(axis=1, keepdims=True)
                preds = probs.argmax(axis=1)
                for p, t, y in zip(probs, labels.numpy(), preds):
                    f.write(
                        ",".join(repr(float(v)) for v in p)
                        + f",{int(t)},{int(y)}\n"
                    )
                    rows += 1
        os.replace(tmp_path, job.output_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return rows
