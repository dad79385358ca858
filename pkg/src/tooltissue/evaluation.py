"""Train/test splitting, pose error metrics, and error-curve reports.

Positions are scored by Euclidean distance in pixels, orientation by the
absolute circular difference in degrees, matching how the pipeline's
outputs are meant to be read.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LengthMismatch, ValidationError
from .geometry import shortest_angle_diff
from .mixture import MixtureModel, gmr


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous head-train / tail-test split."""

    train_count: int
    test_count: int
    policy: str = "head_train_tail_test"

    def __post_init__(self):
        if self.policy != "head_train_tail_test":
            raise ValidationError(f"unknown split policy {self.policy!r}")
        if self.train_count < 1 or self.test_count < 1:
            raise ValidationError("both split parts need at least one frame")


@dataclass(frozen=True)
class FrameError:
    time: float
    position_error_px: float
    angle_error_deg: float
    split: str  # "train" | "test"


@dataclass(frozen=True)
class EvalReport:
    per_frame: tuple
    mean_train_pos_px: float
    mean_test_pos_px: float
    mean_train_angle_deg: float
    mean_test_angle_deg: float


def split(dataset, spec: SplitSpec):
    """Split datapoints into (train, test) per the head/tail policy."""
    data = list(dataset)
    if spec.train_count + spec.test_count != len(data):
        raise LengthMismatch(
            f"split {spec.train_count}/{spec.test_count} does not cover "
            f"{len(data)} datapoints")
    return data[: spec.train_count], data[spec.train_count:]


def position_error(pred, truth) -> float:
    """Euclidean distance in pixels."""
    return float(np.linalg.norm(np.asarray(pred, dtype=float) - np.asarray(truth, dtype=float)))


def angle_error(pred: float, truth: float) -> float:
    """Absolute circular angle difference in degrees, in [0, 180]."""
    return float(np.degrees(abs(shortest_angle_diff(truth, pred))))


def evaluate(model: MixtureModel, dataset, spec: SplitSpec) -> EvalReport:
    """Score predictions at every datapoint time, tagged train/test.

    The caller is responsible for having trained ``model`` on the train
    portion of the same split; this function only measures.
    """
    data = list(dataset)
    split(data, spec)  # validates the spec against the dataset length
    rows = []
    for i, d in enumerate(data):
        pred = gmr(model, d.time)
        rows.append(FrameError(
            time=d.time,
            position_error_px=position_error(pred.position_mean, d.rel_position),
            angle_error_deg=angle_error(pred.angle, d.rel_angle),
            split="train" if i < spec.train_count else "test",
        ))
    rows.sort(key=lambda r: r.time)

    def _mean(tag, attr):
        vals = [getattr(r, attr) for r in rows if r.split == tag]
        return float(np.mean(vals))

    return EvalReport(
        per_frame=tuple(rows),
        mean_train_pos_px=_mean("train", "position_error_px"),
        mean_test_pos_px=_mean("test", "position_error_px"),
        mean_train_angle_deg=_mean("train", "angle_error_deg"),
        mean_test_angle_deg=_mean("test", "angle_error_deg"),
    )


def write_report_csv(report: EvalReport, path) -> None:
    """Plot-ready error curves plus a human-readable aggregate block."""
    lines = ["time,split,position_error_px,angle_error_deg"]
    for r in report.per_frame:
        lines.append(f"{r.time!r},{r.split},{r.position_error_px!r},{r.angle_error_deg!r}")
    lines.append(f"# mean_train_position_error_px={report.mean_train_pos_px!r}")
    lines.append(f"# mean_test_position_error_px={report.mean_test_pos_px!r}")
    lines.append(f"# mean_train_angle_error_deg={report.mean_train_angle_deg!r}")
    lines.append(f"# mean_test_angle_error_deg={report.mean_test_angle_deg!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_json(report: EvalReport, path) -> None:
    """Machine-readable aggregate means."""
    payload = {
        "mean_train_position_error_px": report.mean_train_pos_px,
        "mean_test_position_error_px": report.mean_test_pos_px,
        "mean_train_angle_error_deg": report.mean_train_angle_deg,
        "mean_test_angle_error_deg": report.mean_test_angle_deg,
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
