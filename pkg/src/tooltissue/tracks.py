"""Keypoint track file I/O, tool poses, and trained-model files.

Track CSV format
----------------
Header ``frame,track_id,role,cluster_label,x,y,visible`` with
``role`` one of tool_center / tool_tip / tissue, ``cluster_label`` empty
for tool roles, ``visible`` 0 or 1, rows sorted by frame then track_id,
UTF-8, ``#`` comment lines ignored.

Model files are JSON text with exactly the documented keys; floats are
written with Python's shortest round-trip repr, so read(write(m)) is exact.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInput,
    FormatError,
    MissingToolLandmarks,
    ValidationError,
    VersionMismatch,
)
from .geometry import Pose2, Rotation2
from .mixture import DIMS, MixtureModel

ROLES = ("tool_center", "tool_tip", "tissue")
TRACK_HEADER = ("frame", "track_id", "role", "cluster_label", "x", "y", "visible")
MODEL_FORMAT_VERSION = 1
_MODEL_KEYS = (
    "format_version",
    "dimension",
    "component_count",
    "priors",
    "means",
    "covariances",
    "time_normalization",
    "frame_provenance",
)


@dataclass(frozen=True)
class LandmarkSample:
    """One tracked 2D landmark in one frame."""

    frame_index: int
    track_id: str
    role: str
    position: np.ndarray
    visible: bool = True
    cluster_label: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}")
        if self.frame_index < 1:
            raise ValidationError(f"frame index must be >= 1, got {self.frame_index}")
        if self.role != "tissue" and self.cluster_label is not None:
            raise ValidationError(
                f"track {self.track_id!r}: tool landmarks cannot carry a cluster label")
        p = np.array(self.position, dtype=float).reshape(2).copy()
        if not np.all(np.isfinite(p)):
            raise ValidationError(f"track {self.track_id!r}: non-finite position")
        p.setflags(write=False)
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class TrackSet:
    """All landmarks of a sequence, grouped by frame index (1..T)."""

    frames: dict
    frame_count: int

    @classmethod
    def from_samples(cls, samples) -> "TrackSet":
        if not samples:
            raise EmptyInput("no landmark samples")
        frames: dict[int, list[LandmarkSample]] = {}
        roles: dict[str, str] = {}
        for s in samples:
            frames.setdefault(s.frame_index, []).append(s)
            prev_role = roles.setdefault(s.track_id, s.role)
            if prev_role != s.role:
                raise ValidationError(
                    f"track {s.track_id!r} changes role from {prev_role} to {s.role}")
        T = max(frames)
        for t in range(1, T + 1):
            frame = frames.get(t, [])
            seen_ids = set()
            for s in frame:
                if s.track_id in seen_ids:
                    raise ValidationError(
                        f"frame {t}: duplicate track id {s.track_id!r}")
                seen_ids.add(s.track_id)
            visible = [s for s in frame if s.visible]
            if not any(s.role == "tool_center" for s in visible):
                raise ValidationError(f"frame {t}: no visible tool_center landmark")
            if not any(s.role == "tool_tip" for s in visible):
                raise ValidationError(f"frame {t}: no visible tool_tip landmark")
            if sum(s.role == "tissue" for s in visible) < 2:
                raise ValidationError(f"frame {t}: fewer than 2 visible tissue landmarks")
        return cls(frames=frames, frame_count=T)

    def frame(self, index: int) -> list:
        return self.frames[index]

    def visible_tissue(self, index: int) -> list:
        return [s for s in self.frames[index] if s.visible and s.role == "tissue"]

    def all_samples(self):
        for t in range(1, self.frame_count + 1):
            yield from self.frames[t]


def _parse_row(line_no: int, row: list) -> LandmarkSample:
    if len(row) != len(TRACK_HEADER):
        raise FormatError(f"line {line_no}: expected {len(TRACK_HEADER)} fields, got {len(row)}")
    frame_s, track_id, role, label, x_s, y_s, vis_s = (f.strip() for f in row)
    try:
        frame = int(frame_s)
    except ValueError:
        raise FormatError(f"line {line_no}: non-integer frame {frame_s!r}") from None
    if role not in ROLES:
        raise FormatError(f"line {line_no}: bad role {role!r}")
    try:
        x, y = float(x_s), float(y_s)
    except ValueError:
        raise FormatError(f"line {line_no}: non-numeric coordinate") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise FormatError(f"line {line_no}: non-finite coordinate")
    if vis_s not in ("0", "1"):
        raise FormatError(f"line {line_no}: visible must be 0 or 1, got {vis_s!r}")
    if role != "tissue" and label:
        raise FormatError(f"line {line_no}: tool landmark carries cluster label {label!r}")
    if frame < 1:
        raise FormatError(f"line {line_no}: frame index must be >= 1")
    return LandmarkSample(
        frame_index=frame,
        track_id=track_id,
        role=role,
        position=(x, y),
        visible=vis_s == "1",
        cluster_label=label or None,
    )


def parse_tracks(source) -> TrackSet:
    """Parse a track CSV from a path or text stream into a validated TrackSet."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")

    samples = []
    header_seen = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if tuple(f.strip() for f in line.split(",")) != TRACK_HEADER:
                raise FormatError(
                    f"line {line_no}: expected header {','.join(TRACK_HEADER)!r}")
            header_seen = True
            continue
        samples.append(_parse_row(line_no, line.split(",")))
    if not samples:
        raise EmptyInput("track file contains no data rows")
    return TrackSet.from_samples(samples)


def write_tracks(tracks: TrackSet, path) -> None:
    """Serialize a TrackSet to the track CSV format (sorted, full precision)."""
    lines = [",".join(TRACK_HEADER)]
    ordered = sorted(tracks.all_samples(), key=lambda s: (s.frame_index, s.track_id))
    for s in ordered:
        lines.append(",".join((
            str(s.frame_index),
            s.track_id,
            s.role,
            s.cluster_label or "",
            repr(float(s.position[0])),
            repr(float(s.position[1])),
            "1" if s.visible else "0",
        )))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def tool_pose(frame) -> Pose2:
    """Tool pose from one frame's landmarks.

    Position is the centroid of the visible tool_center samples; the
    orientation points from that centroid toward the visible tool_tip
    centroid.
    """
    centers = np.array([s.position for s in frame if s.visible and s.role == "tool_center"])
    tips = np.array([s.position for s in frame if s.visible and s.role == "tool_tip"])
    if len(centers) == 0 or len(tips) == 0:
        missing = "tool_center" if len(centers) == 0 else "tool_tip"
        raise MissingToolLandmarks(f"no visible {missing} landmark in frame")
    center = centers.mean(axis=0)
    tip = tips.mean(axis=0)
    d = tip - center
    return Pose2(position=center, orientation=Rotation2(float(np.arctan2(d[1], d[0]))))


# --------------------------------------------------------------------------
# Model files
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelFile:
    """On-disk representation of a trained mixture plus provenance."""

    component_count: int
    priors: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    frame_count: int
    frame_provenance: dict = field(default_factory=dict)
    format_version: int = MODEL_FORMAT_VERSION
    dimension: int = DIMS

    def __post_init__(self):
        p = np.array(self.priors, dtype=float).reshape(-1)
        m = np.array(self.means, dtype=float)
        c = np.array(self.covariances, dtype=float)
        for arr in (p, m, c):
            arr.setflags(write=False)
        object.__setattr__(self, "priors", p)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covariances", c)
        self._validate()

    def _validate(self):
        if self.dimension != DIMS:
            raise ValidationError(f"model dimension must be {DIMS}, got {self.dimension}")
        n = self.component_count
        if self.priors.shape != (n,):
            raise ValidationError(f"expected {n} priors, got shape {self.priors.shape}")
        if self.means.shape != (n, DIMS):
            raise ValidationError(f"means must be {n}x{DIMS}, got {self.means.shape}")
        if self.covariances.shape != (n, DIMS, DIMS):
            raise ValidationError(
                f"covariances must be {n}x{DIMS}x{DIMS}, got {self.covariances.shape}")
        if abs(float(self.priors.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"priors sum to {float(self.priors.sum())!r}, not 1")
        asym = np.max(np.abs(self.covariances - np.transpose(self.covariances, (0, 2, 1))))
        if asym > 1e-9:
            raise ValidationError(f"covariance asymmetry {asym:g} exceeds 1e-9")
        if float(np.min(np.linalg.eigvalsh(self.covariances))) < -1e-9:
            raise ValidationError("covariance has a negative eigenvalue")
        if self.frame_count < 2:
            raise ValidationError("frame_count must be >= 2")

    @classmethod
    def from_mixture(cls, model: MixtureModel, frame_count: int,
                     provenance: dict | None = None) -> "ModelFile":
        return cls(
            component_count=model.n_components,
            priors=model.priors,
            means=model.means,
            covariances=model.covariances,
            frame_count=frame_count,
            frame_provenance=dict(provenance or {}),
        )

    def to_mixture(self) -> MixtureModel:
        return MixtureModel(self.priors, self.means, self.covariances)


def write_model(model: ModelFile, path) -> None:
    payload = {
        "format_version": model.format_version,
        "dimension": model.dimension,
        "component_count": model.component_count,
        "priors": model.priors.tolist(),
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
        "time_normalization": {"frame_count": model.frame_count},
        "frame_provenance": model.frame_provenance,
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def read_model(path) -> ModelFile:
    if hasattr(path, "read"):
        text = path.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"model file is not valid JSON: {e}") from None
    if not isinstance(payload, dict):
        raise FormatError("model file must hold a JSON object")
    unknown = set(payload) - set(_MODEL_KEYS)
    if unknown:
        raise FormatError(f"unknown model file keys: {sorted(unknown)}")
    missing = set(_MODEL_KEYS) - set(payload)
    if missing:
        raise FormatError(f"missing model file keys: {sorted(missing)}")
    version = payload["format_version"]
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"unsupported model format_version {version!r}")
    norm = payload["time_normalization"]
    if not isinstance(norm, dict) or set(norm) != {"frame_count"}:
        raise FormatError("time_normalization must be an object with frame_count")
    try:
        return ModelFile(
            component_count=int(payload["component_count"]),
            priors=payload["priors"],
            means=payload["means"],
            covariances=payload["covariances"],
            frame_count=int(norm["frame_count"]),
            frame_provenance=payload["frame_provenance"],
            dimension=int(payload["dimension"]),
        )
    except (TypeError, ValueError) as e:
        raise FormatError(f"malformed model field: {e}") from None


def loads_tracks(text: str) -> TrackSet:
    """Parse a track CSV held in a string (convenience for tests)."""
    return parse_tracks(io.StringIO(text))
