"""Deterministic synthetic scenes with known frame-relative ground truth.

The generator picks a tissue frame (origin + axis) directly, then places
cluster means so that their centroid and dominant PCA axis reproduce that
frame exactly. The whole tissue field moves by a smooth rigid motion over
time while the tool follows a chosen path expressed *inside* the moving
frame, so the frame-relative trajectory is known by construction and the
pipeline's output can be checked against it. Elasticity enters only as
per-point Gaussian jitter; a rigid field is what keeps the ground truth
exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .frames import Datapoint
from .tracks import LandmarkSample, TrackSet

TOOL_ARM_LENGTH = 60.0  # px between tool center and tip centroids
TOOL_PATHS = ("line", "arc", "cut_stroke")

# Zero-mean landmark offsets in the tool frame: centroids stay exactly on
# the generated pose while averaging down per-landmark noise.
_CENTER_OFFSETS = np.array([[0.0, 0.0], [0.0, 6.0], [0.0, -6.0]])
_TIP_OFFSETS = np.array([[0.0, 0.0], [0.0, 4.0], [0.0, -4.0]])

_AXIS_SPACING = 90.0    # px between consecutive cluster means along the axis
_MEMBER_SPREAD = 12.0   # px std of member offsets within a cluster


@dataclass(frozen=True)
class SceneConfig:
    frame_count: int = 156
    cluster_count: int = 4
    points_per_cluster: int = 8
    drift_amplitude: float = 40.0
    rotation_amplitude: float = 0.3
    noise_sigma: float = 1.0
    tool_path: str = "cut_stroke"
    seed: int = 0

    def __post_init__(self):
        if self.frame_count < 2:
            raise ConfigError("scene needs at least 2 frames")
        if self.cluster_count < 2:
            raise ConfigError("scene needs at least 2 tissue clusters")
        if self.points_per_cluster < 2:
            raise ConfigError("scene needs at least 2 points per cluster")
        if min(self.drift_amplitude, self.rotation_amplitude, self.noise_sigma) < 0:
            raise ConfigError("amplitudes must be non-negative")
        if self.tool_path not in TOOL_PATHS:
            raise ConfigError(f"tool_path must be one of {TOOL_PATHS}, got {self.tool_path!r}")


def _relative_tool_path(kind: str, ts: np.ndarray):
    """Frame-relative tool path (positions px, angles rad) over normalized time."""
    if kind == "line":
        pos = np.stack([-45.0 + 90.0 * ts, -15.0 + 30.0 * ts], axis=1)
        ang = -0.4 + 0.9 * ts
    elif kind == "arc":
        psi = -np.pi / 3.0 + (2.0 * np.pi / 3.0) * ts
        pos = 55.0 * np.stack([np.cos(psi), np.sin(psi)], axis=1)
        ang = psi + np.pi / 2.0  # tangent direction; runs past +pi on purpose
    else:  # cut_stroke
        pos = np.stack([
            -60.0 + 120.0 * ts + 8.0 * np.sin(2.0 * np.pi * ts),
            28.0 * np.sin(np.pi * ts) - 9.0 * np.sin(2.0 * np.pi * ts),
        ], axis=1)
        ang = -0.15 + 0.55 * np.sin(np.pi * ts) + 0.35 * np.sin(2.0 * np.pi * ts)
    return pos, ang


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def generate_scene(config: SceneConfig):
    """Build a (TrackSet, ground_truth) pair; identical for identical configs.

    Ground truth is the list of frame-relative Datapoints the pipeline
    should recover (exactly, when noise_sigma is zero).
    """
    rng = np.random.default_rng(config.seed)
    T, k, m = config.frame_count, config.cluster_count, config.points_per_cluster

    # Base tissue frame: origin c0, axis angle within +-0.9 rad so the
    # pipeline's canonical PCA sign (non-negative x) matches it at frame 1.
    alpha0 = float(rng.uniform(-0.9, 0.9))
    c0 = rng.uniform(200.0, 400.0, size=2)
    u0 = np.array([np.cos(alpha0), np.sin(alpha0)])
    v0 = np.array([-np.sin(alpha0), np.cos(alpha0)])

    # Cluster means: spread along u0 with zero-sum perpendicular offsets that
    # are uncorrelated with the axis coordinates, so the means' covariance
    # has eigenvectors exactly (u0, v0) with the axis dominant.
    a = _AXIS_SPACING * (np.arange(k) - (k - 1) / 2.0)
    b = rng.uniform(-25.0, 25.0, size=k)
    b = b - b.mean()
    b = b - (a @ b) / (a @ a) * a
    base_means = c0 + np.outer(a, u0) + np.outer(b, v0)

    drift_dir_angle = float(rng.uniform(0.0, 2.0 * np.pi))
    drift_dir = np.array([np.cos(drift_dir_angle), np.sin(drift_dir_angle)])

    # Member offsets are centered per cluster so the member centroid sits
    # exactly on the cluster mean; they ride rigidly with the field.
    offsets = []
    for _ in range(k):
        d = rng.normal(0.0, _MEMBER_SPREAD, size=(m, 2))
        offsets.append(d - d.mean(axis=0))

    ts = np.arange(T) / (T - 1)
    phi = config.rotation_amplitude * np.sin(np.pi * ts)
    tau = config.drift_amplitude * 0.5 * (1.0 - np.cos(np.pi * ts))
    rel_pos, rel_ang = _relative_tool_path(config.tool_path, ts)

    samples = []
    truth = []
    n_landmarks = k * m + len(_CENTER_OFFSETS) + len(_TIP_OFFSETS)
    for t in range(T):
        R_field = _rot(phi[t])
        shift = c0 + tau[t] * drift_dir
        noise = rng.normal(0.0, config.noise_sigma, size=(n_landmarks, 2))
        cursor = 0

        for ci in range(k):
            base = base_means[ci] + offsets[ci]           # (m, 2)
            moved = (base - c0) @ R_field.T + shift
            for j in range(m):
                samples.append(LandmarkSample(
                    frame_index=t + 1,
                    track_id=f"tis{ci:02d}p{j:02d}",
                    role="tissue",
                    position=moved[j] + noise[cursor],
                    cluster_label=f"c{ci:02d}",
                ))
                cursor += 1

        alpha_ref = alpha0 + phi[t]
        tool_center = _rot(alpha_ref) @ rel_pos[t] + shift
        tool_angle = alpha_ref + rel_ang[t]
        R_tool = _rot(tool_angle)
        tip = tool_center + TOOL_ARM_LENGTH * np.array([np.cos(tool_angle), np.sin(tool_angle)])
        for j, off in enumerate(_CENTER_OFFSETS):
            samples.append(LandmarkSample(
                frame_index=t + 1, track_id=f"tlc{j}", role="tool_center",
                position=tool_center + R_tool @ off + noise[cursor]))
            cursor += 1
        for j, off in enumerate(_TIP_OFFSETS):
            samples.append(LandmarkSample(
                frame_index=t + 1, track_id=f"tlt{j}", role="tool_tip",
                position=tip + R_tool @ off + noise[cursor]))
            cursor += 1

        truth.append(Datapoint(time=float(ts[t]), rel_position=rel_pos[t],
                               rel_angle=float(rel_ang[t])))

    return TrackSet.from_samples(samples), truth
