"""Dynamic tissue reference frames and frame-relative training datapoints.

Per frame: tissue landmarks are clustered (expert labels or seeded
k-means), each cluster gets a Gaussian summary, the cluster means define a
local frame (their centroid plus dominant PCA axis), and the tool pose is
re-expressed in that frame. Threading the previous frame's axis through
the PCA keeps the frame from flipping 180 degrees between frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import lloyd
from .errors import (
    ConfigError,
    EmptyCluster,
    EmptyClusterError,
    InsufficientClusters,
    MissingLabels,
    TooFewPoints,
    UnwrapError,
    ValidationError,
)
from .geometry import (
    Pose2,
    Rotation2,
    Transform2,
    apply_inverse,
    pca_rotation,
    relative_angle,
    shortest_angle_diff,
)
from .tracks import TrackSet, tool_pose

CLUSTER_MODES = ("labeled", "kmeans")
DEFAULT_REG_EPSILON = 1e-6


@dataclass(frozen=True)
class ClusterSpec:
    """How to partition tissue landmarks into k clusters."""

    mode: str = "labeled"
    k: int = 0          # kmeans mode only; labeled mode infers k from labels
    seed: int = 0

    def __post_init__(self):
        if self.mode not in CLUSTER_MODES:
            raise ConfigError(f"cluster mode must be one of {CLUSTER_MODES}, got {self.mode!r}")
        if self.mode == "kmeans" and self.k < 1:
            raise ConfigError("kmeans clustering needs k >= 1")


@dataclass(frozen=True)
class ClusterStat:
    """Gaussian summary of one tissue cluster."""

    mean: np.ndarray
    covariance: np.ndarray
    member_count: int

    def __post_init__(self):
        m = np.array(self.mean, dtype=float).reshape(2)
        c = np.array(self.covariance, dtype=float).reshape(2, 2)
        m.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance", c)


@dataclass(frozen=True)
class ReferenceFrame:
    """Per-frame tissue frame: SE(2) transform plus the cluster stats behind it."""

    transform: Transform2
    timestamp: int
    cluster_stats: tuple


@dataclass(frozen=True)
class Datapoint:
    """One training sample: normalized time, frame-relative pose.

    ``rel_angle`` is the unwrapped relative orientation, so consecutive
    datapoints differ by less than pi and the value may leave (-pi, pi].
    """

    time: float
    rel_position: np.ndarray
    rel_angle: float

    def __post_init__(self):
        p = np.array(self.rel_position, dtype=float).reshape(2).copy()
        p.setflags(write=False)
        object.__setattr__(self, "rel_position", p)


def domain_cluster(tissue_points, spec: ClusterSpec) -> list:
    """Partition tissue landmarks into clusters of LandmarkSamples.

    Labeled mode groups by cluster_label with lexicographic cluster order.
    K-means mode runs Lloyd's algorithm from a seeded k-means++ start and
    orders clusters by ascending mean x (ties by mean y); a final empty
    cluster triggers one re-seed before giving up.
    """
    points = list(tissue_points)
    if spec.mode == "labeled":
        groups: dict[str, list] = {}
        for s in points:
            if s.cluster_label is None:
                raise MissingLabels(f"tissue track {s.track_id!r} has no cluster label")
            groups.setdefault(s.cluster_label, []).append(s)
        return [groups[label] for label in sorted(groups)]

    if len(points) < spec.k:
        raise TooFewPoints(f"{len(points)} tissue points cannot form {spec.k} clusters")
    xy = np.array([s.position for s in points])
    for attempt in range(2):
        rng = np.random.default_rng(spec.seed + attempt)
        _, labels, _ = lloyd(xy, spec.k, rng, max_iters=100, on_empty="keep")
        counts = np.bincount(labels, minlength=spec.k)
        if np.all(counts > 0):
            break
    else:
        raise EmptyClusterError("k-means left an empty cluster even after re-seeding")
    clusters = [[points[i] for i in np.flatnonzero(labels == c)] for c in range(spec.k)]
    keys = []
    for c, members in enumerate(clusters):
        mean = xy[labels == c].mean(axis=0)
        keys.append((float(mean[0]), float(mean[1]), c))
    return [clusters[c] for _, _, c in sorted(keys)]


def cluster_gaussian(cluster, reg_epsilon: float = DEFAULT_REG_EPSILON) -> ClusterStat:
    """Mean and population covariance of a cluster of 2D points.

    The covariance is floored by adding reg_epsilon * I whenever its
    smallest eigenvalue falls below reg_epsilon, so single-point and
    collinear clusters still yield a usable Gaussian.
    """
    pts = np.array([getattr(p, "position", p) for p in cluster], dtype=float)
    if pts.size == 0:
        raise EmptyCluster("cannot summarize an empty cluster")
    pts = pts.reshape(-1, 2)
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    if float(np.linalg.eigvalsh(cov)[0]) < reg_epsilon:
        cov = cov + reg_epsilon * np.eye(2)
    return ClusterStat(mean=mean, covariance=cov, member_count=len(pts))


def build_reference_frame(stats, prev: ReferenceFrame | None = None,
                          timestamp: int = 0) -> ReferenceFrame:
    """Tissue frame from cluster statistics: centroid of means + PCA axis.

    Only the means feed the frame; covariances ride along as diagnostics.
    The previous frame's first axis (when given) pins the PCA sign.
    """
    stats = list(stats)
    if len(stats) < 2:
        raise InsufficientClusters(
            f"reference frame needs >= 2 cluster means, got {len(stats)}")
    means = np.array([s.mean for s in stats])
    prev_axis = prev.transform.rotation.first_axis if prev is not None else None
    rotation = pca_rotation(means, prev_axis)
    return ReferenceFrame(
        transform=Transform2(rotation, means.mean(axis=0)),
        timestamp=timestamp,
        cluster_stats=tuple(stats),
    )


def compute_reference_frames(tracks: TrackSet, spec: ClusterSpec,
                             reg_epsilon: float = DEFAULT_REG_EPSILON) -> list:
    """Reference frame for every frame 1..T, threading axis continuity."""
    out = []
    prev = None
    for t in range(1, tracks.frame_count + 1):
        tissue = tracks.visible_tissue(t)
        k = spec.k if spec.mode == "kmeans" else len({s.cluster_label for s in tissue})
        if len(tissue) < 2 * k:
            raise ValidationError(
                f"frame {t}: {len(tissue)} visible tissue points cannot support "
                f"{k} clusters (need at least {2 * k})")
        clusters = domain_cluster(tissue, spec)
        stats = [cluster_gaussian(c, reg_epsilon) for c in clusters]
        prev = build_reference_frame(stats, prev, timestamp=t)
        out.append(prev)
    return out


def assemble_datapoints(tracks: TrackSet, spec: ClusterSpec,
                        reg_epsilon: float = DEFAULT_REG_EPSILON) -> list:
    """Frame-relative training datapoints for every frame of a TrackSet.

    For each frame the tool pose is expressed in that frame's tissue frame;
    relative angles are then unwrapped sequentially and time is normalized
    to [0, 1] as (frame - 1) / (T - 1).
    """
    T = tracks.frame_count
    if T < 2:
        raise ValidationError("datapoint assembly needs at least 2 frames")
    frames = compute_reference_frames(tracks, spec, reg_epsilon)

    raw_angles = []
    rel_positions = []
    for ref in frames:
        pose = tool_pose(tracks.frame(ref.timestamp))
        rel_positions.append(apply_inverse(ref.transform, pose.position))
        raw_angles.append(relative_angle(ref.transform.rotation, pose.orientation))

    unwrapped = [raw_angles[0]]
    for t in range(1, T):
        step = shortest_angle_diff(raw_angles[t - 1], raw_angles[t])
        if abs(step) >= np.pi:
            raise UnwrapError(
                f"relative angle jumps by {step:+.4f} rad between frames {t} and {t + 1}")
        unwrapped.append(unwrapped[-1] + step)

    return [
        Datapoint(time=t / (T - 1), rel_position=rel_positions[t], rel_angle=unwrapped[t])
        for t in range(T)
    ]
