"""Planar rigid-body math: rotations, homogeneous transforms, PCA-derived
orientation, and shortest-arc angle interpolation.

Angles are radians in (-pi, pi] unless stated otherwise; positions are
pixels. Every type here is an immutable value and every function is pure,
so everything is safe to share across threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, DomainError, InsufficientPoints

TWO_PI = 2.0 * np.pi


class IsotropicCovarianceWarning(UserWarning):
    """The principal axis was ambiguous (equal covariance eigenvalues)."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi].

    Note the half-open interval: -pi maps to +pi, so antipodal angles have
    a single canonical representation.
    """
    return float(np.pi - (np.pi - theta) % TWO_PI)


def shortest_angle_diff(a: float, b: float) -> float:
    """Signed shortest angular step from ``a`` to ``b``, in (-pi, pi]."""
    return wrap_angle(b - a)


def _canonical_sign(axis: np.ndarray) -> np.ndarray:
    # Deterministic sign for an eigenvector: non-negative x, ties toward
    # non-negative y.
    if axis[0] < 0.0 or (axis[0] == 0.0 and axis[1] < 0.0):
        return -axis
    return axis


@dataclass(frozen=True)
class Rotation2:
    """Planar rotation stored as a single angle in (-pi, pi]."""

    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", wrap_angle(float(self.angle)))

    @property
    def matrix(self) -> np.ndarray:
        """2x2 rotation matrix (orthonormal, det +1)."""
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    @property
    def first_axis(self) -> np.ndarray:
        """Unit vector the rotation maps (1, 0) onto."""
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    def compose(self, other: "Rotation2") -> "Rotation2":
        return Rotation2(self.angle + other.angle)

    def inverse(self) -> "Rotation2":
        return Rotation2(-self.angle)

    def apply(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            return self.matrix @ p
        return p @ self.matrix.T


@dataclass(frozen=True)
class Transform2:
    """SE(2) transform: rotate then translate, in pixels."""

    rotation: Rotation2
    translation: np.ndarray

    def __post_init__(self):
        t = np.array(self.translation, dtype=float).reshape(2).copy()
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Transform2":
        return Transform2(Rotation2(0.0), np.zeros(2))

    @property
    def matrix(self) -> np.ndarray:
        """Homogeneous 3x3 form; bottom row is exactly [0, 0, 1]."""
        m = np.eye(3)
        m[:2, :2] = self.rotation.matrix
        m[:2, 2] = self.translation
        return m

    def apply(self, p) -> np.ndarray:
        """Map local coordinates into the world: R p + c."""
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            return self.rotation.matrix @ p + self.translation
        return p @ self.rotation.matrix.T + self.translation

    def inverse(self) -> "Transform2":
        rinv = self.rotation.inverse()
        return Transform2(rinv, -rinv.apply(self.translation))


@dataclass(frozen=True)
class Pose2:
    """2D position (pixels) plus planar orientation."""

    position: np.ndarray
    orientation: Rotation2

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(2).copy()
        p.setflags(write=False)
        object.__setattr__(self, "position", p)


def apply_inverse(transform: Transform2, p) -> np.ndarray:
    """Map a world point into the transform's local frame: R^T (p - c)."""
    p = np.asarray(p, dtype=float)
    rt = transform.rotation.matrix.T
    if p.ndim == 1:
        return rt @ (p - transform.translation)
    return (p - transform.translation) @ rt.T


def pca_rotation(points, prev_axis=None) -> Rotation2:
    """Rotation whose first axis is the dominant principal axis of ``points``.

    The axis is the unit eigenvector of the points' population (1/n)
    covariance with the largest eigenvalue. Eigenvectors carry an inherent
    sign ambiguity; the sign is fixed by continuity with ``prev_axis``
    (dot >= 0) when one is given, otherwise by the canonical rule
    (non-negative x, ties toward non-negative y). The second axis is the
    first rotated +90 degrees, so the determinant is always +1.

    Raises InsufficientPoints for fewer than two points and
    DegenerateConfiguration when all points coincide within 1e-12. An
    isotropic covariance (equal eigenvalues) leaves the axis arbitrary: the
    previous axis (or (1, 0)) is kept and IsotropicCovarianceWarning is
    emitted.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError(f"expected an (n, 2) point array, got shape {pts.shape}")
    n = pts.shape[0]
    if n < 2:
        raise InsufficientPoints(f"principal axis needs at least 2 points, got {n}")
    centered = pts - pts.mean(axis=0)
    if np.max(np.abs(centered)) <= 1e-12:
        raise DegenerateConfiguration("all points identical within 1e-12")
    cov = centered.T @ centered / n

    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[1] - eigvals[0] <= 1e-12 * max(eigvals[1], 1.0):
        warnings.warn(
            "isotropic covariance: principal axis is arbitrary",
            IsotropicCovarianceWarning,
            stacklevel=2,
        )
        if prev_axis is not None:
            axis = np.asarray(prev_axis, dtype=float)
            axis = axis / np.linalg.norm(axis)
        else:
            axis = np.array([1.0, 0.0])
    else:
        axis = eigvecs[:, 1]
        if prev_axis is not None:
            d = float(np.dot(axis, np.asarray(prev_axis, dtype=float)))
            if d < 0.0:
                axis = -axis
            elif d == 0.0:
                axis = _canonical_sign(axis)
        else:
            axis = _canonical_sign(axis)

    return Rotation2(float(np.arctan2(axis[1], axis[0])))


def relative_angle(ref: Rotation2, q: Rotation2) -> float:
    """Angle of ``q`` expressed in the ``ref`` frame, wrapped to (-pi, pi]."""
    return wrap_angle(q.angle - ref.angle)


def slerp_angle(a: float, b: float, s: float) -> float:
    """Shortest-arc interpolation between two angles (planar SLERP).

    Moves from ``a`` toward ``b`` along the shorter of the two circular
    arcs: returns a + s * delta wrapped to (-pi, pi], where delta is the
    shortest signed difference. ``s`` must lie in [0, 1].
    """
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"interpolation parameter must be in [0, 1], got {s}")
    return wrap_angle(a + s * shortest_angle_diff(a, b))
