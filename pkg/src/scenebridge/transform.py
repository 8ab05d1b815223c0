"""X3D Transform fields and their split into two translation/rotation/scale nodes.

Matrices act on column vectors (``p' = M @ p``). Quaternions are stored as
``(w, x, y, z)`` and canonicalized to ``w >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShearNotRepresentable, X3DError

AXIS_TOLERANCE = 1e-6


def _vec3(v, name) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise X3DError("bad-field-value", f"{name} needs 3 components")
    return a


def normalize_axis_angle(rot) -> tuple[float, float, float, float]:
    x, y, z, angle = (float(c) for c in rot)
    n = np.sqrt(x * x + y * y + z * z)
    if n == 0.0:
        if angle != 0.0:
            raise X3DError("bad-rotation", "rotation with zero-length axis and nonzero angle")
        return (0.0, 0.0, 1.0, 0.0)
    return (x / n, y / n, z / n, angle)


def axis_angle_to_quat(rot) -> np.ndarray:
    x, y, z, angle = normalize_axis_angle(rot)
    s = np.sin(angle / 2.0)
    return canonical_quat(np.array([np.cos(angle / 2.0), x * s, y * s, z * s]))


def canonical_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0 else q


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def quat_to_axis_angle(q) -> tuple[float, float, float, float]:
    w, x, y, z = canonical_quat(q)
    s = np.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        return (0.0, 0.0, 1.0, 0.0)
    return (x / s, y / s, z / s, 2.0 * np.arccos(min(1.0, w)))


def translation_matrix(t) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = t
    return m


def linear_matrix(m3) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = m3
    return m


@dataclass(frozen=True)
class TransformParams:
    translation: tuple = (0.0, 0.0, 0.0)
    center: tuple = (0.0, 0.0, 0.0)
    rotation: tuple = (0.0, 0.0, 1.0, 0.0)
    scale: tuple = (1.0, 1.0, 1.0)
    scale_orientation: tuple = (0.0, 0.0, 1.0, 0.0)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "translation", tuple(_vec3(self.translation, "translation")))
        set_(self, "center", tuple(_vec3(self.center, "center")))
        set_(self, "scale", tuple(_vec3(self.scale, "scale")))
        if any(s == 0.0 for s in self.scale):
            raise X3DError("zero-scale", "scale components must be nonzero")
        set_(self, "rotation", normalize_axis_angle(self.rotation))
        set_(self, "scale_orientation", normalize_axis_angle(self.scale_orientation))

    @classmethod
    def from_node(cls, node) -> "TransformParams":
        f = node.field
        return cls(f("translation"), f("center"), f("rotation"), f("scale"), f("scaleOrientation"))


@dataclass(frozen=True)
class TrsNode:
    translation: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = (1.0, 0.0, 0.0, 0.0)
    scale: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        q = np.asarray(self.orientation, dtype=float)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9 or q[0] < 0:
            q = canonical_quat(q)
        object.__setattr__(self, "orientation", tuple(float(c) for c in q))
        object.__setattr__(self, "translation", tuple(float(c) for c in self.translation))
        object.__setattr__(self, "scale", tuple(float(c) for c in self.scale))

    def matrix(self) -> np.ndarray:
        """T @ R @ S"""
        m = linear_matrix(quat_to_matrix(self.orientation) * np.asarray(self.scale))
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True)
class TrsNodePair:
    outer: TrsNode
    inner: TrsNode

    def matrix(self) -> np.ndarray:
        return self.outer.matrix() @ self.inner.matrix()


def compose_matrix(p: TransformParams) -> np.ndarray:
    """Full X3D Transform matrix ``T C R SR S SR^-1 C^-1``."""
    sr = quat_to_matrix(axis_angle_to_quat(p.scale_orientation))
    r = quat_to_matrix(axis_angle_to_quat(p.rotation))
    c = np.asarray(p.center)
    return (
        translation_matrix(p.translation)
        @ translation_matrix(c)
        @ linear_matrix(r)
        @ linear_matrix(sr)
        @ linear_matrix(np.diag(p.scale))
        @ linear_matrix(sr.T)
        @ translation_matrix(-c)
    )


def is_axis_permutation(m3, tol=AXIS_TOLERANCE) -> bool:
    """True when every column is within ``tol`` of a signed unit basis vector."""
    m3 = np.abs(np.asarray(m3))
    for col in m3.T:
        k = int(np.argmax(col))
        rest = np.delete(col, k)
        if abs(col[k] - 1.0) > tol or (rest.size and rest.max() > tol):
            return False
    return True


def _is_uniform(scale) -> bool:
    s = np.asarray(scale)
    return bool(np.all(s == s[0]))


def decompose_transform(p: TransformParams, tol=AXIS_TOLERANCE) -> TrsNodePair:
    """Split a Transform into an outer node carrying translation+center and
    rotation, and an inner node carrying the (axis-permuted) scale.

    The permutation induced by a 90-degree-multiple scaleOrientation is baked
    into the inner scale, so the inner orientation is always identity.
    """
    sr = quat_to_matrix(axis_angle_to_quat(p.scale_orientation))
    if not _is_uniform(p.scale) and not is_axis_permutation(sr, tol):
        raise ShearNotRepresentable(
            f"scaleOrientation {p.scale_orientation} is not a multiple of 90 degrees "
            f"and scale {p.scale} is not uniform"
        )
    permuted = sr @ np.diag(p.scale) @ sr.T
    s_diag = np.diag(permuted).copy()
    c = np.asarray(p.center)
    outer = TrsNode(
        translation=np.asarray(p.translation) + c,
        orientation=axis_angle_to_quat(p.rotation),
    )
    inner = TrsNode(translation=-(s_diag * c), scale=s_diag)
    return TrsNodePair(outer, inner)


def signed_axis_rotations() -> list[np.ndarray]:
    """The 24 proper rotations mapping coordinate axes onto signed axes."""
    import itertools

    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            m = np.zeros((3, 3))
            for col, (row, sign) in enumerate(zip(perm, signs)):
                m[row, col] = sign
            if np.linalg.det(m) > 0:
                out.append(m)
    return out


def matrix_to_quat(m3) -> np.ndarray:
    m = np.asarray(m3, dtype=float)
    tr = np.trace(m)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    return canonical_quat(q)
