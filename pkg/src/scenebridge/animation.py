"""Mapping of X3D time sensors and interpolators onto OGRE controllers and tracks."""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import X3DError, warning
from .transform import axis_angle_to_quat
from .x3d import INTERPOLATORS, NodeKind, SceneDocument


class ControllerKind(str, Enum):
    ACCUMULATE = "AccumulateController"
    LINEAR = "LinearController"
    VERTEX_TRACK = "VertexAnimationTrack"
    NODE_TRACK = "NodeAnimationTrack"


TRACK_KIND = {
    NodeKind.ScalarInterpolator: ControllerKind.LINEAR,
    NodeKind.CoordinateInterpolator: ControllerKind.VERTEX_TRACK,
    NodeKind.PositionInterpolator: ControllerKind.NODE_TRACK,
    NodeKind.OrientationInterpolator: ControllerKind.NODE_TRACK,
}

# target field implied by nesting an interpolator USE under its target
_IMPLIED_FIELD = {
    NodeKind.PositionInterpolator: "set_translation",
    NodeKind.OrientationInterpolator: "set_rotation",
    NodeKind.CoordinateInterpolator: "set_point",
}


@dataclass(frozen=True)
class ControllerSpec:
    kind: ControllerKind
    name: str
    target_node: str | None = None
    target_field: str | None = None
    controller: str | None = None
    cycle_interval: float | None = None
    loop: bool | None = None
    key: tuple[float, ...] = ()
    key_value: tuple[float, ...] = ()
    arity: int = 0

    def values(self) -> list:
        """keyValue regrouped into one entry per key."""
        if self.arity == 1:
            return list(self.key_value)
        a = self.arity
        return [tuple(self.key_value[i:i + a]) for i in range(0, len(self.key_value), a)]


def _check_keys(name, key, n_values, per_key_multiple=False):
    if any(b < a for a, b in zip(key, key[1:])):
        raise X3DError("bad-keys", f"{name}: key list must be nondecreasing")
    ok = (n_values % len(key) == 0) if (per_key_multiple and key) else n_values == len(key)
    if not ok:
        raise X3DError("bad-keys", f"{name}: {n_values} keyValue entries for {len(key)} keys")


def map_animation(doc: SceneDocument, diagnostics: list | None = None) -> list[ControllerSpec]:
    """Expects ROUTEs already rewritten into nested USE references."""
    diags = diagnostics if diagnostics is not None else []
    specs: list[ControllerSpec] = []
    nodes = list(doc.nodes())
    for i, n in enumerate(nodes):
        if n.kind is NodeKind.TimeSensor and n.use_name is None:
            name = n.def_name or f"TimeSensor#{i}"
            specs.append(ControllerSpec(
                ControllerKind.ACCUMULATE, name,
                target_node=n.def_name, target_field="fraction_changed",
                cycle_interval=n.field("cycleInterval"), loop=n.field("loop"),
            ))

    # interpolator DEF -> [(parent DEF, field)]
    targets: dict[str, list[tuple[str | None, str | None]]] = {}
    for parent in nodes:
        for c in parent.children:
            if c.use_name is not None and c.kind in INTERPOLATORS:
                fld = c.container_field or _IMPLIED_FIELD.get(c.kind)
                targets.setdefault(c.use_name, []).append((parent.def_name, fld))

    for i, n in enumerate(nodes):
        if n.kind not in INTERPOLATORS or n.use_name is not None:
            continue
        name = n.def_name or f"{n.tag}#{i}"
        clock = n.child(NodeKind.TimeSensor)
        if clock is None:
            diags.append(warning("interpolator-unclocked", f"{name} has no nested TimeSensor; skipped",
                                 n.line, n.column))
            continue
        key = n.field("key")
        raw_values = n.field("keyValue")
        _check_keys(name, key, len(raw_values), n.kind is NodeKind.CoordinateInterpolator)
        if n.kind is NodeKind.OrientationInterpolator:
            flat = tuple(float(c) for rot in raw_values for c in axis_angle_to_quat(rot))
            arity = 4
        elif n.kind is NodeKind.ScalarInterpolator:
            flat, arity = tuple(raw_values), 1
        else:
            flat = tuple(c for v in raw_values for c in v)
            arity = 3 * (len(raw_values) // len(key)) if key else 3
        controller = clock.use_name or clock.def_name
        for tgt, fld in targets.get(n.def_name, [(None, None)]):
            specs.append(ControllerSpec(
                TRACK_KIND[n.kind], name, target_node=tgt, target_field=fld,
                controller=controller, key=tuple(key), key_value=flat, arity=arity,
            ))
    return specs


# -- sampling ----------------------------------------------------------------

def _slerp(q0, q1, t):
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1, d = -q1, -d
    if d > 0.9995:
        q = q0 + t * (q1 - q0)
        return tuple(q / np.linalg.norm(q))
    theta = np.arccos(d)
    s = np.sin(theta)
    return tuple((np.sin((1 - t) * theta) * q0 + np.sin(t * theta) * q1) / s)


def evaluate_interpolator(key, key_value, fraction: float):
    """Piecewise-linear sample of a keyframe track; 4-component values are
    quaternions ``(w, x, y, z)`` and are interpolated spherically.

    Exact at key points; clamps outside the key range.
    """
    key = list(key)
    if not key:
        raise ValueError("empty key list")
    if len(key_value) != len(key):
        raise ValueError("key and keyValue lengths differ")
    if fraction <= key[0]:
        return key_value[0]
    if fraction >= key[-1]:
        return key_value[-1]
    i = bisect_right(key, fraction) - 1
    if fraction == key[i]:
        return key_value[i]
    k0, k1 = key[i], key[i + 1]
    t = (fraction - k0) / (k1 - k0)
    v0, v1 = key_value[i], key_value[i + 1]
    if np.ndim(v0) == 0:
        return v0 + t * (v1 - v0)
    if len(v0) == 4:
        return _slerp(v0, v1, t)
    return tuple(a + t * (b - a) for a, b in zip(v0, v1))
