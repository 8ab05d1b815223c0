"""X3D XML attribute grammar: field type table and value parsers."""
from __future__ import annotations

import re
import shlex

from .errors import X3DError

_SEP = re.compile(r"[\s,]+")


def parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in _SEP.split(text.strip()) if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise X3DError("bad-field-value", f"not a number list: {text[:40]!r}") from None


def parse_ints(text: str) -> tuple[int, ...]:
    parts = [p for p in _SEP.split(text.strip()) if p]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise X3DError("bad-field-value", f"not an integer list: {text[:40]!r}") from None


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1"):
        return True
    if t in ("false", "0"):
        return False
    raise X3DError("bad-field-value", f"not a boolean: {text!r}")


def parse_mfstring(text: str) -> tuple[str, ...]:
    """MFString as written in XML: quoted items, bare words also accepted."""
    try:
        return tuple(shlex.split(text))
    except ValueError:
        return tuple(text.split())


def format_mfstring(items) -> str:
    return " ".join('"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"' for s in items)


def _grouped(n):
    def parse(text):
        vals = parse_floats(text)
        if len(vals) % n:
            raise X3DError("bad-field-value", f"expected a multiple of {n} values, got {len(vals)}")
        return tuple(vals[i:i + n] for i in range(0, len(vals), n))
    return parse


def _fixed(n):
    def parse(text):
        vals = parse_floats(text)
        if len(vals) != n:
            raise X3DError("bad-field-value", f"expected {n} values, got {len(vals)}")
        return vals
    return parse


def _single_int(text):
    vals = parse_ints(text)
    if len(vals) != 1:
        raise X3DError("bad-field-value", f"expected one integer, got {len(vals)}")
    return vals[0]


def _single_float(text):
    return _fixed(1)(text)[0]


PARSERS = {
    "SFFloat": _single_float,
    "SFTime": _single_float,
    "SFBool": parse_bool,
    "SFString": lambda t: t,
    "SFInt32": _single_int,
    "SFVec3f": _fixed(3),
    "SFColor": _fixed(3),
    "SFRotation": _fixed(4),
    "MFFloat": parse_floats,
    "MFInt32": parse_ints,
    "MFVec2f": _grouped(2),
    "MFVec3f": _grouped(3),
    "MFRotation": _grouped(4),
    "MFString": parse_mfstring,
}

_IDENTITY_ROT = (0.0, 0.0, 1.0, 0.0)

# kind -> field name -> (type, default). A default of None means "absent".
FIELD_TABLE: dict[str, dict[str, tuple[str, object]]] = {
    "Transform": {
        "translation": ("SFVec3f", (0.0, 0.0, 0.0)),
        "center": ("SFVec3f", (0.0, 0.0, 0.0)),
        "rotation": ("SFRotation", _IDENTITY_ROT),
        "scale": ("SFVec3f", (1.0, 1.0, 1.0)),
        "scaleOrientation": ("SFRotation", _IDENTITY_ROT),
    },
    "Material": {
        "ambientIntensity": ("SFFloat", 0.2),
        "diffuseColor": ("SFColor", (0.8, 0.8, 0.8)),
        "specularColor": ("SFColor", (0.0, 0.0, 0.0)),
        "emissiveColor": ("SFColor", (0.0, 0.0, 0.0)),
        "shininess": ("SFFloat", 0.2),
        "transparency": ("SFFloat", 0.0),
    },
    "PhysicalMaterial": {
        "albedoFactor": ("SFColor", None),
        "roughnessFactor": ("SFFloat", None),
        "metallicFactor": ("SFFloat", None),
    },
    "IndexedTriangleSet": {
        "index": ("MFInt32", ()),
        "coordIndex": ("MFInt32", ()),
        "solid": ("SFBool", True),
        "ccw": ("SFBool", True),
        "normalPerVertex": ("SFBool", True),
    },
    "Coordinate": {"point": ("MFVec3f", ())},
    "Normal": {"vector": ("MFVec3f", ())},
    "TextureCoordinate": {"point": ("MFVec2f", ())},
    "ImageTexture": {"url": ("MFString", ())},
    "Viewpoint": {
        "compositors": ("MFString", ()),
        "position": ("SFVec3f", (0.0, 0.0, 10.0)),
        "orientation": ("SFRotation", _IDENTITY_ROT),
    },
    "TimeSensor": {
        "cycleInterval": ("SFTime", 1.0),
        "loop": ("SFBool", False),
        "startTime": ("SFTime", 0.0),
        "stopTime": ("SFTime", 0.0),
        "enabled": ("SFBool", True),
        "fraction": ("SFFloat", None),
    },
    "ScalarInterpolator": {"key": ("MFFloat", ()), "keyValue": ("MFFloat", ()),
                           "fraction": ("SFFloat", None), "value": ("SFFloat", None)},
    "PositionInterpolator": {"key": ("MFFloat", ()), "keyValue": ("MFVec3f", ()),
                             "fraction": ("SFFloat", None), "value": ("SFVec3f", None)},
    "OrientationInterpolator": {"key": ("MFFloat", ()), "keyValue": ("MFRotation", ()),
                                "fraction": ("SFFloat", None), "value": ("SFRotation", None)},
    "CoordinateInterpolator": {"key": ("MFFloat", ()), "keyValue": ("MFVec3f", ()),
                               "fraction": ("SFFloat", None), "value": ("MFVec3f", None)},
    "RenderedTexture": {"dimensions": ("MFInt32", ())},
    "CompositorPass": {"target": ("SFString", None), "input": ("SFString", "none"),
                       "render": ("SFString", None)},
    "CompositorOutput": {"input": ("SFString", "none"), "render": ("SFString", None)},
    "CustomAppearance": {"type": ("SFString", None)},
    "Field": {"name": ("SFString", None), "type": ("SFString", None), "value": ("SFString", "")},
}

# event-only fields that map onto a differently named exposed field
_EVENT_ALIASES = {"fraction_changed": "fraction", "set_fraction": "fraction", "value_changed": "value"}


def event_field_name(event: str) -> str:
    if event in _EVENT_ALIASES:
        return _EVENT_ALIASES[event]
    if event.startswith("set_"):
        return event[4:]
    if event.endswith("_changed"):
        return event[:-8]
    return event


def field_type(kind: str, event: str) -> str | None:
    spec = FIELD_TABLE.get(kind, {}).get(event_field_name(event))
    return spec[0] if spec else None


def parse_field(kind: str, name: str, raw: str | None):
    spec = FIELD_TABLE.get(kind, {}).get(name)
    if spec is None:
        return raw
    ftype, default = spec
    if raw is None:
        return default
    return PARSERS[ftype](raw)
