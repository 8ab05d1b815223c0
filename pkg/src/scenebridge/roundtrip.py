"""Semantic comparisons used to check x3d -> ogre -> x3d (and reverse) round trips.

Each ``*_divergence`` function returns None when the two sides agree, or a
short description of the first difference.
"""
from __future__ import annotations

from collections import Counter

import numpy as np

from .mesh import OgreMesh
from .translate.geometry import shape_from_node
from .translate.materials import MaterialIR
from .x3d import NodeKind, SceneDocument

COLOR_TOLERANCE = 1.0 / 256.0


def _material_of(shape, doc: SceneDocument) -> MaterialIR | None:
    app = shape.child(NodeKind.Appearance)
    if app is not None and app.use_name is not None:
        app = doc.defs.get(app.use_name)
    if app is None or app.kind is not NodeKind.Appearance:
        return None
    mat = app.child(NodeKind.Material)
    if mat is not None and mat.use_name is not None:
        mat = doc.defs.get(mat.use_name)
    return MaterialIR.from_node(mat) if mat is not None else None


def scene_signature(doc: SceneDocument) -> list[tuple]:
    """(material, triangle multiset) per geometry-bearing Shape, in document order."""
    out = []
    for n in doc.nodes():
        if n.kind is not NodeKind.Shape or n.use_name is not None:
            continue
        if n.child(NodeKind.IndexedTriangleSet) is None:
            out.append((_material_of(n, doc), None))
            continue
        s = shape_from_node(n, doc)
        out.append((_material_of(n, doc), Counter(s.triangles())))
    return out


def _material_divergence(a: MaterialIR | None, b: MaterialIR | None, tol: float) -> str | None:
    if a is None or b is None:
        return None if a is b else "material present on one side only"
    fields = ("ambient_intensity", "diffuse", "specular", "shininess", "emissive", "transparency")
    for f in fields:
        va, vb = getattr(a, f), getattr(b, f)
        if f == "emissive":
            va = va if va is not None else (0.0, 0.0, 0.0)
            vb = vb if vb is not None else (0.0, 0.0, 0.0)
        va, vb = np.atleast_1d(va), np.atleast_1d(vb)
        if va.shape != vb.shape or np.any(np.abs(va - vb) > tol):
            return f"{f}: {va.tolist()} vs {vb.tolist()}"
    return None


def scene_divergence(a: SceneDocument, b: SceneDocument, tol: float = COLOR_TOLERANCE) -> str | None:
    sa, sb = scene_signature(a), scene_signature(b)
    if len(sa) != len(sb):
        return f"shape count {len(sa)} vs {len(sb)}"
    for i, ((ma, ta), (mb, tb)) in enumerate(zip(sa, sb)):
        why = _material_divergence(ma, mb, tol)
        if why:
            return f"shape {i}: {why}"
        if ta != tb:
            return f"shape {i}: triangle multisets differ"
    return None


def _geometry_arrays(mesh: OgreMesh, sub):
    geo = mesh.governing_geometry(sub)
    return tuple(geo.attribute(k) if geo is not None else None for k in ("position", "normal", "texcoord0"))


def mesh_divergence(a: OgreMesh, b: OgreMesh) -> str | None:
    """Equality up to vertex buffer layout."""
    if len(a.submeshes) != len(b.submeshes):
        return f"submesh count {len(a.submeshes)} vs {len(b.submeshes)}"
    for i, (x, y) in enumerate(zip(a.submeshes, b.submeshes)):
        if x.material != y.material:
            return f"submesh {i}: material {x.material!r} vs {y.material!r}"
        if x.use_shared_vertices != y.use_shared_vertices:
            return f"submesh {i}: usesharedvertices differs"
        if not np.array_equal(x.faces, y.faces):
            return f"submesh {i}: faces differ"
        for name, u, v in zip(("position", "normal", "texcoord"), _geometry_arrays(a, x), _geometry_arrays(b, y)):
            if (u is None) != (v is None) or (u is not None and not np.array_equal(u, v)):
                return f"submesh {i}: {name} data differs"
    return None


def text_divergence(a: bytes, b: bytes) -> str | None:
    """First differing line, ignoring whitespace runs."""
    la = [" ".join(line.split()) for line in a.decode().splitlines() if line.strip()]
    lb = [" ".join(line.split()) for line in b.decode().splitlines() if line.strip()]
    for i, (x, y) in enumerate(zip(la, lb)):
        if x != y:
            return f"line {i + 1}: {x!r} vs {y!r}"
    if len(la) != len(lb):
        return f"length {len(la)} vs {len(lb)} lines"
    return None
