"""Shape <-> submesh translation, including Coordinate DEF/USE <-> shared geometry."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TranslationError, info, warning
from ..mesh import OgreMesh, Submesh, VertexBuffer, VertexData, format_float
from ..x3d import Node, NodeKind, SceneDocument
from .materials import AppearanceIR, SHININESS_SCALE, translate_appearance
from .registry import ResourceRegistry


@dataclass(eq=False)
class ShapeIR:
    points: np.ndarray
    index: np.ndarray
    normals: np.ndarray | None = None
    texcoords: np.ndarray | None = None
    appearance: AppearanceIR | None = None
    coord_key: str | None = None
    normal_key: str | None = None
    texcoord_key: str | None = None
    line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.index = np.asarray(self.index, dtype=np.int64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        if self.texcoords is not None:
            self.texcoords = np.asarray(self.texcoords, dtype=float).reshape(-1, 2)

    @property
    def material_name(self) -> str | None:
        if self.appearance is None:
            return None
        return self.appearance.use_name or self.appearance.def_name

    def triangles(self) -> list[tuple]:
        """Triangles as ordered vertex-position triples."""
        return [tuple(tuple(self.points[i]) for i in tri) for tri in self.index.tolist()]


def _deref(node: Node | None, doc: SceneDocument | None) -> tuple[Node | None, str | None]:
    """Follow an internal USE; return (definition, sharing key)."""
    if node is None:
        return None, None
    if node.use_name is not None:
        target = doc.defs.get(node.use_name) if doc is not None else None
        if target is None:
            raise TranslationError("unresolved-use", f"USE {node.use_name!r} has no DEF", node.line, node.column)
        return target, node.use_name
    return node, node.def_name


def shape_from_node(shape: Node, doc: SceneDocument | None = None) -> ShapeIR:
    its, _ = _deref(shape.child(NodeKind.IndexedTriangleSet), doc)
    if its is None:
        raise TranslationError("missing-geometry", "Shape has no IndexedTriangleSet", shape.line, shape.column)
    coord, ckey = _deref(its.child(NodeKind.Coordinate), doc)
    if coord is None:
        raise TranslationError("missing-coordinate", "IndexedTriangleSet has no Coordinate", its.line, its.column)
    normal, nkey = _deref(its.child(NodeKind.Normal), doc)
    tex, tkey = _deref(its.child(NodeKind.TextureCoordinate), doc)
    raw_index = its.field("index") if its.get("index") is not None else its.field("coordIndex")
    if any(i == -1 for i in raw_index):
        raise TranslationError("sentinel-index", "-1 face terminators are not allowed in IndexedTriangleSet",
                               its.line, its.column)
    if len(raw_index) % 3:
        raise TranslationError("bad-index-count", f"index length {len(raw_index)} is not a multiple of 3",
                               its.line, its.column)
    app = shape.child(NodeKind.Appearance, NodeKind.CustomAppearance)
    return ShapeIR(
        points=np.array(coord.field("point"), dtype=float).reshape(-1, 3),
        index=np.array(raw_index, dtype=np.int64).reshape(-1, 3),
        normals=np.array(normal.field("vector"), dtype=float).reshape(-1, 3) if normal is not None else None,
        texcoords=np.array(tex.field("point"), dtype=float).reshape(-1, 2) if tex is not None else None,
        appearance=AppearanceIR.from_node(app) if app is not None else None,
        coord_key=ckey, normal_key=nkey if normal is not None else None,
        texcoord_key=tkey if tex is not None else None,
        line=shape.line,
    )


def _check_shape(i: int, s: ShapeIR):
    n = len(s.points)
    if s.index.size and (s.index.min() < 0 or s.index.max() >= n):
        raise TranslationError("index-out-of-range", f"shape {i}: index outside 0..{n - 1}", s.line)
    for label, arr in (("normal", s.normals), ("texture coordinate", s.texcoords)):
        if arr is not None and len(arr) != n:
            raise TranslationError("attribute-count-mismatch",
                                   f"shape {i}: {len(arr)} {label}s for {n} points", s.line)


def _vertex_data(s: ShapeIR) -> VertexData:
    buf = VertexBuffer.from_arrays(s.points, s.normals, () if s.texcoords is None else (s.texcoords,))
    return VertexData(len(s.points), (buf,))


def _shared_group(shapes, diags) -> set[int]:
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(shapes):
        if s.coord_key is not None:
            groups.setdefault(s.coord_key, []).append(i)
    chosen: set[int] = set()
    for key, members in groups.items():
        if len(members) < 2:
            continue
        first = shapes[members[0]]
        compatible = all(
            shapes[m].normal_key == first.normal_key and shapes[m].texcoord_key == first.texcoord_key
            and (first.normals is None or first.normal_key is not None)
            and (first.texcoords is None or first.texcoord_key is not None)
            for m in members
        )
        if not compatible:
            diags.append(info("sharing-dropped",
                              f"Coordinate {key!r} is shared but normals/texture coordinates are not"))
        elif chosen:
            diags.append(info("sharing-dropped", f"only one shared vertex set per mesh; {key!r} duplicated"))
        else:
            chosen = set(members)
    return chosen


def _unique_name(base: str, taken: set[str]) -> str:
    name, k = base, 1
    while name in taken:
        name = f"{base}~{k}"
        k += 1
    return name


def x3d_to_ogre_mesh(shapes, name: str, doc: SceneDocument | None = None,
                     registry: ResourceRegistry | None = None, diagnostics: list | None = None,
                     shininess_scale=SHININESS_SCALE, spec_ambient=False):
    """One submesh per Shape, in order. Returns ``(mesh, materials)``.

    Anonymous appearances are named ``<name>/mat<index>``.
    """
    diags = diagnostics if diagnostics is not None else []
    shapes = list(shapes)
    for i, s in enumerate(shapes):
        _check_shape(i, s)
    shared = _shared_group(shapes, diags)
    mesh = OgreMesh()
    if shared:
        mesh.shared_geometry = _vertex_data(shapes[min(shared)])
    taken = set(doc.defs) if doc is not None else set()
    taken |= {s.appearance.def_name for s in shapes if s.appearance and s.appearance.def_name}
    materials = []
    produced: set[str] = set()
    for i, s in enumerate(shapes):
        app = s.appearance
        mat_name = ""
        if app is not None:
            if app.use_name is not None:
                mat_name = app.use_name
            else:
                mat_name = app.def_name or _unique_name(f"{name}/mat{i}", taken)
                taken.add(mat_name)
                if mat_name not in produced:
                    materials.append(translate_appearance(app, mat_name, doc, registry,
                                                          shininess_scale, spec_ambient))
                    produced.add(mat_name)
        if i in shared:
            mesh.submeshes.append(Submesh(mat_name, s.index, True, None))
        else:
            mesh.submeshes.append(Submesh(mat_name, s.index, False, _vertex_data(s)))
    # internal USE appearances whose DEF sits outside the translated shapes
    if doc is not None:
        for s in shapes:
            app = s.appearance
            if app is not None and app.use_name is not None and app.use_name not in produced:
                target = doc.defs.get(app.use_name)
                if target is not None and target.kind in (NodeKind.Appearance, NodeKind.CustomAppearance):
                    materials.append(translate_appearance(AppearanceIR.from_node(target), app.use_name, doc,
                                                          registry, shininess_scale, spec_ambient))
                    produced.add(app.use_name)
    return mesh, materials


# -- OGRE -> X3D ------------------------------------------------------------

def _merged(geo: VertexData):
    pos = geo.attribute("position")
    nrm = geo.attribute("normal")
    tex = geo.attribute("texcoord0")
    return pos, nrm, tex


def _vec_attr(arr) -> str:
    return " ".join(format_float(c) for c in np.asarray(arr).reshape(-1))


def _geometry_nodes(geo: VertexData, shared_name: str | None, first: bool, diags):
    pos, nrm, tex = _merged(geo)
    if pos is None:
        raise TranslationError("missing-positions", "vertex data without positions")
    if tex is not None and tex.shape[1] != 2:
        diags.append(warning("texcoord-dropped", f"{tex.shape[1]}D texture coordinates have no X3D counterpart"))
        tex = None
    extra_sets = sum(1 for b in geo.buffers for n in b.records.dtype.names if n.startswith("texcoord")) - 1
    if extra_sets > 0:
        diags.append(warning("texcoord-dropped", "only the first texture coordinate set is kept"))
    nodes = []
    for tag, field_name, arr, suffix in (("Coordinate", "point", pos, "coords"),
                                         ("Normal", "vector", nrm, "normals"),
                                         ("TextureCoordinate", "point", tex, "texcoords")):
        if arr is None:
            continue
        if shared_name is None:
            nodes.append(Node(tag, ((field_name, _vec_attr(arr)),)))
        elif first:
            nodes.append(Node(tag, ((field_name, _vec_attr(arr)),), def_name=f"{shared_name}/{suffix}"))
        else:
            nodes.append(Node(tag, use_name=f"{shared_name}/{suffix}", link="internal"))
    return nodes


def ogre_mesh_to_x3d(mesh: OgreMesh, registry: ResourceRegistry | None = None, name: str = "mesh",
                     defs=(), appearances=None, diagnostics: list | None = None) -> Node:
    """Shape per submesh, grouped when there are several.

    ``defs`` are DEF names already present in the target document;
    ``appearances`` maps material names to Appearance nodes emitted inline
    (DEF'd) at first use and referenced by USE afterwards.
    """
    diags = diagnostics if diagnostics is not None else []
    registry = registry or ResourceRegistry()
    appearances = dict(appearances or {})
    defined = set(defs)
    shapes = []
    shared_first = True
    for sub in mesh.submeshes:
        kids = []
        mname = sub.material
        if mname:
            if mname in defined:
                kids.append(Node("Appearance", use_name=mname, link="internal"))
            elif mname in appearances:
                kids.append(appearances[mname].replace(def_name=mname))
                defined.add(mname)
            else:
                if not registry.contains(mname, "appearance"):
                    diags.append(warning("unresolved-material",
                                         f"material {mname!r} is neither defined here nor in the registry"))
                kids.append(Node("Appearance", use_name=mname, link="external"))
        geo = mesh.governing_geometry(sub)
        shared_name = f"{name}/shared" if sub.use_shared_vertices else None
        geo_nodes = _geometry_nodes(geo, shared_name, shared_first, diags)
        if sub.use_shared_vertices:
            shared_first = False
        index = " ".join(str(i) for i in sub.faces.reshape(-1).tolist())
        kids.append(Node("IndexedTriangleSet", (("index", index),), tuple(geo_nodes)))
        shapes.append(Node("Shape", children=tuple(kids)))
    if not shapes:
        diags.append(warning("empty-mesh", f"mesh {name!r} has no submeshes"))
        return Node("Group")
    if len(shapes) == 1:
        return shapes[0]
    return Node("Group", children=tuple(shapes))


def external_shape(mesh_name: str) -> Node:
    return Node("Shape", use_name=mesh_name, link="external")


__all__ = ["ShapeIR", "shape_from_node", "x3d_to_ogre_mesh", "ogre_mesh_to_x3d", "external_shape"]
