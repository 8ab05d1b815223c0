"""Whole-document translation in both directions."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..animation import map_animation
from ..compositor import (
    build_compositor, check_texture_usage, compositor_to_node, from_ogre_compositor, resolve_chain,
    to_ogre_compositor,
)
from ..compositor_script import CompositorScript
from ..errors import ConversionError, Severity, TranslationError, info, warning
from ..fields import format_mfstring
from ..material import HlmsMaterial
from ..mesh import OgreMesh
from ..routes import rewrite_routes
from ..transform import TransformParams, decompose_transform
from ..x3d import Node, NodeKind, SceneDocument
from .geometry import ShapeIR, ogre_mesh_to_x3d, shape_from_node, x3d_to_ogre_mesh
from .materials import (
    PBS_FIELD_MAP, SHININESS_SCALE, AppearanceIR, hlms_to_custom_appearance, ogre_to_x3d_appearance,
    translate_appearance,
)
from .registry import ResourceRegistry, resolve_resource


@dataclass
class TranslationReport:
    name: str
    mesh: OgreMesh | None = None
    materials: list = field(default_factory=list)
    compositors: list[CompositorScript] = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    name_map: dict = field(default_factory=dict)
    external_refs: list[dict] = field(default_factory=list)
    transforms: list[dict] = field(default_factory=list)
    chains: list[dict] = field(default_factory=list)
    animations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity is Severity.ERROR for d in self.diagnostics)

    def manifest(self) -> dict:
        return {
            "name": self.name,
            "mesh": f"{self.name}.mesh" if self.mesh is not None else None,
            "materials": [m.name for m in self.materials],
            "compositors": [c.name for c in self.compositors],
            "name_map": self.name_map,
            "external_refs": self.external_refs,
            "transforms": self.transforms,
            "chains": self.chains,
            "animations": [
                {"kind": a.kind.value, "name": a.name, "target": a.target_node, "field": a.target_field,
                 "controller": a.controller, "keys": len(a.key)}
                for a in self.animations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.manifest(), sort_keys=True, indent=2) + "\n"


def _trs_dict(pair) -> dict:
    def one(n):
        clean = lambda v: [float(c) + 0.0 for c in v]  # drop negative zeros
        return {"translation": clean(n.translation), "orientation": clean(n.orientation), "scale": clean(n.scale)}
    return {"outer": one(pair.outer), "inner": one(pair.inner)}


class _SceneWalker:
    def __init__(self, doc, registry, report: TranslationReport):
        self.doc = doc
        self.registry = registry
        self.report = report
        self.shapes: list[ShapeIR] = []
        self.overrides: list[tuple[AppearanceIR, str]] = []
        self.standalone: list[AppearanceIR] = []

    def fail(self, exc: ConversionError):
        self.report.diagnostics.extend(exc.diagnostics)

    def external(self, slot, name, node, **extra):
        ref = {"slot": slot, "name": name, "line": node.line}
        ref.update(extra)
        self.report.external_refs.append(ref)

    def check_appearance(self, shape: Node):
        app = shape.child(NodeKind.Appearance, NodeKind.CustomAppearance)
        if app is not None and app.use_name is not None:
            res = resolve_resource(app.use_name, self.doc, self.registry, "appearance")
            if not res.internal:
                self.external("appearance", app.use_name, app)
        return app

    def shape(self, node: Node, path: list[str]):
        if node.use_name is not None:
            res = resolve_resource(node.use_name, self.doc, self.registry, "shape")
            if res.internal:
                self.report.diagnostics.append(info("shape-instance", f"USE {node.use_name!r} instances a "
                                                    "shape already in the mesh", node.line, node.column))
            else:
                self.external("shape", node.use_name, node, parents=path)
            return
        app = self.check_appearance(node)
        geo = node.child(NodeKind.Geometry)
        if geo is not None:
            if geo.use_name is None:
                raise TranslationError("bad-geometry", "Geometry must USE a mesh resource", geo.line, geo.column)
            res = resolve_resource(geo.use_name, self.doc, self.registry, "geometry")
            if res.internal and res.node.kind is NodeKind.IndexedTriangleSet:
                kids = tuple(res.node.replace(def_name=None) if c is geo else c for c in node.children)
                node = node.replace(children=kids)
            elif res.internal:
                raise TranslationError("bad-geometry", f"Geometry USE {geo.use_name!r} is not geometry",
                                       geo.line, geo.column)
            else:
                ref = {"parents": path}
                if app is not None:
                    air = AppearanceIR.from_node(app)
                    mat = air.use_name or air.def_name or f"{geo.use_name}/override{len(self.overrides)}"
                    ref["material_override"] = mat
                    if air.use_name is None:
                        self.overrides.append((air, mat))
                self.external("geometry", geo.use_name, geo, **ref)
                return
        if node.child(NodeKind.IndexedTriangleSet) is None:
            if app is not None and app.use_name is None:
                self.standalone.append(AppearanceIR.from_node(app))
                return
            raise TranslationError("missing-geometry", "Shape has no geometry", node.line, node.column)
        self.shapes.append(shape_from_node(node, self.doc))
        if node.def_name:
            self.report.name_map[node.def_name] = f"{self.report.name}.mesh#{len(self.shapes) - 1}"

    def transform(self, node: Node, path: list[str]):
        if node.use_name is not None:
            return
        first = len(self.shapes)
        try:
            pair = decompose_transform(TransformParams.from_node(node))
        except ConversionError as exc:
            exc.diagnostics = [d if d.line is not None else type(d)(d.severity, d.code, d.message, node.line,
                                                                      node.column) for d in exc.diagnostics]
            self.fail(exc)
            pair = None
        entry = {"name": node.def_name, "line": node.line, "parents": list(path)}
        self.report.transforms.append(entry)
        self.children(node, path + [node.def_name or f"Transform@{node.line}"])
        entry["submeshes"] = list(range(first, len(self.shapes)))
        if pair is not None:
            entry.update(_trs_dict(pair))

    def children(self, node: Node, path):
        for c in node.children:
            self.visit(c, path)

    def visit(self, node: Node, path: list[str]):
        try:
            if node.kind is NodeKind.Shape:
                self.shape(node, path)
            elif node.kind is NodeKind.Transform:
                self.transform(node, path)
            elif node.kind is NodeKind.Compositor:
                if node.use_name is None:
                    self.report.compositors.append(to_ogre_compositor(build_compositor(node)))
                    if node.def_name:
                        self.report.name_map[node.def_name] = node.def_name
            elif node.kind is NodeKind.Viewpoint:
                if node.get("compositors") is not None:
                    chain = resolve_chain(node, self.doc, self.registry)
                    self.report.chains.append({
                        "viewpoint": node.def_name, "line": node.line,
                        "compositors": [{"name": e.name, "kind": e.kind} for e in chain.entries],
                    })
                    for e in chain.entries:
                        if e.kind == "external":
                            self.external("compositor", e.name, node)
            elif node.kind not in (NodeKind.Unknown,):
                self.children(node, path)
        except ConversionError as exc:
            self.fail(exc)


def scene_to_ogre(doc: SceneDocument, name: str, registry: ResourceRegistry | None = None,
                  shininess_scale=SHININESS_SCALE, spec_ambient=False) -> TranslationReport:
    """Translate a parsed document; problems land in ``report.diagnostics``."""
    registry = registry or ResourceRegistry()
    report = TranslationReport(name, diagnostics=list(doc.diagnostics))
    try:
        doc = rewrite_routes(doc)
        report.diagnostics.extend(d for d in doc.diagnostics if d not in report.diagnostics)
    except ConversionError as exc:
        report.diagnostics.extend(exc.diagnostics)
    walker = _SceneWalker(doc, registry, report)
    walker.children(doc.root, [])
    report.diagnostics.extend(check_texture_usage(doc))
    try:
        report.animations = map_animation(doc, report.diagnostics)
    except ConversionError as exc:
        walker.fail(exc)
    materials = []
    try:
        if walker.shapes:
            report.mesh, materials = x3d_to_ogre_mesh(walker.shapes, name, doc, registry, report.diagnostics,
                                                      shininess_scale, spec_ambient)
        for air, mat_name in walker.overrides:
            materials.append(translate_appearance(air, mat_name, doc, registry, shininess_scale, spec_ambient))
        seen = {m.name for m in materials}
        for air in walker.standalone:
            mat_name = air.def_name or f"{name}/mat{len(materials)}"
            if mat_name not in seen:
                materials.append(translate_appearance(air, mat_name, doc, registry, shininess_scale,
                                                      spec_ambient))
                seen.add(mat_name)
    except ConversionError as exc:
        walker.fail(exc)
    report.materials = materials
    for m in materials:
        report.name_map.setdefault(m.name, m.name)
    return report


# -- OGRE -> X3D ------------------------------------------------------------

_PBS_BACK = {v: k for k, v in PBS_FIELD_MAP.items()}


def hlms_to_x3d(h: HlmsMaterial) -> Node:
    """PBS materials made only of mapped properties come back as PhysicalMaterial."""
    keys = [k for k, _ in h.properties]
    if h.shader_type == "PBS" and keys and all(k in _PBS_BACK for k in keys):
        attrs = tuple((_PBS_BACK[k], " ".join(v)) for k, v in h.properties)
        return Node("Appearance", children=(Node("PhysicalMaterial", attrs),), def_name=h.name)
    return hlms_to_custom_appearance(h)


def _appearance_node(mat, diags, shininess_scale, spec_ambient) -> Node:
    if isinstance(mat, HlmsMaterial):
        return hlms_to_x3d(mat)
    return ogre_to_x3d_appearance(mat, diags, shininess_scale, spec_ambient).to_node()


def ogre_to_scene(mesh: OgreMesh | None = None, materials=(), compositors=(), name: str = "mesh",
                  registry: ResourceRegistry | None = None, diagnostics: list | None = None,
                  shininess_scale=SHININESS_SCALE, spec_ambient=False) -> SceneDocument:
    diags = diagnostics if diagnostics is not None else []
    registry = registry or ResourceRegistry()
    materials = list(materials)
    by_name = {}
    for m in materials:
        if m.name in by_name:
            diags.append(warning("duplicate-material", f"material {m.name!r} defined twice; first kept"))
            continue
        by_name[m.name] = m
    kids: list[Node] = []
    shaders = []
    for m in by_name.values():
        if isinstance(m, HlmsMaterial) and hlms_to_x3d(m).kind is NodeKind.CustomAppearance:
            if m.shader_type not in shaders and m.shader_type not in by_name:
                shaders.append(m.shader_type)
    kids += [Node("ComposedShader", def_name=s) for s in shaders]
    defined = set(shaders)
    used = set()
    if mesh is not None:
        inline = {}
        for sub in mesh.submeshes:
            if sub.material in by_name and sub.material not in inline:
                inline[sub.material] = by_name[sub.material]
        used = set(inline)
        node = ogre_mesh_to_x3d(mesh, registry, name, defined,
                                {k: _appearance_node(v, diags, shininess_scale, spec_ambient)
                                 for k, v in inline.items()}, diags)
        kids.append(node)
    for m in by_name.values():
        if m.name not in used:
            kids.append(Node("Shape", children=(_appearance_node(m, diags, shininess_scale, spec_ambient),)))
    for c in compositors:
        kids.append(compositor_to_node(from_ogre_compositor(c, diags)))
    if compositors:
        kids.append(Node("Viewpoint", (("compositors", format_mfstring([c.name for c in compositors])),)))
    return SceneDocument(Node("Scene", children=tuple(kids)), (), tuple(diags))


__all__ = ["TranslationReport", "scene_to_ogre", "ogre_to_scene", "hlms_to_x3d"]
