"""Appearance <-> material translation: classic Blinn-Phong, PBS and user-defined shaders."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import TranslationError, warning
from ..fields import format_mfstring, parse_mfstring
from ..material import HlmsMaterial, OgreMaterial, Pass, Technique, TextureUnit
from ..x3d import Node, NodeKind, SceneDocument
from .registry import ResourceRegistry

SHININESS_SCALE = 128.0


@dataclass(frozen=True)
class MaterialIR:
    """Fields of an X3D ``Material`` node; ``emissive`` is None when absent."""

    ambient_intensity: float = 0.2
    diffuse: tuple = (0.8, 0.8, 0.8)
    specular: tuple = (0.0, 0.0, 0.0)
    shininess: float = 0.2
    emissive: tuple | None = None
    transparency: float = 0.0

    @classmethod
    def from_node(cls, node: Node) -> "MaterialIR":
        f = node.field
        return cls(
            f("ambientIntensity"), tuple(f("diffuseColor")), tuple(f("specularColor")), f("shininess"),
            tuple(f("emissiveColor")) if node.get("emissiveColor") is not None else None,
            f("transparency"),
        )

    def to_node(self) -> Node:
        fmt = lambda v: " ".join(repr(float(c)) for c in v)
        attrs = [
            ("ambientIntensity", repr(float(self.ambient_intensity))),
            ("diffuseColor", fmt(self.diffuse)),
            ("specularColor", fmt(self.specular)),
            ("shininess", repr(float(self.shininess))),
        ]
        if self.emissive is not None:
            attrs.append(("emissiveColor", fmt(self.emissive)))
        if self.transparency:
            attrs.append(("transparency", repr(float(self.transparency))))
        return Node("Material", tuple(attrs))


@dataclass(frozen=True)
class AppearanceIR:
    """What an Appearance-like node contributes to a material.

    Exactly one of ``material``, ``physical`` and ``custom`` is set for an
    inline definition; a USE reference carries only ``use_name``.
    """

    def_name: str | None = None
    use_name: str | None = None
    material: MaterialIR | None = None
    physical: Node | None = None
    custom: Node | None = None
    textures: tuple = ()  # (containerField or None, url)

    @classmethod
    def from_node(cls, node: Node) -> "AppearanceIR":
        if node.use_name is not None:
            return cls(use_name=node.use_name)
        if node.kind is NodeKind.CustomAppearance:
            return cls(def_name=node.def_name, custom=node)
        mat = node.child(NodeKind.Material)
        pm = node.child(NodeKind.PhysicalMaterial)
        textures = tuple(
            (c.container_field, (c.field("url") or ("",))[0])
            for c in node.children if c.kind is NodeKind.ImageTexture
        )
        return cls(
            def_name=node.def_name,
            material=MaterialIR.from_node(mat) if mat is not None and mat.use_name is None else None,
            physical=pm,
            textures=textures,
        )

    def to_node(self) -> Node:
        if self.use_name is not None:
            return Node("Appearance", use_name=self.use_name)
        if self.custom is not None:
            return self.custom
        kids = []
        if self.material is not None:
            kids.append(self.material.to_node())
        if self.physical is not None:
            kids.append(self.physical)
        for cf, url in self.textures:
            attrs = [("url", format_mfstring([url]))] + ([("containerField", cf)] if cf else [])
            kids.append(Node("ImageTexture", tuple(attrs)))
        return Node("Appearance", children=tuple(kids), def_name=self.def_name)


def x3d_to_ogre_material(app: AppearanceIR, name: str, shininess_scale=SHININESS_SCALE,
                         spec_ambient=False) -> OgreMaterial:
    m = app.material or MaterialIR()
    i = m.ambient_intensity
    ambient = tuple(i * c for c in m.diffuse) if spec_ambient else (i, i, i)
    diffuse = tuple(m.diffuse)
    p = Pass(
        ambient=ambient,
        diffuse=diffuse + (1.0 - m.transparency,) if m.transparency else diffuse,
        specular=tuple(m.specular),
        shininess=float(math.trunc(m.shininess * shininess_scale)),
        emissive=tuple(m.emissive) if m.emissive is not None else None,
        scene_blend=("alpha_blend",) if m.transparency else None,
        texture_units=[TextureUnit(texture=url) for _, url in app.textures],
    )
    return OgreMaterial(name, [Technique([p])])


def _shininess_back(s: float, scale: float) -> float:
    # an integral value came from truncation: the midpoint of its bucket is the best estimate
    x = (s + 0.5) / scale if float(s).is_integer() else s / scale
    return min(1.0, max(0.0, x))


def ogre_to_x3d_appearance(mat: OgreMaterial, diagnostics: list | None = None,
                           shininess_scale=SHININESS_SCALE, spec_ambient=False) -> AppearanceIR:
    diags = diagnostics if diagnostics is not None else []
    if len(mat.techniques) > 1 or len(mat.techniques[0].passes) > 1:
        diags.append(warning("technique-collapsed",
                             f"material {mat.name!r}: only the first technique/pass is kept"))
    p = mat.first_pass
    rgb = tuple(p.diffuse[:3])
    if spec_ambient:
        ratios = [a / d for a, d in zip(p.ambient[:3], rgb) if d]
        intensity = sum(ratios) / len(ratios) if ratios else 0.0
    elif len(set(p.ambient[:3])) == 1:
        intensity = p.ambient[0]
    else:
        intensity = sum(p.ambient[:3]) / 3.0
    transparency = 1.0 - p.diffuse[3] if len(p.diffuse) == 4 else 0.0
    mir = MaterialIR(
        ambient_intensity=intensity,
        diffuse=rgb,
        specular=tuple(p.specular[:3]),
        shininess=_shininess_back(p.shininess, shininess_scale),
        emissive=tuple(p.emissive[:3]) if p.emissive is not None else None,
        transparency=transparency,
    )
    textures = tuple((None, tu.texture) for tu in p.texture_units if tu.texture is not None)
    return AppearanceIR(def_name=mat.name, material=mir, textures=textures)


# -- HLMS ---------------------------------------------------------------------

PBS_FIELD_MAP = {
    "albedoFactor": "diffuse",
    "roughnessFactor": "roughness",
    "metallicFactor": "metallic",
}
_NON_FIELDS = {"containerField", "DEF", "USE", "class", "id"}


def _tokens(raw: str) -> tuple[str, ...]:
    return tuple(t for t in raw.replace(",", " ").split() if t)


def physical_material_to_hlms(pm: Node, name: str) -> HlmsMaterial:
    props = []
    for k, v in pm.attrs:
        if k in _NON_FIELDS:
            continue
        props.append((PBS_FIELD_MAP.get(k, k), _tokens(v)))
    return HlmsMaterial(name, "PBS", props)


def _shader_known(shader: str, doc: SceneDocument | None, registry: ResourceRegistry | None) -> bool:
    if doc is not None:
        node = doc.defs.get(shader)
        if node is not None and node.kind is NodeKind.ComposedShader:
            return True
    return registry is not None and registry.contains(shader, "shader")


def custom_appearance_to_hlms(ca: Node, name: str, doc: SceneDocument | None = None,
                              registry: ResourceRegistry | None = None) -> HlmsMaterial:
    """Forward every ``field`` child and texture child of a CustomAppearance verbatim."""
    shader = ca.get("type")
    if not shader or not _shader_known(shader, doc, registry):
        raise TranslationError("unknown-shader", f"CustomAppearance type {shader!r} names no ComposedShader",
                               ca.line, ca.column)
    props = []
    for c in ca.children:
        if c.kind is NodeKind.Field:
            key = c.get("name")
            if not key:
                raise TranslationError("bad-field", "field child without a name", c.line, c.column)
            props.append((key, _tokens(c.get("value", ""))))
        elif c.kind is NodeKind.ImageTexture:
            key = c.container_field or "texture"
            urls = parse_mfstring(c.get("url", ""))
            props.append((key, (urls[0],) if urls else ()))
    keys = [k for k, _ in props]
    if len(set(keys)) != len(keys):
        raise TranslationError("duplicate-property", f"CustomAppearance {name!r} repeats a property name",
                               ca.line, ca.column)
    return HlmsMaterial(name, shader, props)


def hlms_to_custom_appearance(h: HlmsMaterial) -> Node:
    kids = tuple(Node("field", (("name", k), ("value", " ".join(v)))) for k, v in h.properties)
    return Node("CustomAppearance", (("type", h.shader_type),), kids, def_name=h.name)


def translate_appearance(app: AppearanceIR, name: str, doc=None, registry=None,
                         shininess_scale=SHININESS_SCALE, spec_ambient=False):
    """Dispatch an inline appearance to the matching OGRE material kind."""
    if app.custom is not None:
        return custom_appearance_to_hlms(app.custom, name, doc, registry)
    if app.physical is not None and app.material is None:
        return physical_material_to_hlms(app.physical, name)
    return x3d_to_ogre_material(app, name, shininess_scale, spec_ambient)
