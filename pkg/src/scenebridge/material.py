"""Typed ``.material`` scripts: classic technique/pass materials and HLMS blocks."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScriptSyntaxError, warning
from .script import ScriptBlock, parse_blocks, serialize_blocks


def format_color(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def format_number(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


@dataclass
class TextureUnit:
    texture: str | None = None
    name: str | None = None
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


@dataclass
class Pass:
    ambient: tuple[float, ...] = (1.0, 1.0, 1.0)
    diffuse: tuple[float, ...] = (1.0, 1.0, 1.0)
    specular: tuple[float, ...] = (0.0, 0.0, 0.0)
    shininess: float = 0.0
    emissive: tuple[float, ...] | None = None
    scene_blend: tuple[str, ...] | None = None
    texture_units: list[TextureUnit] = field(default_factory=list)
    name: str | None = None
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    extra_blocks: list[ScriptBlock] = field(default_factory=list)


@dataclass
class Technique:
    passes: list[Pass] = field(default_factory=list)
    name: str | None = None
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


@dataclass
class OgreMaterial:
    name: str
    techniques: list[Technique] = field(default_factory=list)
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)

    @property
    def first_pass(self) -> Pass:
        return self.techniques[0].passes[0]


@dataclass
class HlmsMaterial:
    name: str
    shader_type: str
    properties: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)

    def get(self, key, default=None):
        return dict(self.properties).get(key, default)


# -- block -> typed ---------------------------------------------------------

def _numbers(key, values, blk):
    try:
        return tuple(float(v) for v in values)
    except ValueError:
        raise ScriptSyntaxError("bad-color", f"{key}: non-numeric value in {' '.join(values)!r}",
                                blk.line) from None


def _color(key, values, blk, arities=(3, 4)):
    nums = _numbers(key, values, blk)
    if len(nums) not in arities:
        raise ScriptSyntaxError("bad-color-arity", f"{key} expects {' or '.join(map(str, arities))} "
                                f"values, got {len(nums)}", blk.line)
    return nums


def _check_range(key, rgb, blk, diags):
    if any(c < 0.0 or c > 1.0 for c in rgb):
        diags.append(warning("color-range", f"{key} component outside [0,1]", blk.line))


def _pass_from_block(blk: ScriptBlock, diags) -> Pass:
    p = Pass(name=blk.name)
    for key, vals in blk.properties:
        if key in ("ambient", "diffuse", "emissive"):
            col = _color(key, vals, blk)
            _check_range(key, col, blk, diags)
            setattr(p, key, col)
        elif key == "specular":
            nums = _color(key, vals, blk, (3, 4, 5))
            p.specular = nums[:3] if len(nums) < 5 else nums[:4]
            p.shininess = nums[-1] if len(nums) > 3 else 0.0
            _check_range(key, p.specular, blk, diags)
        elif key == "scene_blend":
            p.scene_blend = vals
        else:
            diags.append(warning("unknown-property", f"pass property {key!r} kept verbatim", blk.line))
            p.extra.append((key, vals))
    for child in blk.children:
        if child.keyword == "texture_unit":
            tu = TextureUnit(name=child.name)
            for key, vals in child.properties:
                if key == "texture" and tu.texture is None and len(vals) == 1:
                    tu.texture = vals[0]
                else:
                    tu.extra.append((key, vals))
            if child.children:
                raise ScriptSyntaxError("unsupported-block", "nested blocks in texture_unit", child.line)
            p.texture_units.append(tu)
        else:
            diags.append(warning("unknown-block", f"pass block {child.keyword!r} kept verbatim", child.line))
            p.extra_blocks.append(child)
    return p


def _material_from_block(blk: ScriptBlock, diags) -> OgreMaterial:
    if blk.name is None:
        raise ScriptSyntaxError("missing-name", "material block needs a name", blk.line)
    if blk.modifiers:
        raise ScriptSyntaxError("unsupported-inheritance", f"material {blk.name!r}: header "
                                f"modifiers {blk.modifiers} are not supported", blk.line)
    mat = OgreMaterial(blk.name)
    for key, vals in blk.properties:
        diags.append(warning("unknown-property", f"material property {key!r} kept verbatim", blk.line))
        mat.extra.append((key, vals))
    for tb in blk.children:
        if tb.keyword != "technique":
            raise ScriptSyntaxError("unexpected-block", f"{tb.keyword!r} inside material", tb.line)
        tech = Technique(name=tb.name)
        for key, vals in tb.properties:
            diags.append(warning("unknown-property", f"technique property {key!r} kept verbatim", tb.line))
            tech.extra.append((key, vals))
        for pb in tb.children:
            if pb.keyword != "pass":
                raise ScriptSyntaxError("unexpected-block", f"{pb.keyword!r} inside technique", pb.line)
            tech.passes.append(_pass_from_block(pb, diags))
        if not tech.passes:
            raise ScriptSyntaxError("empty-technique", f"material {blk.name!r}: technique without pass", tb.line)
        mat.techniques.append(tech)
    if not mat.techniques:
        raise ScriptSyntaxError("empty-material", f"material {blk.name!r} has no technique", blk.line)
    return mat


def _hlms_from_block(blk: ScriptBlock) -> HlmsMaterial:
    if blk.name is None or not blk.modifiers:
        raise ScriptSyntaxError("missing-shader-type", "hlms block needs a name and a shader type", blk.line)
    if len(blk.modifiers) > 1:
        raise ScriptSyntaxError("bad-header", f"hlms {blk.name!r}: unexpected {blk.modifiers[1:]}", blk.line)
    if blk.children:
        raise ScriptSyntaxError("unexpected-block", "hlms blocks hold properties only", blk.children[0].line)
    keys = [k for k, _ in blk.properties]
    dup = {k for k in keys if keys.count(k) > 1}
    if dup:
        raise ScriptSyntaxError("duplicate-property", f"hlms {blk.name!r}: repeated {sorted(dup)}", blk.line)
    return HlmsMaterial(blk.name, blk.modifiers[0], list(blk.properties))


def parse_material_script(data: bytes | str, diagnostics: list | None = None):
    diags = diagnostics if diagnostics is not None else []
    out = []
    for blk in parse_blocks(data):
        if blk.keyword == "material":
            out.append(_material_from_block(blk, diags))
        elif blk.keyword == "hlms":
            out.append(_hlms_from_block(blk))
        else:
            raise ScriptSyntaxError("unsupported-block", f"top-level {blk.keyword!r} block", blk.line)
    return out


# -- typed -> block ---------------------------------------------------------

def _pass_block(p: Pass) -> ScriptBlock:
    props = [
        ("ambient", tuple(format_color(p.ambient).split())),
        ("diffuse", tuple(format_color(p.diffuse).split())),
        ("specular", tuple(format_color(p.specular).split()) + (format_number(p.shininess),)),
    ]
    if p.emissive is not None:
        props.append(("emissive", tuple(format_color(p.emissive).split())))
    if p.scene_blend is not None:
        props.append(("scene_blend", tuple(p.scene_blend)))
    props += p.extra
    children = []
    for tu in p.texture_units:
        tprops = ([("texture", (tu.texture,))] if tu.texture is not None else []) + tu.extra
        children.append(ScriptBlock("texture_unit", tu.name, properties=tprops))
    return ScriptBlock("pass", p.name, properties=props, children=children + list(p.extra_blocks))


def material_block(m) -> ScriptBlock:
    if isinstance(m, HlmsMaterial):
        return ScriptBlock("hlms", m.name, [m.shader_type], properties=list(m.properties))
    techs = [ScriptBlock("technique", t.name, properties=list(t.extra),
                         children=[_pass_block(p) for p in t.passes]) for t in m.techniques]
    return ScriptBlock("material", m.name, properties=list(m.extra), children=techs)


def serialize_material_script(materials) -> bytes:
    return serialize_blocks([material_block(m) for m in materials])
