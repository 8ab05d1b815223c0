"""Typed ``.compositor`` scripts."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScriptSyntaxError, warning
from .script import ScriptBlock, parse_blocks, serialize_blocks

PASS_KINDS = ("render_quad", "render_scene")
INPUT_MODES = ("none", "previous")


@dataclass
class TextureDef:
    name: str
    width: str = "target_width"
    height: str = "target_height"
    formats: tuple[str, ...] = ("PF_A8R8G8B8",)


@dataclass
class CompositorPassDef:
    kind: str
    material: str | None = None
    inputs: list[tuple[int, str]] = field(default_factory=list)
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


@dataclass
class TargetBlock:
    target_name: str | None = None
    input_mode: str = "none"
    passes: list[CompositorPassDef] = field(default_factory=list)
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


@dataclass
class CompositorTechnique:
    output: TargetBlock
    textures: list[TextureDef] = field(default_factory=list)
    targets: list[TargetBlock] = field(default_factory=list)
    extra: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


@dataclass
class CompositorScript:
    name: str
    techniques: list[CompositorTechnique] = field(default_factory=list)


def _pass(blk: ScriptBlock, diags) -> CompositorPassDef:
    if blk.name not in PASS_KINDS:
        raise ScriptSyntaxError("unsupported-pass", f"pass kind {blk.name!r} is not supported", blk.line)
    if blk.children:
        raise ScriptSyntaxError("unexpected-block", "compositor passes hold properties only", blk.line)
    p = CompositorPassDef(blk.name)
    slots = set()
    for key, vals in blk.properties:
        if key == "material" and len(vals) == 1 and p.material is None:
            p.material = vals[0]
        elif key == "input" and len(vals) == 2:
            try:
                slot = int(vals[0])
            except ValueError:
                raise ScriptSyntaxError("bad-slot", f"input slot {vals[0]!r} is not an integer", blk.line) from None
            if slot in slots:
                raise ScriptSyntaxError("duplicate-slot", f"input slot {slot} used twice", blk.line)
            slots.add(slot)
            p.inputs.append((slot, vals[1]))
        else:
            diags.append(warning("unknown-property", f"pass property {key!r} kept verbatim", blk.line))
            p.extra.append((key, vals))
    return p


def _target(blk: ScriptBlock, diags) -> TargetBlock:
    t = TargetBlock(blk.name if blk.keyword == "target" else None)
    if blk.keyword == "target" and blk.name is None:
        raise ScriptSyntaxError("missing-target", "target block needs a texture name", blk.line)
    seen_input = False
    for key, vals in blk.properties:
        if key == "input" and not seen_input:
            if len(vals) != 1 or vals[0] not in INPUT_MODES:
                raise ScriptSyntaxError("bad-input", f"input must be one of {INPUT_MODES}", blk.line)
            t.input_mode = vals[0]
            seen_input = True
        else:
            diags.append(warning("unknown-property", f"target property {key!r} kept verbatim", blk.line))
            t.extra.append((key, vals))
    for c in blk.children:
        if c.keyword != "pass":
            raise ScriptSyntaxError("unexpected-block", f"{c.keyword!r} inside target", c.line)
        t.passes.append(_pass(c, diags))
    return t


def _technique(blk: ScriptBlock, diags) -> CompositorTechnique:
    textures, extra = [], []
    for key, vals in blk.properties:
        if key == "texture":
            if len(vals) < 4:
                raise ScriptSyntaxError("bad-texture", "texture needs name, width, height and format", blk.line)
            textures.append(TextureDef(vals[0], vals[1], vals[2], tuple(vals[3:])))
        else:
            diags.append(warning("unknown-property", f"technique property {key!r} kept verbatim", blk.line))
            extra.append((key, vals))
    targets, outputs = [], []
    for c in blk.children:
        if c.keyword == "target":
            targets.append(_target(c, diags))
        elif c.keyword == "target_output":
            outputs.append(_target(c, diags))
        else:
            raise ScriptSyntaxError("unexpected-block", f"{c.keyword!r} inside technique", c.line)
    if not outputs:
        raise ScriptSyntaxError("missing-output", "technique has no target_output", blk.line)
    if len(outputs) > 1:
        raise ScriptSyntaxError("multiple-output", "technique has more than one target_output", blk.line)
    return CompositorTechnique(outputs[0], textures, targets, extra)


def parse_compositor_script(data: bytes | str, diagnostics: list | None = None) -> list[CompositorScript]:
    diags = diagnostics if diagnostics is not None else []
    out = []
    for blk in parse_blocks(data):
        if blk.keyword != "compositor":
            raise ScriptSyntaxError("unsupported-block", f"top-level {blk.keyword!r} block", blk.line)
        if blk.name is None or blk.modifiers:
            raise ScriptSyntaxError("bad-header", "compositor block needs exactly one name", blk.line)
        if blk.properties:
            raise ScriptSyntaxError("unexpected-property", "compositor blocks hold techniques only", blk.line)
        techs = []
        for c in blk.children:
            if c.keyword != "technique":
                raise ScriptSyntaxError("unexpected-block", f"{c.keyword!r} inside compositor", c.line)
            techs.append(_technique(c, diags))
        if not techs:
            raise ScriptSyntaxError("missing-output", f"compositor {blk.name!r} has no technique", blk.line)
        out.append(CompositorScript(blk.name, techs))
    return out


def _target_block(t: TargetBlock) -> ScriptBlock:
    props = [("input", (t.input_mode,))] + list(t.extra)
    passes = []
    for p in t.passes:
        pp = ([("material", (p.material,))] if p.material is not None else [])
        pp += [("input", (str(slot), name)) for slot, name in p.inputs]
        passes.append(ScriptBlock("pass", p.kind, properties=pp + list(p.extra)))
    if t.target_name is None:
        return ScriptBlock("target_output", properties=props, children=passes)
    return ScriptBlock("target", t.target_name, properties=props, children=passes)


def compositor_block(s: CompositorScript) -> ScriptBlock:
    techs = []
    for t in s.techniques:
        props = [("texture", (x.name, x.width, x.height, *x.formats)) for x in t.textures] + list(t.extra)
        kids = [_target_block(tb) for tb in t.targets] + [_target_block(t.output)]
        techs.append(ScriptBlock("technique", properties=props, children=kids))
    return ScriptBlock("compositor", s.name, children=techs)


def serialize_compositor_script(scripts) -> bytes:
    return serialize_blocks([compositor_block(s) for s in scripts])
