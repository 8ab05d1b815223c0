"""Render-target graphs for the Compositor/CompositorPass/CompositorOutput nodes.

Passes run in document order; ``validate_and_schedule`` only checks that
the stated order is consistent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from graphlib import CycleError, TopologicalSorter

from .compositor_script import (
    CompositorPassDef, CompositorScript, CompositorTechnique, TargetBlock, TextureDef,
)
from .errors import CompositorError, error, warning
from .fields import format_mfstring
from .translate.registry import ResourceRegistry
from .x3d import Node, NodeKind, SceneDocument

DEFAULT_FORMAT = "PF_A8R8G8B8"


class Render(str, Enum):
    SCENE = "SCENE"
    QUAD = "QUAD"


@dataclass(frozen=True)
class PassAppearance:
    shader: str
    inputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class PassSpec:
    target: str | None
    input_mode: str = "none"
    render: Render = Render.SCENE
    appearance: PassAppearance | None = None
    line: int | None = field(default=None, compare=False)

    @property
    def label(self) -> str:
        return "output" if self.target is None else f"{self.target}-pass"

    @property
    def reads(self) -> tuple[str, ...]:
        return self.appearance.inputs if self.appearance is not None else ()


@dataclass(frozen=True)
class CompositorGraph:
    name: str
    textures: tuple[str, ...]
    passes: tuple[PassSpec, ...]
    output: PassSpec
    texture_specs: tuple[TextureDef, ...] = ()

    def spec_for(self, tex: str) -> TextureDef:
        for t in self.texture_specs:
            if t.name == tex:
                return t
        return TextureDef(tex)


# -- X3D -> graph -----------------------------------------------------------

def _appearance(node: Node, where: str) -> PassAppearance | None:
    app = node.child(NodeKind.Appearance)
    if app is None:
        return None
    shader = None
    inputs = []
    for c in app.children:
        if c.kind is NodeKind.ComposedShader:
            shader = c.use_name or c.def_name
        elif c.kind is NodeKind.RenderedTexture:
            name = c.use_name or c.def_name
            if name is None:
                raise CompositorError("anonymous-texture", f"{where}: RenderedTexture input needs USE",
                                      c.line, c.column)
            inputs.append(name)
    if not shader:
        raise CompositorError("missing-shader", f"{where}: Appearance names no ComposedShader",
                              app.line, app.column)
    return PassAppearance(shader, tuple(inputs))


def _pass_spec(node: Node, target, where: str) -> PassSpec:
    render = node.get("render")
    if render not in ("SCENE", "QUAD"):
        raise CompositorError("bad-render", f"{where}: render must be SCENE or QUAD, got {render!r}",
                              node.line, node.column)
    mode = node.get("input", "none")
    if mode not in ("none", "previous"):
        raise CompositorError("bad-input", f"{where}: input must be none or previous, got {mode!r}",
                              node.line, node.column)
    app = _appearance(node, where)
    if render == "QUAD" and app is None:
        raise CompositorError("missing-appearance", f"{where}: QUAD pass needs an Appearance",
                              node.line, node.column)
    if render == "SCENE" and app is not None:
        raise CompositorError("scene-with-appearance", f"{where}: SCENE pass takes no Appearance",
                              node.line, node.column)
    return PassSpec(target, mode, Render(render), app, node.line)


def _texture_def(rt: Node) -> TextureDef:
    dims = rt.field("dimensions")
    if len(dims) >= 2:
        return TextureDef(rt.def_name, str(dims[0]), str(dims[1]))
    return TextureDef(rt.def_name)


def build_compositor(node: Node) -> CompositorGraph:
    name = node.def_name or node.get("name")
    if not name:
        raise CompositorError("missing-name", "Compositor needs a DEF name", node.line, node.column)
    specs, passes, outputs = [], [], []
    for i, c in enumerate(node.children):
        if c.kind is NodeKind.RenderedTexture:
            if c.def_name is None:
                raise CompositorError("anonymous-texture", f"{name}: RenderedTexture needs a DEF",
                                      c.line, c.column)
            specs.append(_texture_def(c))
        elif c.kind is NodeKind.CompositorPass:
            target = c.get("target")
            if not target:
                raise CompositorError("missing-target", f"{name}: CompositorPass {len(passes)} has no target",
                                      c.line, c.column)
            passes.append(_pass_spec(c, target, f"{name} pass {len(passes)}"))
        elif c.kind is NodeKind.CompositorOutput:
            outputs.append(c)
    if not outputs:
        raise CompositorError("missing-output", f"compositor {name!r} has no CompositorOutput",
                              node.line, node.column)
    if len(outputs) > 1:
        raise CompositorError("multiple-output", f"compositor {name!r} has {len(outputs)} CompositorOutput nodes",
                              outputs[1].line, outputs[1].column)
    output = _pass_spec(outputs[0], None, f"{name} output")
    return CompositorGraph(name, tuple(t.name for t in specs), tuple(passes), output, tuple(specs))


# -- validation -------------------------------------------------------------

def _check(graph: CompositorGraph) -> list:
    diags = []
    declared = set(graph.textures)
    written: set[str] = set()
    for idx, p in enumerate(graph.passes + (graph.output,)):
        where = p.label if p.target is None else f"pass {idx} ({p.target})"
        for tex in p.reads:
            if tex not in declared:
                diags.append(error("unknown-texture", f"{where} reads undeclared texture {tex!r}", p.line))
            elif tex == p.target:
                diags.append(error("rt-self-read", f"{where} reads its own target {tex!r}", p.line))
            elif tex not in written:
                diags.append(error("rt-read-before-write",
                                   f"{where} reads {tex!r} before any pass writes it", p.line))
        if p.target is not None:
            if p.target not in declared:
                diags.append(error("unknown-texture", f"{where} targets undeclared texture {p.target!r}", p.line))
            if p.target in written:
                diags.append(error("rt-double-write", f"{where} writes {p.target!r} a second time", p.line))
            written.add(p.target)
    for tex in graph.textures:
        if tex not in written:
            diags.append(warning("rt-unused", f"texture {tex!r} is never written"))
    return diags


def validate_and_schedule(graph: CompositorGraph, diagnostics: list | None = None) -> list[PassSpec]:
    """Document-order schedule, or CompositorError listing every violation."""
    diags = _check(graph)
    errs = [d for d in diags if d.severity.value == "error"]
    if diagnostics is not None:
        diagnostics.extend(d for d in diags if d not in errs)
    if errs:
        raise CompositorError.from_diagnostics(errs)
    return list(graph.passes) + [graph.output]


def schedule_labels(schedule) -> list[str]:
    return [p.label for p in schedule]


def suggest_order(graph: CompositorGraph) -> list[str]:
    """A dependency-respecting pass order, preferring document order; a diagnostic aid."""
    nodes = graph.passes + (graph.output,)
    rank = {p.label: i for i, p in enumerate(nodes)}
    writer = {p.target: p.label for p in graph.passes}
    ts = TopologicalSorter({p.label: {writer[t] for t in p.reads if t in writer and writer[t] != p.label}
                            for p in nodes})
    try:
        ts.prepare()
    except CycleError as exc:
        raise CompositorError("rt-cycle", f"passes form a cycle: {exc.args[1]}") from None
    ready, order = [], []
    while ts.is_active():
        ready = sorted([*ready, *ts.get_ready()], key=rank.__getitem__)
        nxt = ready.pop(0)
        order.append(nxt)
        ts.done(nxt)
    return order


# -- graph <-> OGRE script --------------------------------------------------

def _target_block(p: PassSpec) -> TargetBlock:
    t = TargetBlock(p.target, p.input_mode)
    if p.render is Render.QUAD:
        t.passes.append(CompositorPassDef("render_quad", p.appearance.shader,
                                          [(i, tex) for i, tex in enumerate(p.appearance.inputs)]))
    elif p.input_mode == "none":
        t.passes.append(CompositorPassDef("render_scene"))
    return t


def to_ogre_compositor(graph: CompositorGraph) -> CompositorScript:
    validate_and_schedule(graph)
    textures = [graph.spec_for(t) for t in graph.textures]
    tech = CompositorTechnique(_target_block(graph.output), textures,
                               [_target_block(p) for p in graph.passes])
    return CompositorScript(graph.name, [tech])


def _spec_from_target(t: TargetBlock, where: str, line=None) -> PassSpec:
    if t.extra:
        raise CompositorError("unsupported-property", f"{where}: properties {[k for k, _ in t.extra]} "
                              "have no X3D counterpart", line)
    if not t.passes:
        if t.input_mode != "previous":
            raise CompositorError("empty-target", f"{where}: 'input none' without a pass renders nothing", line)
        return PassSpec(t.target_name, "previous", Render.SCENE, None, line)
    if len(t.passes) > 1:
        raise CompositorError("multiple-passes", f"{where}: only one pass per target is supported", line)
    p = t.passes[0]
    if p.extra:
        raise CompositorError("unsupported-property", f"{where}: pass properties {[k for k, _ in p.extra]} "
                              "have no X3D counterpart", line)
    if p.kind == "render_scene":
        if t.input_mode != "none" or p.material is not None or p.inputs:
            raise CompositorError("unsupported-pass", f"{where}: render_scene takes no input or material", line)
        return PassSpec(t.target_name, "none", Render.SCENE, None, line)
    if p.kind != "render_quad":
        raise CompositorError("unsupported-pass", f"{where}: pass kind {p.kind!r}", line)
    if p.material is None:
        raise CompositorError("missing-material", f"{where}: render_quad needs a material", line)
    slots = sorted(p.inputs)
    if [s for s, _ in slots] != list(range(len(slots))):
        raise CompositorError("bad-slot", f"{where}: input slots must be 0..n-1 without gaps", line)
    return PassSpec(t.target_name, t.input_mode, Render.QUAD,
                    PassAppearance(p.material, tuple(name for _, name in slots)), line)


def graph_from_script(script: CompositorScript, diagnostics: list | None = None) -> CompositorGraph:
    """Map a script onto a graph without checking read/write order."""
    diags = diagnostics if diagnostics is not None else []
    if len(script.techniques) > 1:
        diags.append(warning("technique-collapsed", f"compositor {script.name!r}: only the first technique is kept"))
    tech = script.techniques[0]
    if tech.extra:
        raise CompositorError("unsupported-property", f"compositor {script.name!r}: technique properties "
                              f"{[k for k, _ in tech.extra]} have no X3D counterpart")
    passes = tuple(_spec_from_target(t, f"{script.name} target {t.target_name}") for t in tech.targets)
    output = _spec_from_target(tech.output, f"{script.name} target_output")
    return CompositorGraph(script.name, tuple(t.name for t in tech.textures), passes, output,
                           tuple(tech.textures))


def from_ogre_compositor(script: CompositorScript, diagnostics: list | None = None) -> CompositorGraph:
    graph = graph_from_script(script, diagnostics)
    validate_and_schedule(graph, diagnostics)
    return graph


# -- graph -> X3D -----------------------------------------------------------

def _pass_node(tag: str, p: PassSpec) -> Node:
    attrs = ([("target", p.target)] if p.target is not None else []) + [
        ("input", p.input_mode), ("render", p.render.value)]
    kids = ()
    if p.appearance is not None:
        app_kids = (Node("ComposedShader", use_name=p.appearance.shader),) + tuple(
            Node("RenderedTexture", use_name=t) for t in p.appearance.inputs)
        kids = (Node("Appearance", children=app_kids),)
    return Node(tag, tuple(attrs), kids)


def compositor_to_node(graph: CompositorGraph) -> Node:
    kids = []
    for t in graph.textures:
        spec = graph.spec_for(t)
        attrs = ()
        if (spec.width, spec.height) != ("target_width", "target_height"):
            attrs = (("dimensions", f"{spec.width} {spec.height}"),)
        kids.append(Node("RenderedTexture", attrs, def_name=t))
    kids += [_pass_node("CompositorPass", p) for p in graph.passes]
    kids.append(_pass_node("CompositorOutput", graph.output))
    return Node("Compositor", children=tuple(kids), def_name=graph.name)


# -- viewpoint chains -------------------------------------------------------

@dataclass(frozen=True)
class ChainEntry:
    name: str
    kind: str  # "internal" | "external"
    graph: CompositorGraph | None = None


@dataclass(frozen=True)
class CompositorChain:
    viewpoint: Node
    entries: tuple[ChainEntry, ...] = ()

    @property
    def compositor_names(self) -> list[str]:
        return [e.name for e in self.entries]


def resolve_chain(viewpoint: Node, doc: SceneDocument, registry: ResourceRegistry | None = None) -> CompositorChain:
    """Element k reads element k-1's output; element 0 reads the rendered scene."""
    registry = registry or ResourceRegistry()
    entries = []
    for name in viewpoint.field("compositors") or ():
        node = doc.defs.get(name)
        if node is not None and node.kind is NodeKind.Compositor:
            entries.append(ChainEntry(name, "internal", build_compositor(node)))
        elif registry.contains(name, "compositor"):
            entries.append(ChainEntry(name, "external"))
        else:
            raise CompositorError("unknown-compositor", f"compositor {name!r} matches no Compositor DEF "
                                  "and no registry entry", viewpoint.line, viewpoint.column)
    return CompositorChain(viewpoint, tuple(entries))


def chain_attr(names) -> str:
    return format_mfstring(list(names))


def check_texture_usage(doc: SceneDocument) -> list:
    """Warn about RenderedTexture nodes referenced outside any Compositor."""
    diags = []

    def visit(n: Node, inside: bool):
        if n.kind is NodeKind.RenderedTexture and not inside:
            diags.append(warning("rt-outside-compositor",
                                 f"RenderedTexture {n.use_name or n.def_name!r} used outside a Compositor",
                                 n.line, n.column))
        for c in n.children:
            visit(c, inside or n.kind is NodeKind.Compositor)

    visit(doc.root, False)
    return diags
