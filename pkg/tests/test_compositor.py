from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from conftest import read
from scenebridge.compositor import (
    CompositorGraph, PassAppearance, PassSpec, Render, build_compositor, check_texture_usage,
    compositor_to_node, from_ogre_compositor, graph_from_script, resolve_chain, schedule_labels,
    suggest_order, to_ogre_compositor, validate_and_schedule,
)
from scenebridge.compositor_script import (
    CompositorPassDef, TargetBlock, parse_compositor_script, serialize_compositor_script,
)
from scenebridge.errors import CompositorError
from scenebridge.translate import ResourceRegistry
from scenebridge.x3d import Node, parse_x3d, serialize_x3d


def gauss_doc():
    return parse_x3d(read("gauss_blur.x3d"))


def gauss_graph():
    return build_compositor(gauss_doc().defs["GaussBlur"])


def swapped(graph: CompositorGraph) -> CompositorGraph:
    a, b = graph.passes
    return CompositorGraph(graph.name, graph.textures, (b, a), graph.output, graph.texture_specs)


def compositor(body: str) -> Node:
    return parse_x3d(f'<Scene><Compositor DEF="C">{body}</Compositor></Scene>').defs["C"]


def test_build_gauss_blur():
    g = gauss_graph()
    assert g.textures == ("rt0", "rt1")
    assert g.passes == (
        PassSpec("rt0", "none", Render.SCENE),
        PassSpec("rt1", "none", Render.QUAD, PassAppearance("BlurVertical", ("rt0",))),
    )
    assert g.output == PassSpec(None, "none", Render.QUAD, PassAppearance("BlurHorizontal", ("rt1",)))


def test_gauss_blur_schedule():
    assert schedule_labels(validate_and_schedule(gauss_graph())) == ["rt0-pass", "rt1-pass", "output"]


def test_swapped_passes_rejected():
    with pytest.raises(CompositorError) as exc:
        validate_and_schedule(swapped(gauss_graph()))
    assert exc.value.code == "rt-read-before-write"
    assert "'rt0'" in exc.value.diagnostics[0].message


def test_suggest_order_repairs_swap():
    assert suggest_order(swapped(gauss_graph())) == ["rt0-pass", "rt1-pass", "output"]


def test_suggest_order_cycle():
    g = CompositorGraph("c", ("a", "b"), (
        PassSpec("a", "none", Render.QUAD, PassAppearance("s", ("b",))),
        PassSpec("b", "none", Render.QUAD, PassAppearance("s", ("a",))),
    ), PassSpec(None, "previous"))
    with pytest.raises(CompositorError) as exc:
        suggest_order(g)
    assert exc.value.code == "rt-cycle"


def test_scene_only_output():
    g = build_compositor(compositor('<CompositorOutput input="previous" render="SCENE"/>'))
    assert schedule_labels(validate_and_schedule(g)) == ["output"]
    script = to_ogre_compositor(g)
    assert script.techniques[0].output == TargetBlock(None, "previous")
    assert b"target_output {\n            input previous\n        }" in serialize_compositor_script([script])


@pytest.mark.parametrize("body, code", [
    ('<CompositorPass target="a" input="none" render="SCENE"/>', "missing-output"),
    ('<CompositorOutput input="none" render="SCENE"/>' * 2, "multiple-output"),
    ('<RenderedTexture DEF="a"/><CompositorPass input="none" render="SCENE"/>'
     '<CompositorOutput render="SCENE"/>', "missing-target"),
    ('<CompositorOutput input="none" render="LINES"/>', "bad-render"),
    ('<CompositorOutput input="sometimes" render="SCENE"/>', "bad-input"),
    ('<CompositorOutput render="QUAD"/>', "missing-appearance"),
    ('<CompositorOutput render="QUAD"><Appearance><RenderedTexture USE="x"/></Appearance></CompositorOutput>',
     "missing-shader"),
    ('<CompositorOutput render="SCENE"><Appearance><ComposedShader USE="s"/></Appearance></CompositorOutput>',
     "scene-with-appearance"),
    ('<RenderedTexture/><CompositorOutput render="SCENE"/>', "anonymous-texture"),
])
def test_build_errors(body, code):
    with pytest.raises(CompositorError) as exc:
        build_compositor(compositor(body))
    assert exc.value.code == code


@pytest.mark.parametrize("body, code", [
    ('<RenderedTexture DEF="a"/><CompositorPass target="a" render="QUAD"><Appearance>'
     '<ComposedShader USE="s"/><RenderedTexture USE="a"/></Appearance></CompositorPass>'
     '<CompositorOutput render="SCENE"/>', "rt-self-read"),
    ('<RenderedTexture DEF="a"/><CompositorPass target="a" render="SCENE"/>'
     '<CompositorPass target="a" render="SCENE"/><CompositorOutput render="SCENE"/>', "rt-double-write"),
    ('<CompositorOutput render="QUAD"><Appearance><ComposedShader USE="s"/><RenderedTexture USE="zz"/>'
     '</Appearance></CompositorOutput>', "unknown-texture"),
    ('<CompositorPass target="ghost" render="SCENE"/><CompositorOutput render="SCENE"/>', "unknown-texture"),
])
def test_validation_errors(body, code):
    with pytest.raises(CompositorError) as exc:
        validate_and_schedule(build_compositor(compositor(body)))
    assert exc.value.code == code
    assert exc.value.diagnostics[0].line is not None


def test_unused_texture_warns():
    diags = []
    validate_and_schedule(build_compositor(compositor('<RenderedTexture DEF="a"/>'
                                                      '<CompositorOutput render="SCENE"/>')), diags)
    assert [d.code for d in diags] == ["rt-unused"]


def test_gauss_to_ogre():
    (tech,) = to_ogre_compositor(gauss_graph()).techniques
    assert [t.name for t in tech.textures] == ["rt0", "rt1"]
    assert [t.target_name for t in tech.targets] == ["rt0", "rt1"]
    assert tech.targets[0].passes == [CompositorPassDef("render_scene")]
    assert tech.targets[1].passes == [CompositorPassDef("render_quad", "BlurVertical", [(0, "rt0")])]
    assert tech.output.passes == [CompositorPassDef("render_quad", "BlurHorizontal", [(0, "rt1")])]


def test_night_vision_graph():
    (script,) = parse_compositor_script(read("night_vision.compositor"))
    g = from_ogre_compositor(script)
    assert g.textures == ("rt0",)
    assert g.passes == (PassSpec("rt0", "previous", Render.SCENE),)
    assert g.output == PassSpec(None, "none", Render.QUAD, PassAppearance("Ogre/Compositor/NightVision", ("rt0",)))


def test_night_vision_fixpoint():
    (script,) = parse_compositor_script(read("night_vision.compositor"))
    again = to_ogre_compositor(from_ogre_compositor(script))
    assert again == script
    text = serialize_compositor_script([again])
    assert parse_compositor_script(text) == [script]


def test_night_vision_through_x3d():
    (script,) = parse_compositor_script(read("night_vision.compositor"))
    node = compositor_to_node(from_ogre_compositor(script))
    doc = parse_x3d(serialize_x3d_fragment(node))
    assert to_ogre_compositor(build_compositor(doc.defs["Night Vision"])) == script


def serialize_x3d_fragment(node):
    from scenebridge.x3d import SceneDocument
    return serialize_x3d(SceneDocument(Node("Scene", children=(node,))))


def test_no_intermediate_textures():
    (script,) = parse_compositor_script("compositor P {\n technique {\n target_output {\n input previous\n"
                                        " pass render_quad {\n material M\n}\n}\n}\n}")
    g = from_ogre_compositor(script)
    assert g.textures == () and g.passes == ()
    assert to_ogre_compositor(g) == script


@pytest.mark.parametrize("body, code", [
    ("target_output {\n input none\n pass render_quad {\n}\n}", "missing-material"),
    ("target_output {\n input none\n pass render_quad {\n material M\n input 1 a\n}\n}", "bad-slot"),
    ("target_output {\n input none\n}", "empty-target"),
    ("target_output {\n input none\n pass render_scene {\n}\n pass render_scene {\n}\n}", "multiple-passes"),
    ("target_output {\n input previous\n pass render_scene {\n}\n}", "unsupported-pass"),
    ("target_output {\n input previous\n only_initial on\n}", "unsupported-property"),
])
def test_script_outside_supported_subset(body, code):
    (script,) = parse_compositor_script(f"compositor X {{\n technique {{\n {body}\n}}\n}}")
    with pytest.raises(CompositorError) as exc:
        graph_from_script(script)
    assert exc.value.code == code


def test_texture_dimensions_survive():
    node = compositor('<RenderedTexture DEF="a" dimensions="256 128 4"/><CompositorPass target="a" render="SCENE"/>'
                      '<CompositorOutput render="QUAD"><Appearance><ComposedShader USE="s"/>'
                      '<RenderedTexture USE="a"/></Appearance></CompositorOutput>')
    script = to_ogre_compositor(build_compositor(node))
    t = script.techniques[0].textures[0]
    assert (t.width, t.height, t.formats) == ("256", "128", ("PF_A8R8G8B8",))
    assert build_compositor(compositor_to_node(from_ogre_compositor(script))) == build_compositor(node)


# -- chains -----------------------------------------------------------------

def test_chain_internal():
    doc = gauss_doc()
    vp = doc.root.children[1]
    chain = resolve_chain(vp, doc)
    assert chain.compositor_names == ["GaussBlur"]
    assert chain.entries[0].kind == "internal" and chain.entries[0].graph == gauss_graph()


def test_chain_external_quoted_names():
    doc = parse_x3d(b'<Scene><Viewpoint compositors=\'Invert "Night Vision"\'/></Scene>')
    reg = ResourceRegistry(compositor_names={"Invert", "Night Vision"})
    chain = resolve_chain(doc.root.children[0], doc, reg)
    assert chain.compositor_names == ["Invert", "Night Vision"]
    assert {e.kind for e in chain.entries} == {"external"}


def test_chain_empty():
    doc = parse_x3d(b'<Scene><Viewpoint compositors=""/></Scene>')
    assert resolve_chain(doc.root.children[0], doc).entries == ()


def test_chain_unknown():
    doc = parse_x3d(b'<Scene><Viewpoint compositors="Nope"/></Scene>')
    with pytest.raises(CompositorError) as exc:
        resolve_chain(doc.root.children[0], doc)
    assert exc.value.code == "unknown-compositor"


def test_rendered_texture_outside_compositor_warns():
    doc = parse_x3d(b'<Scene><Shape><Appearance><RenderedTexture DEF="x"/></Appearance></Shape></Scene>')
    assert [d.code for d in check_texture_usage(doc)] == ["rt-outside-compositor"]
    assert check_texture_usage(gauss_doc()) == []


# -- properties -------------------------------------------------------------

@st.composite
def valid_graphs(draw):
    n = draw(st.integers(0, 5))
    textures = tuple(f"rt{i}" for i in range(n))
    passes = []
    for i, t in enumerate(textures):
        if i == 0 or draw(st.booleans()):
            mode = draw(st.sampled_from(["none", "previous"]))
            passes.append(PassSpec(t, mode, Render.SCENE))
        else:
            reads = tuple(draw(st.lists(st.sampled_from(textures[:i]), min_size=1, max_size=3)))
            passes.append(PassSpec(t, draw(st.sampled_from(["none", "previous"])), Render.QUAD,
                                   PassAppearance(draw(st.sampled_from(["A", "B/c"])), reads)))
    if textures and draw(st.booleans()):
        reads = tuple(draw(st.lists(st.sampled_from(textures), min_size=1, max_size=3)))
        output = PassSpec(None, "none", Render.QUAD, PassAppearance("Out", reads))
    else:
        output = PassSpec(None, draw(st.sampled_from(["none", "previous"])), Render.SCENE)
    return CompositorGraph("G", textures, tuple(passes), output)


@given(valid_graphs())
def test_schedule_is_document_order(g):
    assert validate_and_schedule(g) == list(g.passes) + [g.output]
    assert suggest_order(g) == schedule_labels(validate_and_schedule(g))


@given(valid_graphs())
def test_from_to_identity(g):
    script = to_ogre_compositor(g)
    back = from_ogre_compositor(parse_compositor_script(serialize_compositor_script([script]))[0])
    assert (back.name, back.textures, back.passes, back.output) == (g.name, g.textures, g.passes, g.output)
    assert to_ogre_compositor(back) == script


@given(valid_graphs())
def test_x3d_node_identity(g):
    doc = parse_x3d(serialize_x3d_fragment(compositor_to_node(g)))
    back = build_compositor(doc.defs["G"])
    assert (back.textures, back.passes, back.output) == (g.textures, g.passes, g.output)


@given(valid_graphs(), st.data())
def test_rejections_name_a_texture_or_pass(g, data):
    if len(g.passes) < 2:
        return
    i = data.draw(st.integers(0, len(g.passes) - 2))
    passes = list(g.passes)
    passes[i], passes[i + 1] = passes[i + 1], passes[i]
    bad = CompositorGraph(g.name, g.textures, tuple(passes), g.output)
    try:
        validate_and_schedule(bad)
    except CompositorError as exc:
        assert all(("'rt" in d.message) or ("pass" in d.message) for d in exc.diagnostics)
