from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import read
from gen import sample_shape_x3d, random_material_scene
from scenebridge.errors import TranslationError
from scenebridge.material import (
    HlmsMaterial, OgreMaterial, Pass, Technique, parse_material_script, serialize_material_script,
)
from scenebridge.mesh import OgreMesh, Submesh, VertexBuffer, VertexData, parse_mesh_xml, serialize_mesh_xml
from scenebridge.roundtrip import COLOR_TOLERANCE, mesh_divergence, scene_divergence
from scenebridge.translate import (
    AppearanceIR, MaterialIR, ResourceRegistry, custom_appearance_to_hlms, hlms_to_x3d, ogre_mesh_to_x3d,
    ogre_to_scene, ogre_to_x3d_appearance, physical_material_to_hlms, resolve_resource, scene_to_ogre,
    shape_from_node, x3d_to_ogre_material, x3d_to_ogre_mesh,
)
from scenebridge.x3d import Node, NodeKind, SceneDocument, parse_x3d, serialize_x3d


def appearance(src) -> AppearanceIR:
    return AppearanceIR.from_node(parse_x3d(src).root.children[0])


def codes(diags):
    return [d.code for d in diags]


# -- classic materials ------------------------------------------------------

def test_example_material():
    mat = x3d_to_ogre_material(appearance(read("appearance_example.x3d")), "Example")
    p = mat.first_pass
    assert p.ambient == (0.508497,) * 3
    assert p.diffuse == (0.337255, 0.4, 0.788235)
    assert p.specular == (1.0, 1.0, 1.0) and p.shininess == 25
    assert p.emissive is None and p.scene_blend is None


def test_default_material():
    p = x3d_to_ogre_material(appearance(b"<Appearance><Material/></Appearance>"), "d").first_pass
    assert p.ambient == (0.2, 0.2, 0.2)
    assert p.diffuse == (0.8, 0.8, 0.8)
    assert p.specular == (0.0, 0.0, 0.0) and p.shininess == math.trunc(0.2 * 128) == 25


def test_emissive_only():
    p = x3d_to_ogre_material(appearance(b"<Appearance><Material emissiveColor='1 0 0'/></Appearance>"),
                             "e").first_pass
    assert p.emissive == (1.0, 0.0, 0.0)
    assert p.diffuse == (0.8, 0.8, 0.8)


def test_transparency_sets_alpha_blend():
    p = x3d_to_ogre_material(appearance(b"<Appearance><Material transparency='0.25'/></Appearance>"),
                             "t").first_pass
    assert p.diffuse == (0.8, 0.8, 0.8, 0.75)
    assert p.scene_blend == ("alpha_blend",)


def test_texture_unit():
    app = appearance(b"<Appearance><Material/><ImageTexture url='\"wood.png\"'/></Appearance>")
    assert [t.texture for t in x3d_to_ogre_material(app, "w").first_pass.texture_units] == ["wood.png"]


def test_spec_ambient_variant():
    app = appearance(b"<Appearance><Material ambientIntensity='0.5' diffuseColor='0.2 0.4 0.8'/></Appearance>")
    p = x3d_to_ogre_material(app, "s", spec_ambient=True).first_pass
    assert np.allclose(p.ambient, (0.1, 0.2, 0.4))
    back = ogre_to_x3d_appearance(OgreMaterial("s", [Technique([p])]), spec_ambient=True)
    assert abs(back.material.ambient_intensity - 0.5) < 1e-12


def test_inverse_of_example_material():
    (m,) = parse_material_script(read("example.material"))
    mir = ogre_to_x3d_appearance(m).material
    assert mir.ambient_intensity == 0.508497
    assert mir.diffuse == (0.337255, 0.4, 0.788235)
    assert mir.specular == (1.0, 1.0, 1.0)
    # 25 is a truncated value; the inverse returns the middle of its bucket
    assert mir.shininess == 25.5 / 128
    assert abs(mir.shininess - 0.2) <= COLOR_TOLERANCE


def test_two_techniques_collapse():
    m = OgreMaterial("two", [Technique([Pass(diffuse=(1, 0, 0))]), Technique([Pass(diffuse=(0, 1, 0))])])
    diags = []
    assert ogre_to_x3d_appearance(m, diags).material.diffuse == (1, 0, 0)
    assert codes(diags) == ["technique-collapsed"]


_unit = st.floats(0, 1, allow_nan=False)
_rgb = st.tuples(_unit, _unit, _unit)


@given(_unit, _rgb, _rgb, _unit, st.none() | _rgb, _unit.filter(lambda t: t < 1))
def test_material_round_trip_within_tolerance(ai, diffuse, specular, shininess, emissive, transparency):
    mir = MaterialIR(ai, diffuse, specular, shininess, emissive, transparency)
    text = serialize_material_script([x3d_to_ogre_material(AppearanceIR(material=mir), "m")])
    back = ogre_to_x3d_appearance(parse_material_script(text)[0]).material
    for a, b in [(mir.ambient_intensity, back.ambient_intensity), (mir.shininess, back.shininess),
                 (mir.transparency, back.transparency)]:
        assert abs(a - b) <= COLOR_TOLERANCE
    assert np.allclose(mir.diffuse, back.diffuse, atol=COLOR_TOLERANCE, rtol=0)
    assert np.allclose(mir.specular, back.specular, atol=COLOR_TOLERANCE, rtol=0)
    assert (mir.emissive is None) == (back.emissive is None)


# -- PBS and custom appearance ----------------------------------------------

def test_physical_material_mapping():
    pm = parse_x3d(read("pbs.x3d")).root.children[0].children[0]
    h = physical_material_to_hlms(pm, "Example")
    assert (h.name, h.shader_type) == ("Example", "PBS")
    assert h.properties == [("diffuse", ("0.22", "0.3", "0.5")), ("roughness", ("0.4",)),
                            ("metallic", ("0.76",))]


def test_physical_material_unmapped_field_forwarded():
    h = physical_material_to_hlms(Node("PhysicalMaterial", (("occlusionStrength", "0.5"),)), "x")
    assert h.properties == [("occlusionStrength", ("0.5",))]


def test_empty_physical_material():
    assert physical_material_to_hlms(Node("PhysicalMaterial"), "x").properties == []


def test_pbs_back_to_physical_material():
    h = physical_material_to_hlms(parse_x3d(read("pbs.x3d")).root.children[0].children[0], "Example")
    node = hlms_to_x3d(h)
    assert node.kind is NodeKind.Appearance and node.def_name == "Example"
    assert node.children[0].attrs == (("albedoFactor", "0.22 0.3 0.5"), ("roughnessFactor", "0.4"),
                                      ("metallicFactor", "0.76"))


def test_hlms_sample_becomes_custom_appearance():
    (h,) = parse_material_script(read("pbs.material"))
    node = hlms_to_x3d(h)
    assert node.kind is NodeKind.CustomAppearance and node.get("type") == "PBS"
    assert [c.get("name") for c in node.children] == ["diffuse", "specular", "roughness", "fresnel"]


def test_custom_appearance_sample():
    doc = parse_x3d(read("custom_appearance.x3d"))
    ca = doc.root.children[1].children[0]
    h = custom_appearance_to_hlms(ca, "Example", doc)
    assert h == HlmsMaterial("Example", "PBS", [("roughnessFactor", ("0.4",)), ("albedoMap", ("albedo.png",))])


def test_custom_appearance_zero_fields():
    doc = parse_x3d(b"<Scene><ComposedShader DEF='S'/><Shape><CustomAppearance type='S'/></Shape></Scene>")
    h = custom_appearance_to_hlms(doc.root.children[1].children[0], "n", doc)
    assert h.properties == []


def test_custom_appearance_shader_from_registry():
    ca = Node("CustomAppearance", (("type", "Toon"),))
    assert custom_appearance_to_hlms(ca, "n", None, ResourceRegistry(shader_names={"Toon"})).shader_type == "Toon"


def test_unknown_shader():
    with pytest.raises(TranslationError) as exc:
        custom_appearance_to_hlms(Node("CustomAppearance", (("type", "Unlisted"),)), "n")
    assert exc.value.code == "unknown-shader"


@given(st.lists(st.text(alphabet="abcdefXYZ", min_size=1, max_size=8), unique=True, max_size=6))
def test_custom_field_names_forwarded_verbatim(names):
    kids = tuple(Node("field", (("name", n), ("value", "1"))) for n in names)
    ca = Node("CustomAppearance", (("type", "S"),), kids)
    h = custom_appearance_to_hlms(ca, "n", None, ResourceRegistry(shader_names={"S"}))
    assert [k for k, _ in h.properties] == names


# -- geometry ---------------------------------------------------------------

def shapes_of(doc):
    return [shape_from_node(n, doc) for n in doc.nodes()
            if n.kind is NodeKind.Shape and n.child(NodeKind.IndexedTriangleSet) is not None]


def test_sample_geometry_structure():
    doc = parse_x3d(sample_shape_x3d())
    mesh, mats = x3d_to_ogre_mesh(shapes_of(doc), "sample", doc)
    (sub,) = mesh.submeshes
    assert sub.material == "Example" and not sub.use_shared_vertices
    assert len(sub.faces) == 815 and sub.geometry.vertexcount == 531
    assert sub.geometry.buffers[0].records.dtype.names == ("position", "normal")
    assert [m.name for m in mats] == ["Example"]


def test_single_triangle():
    doc = parse_x3d(b"<Shape><IndexedTriangleSet index='0 1 2'><Coordinate point='0 0 0 1 0 0 0 1 0'/>"
                    b"</IndexedTriangleSet></Shape>")
    mesh, mats = x3d_to_ogre_mesh(shapes_of(doc), "tri", doc)
    (sub,) = mesh.submeshes
    assert sub.faces.tolist() == [[0, 1, 2]] and sub.geometry.vertexcount == 3
    assert sub.material == "" and mats == []


SHARED = b"""<Scene>
<Shape><Appearance DEF='a'><Material/></Appearance>
  <IndexedTriangleSet index='0 1 2'><Coordinate DEF='pts' point='0 0 0 1 0 0 0 1 0 1 1 0'/></IndexedTriangleSet></Shape>
<Shape><Appearance><Material diffuseColor='1 0 0'/></Appearance>
  <IndexedTriangleSet index='1 3 2'><Coordinate USE='pts'/></IndexedTriangleSet></Shape>
</Scene>"""


def test_shared_coordinate():
    doc = parse_x3d(SHARED)
    mesh, mats = x3d_to_ogre_mesh(shapes_of(doc), "m", doc)
    assert mesh.shared_geometry is not None and mesh.shared_geometry.vertexcount == 4
    assert [s.use_shared_vertices for s in mesh.submeshes] == [True, True]
    assert [s.material for s in mesh.submeshes] == ["a", "m/mat1"]
    assert [m.name for m in mats] == ["a", "m/mat1"]
    again = parse_mesh_xml(serialize_mesh_xml(mesh))
    assert again == mesh
    assert all(s.faces.max() < again.shared_geometry.vertexcount for s in again.submeshes)


def test_shared_coordinate_back_to_x3d():
    doc = parse_x3d(SHARED)
    mesh, _ = x3d_to_ogre_mesh(shapes_of(doc), "m", doc)
    group = ogre_mesh_to_x3d(mesh, ResourceRegistry(material_names={"a", "m/mat1"}), "m")
    assert group.kind is NodeKind.Group and len(group.children) == 2
    c0 = group.children[0].child(NodeKind.IndexedTriangleSet).child(NodeKind.Coordinate)
    c1 = group.children[1].child(NodeKind.IndexedTriangleSet).child(NodeKind.Coordinate)
    assert c0.def_name == "m/shared/coords" and c1.use_name == "m/shared/coords"
    out = SceneDocument(Node("Scene", children=(group,)))
    back = parse_x3d(serialize_x3d(out))
    tris = [s.triangles() for s in shapes_of(back)]
    assert tris == [s.triangles() for s in shapes_of(doc)]
    assert [s.coord_key for s in shapes_of(back)] == ["m/shared/coords"] * 2


def test_generated_name_avoids_def_collision():
    doc = parse_x3d(b"<Scene><Group DEF='m/mat0'/><Shape><Appearance><Material/></Appearance>"
                    b"<IndexedTriangleSet index='0 1 2'><Coordinate point='0 0 0 1 0 0 0 1 0'/>"
                    b"</IndexedTriangleSet></Shape></Scene>")
    mesh, mats = x3d_to_ogre_mesh(shapes_of(doc), "m", doc)
    assert mesh.submeshes[0].material == "m/mat0~1" == mats[0].name


@pytest.mark.parametrize("its, code", [
    (b"<IndexedTriangleSet index='0 1 3'><Coordinate point='0 0 0 1 0 0 0 1 0'/></IndexedTriangleSet>",
     "index-out-of-range"),
    (b"<IndexedTriangleSet index='0 1 2'><Coordinate point='0 0 0 1 0 0 0 1 0'/><Normal vector='0 0 1'/>"
     b"</IndexedTriangleSet>", "attribute-count-mismatch"),
    (b"<IndexedTriangleSet index='0 1 2 -1'><Coordinate point='0 0 0 1 0 0 0 1 0'/></IndexedTriangleSet>",
     "sentinel-index"),
    (b"<IndexedTriangleSet index='0 1'><Coordinate point='0 0 0 1 0 0 0 1 0'/></IndexedTriangleSet>",
     "bad-index-count"),
    (b"<IndexedTriangleSet index='0 1 2'/>", "missing-coordinate"),
])
def test_geometry_errors(its, code):
    doc = parse_x3d(b"<Shape>" + its + b"</Shape>")
    with pytest.raises(TranslationError) as exc:
        x3d_to_ogre_mesh([shape_from_node(doc.root.children[0], doc)], "m", doc)
    assert exc.value.code == code


def test_one_submesh_internal_material():
    mesh = OgreMesh([Submesh("Example", [0, 1, 2], False,
                             VertexData(3, (VertexBuffer.from_arrays(np.eye(3)),)))])
    shape = ogre_mesh_to_x3d(mesh, name="m", defs={"Example"})
    app = shape.child(NodeKind.Appearance)
    assert (app.use_name, app.link) == ("Example", "internal")
    assert b"<Appearance USE=\"Example\"/>" in serialize_x3d(SceneDocument(Node("Scene", children=(shape,))))


def test_unresolved_material_warns():
    mesh = OgreMesh([Submesh("Nowhere", [0, 1, 2], False, VertexData(3, (VertexBuffer.from_arrays(np.eye(3)),)))])
    diags = []
    shape = ogre_mesh_to_x3d(mesh, diagnostics=diags)
    assert codes(diags) == ["unresolved-material"]
    assert shape.child(NodeKind.Appearance).link == "external"


def test_empty_mesh_to_x3d():
    diags = []
    node = ogre_mesh_to_x3d(OgreMesh(), diagnostics=diags)
    assert node.kind is NodeKind.Group and node.children == ()
    assert codes(diags) == ["empty-mesh"]


# -- resource resolution ----------------------------------------------------

def test_resolve_external_mesh():
    doc = parse_x3d(b'<Scene><Shape USE="Sinbad.mesh"/></Scene>')
    r = resolve_resource("Sinbad.mesh", doc, ResourceRegistry(mesh_names={"Sinbad.mesh"}), "shape")
    assert (r.kind, r.namespace) == ("external", "mesh_names")


def test_resolve_internal_wins():
    doc = parse_x3d(b'<Scene><Appearance DEF="Example"/></Scene>')
    r = resolve_resource("Example", doc, ResourceRegistry(material_names={"Example"}), "appearance")
    assert r.internal and r.node.kind is NodeKind.Appearance


def test_resolve_nothing():
    with pytest.raises(TranslationError) as exc:
        resolve_resource("x", parse_x3d(b"<Scene/>"), ResourceRegistry(), "shape")
    assert exc.value.code == "unresolved-use"


def test_resolve_slot_namespace_matters():
    reg = ResourceRegistry(material_names={"Sinbad.mesh"})
    with pytest.raises(TranslationError):
        resolve_resource("Sinbad.mesh", parse_x3d(b"<Scene/>"), reg, "shape")


def test_manifest_registry():
    reg = ResourceRegistry.from_manifest("# pool\nSinbad.mesh\nOgre/ExampleMaterial\ncompositor:Invert\n"
                                         "shader: Toon\n")
    assert reg.mesh_names == {"Sinbad.mesh"} and reg.material_names == {"Ogre/ExampleMaterial"}
    assert reg.compositor_names == {"Invert"} and reg.shader_names == {"Toon"}


def test_directory_registry(tmp_path):
    (tmp_path / "Sinbad.mesh.xml").write_text("<mesh/>")
    (tmp_path / "a.material").write_bytes(read("example.material") + b"\n" + read("pbs.material").replace(
        b"Example", b"Shiny"))
    (tmp_path / "nv.compositor").write_bytes(read("night_vision.compositor"))
    (tmp_path / "broken.material").write_text("material {")
    diags = []
    reg = ResourceRegistry.from_directory(tmp_path, diagnostics=diags)
    assert reg.mesh_names == {"Sinbad.mesh"}
    assert reg.material_names == {"Example", "Shiny"}
    assert reg.compositor_names == {"Night Vision"} and reg.shader_names == {"PBS"}
    assert codes(diags) == ["registry-skip"]


# -- whole scenes -----------------------------------------------------------

REGISTRY = ResourceRegistry(mesh_names={"Sinbad.mesh", "Sindbad.mesh"}, material_names={"Ogre/ExampleMaterial"})


def test_redirect_sample_report():
    report = scene_to_ogre(parse_x3d(read("redirect.x3d")), "redirect", REGISTRY)
    assert report.ok, report.diagnostics
    refs = [(r["slot"], r["name"]) for r in report.external_refs]
    assert refs == [("shape", "Sinbad.mesh"), ("appearance", "Ogre/ExampleMaterial"), ("geometry", "Sindbad.mesh")]
    override = report.external_refs[2]["material_override"]
    assert override == "Sindbad.mesh/override0"
    assert [s.material for s in report.mesh.submeshes] == ["Ogre/ExampleMaterial"]
    assert [m.name for m in report.materials] == [override]
    assert report.materials[0].first_pass.diffuse == (1.0, 0.0, 0.0)
    json.loads(report.to_json())


def test_redirect_without_registry_errors():
    report = scene_to_ogre(parse_x3d(read("redirect.x3d")), "redirect")
    assert not report.ok
    assert codes(report.diagnostics).count("unresolved-use") == 3


def test_flipper_transform_report():
    report = scene_to_ogre(parse_x3d(read("flipper.x3d")), "flipper")
    assert report.ok
    (t,) = report.transforms
    assert t["name"] == "body" and t["submeshes"] == [0]
    assert t["outer"]["translation"] == [0.0, 1.0, 0.0]
    w, x, y, z = t["outer"]["orientation"]
    assert np.allclose([w, x, y, z], [math.cos(math.pi / 4), 0, math.sin(math.pi / 4), 0])
    assert t["inner"] == {"translation": [0.0, 0.0, 0.0], "orientation": [1.0, 0.0, 0.0, 0.0],
                          "scale": [1.0, 1.0, 1.0]}


def test_shear_in_scene_reported_with_line():
    doc = parse_x3d(b"<Scene>\n<Transform scale='2 1 1' scaleOrientation='0 0 1 0.7'/></Scene>")
    report = scene_to_ogre(doc, "s")
    (d,) = [d for d in report.diagnostics if d.code == "shear-not-representable"]
    assert d.line == 2


def test_empty_scene_translates_to_nothing():
    report = scene_to_ogre(parse_x3d(b"<Scene/>"), "empty")
    assert report.ok and report.mesh is None and report.materials == []


def test_standalone_material_round_trip():
    doc = parse_x3d(b"<Scene><Shape><Appearance DEF='Lonely'><Material diffuseColor='0 1 0'/></Appearance>"
                    b"</Shape></Scene>")
    report = scene_to_ogre(doc, "x")
    assert report.mesh is None and [m.name for m in report.materials] == ["Lonely"]
    back = ogre_to_scene(None, report.materials)
    assert scene_divergence(doc, back) is None


def test_flipper_round_trip():
    doc = parse_x3d(read("flipper.x3d"))
    report = scene_to_ogre(doc, "flipper")
    back = ogre_to_scene(report.mesh, report.materials, name="flipper")
    assert scene_divergence(doc, back) is None
    again = scene_to_ogre(back, "flipper")
    assert mesh_divergence(report.mesh, again.mesh) is None


@given(st.integers(0, 2**32 - 1))
def test_random_material_scene_round_trip(seed):
    doc = parse_x3d(random_material_scene(np.random.default_rng(seed)))
    report = scene_to_ogre(doc, "r")
    assert report.ok
    text = serialize_material_script(report.materials)
    mesh = parse_mesh_xml(serialize_mesh_xml(report.mesh))
    back = parse_x3d(serialize_x3d(ogre_to_scene(mesh, parse_material_script(text), name="r")))
    assert scene_divergence(doc, back) is None


def test_pbs_and_custom_scene_round_trip():
    doc = parse_x3d(b"<Scene><ComposedShader DEF='Toon'/>"
                    b"<Shape><Appearance DEF='P'><PhysicalMaterial roughnessFactor='0.4'/></Appearance></Shape>"
                    b"<Shape><CustomAppearance DEF='C' type='Toon'><field name='edge' value='2'/>"
                    b"</CustomAppearance></Shape></Scene>")
    report = scene_to_ogre(doc, "x")
    assert report.ok
    assert [(m.name, m.shader_type) for m in report.materials] == [("P", "PBS"), ("C", "Toon")]
    back = ogre_to_scene(None, report.materials)
    again = scene_to_ogre(back, "x")
    assert again.materials == report.materials
