"""One test per acceptance criterion; the terminal summary prints PASS/FAIL per criterion."""
from __future__ import annotations

import math
import re
import time

import numpy as np
import pytest

from conftest import DATA, read
from gen import sample_shape_x3d, random_material_scene, random_mesh
from oracles import oracle_matrix, rodrigues
from scenebridge.compositor import (
    CompositorGraph, build_compositor, from_ogre_compositor, schedule_labels, to_ogre_compositor,
    validate_and_schedule,
)
from scenebridge.compositor_script import parse_compositor_script, serialize_compositor_script
from scenebridge.errors import CompositorError, ConversionError, ShearNotRepresentable
from scenebridge.material import parse_material_script, serialize_material_script
from scenebridge.mesh import parse_mesh_xml, serialize_mesh_xml
from scenebridge.roundtrip import COLOR_TOLERANCE, scene_divergence
from scenebridge.routes import rewrite_routes
from scenebridge.script import tokenize_script
from scenebridge.transform import (
    TransformParams, decompose_transform, is_axis_permutation, matrix_to_quat, quat_to_axis_angle,
    signed_axis_rotations,
)
from scenebridge.translate import ResourceRegistry, ogre_to_scene, resolve_resource, scene_to_ogre
from scenebridge.x3d import parse_x3d, serialize_x3d

acceptance = pytest.mark.acceptance


@acceptance("material reproduction")
def test_material_reproduction():
    doc = parse_x3d(b"<Scene><Shape>" + read("appearance_example.x3d") + b"</Shape></Scene>")
    report = scene_to_ogre(doc, "sample")
    text = serialize_material_script(report.materials)
    canonical = serialize_material_script(parse_material_script(read("example.material")))
    produced = [(t.kind, t.text) for t in tokenize_script(text)]
    assert produced == [(t.kind, t.text) for t in tokenize_script(canonical)]
    assert text == canonical
    assert b"specular 1.0 1.0 1.0 25" in text


@acceptance("geometry structure reproduction")
def test_geometry_structure_reproduction():
    report = scene_to_ogre(parse_x3d(sample_shape_x3d(531, 815)), "sample")
    assert report.ok
    text = serialize_mesh_xml(report.mesh).decode()
    assert re.findall(r"<submesh [^>]*>", text) == [
        '<submesh material="Example" usesharedvertices="false" operationtype="triangle_list">']
    assert re.findall(r"<faces [^>]*>", text) == ['<faces count="815">']
    assert re.findall(r"<geometry [^>]*>", text) == ['<geometry vertexcount="531">']
    assert re.findall(r"<vertexbuffer [^>]*>", text) == ['<vertexbuffer positions="true" normals="true">']
    assert text.count("<face ") == 815 and text.count("<vertex>") == 531


@acceptance("ROUTE rewrite")
def test_route_rewrite():
    out = rewrite_routes(parse_x3d(read("route_in.x3d")))
    expected = parse_x3d(read("route_out.x3d"))
    assert out.root == expected.root and out.routes == ()
    assert serialize_x3d(out) == serialize_x3d(expected)
    again = rewrite_routes(out)
    assert again == out and serialize_x3d(again) == serialize_x3d(out)


def _generic_axis(rng):
    while True:
        axis = rng.normal(size=3)
        angle = rng.uniform(0.05, math.pi - 0.05)
        if not is_axis_permutation(rodrigues(axis, angle), 1e-3):
            return (*axis, angle)


@acceptance("transform decomposition property")
def test_transform_decomposition_property():
    rng = np.random.default_rng(20240611)
    axis_rots = [quat_to_axis_angle(matrix_to_quat(r)) for r in signed_axis_rotations()]
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        scale = rng.uniform(0.1, 5, 3) * rng.choice([-1, 1], 3)
        p = TransformParams(
            tuple(rng.uniform(-100, 100, 3)), tuple(rng.uniform(-10, 10, 3)),
            (*rng.normal(size=3), rng.uniform(-2 * math.pi, 2 * math.pi)),
            tuple(scale), axis_rots[rng.integers(24)],
        )
        worst = max(worst, float(np.max(np.abs(decompose_transform(p).matrix() - oracle_matrix(p)))))
    fired = 0
    for _ in range(1_000):
        scale = rng.uniform(0.1, 5, 3)
        try:
            decompose_transform(TransformParams(scale=tuple(scale), scale_orientation=_generic_axis(rng)))
        except ShearNotRepresentable:
            fired += 1
    elapsed = time.perf_counter() - start
    print(f"max error {worst:.3g}, shear detections {fired}/1000, {elapsed:.2f}s")
    assert worst < 1e-9
    assert fired == 1000
    assert elapsed < 5.0


@acceptance("compositor round trip")
def test_compositor_round_trip():
    (script,) = parse_compositor_script(read("night_vision.compositor"))
    text = serialize_compositor_script([to_ogre_compositor(from_ogre_compositor(script))])
    assert parse_compositor_script(text) == [script]
    assert serialize_compositor_script(parse_compositor_script(text)) == text

    graph = build_compositor(parse_x3d(read("gauss_blur.x3d")).defs["GaussBlur"])
    assert schedule_labels(validate_and_schedule(graph)) == ["rt0-pass", "rt1-pass", "output"]

    swapped = CompositorGraph(graph.name, graph.textures, graph.passes[::-1], graph.output)
    with pytest.raises(CompositorError) as exc:
        validate_and_schedule(swapped)
    assert exc.value.code == "rt-read-before-write"


@acceptance("USE-fallback precedence")
def test_use_fallback_precedence():
    registry = ResourceRegistry(material_names={"Example"})
    shape = (b"<Shape><Appearance USE='Example'/><IndexedTriangleSet index='0 1 2'>"
             b"<Coordinate point='0 0 0 1 0 0 0 1 0'/></IndexedTriangleSet></Shape>")
    with_def = parse_x3d(b"<Scene><Shape><Appearance DEF='Example'><Material/></Appearance></Shape>"
                         + shape + b"</Scene>")
    without_def = parse_x3d(b"<Scene>" + shape + b"</Scene>")

    assert resolve_resource("Example", with_def, registry, "appearance").kind == "internal"
    assert resolve_resource("Example", without_def, registry, "appearance").kind == "external"

    inside = scene_to_ogre(with_def, "m", registry)
    outside = scene_to_ogre(without_def, "m", registry)
    assert inside.ok and outside.ok
    assert inside.external_refs == [] and [m.name for m in inside.materials] == ["Example"]
    assert [r["name"] for r in outside.external_refs] == ["Example"] and outside.materials == []


@acceptance("round-trip suites")
def test_material_scene_round_trips():
    for seed in range(200):
        doc = parse_x3d(random_material_scene(np.random.default_rng(seed)))
        report = scene_to_ogre(doc, f"scene{seed}")
        assert report.ok, report.diagnostics
        mesh = parse_mesh_xml(serialize_mesh_xml(report.mesh))
        mats = parse_material_script(serialize_material_script(report.materials))
        back = parse_x3d(serialize_x3d(ogre_to_scene(mesh, mats, name=f"scene{seed}")))
        assert scene_divergence(doc, back, COLOR_TOLERANCE) is None, seed


@acceptance("round-trip suites")
def test_mesh_xml_fixpoints():
    rng = np.random.default_rng(7)
    for i in range(200):
        text = serialize_mesh_xml(random_mesh(rng))
        mesh = parse_mesh_xml(text)
        assert serialize_mesh_xml(mesh) == text, i
        assert parse_mesh_xml(serialize_mesh_xml(mesh)) == mesh


# -- fuzzing ------------------------------------------------------------------

_CORPUS = sorted(p for p in DATA.rglob("*") if p.is_file())
_SPLICE = [b"<", b">", b"{", b"}", b'"', b"'", b"\n", b"/", b"-1", b"USE=", b"DEF=", b"&", b"\x00", b"\xff",
           b"<![CDATA[", b"</", b"=", b"1e999", b"nan", b"-", b" ", b"technique", b"pass", b"input 0"]


def _mutate(data: bytes, rng) -> bytes:
    buf = bytearray(data)
    for _ in range(int(rng.integers(1, 6))):
        op = rng.integers(5)
        pos = int(rng.integers(0, len(buf) + 1))
        if op == 0 and buf:
            buf[min(pos, len(buf) - 1)] = int(rng.integers(256))
        elif op == 1:
            buf[pos:pos] = _SPLICE[rng.integers(len(_SPLICE))]
        elif op == 2:
            del buf[pos:pos + int(rng.integers(1, 16))]
        elif op == 3 and buf:
            a = int(rng.integers(0, len(buf)))
            buf[pos:pos] = buf[a:a + int(rng.integers(1, 32))]
        else:
            buf = buf[:pos]
    return bytes(buf)


def _exercise(name: str, data: bytes):
    if name.endswith(".mesh.xml"):
        mesh = parse_mesh_xml(data)
        scene = ogre_to_scene(mesh, name="fuzz")
        serialize_mesh_xml(mesh)
        scene_to_ogre(parse_x3d(serialize_x3d(scene)), "fuzz")
    elif name.endswith(".material"):
        mats = parse_material_script(data)
        serialize_material_script(mats)
        scene_to_ogre(parse_x3d(serialize_x3d(ogre_to_scene(None, mats))), "fuzz")
    elif name.endswith(".compositor"):
        scripts = parse_compositor_script(data)
        serialize_compositor_script(scripts)
        scene_to_ogre(parse_x3d(serialize_x3d(ogre_to_scene(None, (), scripts))), "fuzz")
    else:
        doc = parse_x3d(data)
        serialize_x3d(doc)
        report = scene_to_ogre(doc, "fuzz", ResourceRegistry(mesh_names={"Sinbad.mesh"}))
        if report.ok and report.mesh is not None:
            serialize_mesh_xml(report.mesh)
            serialize_material_script(report.materials)


@acceptance("fuzz robustness")
def test_fuzz_robustness():
    rng = np.random.default_rng(99)
    corpus = [(p.name, p.read_bytes()) for p in _CORPUS]
    crashes = []
    outcomes = {"value": 0, "diagnostic": 0}
    for i in range(10_000):
        name, seed = corpus[i % len(corpus)]
        data = _mutate(seed, rng)
        try:
            _exercise(name, data)
            outcomes["value"] += 1
        except ConversionError:
            outcomes["diagnostic"] += 1
        except Exception as exc:  # anything else is a crash
            crashes.append((name, data, repr(exc)))
    print(outcomes, f"crashes {len(crashes)}")
    assert not crashes, crashes[:3]
