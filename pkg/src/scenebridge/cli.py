"""Command-line front end: convert, validate, inspect, roundtrip."""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .compositor import (
    build_compositor, from_ogre_compositor, graph_from_script, schedule_labels, suggest_order,
    validate_and_schedule,
)
from .compositor_script import parse_compositor_script, serialize_compositor_script
from .errors import ConversionError, Severity, error, has_errors, info
from .material import HlmsMaterial, parse_material_script, serialize_material_script
from .mesh import parse_mesh_xml, serialize_mesh_xml
from .roundtrip import mesh_divergence, scene_divergence, text_divergence
from .translate import ResourceRegistry, ogre_to_scene, scene_to_ogre
from .x3d import NodeKind, parse_x3d, serialize_x3d

OGRE_SUFFIXES = (".mesh.xml", ".material", ".compositor")
X3D_SUFFIXES = (".x3d", ".xml")


@dataclass
class CliConfig:
    command: str
    inputs: list[Path]
    out: Path = Path(".")
    direction: str | None = None  # "x3d-to-ogre" | "ogre-to-x3d"
    registry_dir: Path | None = None
    manifest: Path | None = None
    recursive: bool = False
    strict: bool = False
    shininess_scale: float = 128.0
    spec_ambient: bool = False
    suggest_order: bool = False
    jobs: int = 1


@dataclass
class Outcome:
    """Per-input result; diagnostics are buffered and printed in input order."""
    label: str
    diagnostics: list = field(default_factory=list)
    files: dict[str, bytes] = field(default_factory=dict)
    stdout: str = ""


def _kind(path: Path) -> str:
    name = path.name.lower()
    if name.endswith(".mesh.xml"):
        return "mesh"
    if name.endswith(".material"):
        return "material"
    if name.endswith(".compositor"):
        return "compositor"
    if name.endswith(X3D_SUFFIXES):
        return "x3d"
    return "unknown"


def _stem(path: Path) -> str:
    name = path.name
    for suf in OGRE_SUFFIXES + X3D_SUFFIXES:
        if name.lower().endswith(suf):
            return name[: -len(suf)]
    return path.stem


def load_registry(cfg: CliConfig, diags: list) -> ResourceRegistry:
    reg = ResourceRegistry()
    if cfg.registry_dir is not None:
        reg = reg.merged(ResourceRegistry.from_directory(cfg.registry_dir, cfg.recursive, diags))
    if cfg.manifest is not None:
        reg = reg.merged(ResourceRegistry.from_manifest(cfg.manifest.read_text(encoding="utf-8")))
    return reg


def _guard(outcome: Outcome, fn, *args):
    try:
        return fn(*args)
    except ConversionError as exc:
        outcome.diagnostics.extend(exc.diagnostics)
    except OSError as exc:
        outcome.diagnostics.append(error("io-error", str(exc)))
    return None


# -- convert ----------------------------------------------------------------

def _convert_x3d(path: Path, cfg: CliConfig, registry) -> Outcome:
    out = Outcome(str(path))

    def work():
        doc = parse_x3d(path.read_bytes())
        name = _stem(path)
        report = scene_to_ogre(doc, name, registry, cfg.shininess_scale, cfg.spec_ambient)
        out.diagnostics.extend(report.diagnostics)
        if not report.ok:
            return
        if report.mesh is not None:
            out.files[f"{name}.mesh.xml"] = serialize_mesh_xml(report.mesh)
        if report.materials:
            out.files[f"{name}.material"] = serialize_material_script(report.materials)
        if report.compositors:
            out.files[f"{name}.compositor"] = serialize_compositor_script(report.compositors)
        out.files[f"{name}.report.json"] = report.to_json().encode("utf-8")

    _guard(out, work)
    return out


def _load_ogre_group(paths, out: Outcome):
    mesh, materials, compositors = None, [], []
    for p in paths:
        kind = _kind(p)
        data = p.read_bytes()
        if kind == "mesh":
            if mesh is not None:
                raise ConversionError("multiple-meshes", f"{p}: only one mesh per output name")
            mesh = parse_mesh_xml(data, out.diagnostics)
        elif kind == "material":
            materials += parse_material_script(data, out.diagnostics)
        elif kind == "compositor":
            compositors += parse_compositor_script(data, out.diagnostics)
        else:
            raise ConversionError("unknown-input", f"{p}: not an OGRE resource file")
    return mesh, materials, compositors


def _convert_ogre(name: str, paths, cfg: CliConfig, registry) -> Outcome:
    out = Outcome(", ".join(map(str, paths)))

    def work():
        mesh, materials, compositors = _load_ogre_group(paths, out)
        doc = ogre_to_scene(mesh, materials, compositors, name, registry, out.diagnostics,
                            cfg.shininess_scale, cfg.spec_ambient)
        if not has_errors(out.diagnostics):
            out.files[f"{name}.x3d"] = serialize_x3d(doc)

    _guard(out, work)
    return out


def _ogre_groups(inputs) -> list[tuple[str, list[Path]]]:
    """Inputs sharing a base name (``a.mesh.xml`` + ``a.material``) become one scene."""
    groups: dict[str, list[Path]] = {}
    for p in inputs:
        groups.setdefault(_stem(p), []).append(p)
    return list(groups.items())


# -- validate ---------------------------------------------------------------

def _compositor_hints(graph, out: Outcome):
    try:
        order = suggest_order(graph)
        out.diagnostics.append(info("suggested-order", f"{graph.name}: {' -> '.join(order)}"))
    except ConversionError as exc:
        out.diagnostics.extend(exc.diagnostics)


def _validate(path: Path, cfg: CliConfig, registry) -> Outcome:
    out = Outcome(str(path))

    def work():
        kind = _kind(path)
        data = path.read_bytes()
        if kind == "x3d":
            doc = parse_x3d(data)
            report = scene_to_ogre(doc, _stem(path), registry, cfg.shininess_scale, cfg.spec_ambient)
            out.diagnostics.extend(report.diagnostics)
            if cfg.suggest_order:
                for n in doc.nodes():
                    if n.kind is NodeKind.Compositor and n.use_name is None:
                        graph = _guard(out, build_compositor, n)
                        if graph is not None:
                            _compositor_hints(graph, out)
        elif kind == "mesh":
            parse_mesh_xml(data, out.diagnostics)
        elif kind == "material":
            parse_material_script(data, out.diagnostics)
        elif kind == "compositor":
            for script in parse_compositor_script(data, out.diagnostics):
                graph = _guard(out, graph_from_script, script, out.diagnostics)
                if graph is not None and _guard(out, validate_and_schedule, graph, out.diagnostics) is None \
                        and cfg.suggest_order:
                    _compositor_hints(graph, out)
        else:
            raise ConversionError("unknown-input", f"unrecognised file type: {path.name}")

    _guard(out, work)
    return out


# -- inspect ----------------------------------------------------------------

def _inspect(path: Path, cfg: CliConfig, registry) -> Outcome:
    out = Outcome(str(path))

    def work():
        kind = _kind(path)
        data = path.read_bytes()
        summary: dict = {"file": path.name, "kind": kind}
        if kind == "x3d":
            doc = parse_x3d(data)
            out.diagnostics.extend(doc.diagnostics)
            summary["nodes"] = dict(Counter(n.tag for n in doc.nodes() if n is not doc.root))
            summary["defs"] = sorted(doc.defs)
            summary["routes"] = len(doc.routes)
            graphs = {}
            for n in doc.nodes():
                if n.kind is NodeKind.Compositor and n.use_name is None:
                    g = build_compositor(n)
                    graphs[g.name] = schedule_labels(validate_and_schedule(g, out.diagnostics))
            summary["compositors"] = graphs
        elif kind == "mesh":
            mesh = parse_mesh_xml(data, out.diagnostics)
            summary["shared_vertices"] = mesh.shared_geometry.vertexcount if mesh.shared_geometry else 0
            summary["submeshes"] = [
                {"material": s.material, "faces": len(s.faces), "usesharedvertices": s.use_shared_vertices,
                 "vertices": s.geometry.vertexcount if s.geometry is not None else None}
                for s in mesh.submeshes
            ]
        elif kind == "material":
            summary["materials"] = [
                {"name": m.name, "type": m.shader_type if isinstance(m, HlmsMaterial) else "classic"}
                for m in parse_material_script(data, out.diagnostics)
            ]
        elif kind == "compositor":
            summary["compositors"] = {
                s.name: schedule_labels(validate_and_schedule(from_ogre_compositor(s, out.diagnostics)))
                for s in parse_compositor_script(data, out.diagnostics)
            }
        else:
            raise ConversionError("unknown-input", f"unrecognised file type: {path.name}")
        out.stdout = json.dumps(summary, sort_keys=True, indent=2) + "\n"

    _guard(out, work)
    return out


# -- roundtrip --------------------------------------------------------------

def _roundtrip(path: Path, cfg: CliConfig, registry) -> Outcome:
    out = Outcome(str(path))
    scale, amb = cfg.shininess_scale, cfg.spec_ambient

    def diverged(why):
        out.diagnostics.append(error("roundtrip-divergence", why))

    def work():
        kind = _kind(path)
        data = path.read_bytes()
        name = _stem(path)
        if kind == "x3d":
            doc = parse_x3d(data)
            report = scene_to_ogre(doc, name, registry, scale, amb)
            out.diagnostics.extend(report.diagnostics)
            if not report.ok:
                return
            mesh = parse_mesh_xml(serialize_mesh_xml(report.mesh)) if report.mesh is not None else None
            mats = parse_material_script(serialize_material_script(report.materials))
            comps = parse_compositor_script(serialize_compositor_script(report.compositors))
            back = parse_x3d(serialize_x3d(ogre_to_scene(mesh, mats, comps, name, registry, [], scale, amb)))
            why = scene_divergence(doc, back)
            if why:
                diverged(why)
            return
        if kind == "mesh":
            mesh = parse_mesh_xml(data, out.diagnostics)
            local = registry.merged(ResourceRegistry(material_names={s.material for s in mesh.submeshes}))
            doc = parse_x3d(serialize_x3d(ogre_to_scene(mesh, (), (), name, local, [], scale, amb)))
            report = scene_to_ogre(doc, name, local, scale, amb)
            if not report.ok:
                out.diagnostics.extend(report.diagnostics)
                return
            again = report.mesh if report.mesh is not None else type(mesh)()
            why = mesh_divergence(mesh, again)
        elif kind == "material":
            mats = parse_material_script(data, out.diagnostics)
            doc = parse_x3d(serialize_x3d(ogre_to_scene(None, mats, (), name, registry, [], scale, amb)))
            report = scene_to_ogre(doc, name, registry, scale, amb)
            out.diagnostics.extend(d for d in report.diagnostics if d.severity is Severity.ERROR)
            why = text_divergence(serialize_material_script(mats), serialize_material_script(report.materials))
        elif kind == "compositor":
            scripts = parse_compositor_script(data, out.diagnostics)
            doc = parse_x3d(serialize_x3d(ogre_to_scene(None, (), scripts, name, registry, [], scale, amb)))
            report = scene_to_ogre(doc, name, registry, scale, amb)
            out.diagnostics.extend(d for d in report.diagnostics if d.severity is Severity.ERROR)
            why = text_divergence(serialize_compositor_script(scripts),
                                  serialize_compositor_script(report.compositors))
        else:
            raise ConversionError("unknown-input", f"unrecognised file type: {path.name}")
        if why:
            diverged(why)

    _guard(out, work)
    return out


# -- driver -----------------------------------------------------------------

def _emit(outcomes, cfg: CliConfig, stdout, stderr) -> int:
    failed = False
    for o in outcomes:
        for d in o.diagnostics:
            print(d.format(o.label), file=stderr)
        failed |= has_errors(o.diagnostics, cfg.strict)
        if o.stdout:
            stdout.write(o.stdout)
        if not has_errors(o.diagnostics, cfg.strict):
            for fname, payload in o.files.items():
                cfg.out.mkdir(parents=True, exist_ok=True)
                (cfg.out / fname).write_bytes(payload)
    return 1 if failed else 0


def run(cfg: CliConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    reg_diags: list = []
    try:
        registry = load_registry(cfg, reg_diags)
    except OSError as exc:
        print(error("io-error", str(exc)).format("registry"), file=stderr)
        return 1
    for d in reg_diags:
        print(d.format("registry"), file=stderr)
    if cfg.command == "convert" and cfg.direction == "ogre-to-x3d":
        jobs = [(lambda n=n, ps=ps: _convert_ogre(n, ps, cfg, registry)) for n, ps in _ogre_groups(cfg.inputs)]
    else:
        handler = {"convert": _convert_x3d, "validate": _validate, "inspect": _inspect,
                   "roundtrip": _roundtrip}[cfg.command]
        jobs = [(lambda p=p: handler(p, cfg, registry)) for p in cfg.inputs]
    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        outcomes = list(pool.map(lambda job: job(), jobs))
    status = _emit(outcomes, cfg, stdout, stderr)
    if has_errors(reg_diags, cfg.strict):
        status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="+", type=Path)
    common.add_argument("--registry", type=Path, help="directory of OGRE resources")
    common.add_argument("--manifest", type=Path, help="file listing OGRE resource names, one per line")
    common.add_argument("--recursive", action="store_true", help="scan the registry directory recursively")
    common.add_argument("--strict", action="store_true", help="treat warnings as errors")
    common.add_argument("--shininess-scale", type=float, default=128.0)
    common.add_argument("--spec-ambient", action="store_true",
                        help="ambient = ambientIntensity * diffuseColor instead of grey")
    common.add_argument("--suggest-order", action="store_true",
                        help="report a valid compositor pass order")
    common.add_argument("--jobs", "-j", type=int, default=1)

    p = argparse.ArgumentParser(prog="scenebridge", description="X3D <-> OGRE converter and validator")
    sub = p.add_subparsers(dest="command", required=True)
    conv = sub.add_parser("convert", parents=[common], help="translate between X3D and OGRE")
    way = conv.add_mutually_exclusive_group(required=True)
    way.add_argument("--to-ogre", dest="direction", action="store_const", const="x3d-to-ogre")
    way.add_argument("--to-x3d", dest="direction", action="store_const", const="ogre-to-x3d")
    conv.add_argument("--out", type=Path, default=Path("."))
    sub.add_parser("validate", parents=[common], help="run structural checks only")
    sub.add_parser("inspect", parents=[common], help="print a JSON summary")
    sub.add_parser("roundtrip", parents=[common], help="convert there and back and compare")
    return p


def parse_args(argv=None) -> CliConfig:
    ns = build_parser().parse_args(argv)
    if ns.shininess_scale <= 0:
        build_parser().error("--shininess-scale must be positive")
    return CliConfig(
        command=ns.command, inputs=list(ns.inputs), out=getattr(ns, "out", Path(".")),
        direction=getattr(ns, "direction", None), registry_dir=ns.registry, manifest=ns.manifest,
        recursive=ns.recursive, strict=ns.strict, shininess_scale=ns.shininess_scale,
        spec_ambient=ns.spec_ambient, suggest_order=ns.suggest_order, jobs=ns.jobs,
    )


def main(argv=None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
