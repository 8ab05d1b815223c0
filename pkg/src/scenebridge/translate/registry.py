"""External OGRE resource pool and internal-first USE resolution."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConversionError, TranslationError, warning
from ..x3d import Node, SceneDocument

SLOT_NAMESPACE = {
    "shape": "mesh_names",
    "geometry": "mesh_names",
    "appearance": "material_names",
    "compositor": "compositor_names",
    "shader": "shader_names",
}


@dataclass(frozen=True)
class ResourceRegistry:
    mesh_names: frozenset = frozenset()
    material_names: frozenset = frozenset()
    compositor_names: frozenset = frozenset()
    shader_names: frozenset = frozenset()

    def __post_init__(self):
        for ns in SLOT_NAMESPACE.values():
            object.__setattr__(self, ns, frozenset(getattr(self, ns)))

    def contains(self, name: str, slot: str) -> bool:
        return name in getattr(self, SLOT_NAMESPACE[slot])

    def merged(self, other: "ResourceRegistry") -> "ResourceRegistry":
        return ResourceRegistry(**{ns: getattr(self, ns) | getattr(other, ns)
                                   for ns in set(SLOT_NAMESPACE.values())})

    @classmethod
    def from_manifest(cls, text: str) -> "ResourceRegistry":
        """One name per line, optionally prefixed ``mesh:``, ``material:``,
        ``compositor:`` or ``shader:``. Bare names ending in ``.mesh`` are
        meshes; other bare names are materials.
        """
        buckets = {ns: set() for ns in ("mesh", "material", "compositor", "shader")}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            prefix, sep, rest = line.partition(":")
            if sep and prefix in buckets:
                buckets[prefix].add(rest.strip())
            elif line.endswith(".mesh"):
                buckets["mesh"].add(line)
            else:
                buckets["material"].add(line)
        return cls(*(frozenset(buckets[k]) for k in ("mesh", "material", "compositor", "shader")))

    @classmethod
    def from_directory(cls, path, recursive=False, diagnostics: list | None = None) -> "ResourceRegistry":
        """Scan ``*.mesh``/``*.mesh.xml``, ``*.material`` and ``*.compositor`` files.

        Material and compositor names come from the script contents.
        """
        from ..compositor_script import parse_compositor_script
        from ..material import HlmsMaterial, parse_material_script

        diags = diagnostics if diagnostics is not None else []
        root = Path(path)
        files = sorted(root.rglob("*") if recursive else root.iterdir())
        meshes, mats, comps, shaders = set(), set(), set(), set()
        for f in files:
            if not f.is_file():
                continue
            name = f.name
            try:
                if name.endswith(".mesh.xml"):
                    meshes.add(name[:-4])
                elif name.endswith(".mesh"):
                    meshes.add(name)
                elif name.endswith(".material"):
                    for m in parse_material_script(f.read_bytes()):
                        mats.add(m.name)
                        if isinstance(m, HlmsMaterial):
                            shaders.add(m.shader_type)
                elif name.endswith(".compositor"):
                    comps.update(s.name for s in parse_compositor_script(f.read_bytes()))
            except ConversionError as exc:
                diags.append(warning("registry-skip", f"{f}: {exc}"))
        return cls(frozenset(meshes), frozenset(mats), frozenset(comps), frozenset(shaders))


@dataclass(frozen=True)
class Resolution:
    kind: str  # "internal" | "external"
    name: str
    node: Node | None = field(default=None, compare=False)
    namespace: str | None = None

    @property
    def internal(self) -> bool:
        return self.kind == "internal"


def resolve_resource(use_name: str, doc: SceneDocument, registry: ResourceRegistry, slot: str) -> Resolution:
    """DEF in the document wins; the registry is consulted only when that lookup fails."""
    if slot not in SLOT_NAMESPACE:
        raise ValueError(f"unknown slot {slot!r}")
    node = doc.defs.get(use_name)
    if node is not None:
        return Resolution("internal", use_name, node)
    if registry.contains(use_name, slot):
        return Resolution("external", use_name, namespace=SLOT_NAMESPACE[slot])
    raise TranslationError("unresolved-use", f"USE {use_name!r} matches no DEF and no {slot} resource")
