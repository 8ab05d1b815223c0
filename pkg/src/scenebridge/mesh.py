"""OGRE XML mesh codec (triangle-list subset).

Vertex buffers are numpy structured arrays: one record per vertex with the
declared attributes stored contiguously, i.e. interleaved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _xml
from .errors import MeshFormatError, warning

_AXES = ("x", "y", "z")
_UVW = ("u", "v", "w")


def format_float(x: float) -> str:
    """Shortest round-trip decimal, without a trailing ``.0``."""
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def vertex_dtype(positions=True, normals=False, texcoord_dims=()) -> np.dtype:
    fields = []
    if positions:
        fields.append(("position", "f8", (3,)))
    if normals:
        fields.append(("normal", "f8", (3,)))
    for i, d in enumerate(texcoord_dims):
        fields.append((f"texcoord{i}", "f8", (d,)))
    return np.dtype(fields)


@dataclass(eq=False)
class VertexBuffer:
    records: np.ndarray

    @classmethod
    def from_arrays(cls, positions=None, normals=None, texcoords=()):
        arrays = [a for a in (positions, normals, *texcoords) if a is not None]
        n = len(arrays[0]) if arrays else 0
        dims = tuple(np.asarray(t).reshape(n, -1).shape[1] for t in texcoords)
        rec = np.zeros(n, dtype=vertex_dtype(positions is not None, normals is not None, dims))
        if positions is not None:
            rec["position"] = np.asarray(positions, dtype=float).reshape(n, 3)
        if normals is not None:
            rec["normal"] = np.asarray(normals, dtype=float).reshape(n, 3)
        for i, t in enumerate(texcoords):
            rec[f"texcoord{i}"] = np.asarray(t, dtype=float).reshape(n, -1)
        return cls(rec)

    @property
    def has_positions(self):
        return "position" in self.records.dtype.names

    @property
    def has_normals(self):
        return "normal" in self.records.dtype.names

    @property
    def texcoord_dims(self) -> tuple[int, ...]:
        names = self.records.dtype.names
        return tuple(self.records.dtype[n].shape[0] for n in names if n.startswith("texcoord"))

    @property
    def texcoord_sets(self):
        return len(self.texcoord_dims)

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, VertexBuffer):
            return NotImplemented
        return self.records.dtype == other.records.dtype and np.array_equal(self.records, other.records)


@dataclass(eq=False)
class VertexData:
    vertexcount: int
    buffers: tuple[VertexBuffer, ...] = ()

    def attribute(self, name):
        for b in self.buffers:
            if b.records.dtype.names and name in b.records.dtype.names:
                return b.records[name]
        return None

    def __eq__(self, other):
        if not isinstance(other, VertexData):
            return NotImplemented
        return self.vertexcount == other.vertexcount and tuple(self.buffers) == tuple(other.buffers)


@dataclass(eq=False)
class Submesh:
    material: str
    faces: np.ndarray
    use_shared_vertices: bool = False
    geometry: VertexData | None = None
    operation_type: str = "triangle_list"
    extras: tuple[str, ...] = ()

    def __post_init__(self):
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

    def __eq__(self, other):
        if not isinstance(other, Submesh):
            return NotImplemented
        return (
            self.material == other.material
            and self.use_shared_vertices == other.use_shared_vertices
            and self.operation_type == other.operation_type
            and np.array_equal(self.faces, other.faces)
            and self.geometry == other.geometry
            and self.extras == other.extras
        )


@dataclass(eq=False)
class OgreMesh:
    submeshes: list[Submesh] = field(default_factory=list)
    shared_geometry: VertexData | None = None
    extras: tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, OgreMesh):
            return NotImplemented
        return (
            self.shared_geometry == other.shared_geometry
            and list(self.submeshes) == list(other.submeshes)
            and self.extras == other.extras
        )

    def governing_geometry(self, sub: Submesh) -> VertexData | None:
        return self.shared_geometry if sub.use_shared_vertices else sub.geometry


def validate_mesh(mesh: OgreMesh):
    for i, sub in enumerate(mesh.submeshes):
        if sub.operation_type != "triangle_list":
            raise MeshFormatError("unsupported-operation-type",
                                  f"submesh {i}: operationtype {sub.operation_type!r}")
        if sub.use_shared_vertices:
            if mesh.shared_geometry is None:
                raise MeshFormatError("missing-shared-geometry",
                                      f"submesh {i} uses shared vertices but the mesh has none")
            if sub.geometry is not None:
                raise MeshFormatError("shared-and-own-geometry",
                                      f"submesh {i} uses shared vertices and has own geometry")
        elif sub.geometry is None:
            raise MeshFormatError("missing-geometry", f"submesh {i} has no geometry")
        geo = mesh.governing_geometry(sub)
        if sub.faces.size and (sub.faces.min() < 0 or sub.faces.max() >= geo.vertexcount):
            raise MeshFormatError("face-index-out-of-range",
                                  f"submesh {i}: face index outside 0..{geo.vertexcount - 1}")
    for geo in filter(None, [mesh.shared_geometry, *(s.geometry for s in mesh.submeshes)]):
        for b in geo.buffers:
            if len(b) != geo.vertexcount:
                raise MeshFormatError("count-mismatch",
                                      f"vertex buffer holds {len(b)} vertices, vertexcount is {geo.vertexcount}")


# -- parsing ----------------------------------------------------------------

def _err(code, msg, el):
    return MeshFormatError(code, msg, el.line, el.column)


def _int_attr(el, name, required=True):
    v = el.get(name)
    if v is None:
        if required:
            raise _err("missing-attribute", f"<{el.tag}> needs {name}", el)
        return None
    try:
        return int(v)
    except ValueError:
        raise _err("bad-number", f"{name}={v!r} is not an integer", el) from None


def _bool_attr(el, name, default):
    v = el.get(name)
    if v is None:
        return default
    if v.lower() in ("true", "1"):
        return True
    if v.lower() in ("false", "0"):
        return False
    raise _err("bad-boolean", f"{name}={v!r}", el)


def _floats(el, names, tag):
    out = []
    for n in names:
        v = el.get(n)
        if v is None:
            raise _err("missing-attribute", f"<{tag}> needs {n}", el)
        try:
            out.append(float(v))
        except ValueError:
            raise _err("bad-number", f"{n}={v!r} is not a number", el) from None
    return out


_BUFFER_FLAGS = {"positions", "normals", "texture_coords", "binormals", "tangents",
                 "colours_diffuse", "colours_specular", "tangent_dimensions"}


def _parse_buffer(el) -> VertexBuffer:
    positions = _bool_attr(el, "positions", False)
    normals = _bool_attr(el, "normals", False)
    ntex = _int_attr(el, "texture_coords", required=False) or 0
    if ntex < 0 or ntex > 8:
        raise _err("bad-number", f"texture_coords={ntex}", el)
    dims = []
    for i in range(ntex):
        spec = el.get(f"texture_coord_dimensions_{i}", "2")
        d = spec[5:] if spec.startswith("float") else spec
        if d not in ("1", "2", "3"):
            raise _err("bad-attribute", f"texture_coord_dimensions_{i}={spec!r}", el)
        dims.append(int(d))
    for k, v in el.attrs:
        if k in _BUFFER_FLAGS - {"positions", "normals", "texture_coords"} and v.lower() == "true":
            raise _err("unsupported-attribute", f"vertex attribute {k!r} is not supported", el)
    vertices = [c for c in el.children if c.tag == "vertex"]
    rec = np.zeros(len(vertices), dtype=vertex_dtype(positions, normals, dims))
    for vi, v in enumerate(vertices):
        tcs = []
        seen = {"position": 0, "normal": 0}
        for c in v.children:
            if c.tag == "position" and positions:
                rec["position"][vi] = _floats(c, _AXES, "position")
                seen["position"] += 1
            elif c.tag == "normal" and normals:
                rec["normal"][vi] = _floats(c, _AXES, "normal")
                seen["normal"] += 1
            elif c.tag == "texcoord" and len(tcs) < ntex:
                tcs.append(c)
            else:
                raise _err("bad-vertex", f"undeclared <{c.tag}> in vertex {vi}", c)
        if seen["position"] != int(positions) or seen["normal"] != int(normals) or len(tcs) != ntex:
            raise _err("bad-vertex", f"vertex {vi} does not carry exactly the declared attributes", v)
        for ti, c in enumerate(tcs):
            rec[f"texcoord{ti}"][vi] = _floats(c, _UVW[:dims[ti]], "texcoord")
    return VertexBuffer(rec)


def _parse_geometry(el) -> VertexData:
    count = _int_attr(el, "vertexcount")
    buffers = []
    for c in el.children:
        if c.tag != "vertexbuffer":
            raise _err("unexpected-element", f"<{c.tag}> inside <{el.tag}>", c)
        b = _parse_buffer(c)
        if len(b) != count:
            raise _err("count-mismatch", f"vertexcount={count} but buffer holds {len(b)} vertices", c)
        buffers.append(b)
    if count and not buffers:
        raise _err("count-mismatch", f"vertexcount={count} but no vertex buffer", el)
    return VertexData(count, tuple(buffers))


class _MeshReader:
    def __init__(self, data: bytes, diagnostics):
        self.data = data
        self.diags = diagnostics

    def raw(self, el):
        self.diags.append(warning("passthrough", f"<{el.tag}> kept as opaque block", el.line, el.column))
        return self.data[el.start:el.end].decode("utf-8", errors="replace")

    def submesh(self, el) -> Submesh:
        op = el.get("operationtype", "triangle_list")
        if op != "triangle_list":
            raise _err("unsupported-operation-type", f"operationtype {op!r} is not supported", el)
        shared = _bool_attr(el, "usesharedvertices", True)
        faces = np.zeros((0, 3), dtype=np.int64)
        geometry = None
        extras = []
        for c in el.children:
            if c.tag == "faces":
                faces = self.faces(c)
            elif c.tag == "geometry":
                geometry = _parse_geometry(c)
            else:
                extras.append(self.raw(c))
        sub = Submesh(el.get("material", ""), faces, shared, geometry, op, tuple(extras))
        if shared and geometry is not None:
            raise _err("shared-and-own-geometry", "submesh uses shared vertices and has own geometry", el)
        if not shared and geometry is None:
            raise _err("missing-geometry", "submesh without shared vertices needs <geometry>", el)
        return sub

    def faces(self, el) -> np.ndarray:
        rows = []
        for c in el.children:
            if c.tag != "face":
                raise _err("unexpected-element", f"<{c.tag}> inside <faces>", c)
            row = []
            for k in ("v1", "v2", "v3"):
                v = _int_attr(c, k)
                if v < 0:
                    raise _err("face-index-out-of-range", f"negative index {k}={v}", c)
                row.append(v)
            rows.append(row)
        count = _int_attr(el, "count", required=False)
        if count is not None and count != len(rows):
            raise _err("count-mismatch", f'faces count="{count}" but {len(rows)} <face> elements', el)
        return np.array(rows, dtype=np.int64).reshape(-1, 3)

    def mesh(self, root) -> OgreMesh:
        if root.tag == "submesh":
            return OgreMesh([self.submesh(root)])
        if root.tag != "mesh":
            raise _err("bad-root", f"expected <mesh>, found <{root.tag}>", root)
        mesh = OgreMesh()
        extras = []
        for c in root.children:
            if c.tag == "sharedgeometry":
                mesh.shared_geometry = _parse_geometry(c)
            elif c.tag == "submeshes":
                for s in c.children:
                    if s.tag != "submesh":
                        raise _err("unexpected-element", f"<{s.tag}> inside <submeshes>", s)
                    mesh.submeshes.append(self.submesh(s))
            else:
                extras.append(self.raw(c))
        mesh.extras = tuple(extras)
        return mesh


def parse_mesh_xml(data: bytes | str, diagnostics: list | None = None) -> OgreMesh:
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = _xml.parse(data)
    except _xml.XMLSyntaxError as exc:
        raise MeshFormatError("malformed-xml", str(exc), exc.line, exc.column) from None
    mesh = _MeshReader(data, diagnostics if diagnostics is not None else []).mesh(root)
    validate_mesh(mesh)
    return mesh


# -- serialization ----------------------------------------------------------

def _emit_geometry(tag, geo: VertexData, depth, out):
    pad = "    " * depth
    out.append(f'{pad}<{tag} vertexcount="{geo.vertexcount}">')
    for b in geo.buffers:
        flags = [("positions", "true" if b.has_positions else "false"),
                 ("normals", "true" if b.has_normals else "false")]
        dims = b.texcoord_dims
        if dims:
            flags.append(("texture_coords", str(len(dims))))
            flags += [(f"texture_coord_dimensions_{i}", f"float{d}") for i, d in enumerate(dims)]
        out.append(f"{pad}    <vertexbuffer{_xml.format_attrs(flags)}>")
        vpad = pad + "        "
        pos = b.records["position"] if b.has_positions else None
        nrm = b.records["normal"] if b.has_normals else None
        tcs = [b.records[f"texcoord{i}"] for i in range(len(dims))]
        for i in range(len(b)):
            out.append(f"{vpad}<vertex>")
            if pos is not None:
                x, y, z = (format_float(c) for c in pos[i])
                out.append(f'{vpad}    <position x="{x}" y="{y}" z="{z}"/>')
            if nrm is not None:
                x, y, z = (format_float(c) for c in nrm[i])
                out.append(f'{vpad}    <normal x="{x}" y="{y}" z="{z}"/>')
            for t in tcs:
                uvw = " ".join(f'{a}="{format_float(c)}"' for a, c in zip(_UVW, t[i]))
                out.append(f"{vpad}    <texcoord {uvw}/>")
            out.append(f"{vpad}</vertex>")
        out.append(f"{pad}    </vertexbuffer>")
    out.append(f"{pad}</{tag}>")


def serialize_mesh_xml(mesh: OgreMesh) -> bytes:
    validate_mesh(mesh)
    out = ["<mesh>"]
    if mesh.shared_geometry is not None:
        _emit_geometry("sharedgeometry", mesh.shared_geometry, 1, out)
    out.append("    <submeshes>")
    for sub in mesh.submeshes:
        attrs = [("material", sub.material),
                 ("usesharedvertices", "true" if sub.use_shared_vertices else "false"),
                 ("operationtype", sub.operation_type)]
        out.append(f"        <submesh{_xml.format_attrs(attrs)}>")
        out.append(f'            <faces count="{len(sub.faces)}">')
        for a, b, c in sub.faces.tolist():
            out.append(f'                <face v1="{a}" v2="{b}" v3="{c}"/>')
        out.append("            </faces>")
        if sub.geometry is not None:
            _emit_geometry("geometry", sub.geometry, 3, out)
        out.extend("            " + x for x in sub.extras)
        out.append("        </submesh>")
    out.append("    </submeshes>")
    out.extend("    " + x for x in mesh.extras)
    out.append("</mesh>")
    return ("\n".join(out) + "\n").encode("utf-8")
