"""X3D XML subset: typed node tree with DEF/USE bookkeeping.

Only the XML encoding is handled. Elements outside the supported vocabulary
become ``Unknown`` nodes whose source text is kept so that they survive a
parse/serialize round trip byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator

from . import _xml
from .errors import Severity, X3DError, warning
from .fields import parse_field


class NodeKind(str, Enum):
    Scene = "Scene"
    Group = "Group"
    Transform = "Transform"
    Shape = "Shape"
    Appearance = "Appearance"
    Material = "Material"
    PhysicalMaterial = "PhysicalMaterial"
    IndexedTriangleSet = "IndexedTriangleSet"
    Geometry = "Geometry"
    Coordinate = "Coordinate"
    Normal = "Normal"
    TextureCoordinate = "TextureCoordinate"
    ImageTexture = "ImageTexture"
    Viewpoint = "Viewpoint"
    TimeSensor = "TimeSensor"
    ScalarInterpolator = "ScalarInterpolator"
    PositionInterpolator = "PositionInterpolator"
    OrientationInterpolator = "OrientationInterpolator"
    CoordinateInterpolator = "CoordinateInterpolator"
    ComposedShader = "ComposedShader"
    RenderedTexture = "RenderedTexture"
    Compositor = "Compositor"
    CompositorPass = "CompositorPass"
    CompositorOutput = "CompositorOutput"
    CustomAppearance = "CustomAppearance"
    Field = "field"
    Unknown = "Unknown"


_KINDS = {k.value: k for k in NodeKind if k is not NodeKind.Unknown}

INTERPOLATORS = frozenset({
    NodeKind.ScalarInterpolator, NodeKind.PositionInterpolator,
    NodeKind.OrientationInterpolator, NodeKind.CoordinateInterpolator,
})


def kind_of(tag: str) -> NodeKind:
    return _KINDS.get(tag, NodeKind.Unknown)


@dataclass(frozen=True, eq=False)
class Node:
    """One X3D element.

    ``attrs`` holds every attribute except DEF/USE, in source order.
    ``raw`` is the verbatim source of an Unknown subtree and is dropped by
    :meth:`replace` so edited nodes are re-serialized from structure.
    ``link`` is set by :func:`resolve_uses` on USE nodes.
    """

    tag: str
    attrs: tuple[tuple[str, str], ...] = ()
    children: tuple["Node", ...] = ()
    def_name: str | None = None
    use_name: str | None = None
    raw: str | None = field(default=None, compare=False)
    line: int | None = field(default=None, compare=False)
    column: int | None = field(default=None, compare=False)
    link: str | None = field(default=None, compare=False)

    @property
    def kind(self) -> NodeKind:
        return kind_of(self.tag)

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return (
            self.tag == other.tag
            and self.def_name == other.def_name
            and self.use_name == other.use_name
            and dict(self.attrs) == dict(other.attrs)
            and self.children == other.children
        )

    __hash__ = None

    def get(self, name: str, default=None):
        for k, v in self.attrs:
            if k == name:
                return v
        return default

    def field(self, name: str):
        """Typed value of ``name``, falling back to the X3D default."""
        try:
            return parse_field(self.kind.value, name, self.get(name))
        except X3DError as exc:
            if exc.line is not None or self.line is None:
                raise
            raise X3DError(exc.code, f"{self.tag}.{name}: {exc.diagnostics[0].message}",
                           self.line, self.column) from None

    @property
    def typed_fields(self) -> dict:
        from .fields import FIELD_TABLE
        return {name: self.field(name) for name in FIELD_TABLE.get(self.kind.value, {})}

    @property
    def container_field(self):
        return self.get("containerField")

    def replace(self, **changes) -> "Node":
        changes.setdefault("raw", None)
        return replace(self, **changes)

    def with_attr(self, name: str, value: str) -> "Node":
        attrs = [(k, v) for k, v in self.attrs if k != name]
        attrs.append((name, value))
        return self.replace(attrs=tuple(attrs))

    def walk(self) -> Iterator["Node"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def find(self, kind: NodeKind) -> Iterator["Node"]:
        return (n for n in self.walk() if n.kind is kind)

    def child(self, *kinds: NodeKind) -> "Node | None":
        for c in self.children:
            if c.kind in kinds:
                return c
        return None


@dataclass(frozen=True)
class RouteStmt:
    from_node: str
    from_field: str
    to_node: str
    to_field: str
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, eq=False)
class SceneDocument:
    root: Node
    routes: tuple[RouteStmt, ...] = ()
    diagnostics: tuple = ()
    x3d_attrs: tuple[tuple[str, str], ...] | None = None
    head: tuple[Node, ...] = ()
    fragment: bool = False
    defs: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "defs", _index_defs(self.root))

    def __eq__(self, other):
        if not isinstance(other, SceneDocument):
            return NotImplemented
        wrap = lambda d: None if d.x3d_attrs is None else dict(d.x3d_attrs)
        return (
            self.root == other.root
            and self.routes == other.routes
            and wrap(self) == wrap(other)
            and self.head == other.head
        )

    __hash__ = None

    def evolve(self, root=None, routes=None, diagnostics=()) -> "SceneDocument":
        return replace(
            self,
            root=self.root if root is None else root,
            routes=self.routes if routes is None else tuple(routes),
            diagnostics=self.diagnostics + tuple(diagnostics),
        )

    @property
    def errors(self):
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    def nodes(self) -> Iterator[Node]:
        return self.root.walk()


def _index_defs(root: Node) -> dict[str, Node]:
    defs: dict[str, Node] = {}
    for n in root.walk():
        if n.def_name is not None:
            if n.def_name in defs:
                raise X3DError("duplicate-def", f"DEF {n.def_name!r} defined twice", n.line, n.column)
            defs[n.def_name] = n
    return defs


# -- parsing ----------------------------------------------------------------

class _Builder:
    def __init__(self, data: bytes):
        self.data = data
        self.diags: list = []
        self.routes: list[RouteStmt] = []
        self.seen_defs: set[str] = set()
        self.pending_uses: list[tuple[str, int, int]] = []
        self.scene_count = 0

    def raw(self, el: _xml.Element) -> str:
        return self.data[el.start:el.end].decode("utf-8", errors="replace")

    def route(self, el: _xml.Element):
        vals = [el.get(k, "") for k in ("fromNode", "fromField", "toNode", "toField")]
        if not all(vals):
            raise X3DError("bad-route", "ROUTE needs fromNode, fromField, toNode and toField", el.line, el.column)
        self.routes.append(RouteStmt(*vals, line=el.line))

    def node(self, el: _xml.Element) -> Node | None:
        if el.tag == "ROUTE":
            self.route(el)
            return None
        kind = kind_of(el.tag)
        if kind is NodeKind.Scene:
            self.scene_count += 1
            if self.scene_count > 1:
                raise X3DError("multiple-scene", "only one Scene node per file is allowed", el.line, el.column)
        attrs = [(k, v) for k, v in el.attrs if k not in ("DEF", "USE")]
        def_name = el.get("DEF")
        use_name = el.get("USE")
        if def_name is not None and use_name is not None:
            raise X3DError("def-and-use", "node carries both DEF and USE", el.line, el.column)
        if use_name is not None:
            if el.children:
                raise X3DError("use-with-content", f"USE {use_name!r} node has children", el.line, el.column)
            extra = [k for k, _ in attrs if k != "containerField"]
            if extra:
                self.diags.append(warning("use-extra-fields", f"fields {extra} ignored on USE node",
                                          el.line, el.column))
                attrs = [(k, v) for k, v in attrs if k == "containerField"]
            if use_name not in self.seen_defs:
                self.pending_uses.append((use_name, el.line, el.column))
        if def_name is not None:
            if def_name in self.seen_defs:
                raise X3DError("duplicate-def", f"DEF {def_name!r} defined twice", el.line, el.column)
            self.seen_defs.add(def_name)
        if kind is NodeKind.Unknown:
            self.diags.append(warning("unknown-node", f"unsupported element <{el.tag}> kept verbatim",
                                      el.line, el.column))
        children = tuple(c for c in (self.node(ch) for ch in el.children) if c is not None)
        return Node(
            el.tag, tuple(attrs), children, def_name, use_name,
            raw=self.raw(el) if kind is NodeKind.Unknown else None,
            line=el.line, column=el.column,
        )


def parse_x3d(data: bytes | str) -> SceneDocument:
    """Parse an X3D XML document (or a single-element fragment)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    multi_root = False
    try:
        top = _xml.parse(data)
    except _xml.XMLSyntaxError as exc:
        # several sibling elements: parse them as children of an implicit Scene
        if not str(exc).startswith("junk after document element") or data.lstrip().startswith(b"<?"):
            raise X3DError("malformed-xml", str(exc), exc.line, exc.column) from None
        data = b"<Scene>" + data + b"</Scene>"
        try:
            top = _xml.parse(data)
        except _xml.XMLSyntaxError as exc2:
            raise X3DError("malformed-xml", str(exc2), exc2.line, exc2.column) from None
        multi_root = True
    b = _Builder(data)
    x3d_attrs = None
    head: list[Node] = []
    fragment = False
    try:
        if top.tag == "X3D":
            x3d_attrs = tuple(top.attrs)
            scenes = [c for c in top.children if c.tag == "Scene"]
            if len(scenes) > 1:
                raise X3DError("multiple-scene", "only one Scene node per file is allowed",
                               scenes[1].line, scenes[1].column)
            for c in top.children:
                if c.tag != "Scene":
                    head.append(Node(c.tag, tuple(c.attrs), raw=b.raw(c), line=c.line, column=c.column))
            root = b.node(scenes[0]) if scenes else Node("Scene")
        elif multi_root:
            fragment = True
            root = b.node(top)
            if b.scene_count > 1:
                raise X3DError("nested-scene", "Scene must be the document root")
        elif top.tag == "Scene":
            root = b.node(top)
        else:
            fragment = True
            inner = b.node(top)
            if b.scene_count:
                raise X3DError("nested-scene", "Scene must be the document root", top.line, top.column)
            root = Node("Scene", children=(inner,) if inner is not None else ())
    except RecursionError:
        raise X3DError("too-deep", "document nesting too deep") from None
    for name, line, col in b.pending_uses:
        if name in b.seen_defs:
            b.diags.append(warning("use-before-def", f"USE {name!r} precedes its DEF", line, col))
    return SceneDocument(root, tuple(b.routes), tuple(b.diags), x3d_attrs, tuple(head), fragment)


# -- serialization ----------------------------------------------------------

def _emit(node: Node, depth: int, out: list[str]):
    pad = "  " * depth
    if node.raw is not None:
        out.append(pad + node.raw)
        return
    pairs = []
    if node.def_name is not None:
        pairs.append(("DEF", node.def_name))
    if node.use_name is not None:
        pairs.append(("USE", node.use_name))
    pairs.extend(node.attrs)
    head = f"<{node.tag}{_xml.format_attrs(pairs)}"
    if not node.children:
        out.append(pad + head + "/>")
        return
    out.append(pad + head + ">")
    for c in node.children:
        _emit(c, depth + 1, out)
    out.append(f"{pad}</{node.tag}>")


def _route_xml(r: RouteStmt) -> str:
    return "<ROUTE" + _xml.format_attrs([
        ("fromNode", r.from_node), ("fromField", r.from_field),
        ("toNode", r.to_node), ("toField", r.to_field),
    ]) + "/>"


def check_invariants(doc: SceneDocument):
    if doc.root.kind is not NodeKind.Scene:
        raise X3DError("bad-root", "document root must be a Scene node")
    for n in doc.root.walk():
        if n is not doc.root and n.kind is NodeKind.Scene:
            raise X3DError("multiple-scene", "only one Scene node per file is allowed")
        if n.use_name is not None and n.children:
            raise X3DError("use-with-content", f"USE {n.use_name!r} node has children")
    _index_defs(doc.root)
    for r in doc.routes:
        if not (r.from_node and r.from_field and r.to_node and r.to_field):
            raise X3DError("bad-route", "ROUTE with empty field")


def serialize_x3d(doc: SceneDocument) -> bytes:
    check_invariants(doc)
    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if doc.fragment and len(doc.root.children) == 1 and not doc.routes and doc.x3d_attrs is None:
        _emit(doc.root.children[0], 0, out)
        return ("\n".join(out) + "\n").encode("utf-8")
    depth = 0
    if doc.x3d_attrs is not None:
        out.append(f"<X3D{_xml.format_attrs(doc.x3d_attrs)}>")
        for h in doc.head:
            _emit(h, 1, out)
        depth = 1
    scene = doc.root
    pad = "  " * depth
    if not scene.children and not doc.routes:
        _emit(scene, depth, out)
    else:
        out.append(f"{pad}<{scene.tag}{_xml.format_attrs(scene.attrs)}>")
        for c in scene.children:
            _emit(c, depth + 1, out)
        for r in doc.routes:
            out.append(pad + "  " + _route_xml(r))
        out.append(f"{pad}</{scene.tag}>")
    if doc.x3d_attrs is not None:
        out.append("</X3D>")
    return ("\n".join(out) + "\n").encode("utf-8")


def resolve_uses(doc: SceneDocument) -> SceneDocument:
    """Annotate every USE node as ``internal`` (DEF found) or ``external``."""
    defs = doc.defs

    def visit(n: Node) -> Node:
        if n.use_name is not None:
            return replace(n, link="internal" if n.use_name in defs else "external")
        if not n.children:
            return n
        kids = tuple(visit(c) for c in n.children)
        if all(a is b for a, b in zip(kids, n.children)):
            return n
        return replace(n, children=kids)

    return doc.evolve(root=visit(doc.root))


__all__ = [
    "NodeKind", "Node", "RouteStmt", "SceneDocument", "INTERPOLATORS",
    "parse_x3d", "serialize_x3d", "resolve_uses", "check_invariants", "kind_of",
]
