"""Compositional ROUTE rewriting.

Instead of an event model, a supported ROUTE is replaced by nesting a USE of
its source node under the target node.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import X3DError, warning
from .fields import field_type
from .x3d import INTERPOLATORS, Node, SceneDocument

ANY = "*"
ANY_INTERPOLATOR = "*Interpolator"


@dataclass(frozen=True)
class RoutePattern:
    """``from_kind``/``to_kind`` accept ``*`` and ``*Interpolator``;
    ``to_field`` accepts ``*`` or ``<SFType>`` to match by declared field type.
    """

    from_kind: str
    from_field: str
    to_kind: str
    to_field: str
    # field implied by the nesting itself; otherwise it is kept as containerField
    implicit: bool = True

    def matches(self, src: Node, route, dst: Node) -> bool:
        return (
            _kind_match(self.from_kind, src)
            and self.from_field == route.from_field
            and _kind_match(self.to_kind, dst)
            and _field_match(self.to_field, dst, route.to_field)
        )


def _kind_match(pattern: str, node: Node) -> bool:
    if pattern == ANY:
        return True
    if pattern == ANY_INTERPOLATOR:
        return node.kind in INTERPOLATORS
    return node.tag == pattern


def _field_match(pattern: str, node: Node, name: str) -> bool:
    if pattern == ANY:
        return True
    if pattern.startswith("<"):
        return field_type(node.tag, name) == pattern[1:-1]
    return pattern == name


DEFAULT_PATTERNS: tuple[RoutePattern, ...] = (
    RoutePattern("TimeSensor", "fraction_changed", ANY_INTERPOLATOR, "set_fraction"),
    RoutePattern("PositionInterpolator", "value_changed", "Transform", "set_translation"),
    RoutePattern("OrientationInterpolator", "value_changed", "Transform", "set_rotation"),
    RoutePattern("ScalarInterpolator", "value_changed", ANY, "<SFFloat>", implicit=False),
    RoutePattern("CoordinateInterpolator", "value_changed", "Coordinate", "set_point"),
)


def _check_unique(patterns):
    if len(set(patterns)) != len(patterns):
        raise ValueError("route pattern table entries must be unique")


def rewrite_routes(doc: SceneDocument, patterns=DEFAULT_PATTERNS) -> SceneDocument:
    patterns = tuple(patterns)
    _check_unique(patterns)
    defs = doc.defs
    additions: dict[str, list[Node]] = {}
    kept = []
    diags = []
    for r in doc.routes:
        for name in (r.from_node, r.to_node):
            if name not in defs:
                raise X3DError("undefined-def", f"ROUTE references undefined DEF {name!r}", r.line)
        src, dst = defs[r.from_node], defs[r.to_node]
        pat = next((p for p in patterns if p.matches(src, r, dst)), None)
        if pat is None:
            kept.append(r)
            diags.append(warning(
                "route-unsupported",
                f"ROUTE {r.from_node}.{r.from_field} -> {r.to_node}.{r.to_field} left as is",
                r.line,
            ))
            continue
        attrs = () if pat.implicit else (("containerField", r.to_field),)
        use = Node(src.tag, attrs, use_name=r.from_node, link="internal")
        pending = additions.setdefault(r.to_node, [])
        if use not in dst.children and use not in pending:
            pending.append(use)
    if not additions:
        return doc.evolve(routes=kept, diagnostics=diags)

    def visit(n: Node) -> Node:
        kids = tuple(visit(c) for c in n.children)
        if n.def_name in additions:
            kids = kids + tuple(additions[n.def_name])
        if all(a is b for a, b in zip(kids, n.children)) and len(kids) == len(n.children):
            return n
        return n.replace(children=kids)

    return doc.evolve(root=visit(doc.root), routes=kept, diagnostics=diags)
