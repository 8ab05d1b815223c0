"""Bidirectional X3D <-> OGRE scene converter and validator."""
from .errors import ConversionError, Diagnostic, Severity
from .material import parse_material_script, serialize_material_script
from .compositor_script import parse_compositor_script, serialize_compositor_script
from .mesh import parse_mesh_xml, serialize_mesh_xml
from .x3d import parse_x3d, serialize_x3d
from .translate import ResourceRegistry, TranslationReport, ogre_to_scene, scene_to_ogre

__version__ = "0.1.0"

__all__ = [
    "ConversionError", "Diagnostic", "Severity", "ResourceRegistry", "TranslationReport",
    "parse_material_script", "serialize_material_script", "parse_compositor_script",
    "serialize_compositor_script", "parse_mesh_xml", "serialize_mesh_xml", "parse_x3d", "serialize_x3d",
    "ogre_to_scene", "scene_to_ogre",
]
