"""Semantic mapping between X3D documents and OGRE resources."""
from .geometry import ShapeIR, external_shape, ogre_mesh_to_x3d, shape_from_node, x3d_to_ogre_mesh
from .materials import (
    PBS_FIELD_MAP, SHININESS_SCALE, AppearanceIR, MaterialIR, custom_appearance_to_hlms,
    hlms_to_custom_appearance, ogre_to_x3d_appearance, physical_material_to_hlms, translate_appearance,
    x3d_to_ogre_material,
)
from .registry import Resolution, ResourceRegistry, resolve_resource
from .scene import TranslationReport, hlms_to_x3d, ogre_to_scene, scene_to_ogre

__all__ = [
    "ShapeIR", "external_shape", "ogre_mesh_to_x3d", "shape_from_node", "x3d_to_ogre_mesh",
    "PBS_FIELD_MAP", "SHININESS_SCALE", "AppearanceIR", "MaterialIR", "custom_appearance_to_hlms",
    "hlms_to_custom_appearance", "ogre_to_x3d_appearance", "physical_material_to_hlms",
    "translate_appearance", "x3d_to_ogre_material", "Resolution", "ResourceRegistry", "resolve_resource",
    "TranslationReport", "hlms_to_x3d", "ogre_to_scene", "scene_to_ogre",
]
