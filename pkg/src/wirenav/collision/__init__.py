from .hulls import CollisionError, ConvexHull, HullSet, dump_hull_set, load_hull_set
from .narrowphase import (
    CapsuleShape,
    Contact,
    ContactParams,
    capsule_hull_query,
    contact_force,
    detect_contacts,
    detect_contacts_arrays,
    detect_contacts_raw,
)

__all__ = [
    "CollisionError",
    "ConvexHull",
    "HullSet",
    "dump_hull_set",
    "load_hull_set",
    "CapsuleShape",
    "Contact",
    "ContactParams",
    "capsule_hull_query",
    "contact_force",
    "detect_contacts",
    "detect_contacts_arrays",
    "detect_contacts_raw",
]
