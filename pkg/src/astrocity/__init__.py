"""CityJSON models of planetary surfaces with the 3DSpace extension.

Submodules: ``registry`` (extension types), ``model`` (documents),
``crs`` (planetary projections), ``geometry``, ``dem``, ``builders``,
``validator``, ``recipe`` and ``cli``.
"""

from .builders import AnalysisSpec, FeatureBuilder
from .crs import forward, inverse, lookup_crs
from .geometry import Polygon2
from .model import CityDocument, new_document, read_document, write_document
from .registry import builtin_registry
from .validator import validate

__version__ = "0.1.0"

__all__ = [
    "AnalysisSpec",
    "CityDocument",
    "FeatureBuilder",
    "Polygon2",
    "builtin_registry",
    "forward",
    "inverse",
    "lookup_crs",
    "new_document",
    "read_document",
    "validate",
    "write_document",
]
