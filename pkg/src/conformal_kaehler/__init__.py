"""Light-cone model, flat bilinear forms and pointwise classification of
conformal Kaehler submanifolds."""

__version__ = "0.1.0"

from .errors import GeometryError  # noqa: E402

__all__ = ["GeometryError", "__version__"]
