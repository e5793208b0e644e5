"""
Exception hierarchy for the hypercomplex phase-retrieval toolkit.

Every error is also a ValueError so callers that only know the standard
library can still catch them.
"""


class HprError(Exception):
    """Base class for all toolkit errors"""


class DomainError(HprError, ValueError):
    """Operation undefined for the given value (inverse of zero, ...)"""


class ShapeError(HprError, ValueError):
    """Dimension or shape mismatch between operands"""


class TransformError(HprError, ValueError):
    """Invalid transform plan (window longer than signal, empty bank, ...)"""


class SensingError(HprError, ValueError):
    """Invalid sensing model parameters or measurement data"""


class SolverError(HprError, ValueError):
    """Invalid solver configuration or incompatible model"""


class ConfigError(HprError, ValueError):
    """Invalid or unreadable configuration"""


class ImageFormatError(HprError, ValueError):
    """Unreadable or ill-formed image input"""
