"""Exception types shared across the package."""


class VistaError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(VistaError, ValueError):
    """Invalid geometric input."""


class BehindCameraError(GeometryError):
    """Point at or behind the camera plane cannot be projected."""


class InvalidDepthError(GeometryError):
    """Depth values must be strictly positive."""


class DegenerateGeometryError(GeometryError):
    """Degenerate configuration (zero direction, parallel up vector, ...)."""


class SamplingFailedError(VistaError):
    """A rejection sampler exhausted its retry budget."""


class MissingDepthError(VistaError):
    """Backend requires a depth map but none was provided."""


class OracleUnavailableError(VistaError):
    """Oracle backend requires a frozen scene handle but none was provided."""


class DatasetError(VistaError):
    """Dataset I/O or format problem; message carries the offending path."""


class ConfigError(VistaError, ValueError):
    """Invalid configuration value or unknown configuration key."""
