"""Exception hierarchy shared by all htex modules."""


class HtexError(Exception):
    """Base class for every error raised by this package."""


class MeshError(HtexError, ValueError):
    """Raised for malformed OBJ input or meshes that are not manifold."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class FormatError(HtexError, ValueError):
    """Raised when an .htx container cannot be written or read back."""


class UnsupportedVersionError(FormatError):
    pass


class FingerprintMismatchError(HtexError, ValueError):
    """The texture set was baked for a different mesh."""


class DegenerateSampleError(HtexError, ArithmeticError):
    """All three filter taps fell outside their textures (normalization == 0)."""


class DegenerateGeometryError(HtexError, ValueError):
    pass
