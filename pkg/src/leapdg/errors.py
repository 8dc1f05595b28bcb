"""Exception types raised by the solver."""


class LeapDGError(Exception):
    """Base class for all solver errors."""


class ReferenceElementError(LeapDGError, ValueError):
    pass


class MeshError(LeapDGError, ValueError):
    pass


class MeshParseError(MeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshIOError(MeshError, OSError):
    """A mesh file could not be read."""


class UnsupportedElementError(MeshParseError):
    pass


class NonConformingMeshError(MeshError):
    def __init__(self, message, face=None):
        self.face = face
        super().__init__(message)


class InvertedElementError(MeshError):
    def __init__(self, message, element=None):
        self.element = element
        super().__init__(message)


class MaterialError(LeapDGError, ValueError):
    def __init__(self, message, element=None, node=None):
        self.element = element
        self.node = node
        super().__init__(message)


class ConfigError(LeapDGError, ValueError):
    pass


class BlowUpError(LeapDGError, FloatingPointError):
    def __init__(self, message, time_index=None):
        self.time_index = time_index
        super().__init__(message)


class NonConvergenceError(LeapDGError, RuntimeError):
    def __init__(self, message, history=None):
        self.history = history or []
        super().__init__(message)
