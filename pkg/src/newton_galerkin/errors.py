"""Exception types shared across the package."""


class MeshError(ValueError):
    """Invalid mesh construction input."""


class GenerationMismatchError(ValueError):
    """Two nodal functions (or a function and a map) belong to different meshes."""


class NonFiniteEvaluationError(ArithmeticError):
    """f or f' evaluated to a non-finite value on some element."""

    def __init__(self, element: int, what: str = "nonlinearity"):
        self.element = int(element)
        super().__init__(
            f"non-finite {what} evaluation on element {self.element}"
        )


class SingularMatrixError(RuntimeError):
    """The linearized system is numerically singular."""


class ConfigError(ValueError):
    """Malformed run configuration."""
