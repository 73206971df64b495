from dataclasses import dataclass

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class DiffcoreException(DomainException):
    @property
    def title(self) -> str:
        return "Automatic differentiation error"


@dataclass(eq=False)
class ShapeMismatchException(DiffcoreException, ValueError):
    op: str
    left: tuple[int, ...]
    right: tuple[int, ...]

    @property
    def title(self) -> str:
        return f"Operation '{self.op}' cannot combine shapes {self.left} and {self.right}"


@dataclass(eq=False)
class DomainErrorException(DiffcoreException, ValueError):
    op: str
    minimum: float

    @property
    def title(self) -> str:
        return f"Operation '{self.op}' received a value outside its domain (min input {self.minimum})"


@dataclass(eq=False)
class NonScalarRootException(DiffcoreException, ValueError):
    shape: tuple[int, ...]

    @property
    def title(self) -> str:
        return f"Reverse sweep needs a scalar root, got shape {self.shape}"


@dataclass(eq=False)
class UnknownPrimitiveException(DiffcoreException, KeyError):
    op: str

    @property
    def title(self) -> str:
        return f"Primitive '{self.op}' is not registered"


@dataclass(eq=False)
class TapeMismatchException(DiffcoreException, ValueError):
    op: str

    @property
    def title(self) -> str:
        return f"Operation '{self.op}' mixes tensors recorded on different tapes"


@dataclass(eq=False)
class DuplicateParameterException(DiffcoreException, KeyError):
    name: str

    @property
    def title(self) -> str:
        return f"Parameter '{self.name}' is already registered"


@dataclass(eq=False)
class UnknownParameterException(DiffcoreException, KeyError):
    name: str

    @property
    def title(self) -> str:
        return f"Parameter '{self.name}' is not registered"


@dataclass(eq=False)
class NotRecordingException(DiffcoreException, RuntimeError):
    @property
    def title(self) -> str:
        return "Gradients were requested from a tape that does not record"
