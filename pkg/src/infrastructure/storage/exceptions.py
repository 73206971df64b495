from dataclasses import dataclass


@dataclass(eq=False)
class StorageException(Exception):
    path: str
    detail: str = ""

    @property
    def title(self) -> str:
        return f"Storage error at {self.path}: {self.detail}"


class ArtifactReadException(StorageException):
    @property
    def title(self) -> str:
        return f"Could not read {self.path}: {self.detail}"


class ArtifactWriteException(StorageException):
    @property
    def title(self) -> str:
        return f"Could not write {self.path}: {self.detail}"


class ArtifactNotFoundException(StorageException):
    @property
    def title(self) -> str:
        return f"No such file: {self.path}"
