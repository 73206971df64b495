from dataclasses import dataclass


@dataclass(eq=False)
class DomainException(Exception):
    @property
    def title(self) -> str:
        return "A domain error occurred"

    def __str__(self) -> str:
        return self.title
