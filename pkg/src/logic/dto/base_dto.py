from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class BaseDTO:
    def to_dict(self) -> dict:
        return asdict(self)
