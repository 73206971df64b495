from dataclasses import dataclass, field

from src.logic.dto.base_dto import BaseDTO


@dataclass(frozen=True)
class DatasetDTO(BaseDTO):
    dataset: str
    run_dir: str
    files: dict[str, str]
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrainResultDTO(BaseDTO):
    run_dir: str
    task: str
    epochs: int
    final_metrics: dict
    outputs: dict[str, str]
    architecture: dict
    normalization: dict | None = None


@dataclass(frozen=True)
class EvaluationDTO(BaseDTO):
    checkpoint: str
    mode: str
    rows: list[dict]
    outputs: dict[str, str]
    normalization: dict | None = None


@dataclass(frozen=True)
class ReportDTO(BaseDTO):
    run_dir: str
    plots: dict[str, str]
    series: dict[str, dict[str, list[float]]]
    summary: list[dict]


@dataclass(frozen=True)
class RunDetailDTO(BaseDTO):
    run_dir: str
    command: str
    seed: int
    started_at: str
    finished_at: str | None
    outputs: dict[str, str]
    summary: dict
    tables: list[str]


@dataclass(frozen=True)
class OracleSuiteDTO(BaseDTO):
    passed: bool
    reports: list[dict]
    criteria: list[dict]
    report_path: str | None = None

    @property
    def failures(self) -> list[str]:
        return [item["name"] for item in self.reports if not item["passed"]]
