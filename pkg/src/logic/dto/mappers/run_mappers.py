from src.domain.runs.entities import RunManifest
from src.domain.train.entities import TrainingSession
from src.logic.dto.run_dto import RunDetailDTO, TrainResultDTO


def manifest_to_detail_dto_mapper(manifest: RunManifest, run_dir: str, tables: list[str]) -> RunDetailDTO:
    return RunDetailDTO(
        run_dir=run_dir,
        command=manifest.command,
        seed=manifest.seed,
        started_at=manifest.started_at.isoformat(),
        finished_at=manifest.finished_at.isoformat() if manifest.finished_at else None,
        outputs=dict(manifest.outputs),
        summary=dict(manifest.summary),
        tables=tables,
    )


def session_to_train_result_dto_mapper(
    session: TrainingSession,
    manifest: RunManifest,
    normalization: dict | None = None,
) -> TrainResultDTO:
    return TrainResultDTO(
        run_dir=session.run_dir,
        task=session.config.task,
        epochs=len(session.history),
        final_metrics=session.last.to_row() if session.last else {},
        outputs=dict(manifest.outputs),
        architecture=dict(manifest.summary.get("architecture", {})),
        normalization=normalization,
    )
