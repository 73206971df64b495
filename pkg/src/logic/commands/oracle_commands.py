from dataclasses import dataclass

from src.infrastructure.logger_adapter.logger import init_logger
from src.infrastructure.storage.uows.run_uow import RunUnitOfWork
from src.logic.commands.base import BaseCommand, CommandHandler
from src.logic.dto.run_dto import OracleSuiteDTO
from src.logic.oracles import criteria_summary, run_oracles

logger = init_logger(__name__)

ORACLE_REPORT = "oracles.json"


class RunOraclesCommand(BaseCommand):
    filter: str | None = None
    include_experiments: bool = False
    out: str | None = None


@dataclass(frozen=True)
class RunOraclesCommandHandler(CommandHandler[RunOraclesCommand, OracleSuiteDTO]):
    uow: RunUnitOfWork

    async def handle(self, command: RunOraclesCommand) -> OracleSuiteDTO:
        reports = run_oracles(command.filter, command.include_experiments)
        passed = all(item.passed for item in reports)
        dto = OracleSuiteDTO(
            passed=passed,
            reports=[item.to_dict() for item in reports],
            criteria=criteria_summary(reports),
        )
        logger.info(f"{len(reports)} oracle(s), {len(dto.failures)} failure(s)")
        if command.out is None:
            return dto
        async with self.uow.at(command.out):
            path = self.uow.reports.write(ORACLE_REPORT, {"passed": passed, "oracles": dto.reports, "criteria": dto.criteria})
            await self.uow.commit()
        return OracleSuiteDTO(passed=passed, reports=dto.reports, criteria=dto.criteria, report_path=str(path))
