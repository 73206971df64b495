from dataclasses import dataclass

from src.infrastructure.storage.exceptions import ArtifactNotFoundException
from src.infrastructure.storage.uows.run_uow import RunQueryUnitOfWork
from src.logic.dto.mappers.run_mappers import manifest_to_detail_dto_mapper
from src.logic.dto.run_dto import RunDetailDTO
from src.logic.exceptions.run_exceptions import MissingArtifactLogicException, RunNotFoundLogicException
from src.logic.queries.base import BaseQuery, QueryHandler


class GetRunManifestQuery(BaseQuery):
    run: str


@dataclass(frozen=True)
class GetRunManifestQueryHandler(QueryHandler[GetRunManifestQuery, RunDetailDTO]):
    uow: RunQueryUnitOfWork

    async def handle(self, query: GetRunManifestQuery) -> RunDetailDTO:
        async with self.uow.at(query.run):
            manifest = self.uow.manifests.find_one_or_none()
            if manifest is None:
                raise RunNotFoundLogicException(path=str(self.uow.root))
            tables = sorted(path.name for path in self.uow.root.glob("*.csv"))
            return manifest_to_detail_dto_mapper(manifest, str(self.uow.root), tables)


class GetRunTableQuery(BaseQuery):
    run: str
    table: str


@dataclass(frozen=True)
class GetRunTableQueryHandler(QueryHandler[GetRunTableQuery, list[dict]]):
    uow: RunQueryUnitOfWork

    async def handle(self, query: GetRunTableQuery) -> list[dict]:
        name = query.table if query.table.endswith(".csv") else f"{query.table}.csv"
        async with self.uow.at(query.run):
            try:
                return self.uow.tables.read(name)
            except ArtifactNotFoundException as err:
                raise MissingArtifactLogicException(path=err.path)
