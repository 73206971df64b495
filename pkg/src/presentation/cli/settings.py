from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

from dotenv import find_dotenv, load_dotenv


load_dotenv(find_dotenv(".env"))
env_file = find_dotenv(".env")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=env_file, env_prefix="CONDFLOW_", extra="ignore")

    OUTPUT_ROOT: Path = Path(".")
    LOG_LEVEL: str = "INFO"
    LOG_DIR: Path = Path("logs")


settings = Settings()
