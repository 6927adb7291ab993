from typing import Literal

from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.tentwave import __version__
from src.tentwave.errors import ConfigurationError
from src.tentwave.utils.constants import (
    DEFAULT_MARGIN,
    DEFAULT_SEED,
    PITCH_ITERATION_CAP,
    POWER_NORM_BOUND,
    POWER_NORM_CAP,
    SINGULAR_CONDITION_LIMIT,
)


class Settings(BaseSettings):
    """Environment backed settings, read from TENTWAVE_* variables and an optional .env file"""

    model_config = SettingsConfigDict(env_prefix="TENTWAVE_", env_file=".env", extra="ignore")

    env: Literal["dev", "staging", "prod", "test"] = "staging"
    version: str = __version__
    log_json: bool = False

    default_margin: float = Field(default=DEFAULT_MARGIN, gt=0.0, le=1.0)
    default_seed: int = DEFAULT_SEED
    pitch_iteration_cap: int = Field(default=PITCH_ITERATION_CAP, gt=0)
    singular_condition_limit: float = Field(default=SINGULAR_CONDITION_LIMIT, gt=1.0)
    power_norm_cap: int = Field(default=POWER_NORM_CAP, ge=1)
    power_norm_bound: float = Field(default=POWER_NORM_BOUND, gt=1.0)

    api_host: str = "127.0.0.1"
    api_port: int = 5062


class AppConfig(BaseModel):
    env: str
    VERSION: str
    log_json: bool


class SolverDefaults(BaseModel):
    margin: float
    seed: int
    pitch_iteration_cap: int
    singular_condition_limit: float
    power_norm_cap: int
    power_norm_bound: float


class ConfigService:
    """Centralized configuration management service"""

    def __init__(self):
        try:
            self.settings = Settings()
        except ValidationError as e:
            raise ConfigurationError(f"Invalid environment configuration: {e}") from e

        self.env = self.settings.env
        self.version = self.settings.version
        self.log_json = self.settings.log_json

        # Solver defaults
        self.default_margin = self.settings.default_margin
        self.default_seed = self.settings.default_seed
        self.pitch_iteration_cap = self.settings.pitch_iteration_cap
        self.singular_condition_limit = self.settings.singular_condition_limit
        self.power_norm_cap = self.settings.power_norm_cap
        self.power_norm_bound = self.settings.power_norm_bound

        # HTTP service
        self.api_host = self.settings.api_host
        self.api_port = self.settings.api_port

    def get_api_model(self) -> AppConfig:
        return AppConfig(env=self.env, VERSION=self.version, log_json=self.log_json)

    def solver_defaults(self) -> SolverDefaults:
        return SolverDefaults(
            margin=self.default_margin,
            seed=self.default_seed,
            pitch_iteration_cap=self.pitch_iteration_cap,
            singular_condition_limit=self.singular_condition_limit,
            power_norm_cap=self.power_norm_cap,
            power_norm_bound=self.power_norm_bound,
        )


# Global config service instance - lazy initialization
_config_service = None


def get_config_service() -> ConfigService:
    """Get or create the global config service instance"""
    global _config_service
    if _config_service is None:
        _config_service = ConfigService()
    return _config_service


def reset_config_service() -> None:
    """Drop the cached instance so the next access re-reads the environment"""
    global _config_service
    _config_service = None


class ConfigServiceProxy:
    """Proxy to lazy-load the config service"""

    def __getattr__(self, name):
        return getattr(get_config_service(), name)


config_service = ConfigServiceProxy()
