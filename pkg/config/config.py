from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    THREADS: int = Field(4, ge=1)
    GRID_N: int = Field(2048, ge=8)
    LOG_LEVEL: str = "WARNING"
    CFL: float = Field(0.9, gt=0.0, le=1.0)
    SIM_T: float = Field(20.0, gt=0.0)
    SIM_EPS: float = Field(1e-4, gt=0.0)
    RECT: str = "-3,1,-10,10"
    Q_VALIDATION_FACTOR: float = Field(2.0, gt=0.0)

    model_config = SettingsConfigDict(
        env_prefix="HIERSTAB_", env_file=".env", env_file_encoding="utf-8"
    )


settings = Settings()
