from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import List


class Settings(BaseSettings):
    """Application settings"""

    # Project
    PROJECT_NAME: str = "Minkowski Heat Lab"
    VERSION: str = "0.1.0"
    ENVIRONMENT: str = "development"
    DEBUG: bool = True

    # Outputs
    OUTPUT_DIR: str = "out"
    REPORT_INCLUDE_TIMING: bool = False  # wall time breaks byte-identical reports
    DEFAULT_SEED: int = 0

    # Norm geometry
    METRIC_TOL: float = 1e-12  # smallest admissible eigenvalue of g_ij
    FD_STEP: float = 1e-5
    LEGENDRE_TOL: float = 1e-12
    LEGENDRE_MAX_ITER: int = 100
    LEGENDRE_MAX_HALVINGS: int = 40

    # Gradient flows
    RK4_LOCAL_TOL: float = 1e-8  # per unit time
    RK4_MIN_DT: float = 1e-9
    SKEW_REFINE_ITERS: int = 50

    # Densities and transport
    DENSITY_FLOOR: float = 1e-12
    BOUNDARY_MASS_TOL: float = 1e-12
    W2_MAX_SUPPORT: int = 2500
    W2_MAX_ITER: int = 1_000_000
    SINKHORN_MAX_ITER: int = 5000
    SINKHORN_STAGE_ITER: int = 200
    SINKHORN_TOL: float = 1e-6

    # Heat equation
    HEAT_NEGATIVE_TOL: float = 1e-12  # relative to the frame peak
    HEAT_STABILITY_FACTOR: float = 0.25
    HEAT_MASS_TOL: float = 1e-8

    # Tangent triangles
    TRIANGLE_MAX_AREA: float = 50.0
    CERTIFICATE_HIGH: float = 1e-3
    CERTIFICATE_LOW: float = 1e-8

    # CORS
    ALLOWED_ORIGINS: List[str] = ["http://localhost:3000", "http://localhost:8000"]

    # Logging
    LOG_LEVEL: str = "INFO"

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=False,
        extra="ignore"
    )


# Singleton instance
settings = Settings()
