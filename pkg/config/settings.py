from pydantic_settings import BaseSettings
from typing import List

class Settings(BaseSettings):
    # App settings
    app_name: str = "graphlap"
    app_version: str = "0.1.0"
    log_level: str = "INFO"
    output_dir: str = "out"
    default_seed: int = 0

    # Parallelism (GRAPHLAP_THREADS)
    threads: int = 1

    # Tolerances
    hermitian_tol: float = 1e-10
    identity_tol: float = 1e-10
    inequality_tol: float = 1e-9
    subsolution_tol: float = 1e-8
    eigen_tol: float = 1e-8
    solve_tol: float = 1e-10
    tangency_tol: float = 1e-9
    min_edge_weight: float = 1e-300
    alpha_margin: float = 1e-6

    # Solver limits
    dense_eigen_limit: int = 2000
    dense_assembly_limit: int = 500
    bruteforce_max_free: int = 12
    bruteforce_max_iter: int = 200000

    # Capacity defaults
    excessive_betas: List[float] = [0.01, 0.1, 1.0, 10.0, 100.0]

    class Config:
        env_prefix = "GRAPHLAP_"
        env_file = ".env"
        env_file_encoding = "utf-8"

settings = Settings()
