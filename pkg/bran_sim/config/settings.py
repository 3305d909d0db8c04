from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


# Runtime settings, overridable through BRAN_SIM_* environment variables
class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="BRAN_SIM_")

    seed: int = 0  # BRAN_SIM_SEED, lowest-precedence seed source for experiments
    log_level: str = "INFO"
    log_file: Optional[str] = None  # rotating file log is only enabled when set

    # Markov chain solver
    max_states: int = 4_000_000
    direct_solve_limit: int = 20_000
    initial_truncation: int = 16
    target_boundary_mass: float = 1e-8
    truncation_warning_mass: float = 1e-6

    # Attack race Monte Carlo
    race_step_cap: int = 1_000_000_000
    race_batch_size: int = 65_536
    race_hopeless_probability: float = 1e-12

    # Simulation statistics
    batch_means_batches: int = 32
    min_reliable_samples: int = 1000

    # Process pool size for sweeps, 1 runs grid points in-process
    workers: int = 1


settings = Settings()
