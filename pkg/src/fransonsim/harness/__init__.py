from .config import FIG2_CASES, FIG3_CASES, Case, NoiseModel, ScenarioConfig
from .scenarios import (
    RunResult,
    bandwidth_scaling_study,
    extract_group_index,
    prepare,
    run_cases,
    run_fig2,
    run_fig3,
)
