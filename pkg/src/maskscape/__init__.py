"""maskscape: view-consistent 3D natural-scene synthesis from one semantic mask."""

from .config import apply_overrides, default_config, load_config, save_config
from .pipeline import STAGES, PipelineRun, build_adapters, run_pipeline
from .report import EvalReport, load_report, save_report

__version__ = "0.1.0"

__all__ = [
    "apply_overrides", "default_config", "load_config", "save_config",
    "STAGES", "PipelineRun", "build_adapters", "run_pipeline",
    "EvalReport", "load_report", "save_report",
    "__version__",
]
