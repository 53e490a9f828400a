"""
Exercise Clips - turn exercise-video subtitles and pose streams into labeled clips
"""

from .clips import build_clips, summarize_dataset
from .config import PipelineConfig, load_config
from .models import ClipLabel, ClipRecord, Cue, Sentence, Token
from .pipeline import RunReport, run_pipeline

__version__ = "1.0.0"
__all__ = [
    "ClipLabel",
    "ClipRecord",
    "Cue",
    "PipelineConfig",
    "RunReport",
    "Sentence",
    "Token",
    "__version__",
    "build_clips",
    "load_config",
    "run_pipeline",
    "summarize_dataset",
]
