from .loader import create_default_config, dump_config, load_config, parse_config
from .models import (
    AeTrainConfig,
    ClassifierConfig,
    CorpusConfig,
    GanSchedule,
    OptimizerConfig,
    PipelineConfig,
    RolloutSettings,
    SplitSpec,
)

__all__ = [
    "PipelineConfig",
    "CorpusConfig",
    "SplitSpec",
    "AeTrainConfig",
    "GanSchedule",
    "RolloutSettings",
    "ClassifierConfig",
    "OptimizerConfig",
    "load_config",
    "parse_config",
    "dump_config",
    "create_default_config",
]
