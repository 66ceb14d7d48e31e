import logging
import typing
from pathlib import Path

from pydantic import BaseModel, ValidationError

from ..errors import ArgumentError
from .models import PipelineConfig

logger = logging.getLogger(__name__)


def _field_annotation(model: type[BaseModel], dotted_key: str):
    """Resolve the annotation of a dotted key such as ``ae.max_epochs``."""
    annotation = model
    for part in dotted_key.split("."):
        if not (isinstance(annotation, type) and issubclass(annotation, BaseModel)):
            raise ArgumentError(f"Unknown configuration key: {dotted_key}")
        field = annotation.model_fields.get(part)
        if field is None:
            raise ArgumentError(f"Unknown configuration key: {dotted_key}")
        annotation = field.annotation
    return annotation


def _parse_value(raw: str, annotation):
    raw = raw.strip()
    if typing.get_origin(annotation) is tuple:
        return [item.strip() for item in raw.split(",") if item.strip()]
    if raw == "":
        return None
    return raw


def parse_config(text: str) -> PipelineConfig:
    """
    Parse flat ``key = value`` lines into a PipelineConfig.

    Dotted keys address nested sections; ``#`` starts a comment line.

    Args:
        text: Configuration file contents

    Returns:
        Validated configuration
    """
    data: dict = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ArgumentError(f"Line {number}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        annotation = _field_annotation(PipelineConfig, key)
        node = data
        *parents, leaf = key.split(".")
        for parent in parents:
            node = node.setdefault(parent, {})
        node[leaf] = _parse_value(raw, annotation)

    try:
        return PipelineConfig(**data)
    except ValidationError as e:
        raise ArgumentError(f"Invalid configuration: {e}") from e


def load_config(config_path: str | Path) -> PipelineConfig:
    """
    Load configuration from a flat ``key = value`` file.

    Args:
        config_path: Path to the configuration file.

    Returns:
        PipelineConfig object with the loaded configuration.
    """
    config_path = Path(config_path)

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    return parse_config(config_path.read_text(encoding="utf-8"))


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _flatten(model: BaseModel, prefix: str = ""):
    for name, field in type(model).model_fields.items():
        value = getattr(model, name)
        key = f"{prefix}{name}"
        if isinstance(value, BaseModel):
            yield from _flatten(value, f"{key}.")
        else:
            yield key, value, field.description


def dump_config(config: PipelineConfig) -> str:
    """Render ``config`` as flat ``key = value`` lines, one per field."""
    return "".join(
        f"{key} = {_format_value(value)}\n" for key, value, _ in _flatten(config)
    )


def create_default_config(config_path: str | Path = "config.conf") -> None:
    """
    Create a default configuration file.

    Args:
        config_path: Path where the configuration file will be created.
    """
    lines = ["# log-oversampler configuration", ""]
    for key, value, description in _flatten(PipelineConfig()):
        if description:
            lines.append(f"# {description}")
        lines.append(f"{key} = {_format_value(value)}")

    Path(config_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Default configuration file created at: {config_path}")
