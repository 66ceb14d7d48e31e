"""CLI for the log anomaly pipeline."""

import functools
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .config import PipelineConfig, create_default_config, load_config
from .errors import LogOversamplerError
from .formatters import ReportTextFormatter
from .pipeline import (
    evaluate_stage,
    features_stage,
    oversample_stage,
    prepare_stage,
    run_ablation,
    run_all,
    synth_stage,
    train_stage,
)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


def setup_logging(level=logging.INFO):
    """Set up logging configuration."""
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )


def resolve_config(config_path, seed, out, no_oversample) -> PipelineConfig:
    """Load the config file (or defaults) and apply command-line overrides."""
    config = load_config(config_path) if config_path else PipelineConfig()
    if seed is not None:
        config.seed = seed
    if out is not None:
        config.out = Path(out)
    if no_oversample:
        config.oversample = False
    return config


def pipeline_options(command):
    """Options shared by every pipeline subcommand."""

    @click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        help="Path to the configuration file",
    )
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Root random seed")
    @click.option("--out", type=click.Path(file_okay=False), help="Output directory")
    @click.option("--no-oversample", is_flag=True, help="Skip SeqGAN oversampling")
    @click.option("--debug/--no-debug", default=False, help="Enable debug logging")
    @functools.wraps(command)
    def wrapper(config_path, seed, out, no_oversample, debug, **kwargs):
        setup_logging(logging.DEBUG if debug else logging.INFO)
        config = resolve_config(config_path, seed, out, no_oversample)
        return command(config, **kwargs)

    return wrapper


@click.group()
@click.version_option(version=__version__)
def cli():
    """Log anomaly detection with SeqGAN oversampling."""
    pass


@cli.command()
@pipeline_options
@click.option("--output", type=click.Path(dir_okay=False), help="Corpus file (default: <out>/corpus.tsv)")
def synth(config, output):
    """Write the synthetic labeled corpus."""
    path = Path(output) if output else Path(config.out) / "corpus.tsv"
    records = synth_stage(config, path)
    click.echo(f"Wrote {len(records):,} logs to {path}")


@cli.command()
@pipeline_options
def prepare(config):
    """Tokenize, build the vocabulary and cache the encoded corpus."""
    data = prepare_stage(config)
    click.echo(f"Encoded {len(data.encoded):,} logs, vocabulary of {data.vocab.size:,}")


@cli.command()
@pipeline_options
def oversample(config):
    """Train per-chunk SeqGANs and oversample the negatives."""
    result = oversample_stage(config)
    click.echo(
        f"{len(result.records):,} negatives ({result.generated:,} generated samples, "
        f"{result.duplicate_fraction:.1%} rejected)"
    )


@cli.command()
@pipeline_options
def features(config):
    """Train both autoencoders and cache the feature set."""
    records = features_stage(config)
    click.echo(f"Cached {len(records):,} feature rows")


@cli.command()
@pipeline_options
def train(config):
    """Cross-validate the GRU classifier and retrain the final model."""
    summary = train_stage(config)
    click.echo(
        f"{len(summary.folds)} folds: val accuracy {summary.avg_val_acc * 100:.1f}% "
        f"({summary.std_val_acc * 100:.2f})"
    )


@cli.command()
@pipeline_options
def evaluate(config):
    """Score the final model on the test set and write the report."""
    click.echo(ReportTextFormatter().format(evaluate_stage(config)), nl=False)


@cli.command("run-all")
@pipeline_options
@click.option("--ablation", is_flag=True, help="Run with and without oversampling and report both")
def run_all_command(config, ablation):
    """Run every stage end to end."""
    reports = run_ablation(config) if ablation else [run_all(config)]
    for report in reports:
        click.echo(ReportTextFormatter().format(report), nl=False)


@cli.command()
@click.argument("output", type=click.Path(dir_okay=False), default="config.conf")
def create_config(output):
    """Create a default configuration file."""
    create_default_config(output)
    click.echo(f"Default configuration file created at: {output}")


def run(argv: list[str] | None = None) -> int:
    """
    Run the CLI and return its exit code.

    0 on success, 1 on a usage error, 2 on a runtime error.
    """
    try:
        result = cli.main(args=argv, prog_name="log-oversampler", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (LogOversamplerError, OSError) as e:
        logging.error(f"Error: {e}")
        return EXIT_RUNTIME
    except Exception:
        logging.exception("Unexpected error")
        return EXIT_RUNTIME
    return result if isinstance(result, int) else 0


def main():
    """Entry point for the CLI tool."""
    sys.exit(run())


if __name__ == "__main__":
    main()
