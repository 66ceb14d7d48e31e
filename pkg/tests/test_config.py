from pathlib import Path

import pytest
from pydantic import ValidationError

from log_oversampler.config import (
    AeTrainConfig,
    CorpusConfig,
    PipelineConfig,
    create_default_config,
    dump_config,
    load_config,
    parse_config,
)
from log_oversampler.errors import ArgumentError


class TestDefaults:
    def test_architecture_defaults(self):
        config = PipelineConfig()
        assert config.ae.layer_sizes == (40, 400, 200, 200, 40)
        assert config.ae.batch_size == 128
        assert config.ae.keep_prob == 0.8
        assert config.gan.gen_hidden_dim == 30
        assert config.classifier.hidden_dim == 100
        assert config.classifier.batch_size == 128
        assert config.classifier.folds == 10
        assert config.corpus.max_len == 40

    def test_optimizer_defaults(self):
        optimizer = PipelineConfig().classifier.optimizer
        assert (optimizer.alpha, optimizer.beta1, optimizer.beta2, optimizer.epsilon) == (
            1e-3,
            0.9,
            0.999,
            1e-8,
        )

    def test_autoencoder_width_must_match_log_length(self):
        with pytest.raises(ValidationError):
            PipelineConfig(corpus=CorpusConfig(max_len=20))
        PipelineConfig(
            corpus=CorpusConfig(max_len=20), ae=AeTrainConfig(layer_sizes=(20, 40, 10, 10, 20))
        )

    def test_assignment_is_validated(self):
        config = PipelineConfig()
        with pytest.raises(ValidationError):
            config.seed = -1


class TestParse:
    def test_dotted_keys(self):
        config = parse_config(
            "# comment\n"
            "seed = 5\n"
            "\n"
            "ae.max_epochs = 7\n"
            "oversample = false\n"
            "classifier.optimizer.alpha = 0.01\n"
        )
        assert config.seed == 5
        assert config.ae.max_epochs == 7
        assert config.oversample is False
        assert config.classifier.optimizer.alpha == 0.01
        assert config.gan.optimizer.alpha == 0.01

    def test_tuples(self):
        config = parse_config("gan.disc_filter_widths = 1, 3\n")
        assert config.gan.disc_filter_widths == (1, 3)

    def test_empty_value_is_unset(self):
        assert parse_config("corpus.path =\n").corpus.path is None

    @pytest.mark.parametrize("text", ["nope = 1\n", "ae.nope = 1\n", "seed.inner = 1\n"])
    def test_unknown_key(self, text):
        with pytest.raises(ArgumentError):
            parse_config(text)

    @pytest.mark.parametrize(
        "text", ["classifier.folds = 1\n", "seed = minus\n", "corpus.max_len = 20\n"]
    )
    def test_invalid_value(self, text):
        with pytest.raises(ArgumentError):
            parse_config(text)

    def test_line_without_value(self):
        with pytest.raises(ArgumentError, match="Line 2"):
            parse_config("seed = 1\nseed\n")

    def test_dump_then_parse(self, tiny_config):
        assert parse_config(dump_config(tiny_config)) == tiny_config


class TestFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.conf")

    def test_default_file_loads_as_defaults(self, tmp_path):
        path = tmp_path / "config.conf"
        create_default_config(path)
        text = path.read_text(encoding="utf-8")
        assert "# Root seed of every random stream" in text
        assert "ae.layer_sizes = 40,400,200,200,40" in text
        assert load_config(path) == PipelineConfig()

    def test_relative_output_path(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("out = results/bgl\n", encoding="utf-8")
        assert load_config(path).out == Path("results/bgl")
