import numpy as np
import pytest

from log_oversampler.config import (
    AeTrainConfig,
    ClassifierConfig,
    CorpusConfig,
    GanSchedule,
    PipelineConfig,
    RolloutSettings,
    SplitSpec,
)

TINY_LEN = 12


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_gan():
    return GanSchedule(
        pretrain_gen_epochs=2,
        pretrain_disc_epochs=1,
        adversarial_rounds=2,
        batch_size=16,
        patience=2,
        gen_embedding_dim=4,
        gen_hidden_dim=8,
        disc_embedding_dim=4,
        disc_filter_widths=(1, 2),
        disc_filters=3,
    )


@pytest.fixture
def tiny_config(tmp_path, tiny_gan):
    """A pipeline small enough to run end to end in a few seconds."""
    return PipelineConfig(
        seed=7,
        out=tmp_path / "out",
        chunk_count=2,
        corpus=CorpusConfig(max_len=TINY_LEN, synth_total=200, synth_negative_fraction=0.1, synth_templates=8),
        split=SplitSpec(test_fraction=0.5, val_fraction_of_train=0.5),
        ae=AeTrainConfig(layer_sizes=(TINY_LEN, 16, 8, 8, TINY_LEN), max_epochs=3, batch_size=32),
        gan=tiny_gan,
        rollout=RolloutSettings(n_rollouts=2),
        classifier=ClassifierConfig(hidden_dim=8, max_epochs=3, batch_size=32, folds=2, patience=1),
    )
