from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class OptimizerConfig(_Section):
    """ADAM hyperparameters."""

    alpha: float = Field(1e-3, gt=0, description="ADAM learning rate")
    beta1: float = Field(0.9, gt=0, lt=1, description="First-moment decay")
    beta2: float = Field(0.999, gt=0, lt=1, description="Second-moment decay")
    epsilon: float = Field(1e-8, gt=0, description="Denominator fuzz")


class SplitSpec(_Section):
    """How the concatenated feature set is divided into train, validation and test."""

    test_fraction: float = Field(
        0.95, gt=0, lt=1, description="Share of all records held out for testing"
    )
    val_fraction_of_train: float = Field(
        0.95,
        gt=0,
        lt=1,
        description="Share of the training pool used for validation (0.15 reproduces the Openstack counts)",
    )
    seed: int = Field(0, ge=0, lt=2**64, description="Shuffle seed")
    shuffle: bool = Field(True, description="Shuffle before splitting")


class CorpusConfig(_Section):
    """Corpus ingestion and the synthetic corpus generator."""

    path: Path | None = Field(
        None, description="label<TAB>message corpus; a synthetic corpus is generated when unset"
    )
    max_len: int = Field(40, ge=1, description="Tokens per encoded log (L)")
    min_count: int = Field(1, ge=1, description="Minimum token frequency for the vocabulary")
    synth_total: int = Field(10_000, ge=2, description="Synthetic corpus size")
    synth_negative_fraction: float = Field(
        0.05, gt=0, lt=1, description="Share of negative (abnormal) synthetic logs"
    )
    synth_templates: int = Field(16, ge=2, description="Number of synthetic message templates")


class AeTrainConfig(_Section):
    """Training of one autoencoder."""

    layer_sizes: tuple[int, ...] = Field(
        (40, 400, 200, 200, 40), description="Input, encoder, encoder, decoder and output widths"
    )
    max_epochs: int = Field(100, ge=1, description="Maximum training epochs")
    batch_size: int = Field(128, ge=1, description="Mini-batch size")
    keep_prob: float = Field(0.8, gt=0, le=1, description="Dropout keep probability")
    patience: int = Field(5, ge=1, description="Early-stopping patience in epochs")
    l1_lambda: float = Field(1e-5, ge=0, description="L1 coefficient on the first encoder layer")
    holdout_fraction: float = Field(
        0.1, gt=0, lt=1, description="Share of records held out for early stopping"
    )
    noise_variance: float = Field(0.1, ge=0, description="Variance of the Gaussian feature noise")
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)

    @model_validator(mode="after")
    def _check_layers(self):
        if len(self.layer_sizes) != 5 or self.layer_sizes[0] != self.layer_sizes[-1]:
            raise ValueError("layer_sizes must be five widths with equal input and output")
        return self


class GanSchedule(_Section):
    """Pretraining and adversarial training budget of one SeqGAN."""

    pretrain_gen_epochs: int = Field(20, ge=1, description="Generator MLE epochs")
    pretrain_disc_epochs: int = Field(5, ge=1, description="Discriminator pretraining epochs")
    adversarial_rounds: int = Field(10, ge=1, description="Maximum adversarial rounds")
    g_steps_per_round: int = Field(1, ge=1, description="Policy-gradient steps per round")
    d_steps_per_round: int = Field(1, ge=1, description="Discriminator passes per round")
    policy_lr: float = Field(0.01, gt=0, description="Policy-gradient ascent rate")
    batch_size: int = Field(128, ge=1, description="Mini-batch size")
    patience: int = Field(
        3, ge=1, description="Rounds of degrading held-out NLL before stopping"
    )
    gen_embedding_dim: int = Field(30, ge=1, description="Generator embedding width")
    gen_hidden_dim: int = Field(30, ge=1, description="Generator GRU hidden width")
    disc_embedding_dim: int = Field(32, ge=1, description="Discriminator embedding width")
    disc_filter_widths: tuple[int, ...] = Field(
        (1, 2, 3, 4), description="Convolution widths of the discriminator"
    )
    disc_filters: int = Field(25, ge=1, description="Filters per width")
    disc_keep_prob: float = Field(0.75, gt=0, le=1, description="Discriminator dropout keep probability")
    holdout_fraction: float = Field(0.1, gt=0, lt=1, description="Held-out share for NLL tracking")
    optimizer: OptimizerConfig = Field(default_factory=lambda: OptimizerConfig(alpha=1e-2))


class RolloutSettings(_Section):
    """Monte Carlo rollout settings."""

    n_rollouts: int = Field(16, ge=1, description="Completions per intermediate state (N)")


class ClassifierConfig(_Section):
    """GRU anomaly classifier and its cross-validation."""

    hidden_dim: int = Field(100, ge=1, description="GRU hidden layer size")
    max_epochs: int = Field(100, ge=1, description="Maximum epochs per fold")
    batch_size: int = Field(128, ge=1, description="Mini-batch size")
    keep_prob: float = Field(0.8, gt=0, le=1, description="Dropout keep probability")
    folds: int = Field(10, ge=2, description="Cross-validation folds")
    patience: int = Field(5, ge=1, description="Early-stopping patience in epochs")
    clip_norm: float = Field(5.0, gt=0, description="Global gradient-norm clip")
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)


class PipelineConfig(_Section):
    """Main configuration of an end-to-end run."""

    seed: int = Field(0, ge=0, lt=2**64, description="Root seed of every random stream")
    out: Path = Field(Path("out"), description="Output directory")
    oversample: bool = Field(True, description="Run SeqGAN oversampling of the negatives")
    chunk_count: int = Field(
        2, ge=1, description="Negative-set chunks, one SeqGAN each (2 small, 7 large corpora)"
    )
    target_ratio: float = Field(
        1.0, gt=0, description="Negatives after oversampling as a multiple of positives"
    )
    generation_budget_factor: float = Field(
        20.0, gt=0, description="Max generated samples as a multiple of the oversampling gap"
    )
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    split: SplitSpec = Field(default_factory=SplitSpec)
    ae: AeTrainConfig = Field(default_factory=AeTrainConfig)
    gan: GanSchedule = Field(default_factory=GanSchedule)
    rollout: RolloutSettings = Field(default_factory=RolloutSettings)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)

    @model_validator(mode="after")
    def _check_widths(self):
        if self.ae.layer_sizes[0] != self.corpus.max_len:
            raise ValueError(
                f"ae.layer_sizes starts at {self.ae.layer_sizes[0]} but corpus.max_len is {self.corpus.max_len}"
            )
        if max(self.gan.disc_filter_widths) > self.corpus.max_len:
            raise ValueError("gan.disc_filter_widths must not exceed corpus.max_len")
        return self
