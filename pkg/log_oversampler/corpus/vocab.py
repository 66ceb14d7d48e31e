import logging
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ArgumentError, CorpusFormatError
from .records import PAD_ID, UNK_ID, EncodedLog, LogRecord, Origin
from .tokenizer import tokenize

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass(frozen=True)
class Vocabulary:
    """Bijective token/id map with PAD=0 and UNK=1 reserved."""

    tokens: tuple[str, ...]
    token_to_id: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.tokens[:2] != (PAD_TOKEN, UNK_TOKEN):
            raise ArgumentError("Vocabulary must start with the PAD and UNK tokens")
        mapping = {token: i for i, token in enumerate(self.tokens)}
        if len(mapping) != len(self.tokens):
            raise ArgumentError("Vocabulary tokens must be unique")
        object.__setattr__(self, "token_to_id", mapping)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def save(self, path: str | Path) -> None:
        """Write one ``token<TAB>id`` line per entry, sorted by id."""
        lines = [f"{token}\t{i}" for i, token in enumerate(self.tokens)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens = []
        for number, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line:
                continue
            try:
                token, raw_id = line.rsplit("\t", 1)
                token_id = int(raw_id)
            except ValueError as e:
                raise CorpusFormatError(f"{path}:{number}: bad vocabulary line") from e
            if token_id != len(tokens):
                raise CorpusFormatError(
                    f"{path}:{number}: ids must be contiguous, expected {len(tokens)}"
                )
            tokens.append(token)
        return cls(tuple(tokens))


def build_vocab(corpus: Iterable[LogRecord], min_count: int = 1) -> Vocabulary:
    """
    Build a vocabulary from raw records.

    Tokens seen at least ``min_count`` times get ids from 2 upwards, ordered by
    descending frequency and then lexicographically.
    """
    if min_count < 1:
        raise ArgumentError(f"min_count must be positive, got {min_count}")
    counts: Counter[str] = Counter()
    n_records = 0
    for record in corpus:
        counts.update(tokenize(record.text))
        n_records += 1
    if n_records == 0:
        raise ArgumentError("Cannot build a vocabulary from an empty corpus")

    kept = sorted(
        (token for token, count in counts.items() if count >= min_count),
        key=lambda token: (-counts[token], token),
    )
    logger.debug(
        f"Vocabulary: {len(kept)} of {len(counts)} distinct tokens kept (min_count={min_count})"
    )
    return Vocabulary((PAD_TOKEN, UNK_TOKEN, *kept))


def encode(record: LogRecord, vocab: Vocabulary, length: int = 40) -> EncodedLog:
    """Map the first ``length`` tokens to ids and right-pad with PAD."""
    if length < 1:
        raise ArgumentError(f"Encoded length must be positive, got {length}")
    ids = [vocab.lookup(token) for token in tokenize(record.text)[:length]]
    ids.extend([PAD_ID] * (length - len(ids)))
    return EncodedLog(tuple(ids), record.label, Origin.REAL)


def decode(encoded: EncodedLog, vocab: Vocabulary) -> list[str]:
    """Tokens of ``encoded`` up to the first PAD."""
    return [vocab.tokens[i] for i in encoded.ids[: encoded.n_tokens]]
