import re
import string

NUM_TOKEN = "NUM"

_DIGITS = re.compile(r"[0-9]+")
# NUM counts as a sentinel unless it is part of a longer upper-case word
_SENTINEL = re.compile(
    f"((?:(?<![A-Z])|(?<={NUM_TOKEN})){NUM_TOKEN}(?:(?![A-Z])|(?={NUM_TOKEN})))"
)


def _normalize(raw: str) -> str:
    # lowercase and collapse digits everywhere except inside existing sentinels
    parts = _SENTINEL.split(raw)
    return "".join(
        part if part == NUM_TOKEN else _DIGITS.sub(NUM_TOKEN, part.lower())
        for part in parts
    )


def tokenize(text: str) -> list[str]:
    """
    Split a log message into tokens.

    Tokens are lowercased, stripped of surrounding punctuation and have every digit
    run replaced by ``NUM``. Empty tokens are dropped. A ``NUM`` already in the text
    is kept so that tokenizing joined output is stable; ``NUMA`` or ``ENUM`` are
    ordinary words.
    """
    tokens = []
    for raw in text.split():
        stripped = raw.strip(string.punctuation)
        if not stripped:
            continue
        tokens.append(_normalize(stripped))
    return tokens
