"""Text normalisation shared by the lexicon loader and the matchers."""

import re

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Case-folded alphanumeric runs; every other character is a separator.

    Headlines, answers and URLs all go through this, so ``example.de/afd-news``
    and ``AfD news`` both yield the token ``afd``.
    """
    return _TOKEN.findall(text.casefold())
